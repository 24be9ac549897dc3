//! Small dense linear algebra: rank, nullspace and 3×3 helpers.

/// Row-major dense matrix.
pub type Matrix = Vec<Vec<f64>>;

/// Reduced row echelon form by Gaussian elimination with complete pivoting.
///
/// Entries below `tol * max|a_ij|` are treated as zero. Returns the rank,
/// the pivot columns (in original numbering) and the reduced matrix.
fn rref(a: &Matrix, tol: f64) -> (usize, Vec<usize>, Matrix) {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let mut m = a.clone();
    let mut perm: Vec<usize> = (0..cols).collect();
    if scale == 0.0 {
        return (0, Vec::new(), m);
    }
    let thresh = tol * scale;
    let mut rank = 0;
    for step in 0..rows.min(cols) {
        // complete pivot over the trailing block
        let (mut pr, mut pc, mut best) = (step, step, 0.0);
        for (i, row) in m.iter().enumerate().skip(step) {
            for (j, v) in row.iter().enumerate().skip(step) {
                if v.abs() > best {
                    best = v.abs();
                    pr = i;
                    pc = j;
                }
            }
        }
        if best <= thresh {
            break;
        }
        m.swap(step, pr);
        for row in m.iter_mut() {
            row.swap(step, pc);
        }
        perm.swap(step, pc);
        let piv = m[step][step];
        for v in m[step].iter_mut() {
            *v /= piv;
        }
        for i in 0..rows {
            if i != step {
                let factor = m[i][step];
                if factor != 0.0 {
                    for j in step..cols {
                        m[i][j] -= factor * m[step][j];
                    }
                }
            }
        }
        rank += 1;
    }
    // undo the column permutation
    let mut out = vec![vec![0.0; cols]; rows];
    for (i, row) in m.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            out[i][perm[j]] = *v;
        }
    }
    (rank, perm[..rank].to_vec(), out)
}

pub fn rank(a: &Matrix, tol: f64) -> usize {
    rref(a, tol).0
}

/// Orthonormal basis of the nullspace of `a` (vectors of length `cols`).
pub fn nullspace(a: &Matrix, cols: usize, tol: f64) -> Vec<Vec<f64>> {
    if a.is_empty() {
        return identity(cols);
    }
    let (rank, pivots, r) = rref(a, tol);
    let free: Vec<usize> = (0..cols).filter(|j| !pivots.contains(j)).collect();
    let mut basis = Vec::with_capacity(free.len());
    for &fcol in &free {
        let mut v = vec![0.0; cols];
        v[fcol] = 1.0;
        for (i, &pcol) in pivots.iter().enumerate().take(rank) {
            v[pcol] = -r[i][fcol];
        }
        basis.push(v);
    }
    gram_schmidt(&basis, 1e-12)
}

/// Modified Gram–Schmidt; drops vectors that become numerically dependent.
pub fn gram_schmidt(vectors: &[Vec<f64>], tol: f64) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &out {
                let d = dot(&w, q);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= d * qi;
                }
            }
        }
        let n = norm(&w);
        if n > tol * norm(v).max(1.0) {
            out.push(w.iter().map(|x| x / n).collect());
        }
    }
    out
}

pub fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Transpose of a 3×3 matrix.
pub fn transpose3(m: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut t = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = m[j][i];
        }
    }
    t
}

pub fn matmul3(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_of_dependent_rows() {
        let a = vec![
            vec![1.0, 2.0, 3.0],
            vec![2.0, 4.0, 6.0],
            vec![0.0, 1.0, 1.0],
        ];
        assert_eq!(rank(&a, 1e-10), 2);
        let ns = nullspace(&a, 3, 1e-10);
        assert_eq!(ns.len(), 1);
        for row in &a {
            assert!(dot(row, &ns[0]).abs() < 1e-12);
        }
        assert!((norm(&ns[0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_matrix_has_full_nullspace() {
        let a = vec![vec![0.0; 4]; 4];
        assert_eq!(rank(&a, 1e-10), 0);
        assert_eq!(nullspace(&a, 4, 1e-10).len(), 4);
    }

    #[test]
    fn determinant_of_rotation_like() {
        let m = [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 2.0]];
        assert_eq!(det3(&m), 2.0);
        assert_eq!(cross(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]), [0.0, 0.0, 1.0]);
    }
}
