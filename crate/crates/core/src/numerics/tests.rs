use proptest::prelude::*;

use super::*;
use crate::euclid::IntertwinerParams;
use crate::expr::{parse, Expr};
use crate::field::ScalarField;
use crate::integrability::EtaVariant;
use crate::poly::Poly;
use crate::potentials::{
    build_2d_pair, build_constant_shift, build_translational, free_motion_partners_3d, FreeMotionKind,
};

fn ex(src: &str, vars: &[&str]) -> Expr {
    parse(src, vars).unwrap()
}

fn field(src: &str) -> ScalarField {
    ScalarField::from_expr(&ex(src, &["x"]), &["x"]).unwrap()
}

#[test]
fn grid_invariants() {
    let g = Grid1D::new(0.0, 1.0, 3).unwrap();
    assert_eq!(g.spacing(), 0.25);
    assert_eq!(g.nodes(), vec![0.25, 0.5, 0.75]);
    assert!(Grid1D::new(0.0, 1.0, 2).is_err());
    assert!(Grid1D::new(1.0, 1.0, 10).is_err());
}

#[test]
fn oscillator_spectrum() {
    let g = Grid1D::new(-10.0, 10.0, 2000).unwrap();
    let s = solve_1d_eigen(&field("x^2"), &g, 4).unwrap();
    for (k, e) in s.eigenvalues.iter().enumerate() {
        assert!((e - (2 * k + 1) as f64).abs() < 2e-3, "E{k} = {e}");
    }
    assert!(s.eigenvalues.windows(2).all(|w| w[0] < w[1]));
    for r in &s.residuals {
        assert!(*r <= s.tolerance, "{r} > {}", s.tolerance);
    }
    let h = g.spacing();
    for i in 0..4 {
        for j in 0..4 {
            let ip: f64 = h * s.eigenvectors[i].iter().zip(&s.eigenvectors[j]).map(|(a, b)| a * b).sum::<f64>();
            let expect = if i == j { 1.0 } else { 0.0 };
            assert!((ip - expect).abs() < 1e-9, "<{i}|{j}> = {ip}");
        }
    }
}

#[test]
fn box_spectrum() {
    let g = Grid1D::new(0.0, std::f64::consts::PI, 2000).unwrap();
    let s = solve_1d_eigen(&field("0"), &g, 3).unwrap();
    for (k, e) in s.eigenvalues.iter().enumerate() {
        let exact = ((k + 1) * (k + 1)) as f64;
        assert!((e - exact).abs() < 1e-2, "E{k} = {e}");
    }
}

#[test]
fn sech_well_has_zero_energy_ground_state() {
    let g = Grid1D::new(-15.0, 15.0, 3000).unwrap();
    let s = solve_1d_eigen(&field("1 - 2*sech(x)^2"), &g, 2).unwrap();
    assert!(s.eigenvalues[0].abs() < 1e-4, "{}", s.eigenvalues[0]);
    // the next level sits at the continuum edge
    assert!(s.eigenvalues[1] > 0.99);
}

#[test]
fn eigen_errors() {
    let g = Grid1D::new(-1.0, 1.0, 5).unwrap();
    assert!(matches!(solve_1d_eigen(&field("x^2"), &g, 6), Err(NumericsError::Invalid(_))));
    match solve_1d_eigen(&field("1/x"), &g, 1) {
        Err(NumericsError::SingularNode { x }) => assert_eq!(x, 0.0),
        other => panic!("{other:?}"),
    }
}

#[test]
fn spectrum_serializes() {
    let g = Grid1D::new(0.0, 1.0, 4).unwrap();
    let s = solve_values(&[0.0; 4], &g, 2).unwrap();
    let csv = s.to_csv();
    assert!(csv.starts_with("index,eigenvalue,residual\n0,"));
    assert_eq!(csv.lines().count(), 3);
    let json: serde_json::Value = serde_json::from_str(&s.to_json()).unwrap();
    assert_eq!(json["eigenvalues"].as_array().unwrap().len(), 2);
    assert_eq!(s.eigenvectors_csv().lines().count(), 5);
}

proptest! {
    #[test]
    fn eigenvalues_match_trace_invariants(
        diag in prop::collection::vec(-5.0f64..5.0, 2..24),
        off_seed in prop::collection::vec(-3.0f64..3.0, 24),
    ) {
        let n = diag.len();
        let t = SymTridiagonal { diag: diag.clone(), off: off_seed[..n - 1].to_vec() };
        let ev: Vec<f64> = (0..n).map(|k| t.eigenvalue(k)).collect();
        prop_assert!(ev.windows(2).all(|w| w[0] <= w[1]));
        let trace: f64 = diag.iter().sum();
        let frob: f64 = diag.iter().map(|d| d * d).sum::<f64>()
            + 2.0 * t.off.iter().map(|e| e * e).sum::<f64>();
        prop_assert!((ev.iter().sum::<f64>() - trace).abs() < 1e-9 * (1.0 + frob));
        prop_assert!((ev.iter().map(|e| e * e).sum::<f64>() - frob).abs() < 1e-9 * (1.0 + frob));
        for k in 0..n {
            prop_assert_eq!(t.count_below(ev[k] + 1e-7 * (1.0 + frob.sqrt())) > k, true);
        }
    }
}

#[test]
fn laplacian_stencil_is_second_order() {
    let lo = [0.0, 0.0];
    let hi = [1.0, 1.0];
    let c = convergence_study(&lo, &hi, &[16, 32, 64, 128], &|g| {
        let u = g.sample(|x| Ok::<_, NumericsError>((2.0 * x[0]).sin() * (3.0 * x[1]).cos()))?;
        let lap = g.laplacian(&u);
        Ok((0..g.len())
            .map(|i| lap[i] + 13.0 * u[i])
            .collect())
    })
    .unwrap();
    assert!((c.order - 2.0).abs() <= 0.2, "{c:?}");
}

fn assert_second_order(c: &Convergence) {
    assert!((c.order - 2.0).abs() <= 0.2, "order {} from {:?}", c.order, c.residuals);
    for w in c.residuals.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.0..5.0).contains(&ratio), "ratio {ratio}: {:?}", c.residuals);
    }
}

#[test]
fn intertwining_converges_for_free_motion_partner() {
    let p = build_2d_pair(0.0, 1.0, 1.0, &ex("eta", &["eta"]), &ex("2/kappa^2", &["kappa"])).unwrap();
    let c = intertwining_convergence(&p, &[-2.0, 0.0], 0.4, 1.2, &[16, 32, 64, 128]).unwrap();
    assert_second_order(&c);
}

#[test]
fn intertwining_converges_for_calogero_pair() {
    let h = ex("2/kappa^2 + 2*kappa^2", &["kappa"]);
    let p = build_2d_pair(0.0, 1.0, 1.0, &ex("eta", &["eta"]), &h).unwrap();
    let c = intertwining_convergence(&p, &[-1.0, 0.5], 0.4, 1.2, &[16, 32, 64, 128]).unwrap();
    assert_second_order(&c);
}

#[test]
fn intertwining_converges_for_translational_and_shift_pairs() {
    let g = ex("s1^2", &["s1"]);
    let t = build_translational(&[1.0, 0.5], &ex("sin(zeta) + zeta^2", &["zeta"]), &g).unwrap();
    assert_second_order(&intertwining_convergence(&t, &[0.2, -0.1], 0.4, 1.2, &[16, 32, 64, 128]).unwrap());
    let s = build_constant_shift(&[1.0, 0.0], 2.0, &[0.3, -0.2], &ex("cos(s1)", &["s1"])).unwrap();
    assert_second_order(&intertwining_convergence(&s, &[0.1, 0.2], 0.4, 1.2, &[16, 32, 64, 128]).unwrap());
}

#[test]
fn intertwining_converges_in_three_dimensions() {
    let params = IntertwinerParams::three_d([1.0, -0.5, 0.0], [0.5, 1.0, 2.0]);
    let p = free_motion_partners_3d(&params, FreeMotionKind::Two, 0.0, EtaVariant::Eta).unwrap();
    let center = [3.0, -3.0, -3.0];
    assert!(p.guard_distance(&center) > 2.0);
    let c = intertwining_convergence(&p, &center, 0.25, 0.6, &[8, 16, 32]).unwrap();
    assert!((c.order - 2.0).abs() <= 0.2, "{c:?}");
}

#[test]
fn corrupted_pair_does_not_converge() {
    let p = build_2d_pair(0.0, 1.0, 1.0, &ex("eta", &["eta"]), &ex("2/kappa^2", &["kappa"])).unwrap();
    let bad = p.corrupted(0.1).unwrap();
    let c = intertwining_convergence(&bad, &[-2.0, 0.0], 0.4, 1.2, &[16, 32, 64, 128]).unwrap();
    assert!(c.order < 1.8, "{c:?}");
    assert!(c.residuals.last().unwrap() > &1e-2);
}

#[test]
fn symmetry_pair_commutes_with_its_hamiltonian() {
    // constant f gives P = 0, so L commutes with H0 = H1
    let p = build_2d_pair(0.0, 1.0, 1.0, &Expr::constant(0.7), &ex("2*kappa^2", &["kappa"])).unwrap();
    assert_eq!(p.v0_expr.to_string(), p.v1_expr.to_string());
    let c = intertwining_convergence(&p, &[-1.0, 0.0], 0.4, 0.9, &[16, 32, 64, 128]).unwrap();
    assert_second_order(&c);
    let psi = gaussian(&[-1.0, 0.0], 0.4);
    let coarse = intertwining_residual(&p, &psi, &[-1.0, 0.0], 0.9, 32).unwrap();
    let fine = intertwining_residual(&p, &psi, &[-1.0, 0.0], 0.9, 64).unwrap();
    assert!(fine < coarse);
}

#[test]
fn symmetry_operators_converge() {
    let p = build_2d_pair(0.0, 1.0, 1.0, &ex("eta", &["eta"]), &ex("2/kappa^2", &["kappa"])).unwrap();
    let c = symmetry_convergence(&p, &[-2.0, 0.0], 0.4, 1.2, &[16, 32, 64, 128]).unwrap();
    assert!((c.order - 2.0).abs() <= 0.2, "{c:?}");
    let (a, b) = symmetry_residual(&p, &gaussian(&[-2.0, 0.0], 0.4), &[-2.0, 0.0], 1.2, 64).unwrap();
    assert!(a.is_finite() && b.is_finite());
}

#[test]
fn identity_pair_symmetry_is_fd_exact() {
    // L = ∂x on V0 = V1 = y²: both commutators vanish identically on the grid
    let g = ex("s1^2", &["s1"]);
    let p = build_translational(&[1.0, 0.0], &Expr::constant(0.0), &g).unwrap();
    let psi = gaussian(&[0.0, 0.0], 0.5);
    let (a, b) = symmetry_residual(&p, &psi, &[0.0, 0.0], 1.0, 32).unwrap();
    assert!(a < 1e-9 && b < 1e-9, "{a} {b}");
}

/// Grid residual of a closed form at two resolutions; the ratio shows O(h²).
fn closed_form_ratio(
    pair: &crate::potentials::PotentialPair,
    center: &[f64],
    form: &dyn Fn(&GridOperators, &[f64], &[f64]) -> Vec<f64>,
) -> (f64, f64) {
    let run = |cells: usize| {
        let grid = BoxGrid::cube(center, 1.0, cells).unwrap();
        let ops = GridOperators::new(pair, &grid).unwrap();
        let psi_fn = gaussian(center, 0.4);
        let psi = grid.sample(|x| Ok::<_, NumericsError>(psi_fn(x))).unwrap();
        // compare on the coarse nodes only
        let stride = cells / 20;
        let r = form(&ops, &psi, &psi);
        (0..grid.len())
            .filter(|i| grid.multi_index(*i).iter().all(|k| k % stride == 0))
            .map(|i| r[i])
            .fold(0.0f64, |m, v| if v.is_finite() { m.max(v.abs()) } else { m })
    };
    (run(40), run(80))
}

#[test]
fn translational_ldl_matches_closed_form() {
    // L†L = a²V− − (a·∇)² with V− = f²/a² − ½f′ and L0 = f(ζ), ζ = a·r/2
    let a = [1.0, 0.5];
    let a2 = 1.25;
    let f = ex("sin(zeta) + zeta^2", &["zeta"]);
    let p = build_translational(&a, &f, &Expr::constant(0.0)).unwrap();
    let fv = f.compile(&["zeta"]).unwrap();
    let fd = f.differentiate("zeta").compile(&["zeta"]).unwrap();
    let vm = move |x: &[f64]| {
        let z = 0.5 * (a[0] * x[0] + a[1] * x[1]);
        let fz = fv.eval(&[z]).unwrap();
        fz * fz / a2 - 0.5 * fd.eval(&[z]).unwrap()
    };
    let form = |ops: &GridOperators, psi: &[f64], _: &[f64]| {
        let lhs = ops.l_dagger(&ops.l(psi));
        let dd = ops.transport(&ops.transport(psi));
        (0..psi.len())
            .map(|i| lhs[i] - (a2 * vm(&ops.grid.point(i)) * psi[i] - dd[i]))
            .collect::<Vec<f64>>()
    };
    let (coarse, fine) = closed_form_ratio(&p, &[0.2, 0.1], &form);
    assert!(fine < 1e-2 && (3.5..4.5).contains(&(coarse / fine)), "{coarse} {fine}");
    // the general closed forms of L†L and LL† hold for every pair
    for g in [ldl_closed_form_field, lld_closed_form_field] {
        let (coarse, fine) = closed_form_ratio(&p, &[0.2, 0.1], &|o, u, _| g(o, u));
        assert!(fine < 1e-2 && (3.5..4.5).contains(&(coarse / fine)), "{coarse} {fine}");
    }
}

#[test]
fn constant_shift_symmetry_operator_closed_form() {
    // L†L = L0² − ½p0a² − (a·∇)² for the constant-shift family
    let (a, p0, b) = ([1.0, 0.0], 2.0, [0.3, -0.2]);
    let p = build_constant_shift(&a, p0, &b, &ex("cos(s1)", &["s1"])).unwrap();
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(5);
    for _ in 0..3 {
        let c = [rand::Rng::gen_range(&mut rng, -0.3..0.3), rand::Rng::gen_range(&mut rng, -0.3..0.3)];
        let form = |ops: &GridOperators, psi: &[f64], _: &[f64]| {
            let lhs = ops.l_dagger(&ops.l(psi));
            let dd = ops.transport(&ops.transport(psi));
            (0..psi.len())
                .map(|i| {
                    let x = ops.grid.point(i);
                    let l0 = 0.5 * p0 * x[0] + 0.3;
                    lhs[i] - ((l0 * l0 - 0.5 * p0 * 1.0) * psi[i] - dd[i])
                })
                .collect::<Vec<f64>>()
        };
        let (coarse, fine) = closed_form_ratio(&p, &c, &form);
        assert!(fine < 1e-2 && (3.5..4.5).contains(&(coarse / fine)), "{coarse} {fine}");
    }
}

#[test]
fn ladder_relations() {
    // on the grid [L, L†]ψ − p0a²ψ = h²ψ″ exactly, so a unit-width gaussian
    // keeps the commutator below 1e-4
    let r = ladder_check(&[1.0, 0.0], 2.0, &[0.0, 0.0], &Expr::constant(0.0), 1.0, 2.0, 512).unwrap();
    assert!((r.spacing - 1.0 / 128.0).abs() < 1e-15);
    assert!(r.max() <= 1e-4, "{r:?}");
    // p0 = 0: L = a·b + a·∇ is a plain symmetry and every relation is exact on the grid
    let r0 = ladder_check(&[1.0, 0.0], 0.0, &[0.5, 0.0], &ex("s1^2", &["s1"]), 0.4, 1.0, 64).unwrap();
    assert!(r0.max() < 1e-9, "{r0:?}");
}

#[test]
fn ladder_commutator_is_exact_on_polynomials() {
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(9);
    for n in 2..=4 {
        let psi = Poly::random(n, 4, &mut rng);
        let a: Vec<f64> = (0..n).map(|k| 0.5 + k as f64).collect();
        let b: Vec<f64> = (0..n).map(|k| 0.1 * k as f64).collect();
        for p0 in [0.0, 2.0, -1.5] {
            assert!(ladder_commutator_exact(&a, p0, &b, &psi) < 1e-12);
        }
    }
}

#[test]
fn fitted_order_recovers_powers() {
    let h = [0.1, 0.05, 0.025];
    let y: Vec<f64> = h.iter().map(|v| 3.0 * v * v).collect();
    assert!((fitted_order(&h, &y) - 2.0).abs() < 1e-12);
}

#[test]
fn oscillator_partners_pair_up() {
    let g = Grid1D::new(-10.0, 10.0, 2000).unwrap();
    let r = partner_spectrum_check(&ex("xi", &["xi"]), "xi", &g, 5).unwrap();
    assert!(r.unbroken);
    for (k, e) in r.minus.eigenvalues.iter().enumerate() {
        assert!((e - 2.0 * k as f64).abs() < 2e-3);
    }
    for (k, e) in r.plus.eigenvalues.iter().enumerate() {
        assert!((e - 2.0 * (k + 1) as f64).abs() < 2e-3);
    }
    assert_eq!(r.pairing.len(), 4);
    assert!(r.max_deviation <= 1e-3, "{}", r.max_deviation);
    assert!(r.transformed[0].annihilated);
    assert!(r.transformed[1..].iter().all(|t| !t.annihilated));
    assert!(r.transformed_ok(), "{:?}", r.transformed);
    assert_eq!(r.pairing_csv().lines().count(), 5);
}

#[test]
fn poschl_teller_partner() {
    let g = Grid1D::new(-15.0, 15.0, 3000).unwrap();
    let r = partner_spectrum_check(&ex("tanh(xi)", &["xi"]), "xi", &g, 3).unwrap();
    assert!(r.minus.eigenvalues[0].abs() < 1e-4);
    assert!(r.unbroken);
    // V+ = 1: no bound state, the spectrum starts at the continuum edge
    let box_edge = 1.0 + (std::f64::consts::PI / 30.0).powi(2);
    assert!((r.plus.eigenvalues[0] - box_edge).abs() < 1e-3, "{}", r.plus.eigenvalues[0]);
    assert!(r.minus.eigenvalues[1] > 0.99);
}

#[test]
fn zero_superpotential_has_identical_partners() {
    let g = Grid1D::new(0.0, 3.0, 300).unwrap();
    let r = partner_spectrum_check(&Expr::constant(0.0), "xi", &g, 4).unwrap();
    assert!(!r.unbroken);
    assert_eq!(r.minus.eigenvalues, r.plus.eigenvalues);
    assert_eq!(r.max_deviation, 0.0);
    assert!(partner_spectrum_check(&ex("x", &["x"]), "xi", &g, 2).is_err());
}

fn oscillator_spec(n: usize, n_plus: Option<usize>, m: f64) -> SeparatedSpec {
    SeparatedSpec {
        calv: ex("xi^2", &["xi"]),
        calh: Expr::constant(0.0),
        c: 0.1,
        n,
        n_plus,
        m,
        xi_grid: Grid1D::new(-10.0, 10.0, 2000).unwrap(),
        rho_grid: Grid1D::new(-4.0, 4.0, 800).unwrap(),
        k: 6,
    }
}

#[test]
fn separated_oscillator_without_shift() {
    let r = separated_2d_solve(&oscillator_spec(0, None, 0.0)).unwrap();
    assert!((r.e_n - 1.0).abs() < 2e-3);
    assert_eq!(r.u0.index, Some(0));
    // M = 0 keeps U⁰ = φ0, which L annihilates
    assert!(r.u1().unwrap().annihilated);
    assert!(r.transformed[1..].iter().all(|t| t.residual.unwrap() <= r.transformed_tolerance));
    assert!((r.rho_eigenvalue - r.rho_target).abs() < 1e-8);
    assert!(r.e0 > 0.0);
    assert!(!r.scan.is_empty());
}

#[test]
fn separated_oscillator_with_level_shift() {
    // n = 1, n+ = 2: M = 2 and ℰ_{n−} = 1 is the ground level
    let r = separated_2d_solve(&oscillator_spec(1, Some(2), 0.0)).unwrap();
    assert!((r.m - 2.0).abs() < 4e-3);
    assert_eq!(r.u0.index, Some(2));
    assert_eq!(r.n_minus.index, Some(0));
    assert!((r.rho_eigenvalue + 5.0).abs() < 1e-2);
    // φ1 changes sign at the origin, so f has a pole there
    assert_eq!(r.seed_nodes.len(), 1);

    // a nodeless seed keeps every image regular: n = 0, n+ = 1
    let r = separated_2d_solve(&oscillator_spec(0, Some(1), 0.0)).unwrap();
    assert_eq!(r.u0.index, Some(1));
    assert_eq!(r.n_minus.index, None);
    assert!(r.seed_nodes.is_empty());
    let u1 = r.u1().unwrap();
    assert!(!u1.annihilated);
    assert!(u1.residual.unwrap() <= r.transformed_tolerance, "{u1:?}");
}

#[test]
fn separated_reports_missing_partner_level() {
    let r = separated_2d_solve(&oscillator_spec(0, None, 1.0)).unwrap();
    assert_eq!(r.u0.index, None);
    assert_eq!(r.n_minus.index, None);
}

#[test]
fn separated_rejects_strip_violation_and_bad_levels() {
    let mut spec = oscillator_spec(0, None, 0.0);
    spec.c = 1.0;
    assert!(separated_2d_solve(&spec).is_err());
    let spec = oscillator_spec(6, None, 0.0);
    assert!(separated_2d_solve(&spec).is_err());
}

#[test]
fn scan_failure_carries_trace() {
    // ℋ = 1e30 needs E⁰ beyond the geometric scan range
    let mut spec = oscillator_spec(0, None, 0.0);
    spec.calh = Expr::constant(1e30);
    match separated_2d_solve(&spec) {
        Err(NumericsError::ScanBracket { trace, target }) => {
            assert_eq!(trace.len(), 81);
            assert!((target + 1.0).abs() < 2e-3);
            assert!(trace.iter().all(|s| s.mismatch > 0.0));
        }
        other => panic!("{other:?}"),
    }
}
