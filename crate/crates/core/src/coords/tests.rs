use super::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn unit_z() -> Chart3D {
    Chart3D::new(&IntertwinerParams::three_d([0.0; 3], [0.0, 0.0, 1.0]), EtaVariant::Eta).unwrap()
}

fn generic() -> Chart3D {
    // a ⊥ c
    Chart3D::new(
        &IntertwinerParams::three_d([1.0, -0.5, 0.0], [0.5, 1.0, 2.0]),
        EtaVariant::Eta,
    )
    .unwrap()
}

fn random_regular(chart: &Chart3D, rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let r = [
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
        ];
        let (_, j) = chart.variant.pair();
        let l = chart.l_vector(&r);
        if l[j].abs() > 0.2 && linalg::dot(&l, &l) > 0.1 {
            return r;
        }
    }
}

#[test]
fn forward_2d_at_center_of_example() {
    let ch = Chart2D::new(0.0, 1.0, 1.0).unwrap();
    let u = ch.forward(0.0, 0.0).unwrap();
    assert_eq!((u.kappa, u.eta, u.rho, u.xi), (1.0, 0.0, 0.0, 0.0));
    let (x, y) = ch.inverse(0.0, 0.0).unwrap();
    assert!(x.abs() < 1e-15 && y.abs() < 1e-15);
}

#[test]
fn forward_2d_rejects_eta_pole() {
    let ch = Chart2D::new(1.0, 0.0, 1.0).unwrap();
    assert!(matches!(ch.forward(0.0, 0.0), Err(CoordError::Singular { .. })));
}

#[test]
fn chart_2d_needs_rotation() {
    assert!(Chart2D::new(1.0, 1.0, 0.0).is_err());
}

#[test]
fn rho_constant_on_kappa_circles() {
    let ch = Chart2D::new(0.3, 1.0, 0.7).unwrap();
    // κ circle centred at (a2/c, −a1/c)
    let (cx, cy) = (1.0 / 0.7, -0.3 / 0.7);
    let rad = 0.9;
    let rho0 = ch.forward(cx - rad, cy).unwrap().rho;
    for t in [-1.0f64, -0.3, 0.2, 1.1] {
        let x = cx - rad * t.cos();
        let y = cy + rad * t.sin();
        assert!((ch.forward(x, y).unwrap().rho - rho0).abs() < 1e-14);
    }
}

#[test]
fn round_trip_2d() {
    let ch = Chart2D::new(0.4, -1.2, 1.3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let lim = std::f64::consts::FRAC_PI_2 / 1.3;
    for _ in 0..100 {
        let rho = rng.gen_range(-1.0..1.0);
        let xi = rng.gen_range(-0.95 * lim..0.95 * lim);
        let (x, y) = ch.inverse(rho, xi).unwrap();
        let u = ch.forward(x, y).unwrap();
        assert!((u.rho - rho).abs() < 1e-10 && (u.xi - xi).abs() < 1e-10);
    }
    assert!(ch.inverse(0.0, 2.0 * lim).is_err());
}

#[test]
fn laplacian_2d_of_r_squared() {
    let ch = Chart2D::new(0.5, 1.0, 0.8).unwrap();
    let pulled = |rho: f64, xi: f64| {
        let (x, y) = ch.inverse(rho, xi).unwrap();
        x * x + y * y
    };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let rho = rng.gen_range(-0.5..0.5);
        let xi = rng.gen_range(-1.0..1.0);
        let v = ch.laplacian_rho_xi(&pulled, rho, xi);
        assert!((v - 4.0).abs() < 1e-5, "{v}");
        assert!(ch.laplacian_rho_xi(&|r, _| r, rho, xi).abs() < 1e-6);
    }
}

#[test]
fn laplacian_2d_charts_agree() {
    let ch = Chart2D::new(0.5, 1.0, 0.8).unwrap();
    let f = |rho: f64, xi: f64| (rho * 0.7).sin() * (xi * 1.3).cos() + rho * rho * xi;
    let c = ch.c;
    let g = |k: f64, e: f64| f(k.ln() / c, e.atan() / c);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let rho: f64 = rng.gen_range(-0.5..0.5);
        let xi: f64 = rng.gen_range(-1.0..1.0);
        let a = ch.laplacian_rho_xi(&f, rho, xi);
        let b = ch.laplacian_kappa_eta(&g, (c * rho).exp(), (c * xi).tan());
        assert!((a - b).abs() < 1e-5, "{a} vs {b}");
    }
}

#[test]
fn eta_gradients_are_parallel_to_l() {
    let ch = Chart2D::new(0.5, 1.0, 0.8).unwrap();
    assert!(ch.eta_gradient_parallel(0.2, -0.4).unwrap() < 1e-8);
    assert!(unit_z().eta_gradient_parallel(&[1.0, 1.0, 0.0]).unwrap() < 1e-9);
    let g = generic();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let r = random_regular(&g, &mut rng);
        assert!(g.eta_gradient_parallel(&r).unwrap() < 1e-7);
    }
}

#[test]
fn alpha_gradient_parallel_to_l() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let p2 = IntertwinerParams::two_d(0.7, -0.4, 1.1);
    let p3 = IntertwinerParams::three_d([1.0, -0.5, 0.0], [0.5, 1.0, 2.0]);
    for p in [p2, p3] {
        for _ in 0..20 {
            let x: Vec<f64> = (0..p.n()).map(|_| rng.gen_range(-2.0..2.0)).collect();
            if linalg::dot(&x, p.a()).abs() < 0.1 {
                continue;
            }
            assert!(alpha_gradient_parallel(&p, 0, &x).unwrap() < 1e-7);
        }
    }
}

#[test]
fn forward_3d_example() {
    let ch = unit_z();
    let u = ch.forward(&[1.0, 1.0, 0.0]).unwrap();
    assert_eq!(u, [0.0, -1.0, -1.0]);
    assert_eq!(ch.poly.eval(0.0), 1.0);
    assert_eq!(ch.poly.eval(-1.0), 2.0);
}

#[test]
fn eta_poly_for_unit_z_is_eta_squared_plus_one() {
    let p = EtaPoly::new([0.0, 0.0, 1.0], EtaVariant::Eta);
    for e in [-2.0, 0.0, 0.5, 3.0] {
        assert_eq!(p.eval(e), e * e + 1.0);
    }
}

#[test]
fn eta_poly_discriminant_identity() {
    // AC − B² = |c|² D², so 4|c|² + p′² = 4Ap/D
    for v in [EtaVariant::Eta, EtaVariant::Eta2, EtaVariant::Eta3] {
        let p = EtaPoly::new([0.5, 1.0, 2.0], v);
        let cc = p.norm * p.norm;
        assert!((p.a * p.c - p.b * p.b - cc * p.d * p.d).abs() < 1e-12);
        for e in [-1.0, 0.3, 2.0] {
            let lhs = 4.0 * cc + p.derivative(e).powi(2);
            assert!((lhs - 4.0 * p.a * p.eval(e) / p.d).abs() < 1e-12);
        }
    }
}

#[test]
fn transport_relations_hold() {
    for v in [EtaVariant::Eta, EtaVariant::Eta2, EtaVariant::Eta3] {
        let ch = Chart3D::new(&IntertwinerParams::three_d([1.0, -0.5, 0.0], [0.5, 1.0, 2.0]), v).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let r = random_regular(&ch, &mut rng);
            let [b, g, e] = ch.transport_residuals(&r).unwrap();
            let scale = 1.0 + ch.poly.eval(ch.eta(&r).unwrap()).abs();
            assert!(b.abs() < 1e-8 && g.abs() < 1e-7 && e.abs() < 1e-8 * scale, "{b} {g} {e}");
        }
    }
}

#[test]
fn gamma_forms_agree_and_l_squared() {
    let ch = generic();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let r = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
        let g = ch.gamma(&r);
        assert!((g - ch.gamma_compact(&r)).abs() < 1e-12 * (1.0 + g.abs()));
        let l = ch.l_vector(&r);
        let lsq = linalg::dot(&l, &l);
        assert!((ch.l_squared(g) - lsq).abs() < 1e-10 * (1.0 + lsq));
    }
}

#[test]
fn jacobian_matches_numeric() {
    assert!((unit_z().jacobian(&[1.0, 1.0, 0.0]).unwrap() - 2.0).abs() < 1e-15);
    assert!((unit_z().jacobian_fd(&[1.0, 1.0, 0.0]).unwrap() - 2.0).abs() < 1e-6);
    let ch = generic();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let r = random_regular(&ch, &mut rng);
        let a = ch.jacobian(&r).unwrap();
        let n = ch.jacobian_fd(&r).unwrap();
        assert!((a - n).abs() < 1e-6 * a.abs().max(1.0), "{a} vs {n}");
        let p = ch.poly.eval(ch.eta(&r).unwrap());
        assert_eq!(a > 0.0, p > 0.0);
    }
}

#[test]
fn inverse_3d_round_trip() {
    let ch = generic();
    let (_, j) = ch.variant.pair();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut done = 0;
    while done < 50 {
        let r = random_regular(&ch, &mut rng);
        if ch.l_vector(&r)[j] <= 0.0 {
            continue;
        }
        let back = ch.inverse(&ch.forward(&r).unwrap()).unwrap();
        for k in 0..3 {
            assert!((back[k] - r[k]).abs() < 1e-10, "{back:?} vs {r:?}");
        }
        done += 1;
    }
    assert!(ch.inverse(&[0.0, 100.0, 0.0]).is_err());
}

#[test]
fn metric_example_and_pullback() {
    let m = unit_z().metric(&[1.0, 1.0, 0.0]).unwrap();
    assert_eq!(m, [1.0, 0.5, 0.5]);
    let ch = generic();
    let (_, j) = ch.variant.pair();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut done = 0;
    while done < 20 {
        let r = random_regular(&ch, &mut rng);
        if ch.l_vector(&r)[j] <= 0.0 {
            continue;
        }
        let g = ch.pullback_metric(&r).unwrap();
        let d = ch.metric(&r).unwrap();
        for a in 0..3 {
            assert!((g[a][a] - d[a]).abs() < 1e-6 * d[a].max(1.0), "{g:?} vs {d:?}");
            for b in 0..3 {
                if a != b {
                    assert!(g[a][b].abs() < 1e-6);
                }
            }
        }
        assert!((d[1] * ch.l_squared(ch.gamma(&r)) - d[0]).abs() < 1e-12);
        done += 1;
    }
}

#[test]
fn gradients_mutually_orthogonal() {
    let ch = generic();
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..20 {
        let r = random_regular(&ch, &mut rng);
        let m = ch.jacobian_matrix_fd(&r, JACOBIAN_STEP).unwrap();
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            let rel = linalg::dot(&m[a], &m[b]) / (linalg::norm(&m[a]) * linalg::norm(&m[b]));
            assert!(rel.abs() < 1e-8, "{rel}");
        }
    }
}

#[test]
fn laplacian_3d_cartesian_oracles() {
    let ch = generic();
    let (_, j) = ch.variant.pair();
    let inv = |b: f64, g: f64, e: f64| ch.inverse(&[b, g, e]).unwrap();
    let r2 = |b, g, e| {
        let r = inv(b, g, e);
        linalg::dot(&r, &r)
    };
    let gamma = |_b: f64, g: f64, _e: f64| g;
    let beta = |b: f64, _g: f64, _e: f64| b;
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let cc = ch.c_norm_sq();
    let mut done = 0;
    while done < 10 {
        let r = random_regular(&ch, &mut rng);
        if ch.l_vector(&r)[j] <= 0.3 {
            continue;
        }
        let u = ch.forward(&r).unwrap();
        let v = ch.laplacian(&r2, &u).unwrap();
        assert!((v - 6.0).abs() < 1e-4, "{v} at {u:?}");
        // ∇²γ = ∇·(a×c + (r·c)c − c²r) = c² − 3c² = −2c²
        assert!((ch.laplacian(&gamma, &u).unwrap() + 2.0 * cc).abs() < 1e-4);
        assert!(ch.laplacian(&beta, &u).unwrap().abs() < 1e-6);
        done += 1;
    }
}

#[test]
fn laplacian_convergence_order_two() {
    let ch = Chart2D::new(0.5, 1.0, 0.8).unwrap();
    let f = |rho: f64, xi: f64| (1.3 * rho).sin() * (0.9 * xi).cos();
    // exact: e^{−2cρ}(−1.69 − 0.81)f
    let (rho, xi) = (0.2f64, 0.4);
    let exact = (-2.0 * 0.8 * rho).exp() * (-1.69 - 0.81) * f(rho, xi);
    let errs: Vec<f64> = [1e-2, 5e-3, 2.5e-3]
        .iter()
        .map(|h| (ch.laplacian_rho_xi_step(&f, rho, xi, *h) - exact).abs())
        .collect();
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((order - 2.0).abs() < 0.2, "order {order}");
    }
}

#[test]
fn chart_3d_preconditions() {
    let bad = IntertwinerParams::three_d([1.0, 0.0, 0.0], [1.0, 0.0, 1.0]);
    assert!(Chart3D::new(&bad, EtaVariant::Eta).is_err());
    let no_c3 = IntertwinerParams::three_d([0.0; 3], [1.0, 1.0, 0.0]);
    assert!(Chart3D::new(&no_c3, EtaVariant::Eta).is_err());
    assert!(Chart3D::new(&no_c3, EtaVariant::Eta2).is_ok());
}
