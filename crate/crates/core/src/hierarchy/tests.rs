use super::*;
use crate::expr::parse;
use crate::numerics::{intertwining_convergence, solve_values};

fn ex(src: &str, vars: &[&str]) -> Expr {
    parse(src, vars).unwrap()
}

fn eval1(e: &Expr, var: &str, x: f64) -> f64 {
    e.eval_at(&[(var, x)]).unwrap()
}

#[test]
fn closed_form_steps() {
    let (v, _) = darboux_step_expr(&ex("x^2", &["x"]), &ex("exp(-x^2/2)", &["x"]), "x");
    for x in [-2.0, 0.0, 0.7, 3.0] {
        assert!((eval1(&v, "x", x) - (x * x + 2.0)).abs() < 1e-12);
    }
    let (v, log1) = darboux_step_expr(&ex("1 - 2*sech(x)^2", &["x"]), &ex("sech(x)", &["x"]), "x");
    for x in [-2.0, 0.0, 0.7, 3.0] {
        assert!((eval1(&v, "x", x) - 1.0).abs() < 1e-12);
        assert!((eval1(&log1, "x", x) + x.tanh()).abs() < 1e-12);
    }
    let base = ex("sin(x) + x^3", &["x"]);
    let (v, log1) = darboux_step_expr(&base, &Expr::constant(2.5), "x");
    for x in [-1.0, 0.4] {
        assert_eq!(eval1(&v, "x", x), eval1(&base, "x", x));
        assert_eq!(eval1(&log1, "x", x), 0.0);
    }
}

#[test]
fn grid_step_matches_closed_form() {
    let g = Grid1D::new(-6.0, 6.0, 1200).unwrap();
    let v = g.sample(&ex("x^2", &["x"]), "x").unwrap();
    let phi = g.sample(&ex("exp(-x^2/2)", &["x"]), "x").unwrap();
    let step = darboux_step(&v, &phi, 1.0, &g).unwrap();
    assert!(!step.is_singular());
    let h2 = g.spacing().powi(2);
    for (x, vn) in g.nodes().iter().zip(&step.v_new) {
        // the O(h²) error carries the seed's higher log-derivatives, ~x⁴ here
        assert!((vn - (x * x + 2.0)).abs() < h2 * (1.0 + x.powi(4)), "{x}: {vn}");
    }
    // the seed is annihilated by its own state map
    let image = step.map_state(&phi);
    let scale = phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let worst = image[1..image.len() - 1].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(worst < 1e-4 * scale, "{worst}");
    // a constant seed changes nothing
    let step = darboux_step(&v, &vec![3.0; g.n], 0.0, &g).unwrap();
    assert_eq!(&step.v_new[1..g.n - 1], &v[1..g.n - 1]);
}

#[test]
fn grid_step_rejects_zero_seed_values() {
    let g = Grid1D::new(-1.0, 1.0, 5).unwrap();
    let phi = g.sample(&ex("x", &["x"]), "x").unwrap();
    assert!(matches!(darboux_step(&[0.0; 5], &phi, 0.0, &g), Err(HierarchyError::ZeroAtNode { x }) if x == 0.0));
    assert!(darboux_step(&[0.0; 4], &[1.0; 5], 0.0, &g).is_err());
}

#[test]
fn excited_seed_flags_singular_level() {
    let g = Grid1D::new(-10.0, 10.0, 1000).unwrap();
    let v = g.sample(&ex("x^2", &["x"]), "x").unwrap();
    let h = build_hierarchy(&v, &[Seed::Eigen(1)], &g, 4).unwrap();
    let top = &h.levels[1];
    assert!(top.singular);
    assert_eq!(top.seed_nodes.len(), 1);
    assert!(top.seed_nodes[0].abs() < 2.0 * g.spacing());
    assert!(top.spectrum.is_none());
    let more = build_hierarchy(&v, &[Seed::Eigen(1), Seed::Eigen(0)], &g, 4);
    assert!(matches!(more, Err(HierarchyError::SingularLevel { level: 1 })));
}

#[test]
fn oscillator_chain_deletes_successive_levels() {
    let g = Grid1D::new(-10.0, 10.0, 2000).unwrap();
    let v = g.sample(&ex("x^2", &["x"]), "x").unwrap();
    let seeds = [Seed::Eigen(0), Seed::Eigen(0), Seed::Eigen(0)];
    let h = build_hierarchy(&v, &seeds, &g, 5).unwrap();
    assert_eq!(h.levels.len(), 4);
    for (level, l) in h.levels.iter().enumerate() {
        let s = l.spectrum.as_ref().unwrap();
        for (k, e) in s.eigenvalues.iter().enumerate() {
            let exact = (2 * (k + level) + 1) as f64;
            assert!((e - exact).abs() < 5e-3, "level {level}, E{k} = {e}");
        }
        if level > 0 {
            let deleted = l.deleted.unwrap();
            assert!((deleted - (2 * level - 1) as f64).abs() < 5e-3);
            assert!(l.isospectral_deviation.unwrap() < 5e-3);
        }
    }
    let csv = h.to_csv();
    assert!(csv.starts_with("level,deleted,singular,e0,e1,e2,e3,e4\n0,,false,"));
    let json: serde_json::Value = serde_json::from_str(&h.to_json()).unwrap();
    assert_eq!(json["levels"].as_array().unwrap().len(), 4);
}

#[test]
fn empty_chain_returns_input() {
    let g = Grid1D::new(-10.0, 10.0, 500).unwrap();
    let v = g.sample(&ex("x^2", &["x"]), "x").unwrap();
    let h = build_hierarchy(&v, &[], &g, 3).unwrap();
    assert_eq!(h.levels.len(), 1);
    assert_eq!(h.levels[0].potential, v);
    assert_eq!(
        h.levels[0].spectrum.as_ref().unwrap().eigenvalues,
        solve_values(&v, &g, 3).unwrap().eigenvalues
    );
}

#[test]
fn closed_form_and_value_seeds_agree_with_eigen_seed() {
    let g = Grid1D::new(-8.0, 8.0, 1600).unwrap();
    let v = g.sample(&ex("x^2", &["x"]), "x").unwrap();
    let closed = Seed::Closed { phi: ex("exp(-x^2/2)", &["x"]), var: "x".into(), lambda: 1.0 };
    let a = build_hierarchy(&v, &[closed], &g, 3).unwrap();
    let b = build_hierarchy(&v, &[Seed::Eigen(0)], &g, 3).unwrap();
    let ea = &a.levels[1].spectrum.as_ref().unwrap().eigenvalues;
    let eb = &b.levels[1].spectrum.as_ref().unwrap().eigenvalues;
    for (x, y) in ea.iter().zip(eb) {
        assert!((x - y).abs() < 2e-3, "{x} vs {y}");
    }
}

#[test]
fn missing_state_for_sech_seed() {
    let g = Grid1D::new(-4.0, 4.0, 4095).unwrap();
    assert!((g.spacing() - 1.0 / 512.0).abs() < 1e-15);
    let phi = g.sample(&ex("sech(x)", &["x"]), "x").unwrap();
    let u = missing_state(&phi, &g).unwrap();
    // V+ = 1 at λ = 0
    let r = missing_state_residual(&u, &vec![1.0; g.n], 0.0, &g);
    assert!(r <= 1e-6, "{r}");
    // U = −sinh ξ plus a multiple of cosh ξ fixed by the lower limit
    let x0 = g.node(0);
    for (x, ui) in g.nodes().iter().zip(&u) {
        let exact = -x.sinh() + x.cosh() * x0.tanh();
        assert!((ui - exact).abs() < 1e-8 * exact.abs().max(1.0), "{x}: {ui} vs {exact}");
    }
    let w = missing_state_wronskian(&u, &phi, &g);
    assert!((w - 1.0).abs() < 1e-5, "{w}");
}

#[test]
fn missing_state_for_gaussian_seed() {
    let g = Grid1D::new(-4.0, 4.0, 2047).unwrap();
    let phi = g.sample(&ex("exp(-x^2/2)", &["x"]), "x").unwrap();
    let u = missing_state(&phi, &g).unwrap();
    // seed of x² at λ = 1, partner potential x² + 2
    let vp: Vec<f64> = g.nodes().iter().map(|x| x * x + 2.0).collect();
    let r = missing_state_residual(&u, &vp, 1.0, &g);
    assert!(r <= 1e-5, "{r}");
    assert!(missing_state_wronskian(&u, &phi, &g).abs() > 0.5);
    let with_node = g.sample(&ex("x*exp(-x^2/2) + 1e-3", &["x"]), "x").unwrap();
    assert!(matches!(missing_state(&with_node, &g), Err(HierarchyError::SeedHasNodes { .. })));
}

#[test]
fn embedding_reproduces_planar_formulas() {
    let c = 0.5;
    let pair = embed_2d(
        &ex("xi^2", &["xi"]),
        &Expr::constant(0.0),
        1.0,
        &ex("exp(-xi^2/2)", &["xi"]),
        c,
        [0.0, 1.0],
    )
    .unwrap();
    let chart = crate::coords::Chart2D::new(0.0, 1.0, c).unwrap();
    for (rho, xi) in [(0.1, 0.3), (-0.4, -1.2), (0.8, 2.0)] {
        let (x, y) = chart.inverse(rho, xi).unwrap();
        let w = (-2.0 * c * rho).exp();
        let v0 = pair.v0.eval(&[x, y]).unwrap();
        let v1 = pair.v1.eval(&[x, y]).unwrap();
        assert!((v0 - w * xi * xi).abs() < 1e-10, "{v0}");
        assert!((v1 - w * (xi * xi + 2.0)).abs() < 1e-10, "{v1}");
        // L0 = f = ξ
        assert!((pair.l0.eval(&[x, y]).unwrap() - xi).abs() < 1e-10);
    }
    let res = pair.checker().unwrap().max_over(&pair.sample_regular_points(20, 3, -1.0, 1.0, 0.05)).unwrap();
    assert!(res.eq11 <= 1e-6 && res.eq14 <= 1e-6 && res.eq15 <= 1e-6, "{res:?}");
    let conv = intertwining_convergence(&pair, &[0.2, 0.1], 0.3, 0.8, &[16, 32, 64, 128]).unwrap();
    assert!((conv.order - 2.0).abs() <= 0.2, "{conv:?}");
}

#[test]
fn embedding_rejects_bad_seed() {
    let err = embed_2d(
        &ex("xi^2", &["xi"]),
        &Expr::constant(0.0),
        3.0,
        &ex("exp(-xi^2/2)", &["xi"]),
        0.5,
        [0.0, 1.0],
    );
    assert!(matches!(err, Err(HierarchyError::SeedResidual { .. })));
    let err = embed_2d(&ex("x", &["x"]), &Expr::constant(0.0), 1.0, &ex("xi", &["xi"]), 0.5, [0.0, 1.0]);
    assert!(matches!(err, Err(HierarchyError::Invalid(_))));
}
