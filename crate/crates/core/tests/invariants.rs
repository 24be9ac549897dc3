//! Property tests that cut across modules: pairs built from random
//! parameters stay intertwined and the charts invert on their branch.

use isospec::coords::{Chart2D, Chart3D};
use isospec::euclid::IntertwinerParams;
use isospec::expr::parse;
use isospec::integrability::{check_pfaffian_conditions, EtaVariant};
use isospec::numerics::{partner_spectrum_check, Grid1D};
use isospec::potentials::{build_2d_pair, build_3d_pair, solve_riccati_2d};
use proptest::prelude::*;

const F_CHOICES: [&str; 4] = ["eta", "eta^2 - 1", "sin(eta)", "1/(1 + eta^2)"];
const H_CHOICES: [&str; 3] = ["kappa^2", "1/kappa^2", "exp(-kappa)"];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn planar_pairs_are_intertwined(
        a1 in -2.0..2.0f64,
        a2 in -2.0..2.0f64,
        c in prop_oneof![-2.0..-0.3f64, 0.3..2.0f64],
        fi in 0..F_CHOICES.len(),
        hi in 0..H_CHOICES.len(),
        seed in 0u64..1000,
    ) {
        let f = parse(F_CHOICES[fi], &["eta"]).unwrap();
        let h = parse(H_CHOICES[hi], &["kappa"]).unwrap();
        let pair = build_2d_pair(a1, a2, c, &f, &h).unwrap();
        let pts = pair.sample_regular_points(8, seed, -2.0, 2.0, 0.1);
        let r = pair.checker().unwrap().max_over(&pts).unwrap();
        prop_assert!(r.max() <= 1e-8, "{r:?}");
    }

    #[test]
    fn planar_chart_inverts(
        a1 in -2.0..2.0f64,
        a2 in -2.0..2.0f64,
        c in prop_oneof![-2.0..-0.3f64, 0.3..2.0f64],
        x in -2.0..2.0f64,
        y in -2.0..2.0f64,
    ) {
        let ch = Chart2D::new(a1, a2, c).unwrap();
        let (_, l2) = ch.components(x, y);
        prop_assume!(l2 > 0.05);
        let u = ch.forward(x, y).unwrap();
        let (xb, yb) = ch.inverse(u.rho, u.xi).unwrap();
        prop_assert!((xb - x).abs() < 1e-9 && (yb - y).abs() < 1e-9, "({xb}, {yb}) vs ({x}, {y})");
    }

    #[test]
    fn space_chart_inverts_on_its_branch(
        r in prop::array::uniform3(-2.0..2.0f64),
        variant in prop_oneof![Just(EtaVariant::Eta), Just(EtaVariant::Eta2), Just(EtaVariant::Eta3)],
    ) {
        let ch = Chart3D::new(&IntertwinerParams::three_d([1.0, -0.5, 0.0], [0.5, 1.0, 2.0]), variant).unwrap();
        let l = ch.l_vector(&r);
        let (_, j) = variant.pair();
        prop_assume!(l[j] > 0.2 && l.iter().map(|v| v * v).sum::<f64>() > 0.1);
        let back = ch.inverse(&ch.forward(&r).unwrap()).unwrap();
        for k in 0..3 {
            prop_assert!((back[k] - r[k]).abs() < 1e-8, "{back:?} vs {r:?}");
        }
    }

    #[test]
    fn admissible_space_params_give_intertwined_pairs(
        cv in prop::array::uniform3(-1.5..1.5f64),
        t in prop::array::uniform2(-1.0..1.0f64),
        seed in 0u64..1000,
    ) {
        let norm = (cv[0] * cv[0] + cv[1] * cv[1] + cv[2] * cv[2]).sqrt();
        prop_assume!(norm > 0.3 && cv[0].abs() > 0.1 && cv[1].abs() > 0.1 && cv[2].abs() > 0.1);
        // a orthogonal to c keeps a·c = 0
        let u = [cv[1], -cv[0], 0.0];
        let w = [cv[0] * cv[2], cv[1] * cv[2], -(cv[0] * cv[0] + cv[1] * cv[1])];
        let a = [t[0] * u[0] + t[1] * w[0], t[0] * u[1] + t[1] * w[1], t[0] * u[2] + t[1] * w[2]];
        let p = IntertwinerParams::three_d(a, cv);
        prop_assert!(check_pfaffian_conditions(&p).all_satisfied);
        let f = parse("eta^2", &["eta"]).unwrap();
        let h = parse("beta^2 + 1/(1 + gamma^2)", &["beta", "gamma"]).unwrap();
        let pair = build_3d_pair(&p, &f, &h, EtaVariant::Eta).unwrap();
        let pts = pair.sample_regular_points(6, seed, -2.0, 2.0, 0.1);
        let r = pair.checker().unwrap().max_over(&pts).unwrap();
        prop_assert!(r.max() <= 1e-7, "{r:?}");
    }

    #[test]
    fn riccati_branches_solve_their_equation(
        b in -3.0..3.0f64,
        b1 in -2.0..2.0f64,
        c in 0.3..2.0f64,
        eta in -3.0..3.0f64,
    ) {
        let s = solve_riccati_2d(b, b1, c).unwrap();
        prop_assume!(s.poles.iter().all(|g| g.expr.eval_at(&[("eta", eta)]).unwrap().abs() > 0.1));
        let f = s.f.eval_at(&[("eta", eta)]).unwrap();
        let fp = s.f.differentiate("eta").eval_at(&[("eta", eta)]).unwrap();
        let lhs = f * f - c * (1.0 + eta * eta) * fp;
        prop_assert!((lhs - b).abs() <= 1e-8 * (1.0 + f * f), "{lhs} vs {b}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    // f = w ξ: H− has levels 2wk, H+ has 2w(k + 1)
    #[test]
    fn scaled_oscillator_partners(w in 0.5..2.0f64) {
        let f = parse(&format!("{w}*xi"), &["xi"]).unwrap();
        let g = Grid1D::new(-10.0, 10.0, 2000).unwrap();
        let r = partner_spectrum_check(&f, "xi", &g, 3).unwrap();
        for k in 0..3 {
            prop_assert!((r.minus.eigenvalues[k] - 2.0 * w * k as f64).abs() < 5e-3 * w);
            prop_assert!((r.plus.eigenvalues[k] - 2.0 * w * (k + 1) as f64).abs() < 5e-3 * w);
        }
    }
}
