mod common;

use fdi_lab::fluctuation::xy_quantities;
use fdi_lab::master::{
    appendix2_bracket, appendix2_construct, ladder_coefficients, lindblad39_residual, master_moments,
    reversible_moments, reversible_moments_constant, solve_w, uncertainty43_residual, w_from_ullersma,
    CoefficientValues, UllersmaMatched, W3Sign, WState,
};
use fdi_lab::moments::{delta_quantities, evolve_moments, reference_moments};
use fdi_lab::propagator::{decompose, propagator_at};
use num_complex::Complex64;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn decoherence_functional_is_non_negative_and_state_free(
        seed in any::<u64>(),
        t in 0.05f64..20.0,
        temp in 0.0f64..4.0,
        states in prop::collection::vec(common::state_strategy(), 5),
    ) {
        let m = &common::random_models(seed, 1, 6)[0];
        let d = decompose(m).unwrap();
        prop_assume!(propagator_at(&d, t).r2 > 1e-6);
        let scale = xy_quantities(&d, m, temp, t).scale();
        let ds: Vec<f64> = states
            .iter()
            .map(|s| delta_quantities(&d, m, temp, s, t).unwrap().d_value)
            .collect();
        for v in &ds {
            prop_assert!(*v >= -1e-10 * scale);
            prop_assert!((v - ds[0]).abs() <= 1e-9 * scale, "{} vs {}", v, ds[0]);
        }
    }

    #[test]
    fn decoherence_functional_grows_with_temperature(
        seed in any::<u64>(),
        t in 0.0f64..20.0,
        t1 in 0.0f64..3.0,
        dt in 0.0f64..3.0,
    ) {
        let m = &common::random_models(seed, 1, 6)[0];
        let d = decompose(m).unwrap();
        let lo = xy_quantities(&d, m, t1, t);
        let hi = xy_quantities(&d, m, t1 + dt, t);
        prop_assert!(hi.fd_residual() >= lo.fd_residual() - 1e-10 * hi.scale().max(lo.scale()));
    }

    #[test]
    fn evolved_moments_stay_physical(
        seed in any::<u64>(),
        t in 0.0f64..30.0,
        temp in 0.0f64..4.0,
        state in common::state_strategy(),
    ) {
        let m = &common::random_models(seed, 1, 8)[0];
        let d = decompose(m).unwrap();
        let ev = evolve_moments(&d, m, temp, &state, t).unwrap();
        prop_assert!(ev.rs_residual(m.hbar) >= -1e-10 * m.hbar * m.hbar);
    }

    #[test]
    fn direct_route_splits_into_reference_plus_diffusion(
        seed in any::<u64>(),
        t in 0.05f64..10.0,
        temp in 0.0f64..3.0,
        state in common::state_strategy(),
    ) {
        let m = &common::random_models(seed, 1, 5)[0];
        let d = decompose(m).unwrap();
        let prop = propagator_at(&d, t);
        prop_assume!(prop.r2 > 1e-3);
        let fl = xy_quantities(&d, m, temp, t);
        let ev = evolve_moments(&d, m, temp, &state, t).unwrap();
        let rf = reference_moments(&d, m, &state, t).unwrap();
        let (r2, m0) = (prop.r2, m.m0);
        let scale = ev.qq.abs().max(ev.pp.abs()).max(1.0);
        prop_assert!((ev.qq - (r2 * rf.qq + fl.x / m0)).abs() <= 1e-10 * scale);
        prop_assert!((ev.pp - (r2 * rf.pp + m0 * fl.y)).abs() <= 1e-10 * scale);
        prop_assert!((ev.qp_sym - (r2 * rf.qp_sym + fl.x_dot)).abs() <= 1e-10 * scale);
    }

    #[test]
    fn balance_equals_scaled_lindblad_residual(seed in any::<u64>(), t in 0.05f64..20.0, temp in 0.0f64..3.0) {
        let m = &common::random_models(seed, 1, 6)[0];
        let d = decompose(m).unwrap();
        let r2 = propagator_at(&d, t).r2;
        prop_assume!(r2 > 0.0);
        let fl = xy_quantities(&d, m, temp, t);
        let w = w_from_ullersma(&d, m, temp, t).unwrap();
        let h = m.hbar;
        let scaled = 4.0 * h.powi(4) * r2 * r2 * lindblad39_residual(&w, h);
        prop_assert!((fl.fd_residual() - scaled).abs() <= 1e-10 * fl.scale());
    }

    #[test]
    fn uncertainty43_is_scaled_lindblad_residual(
        w1 in 0.0f64..3.0, w2 in 0.0f64..3.0, w3 in -2.0f64..2.0, w4 in 0.0f64..2.0,
        state in common::state_strategy(),
    ) {
        let w = WState { t: 1.0, w1, w2, w3, w4 };
        let ev = master_moments(&w, &state, 1.0);
        let u = uncertainty43_residual(&w, &state, &ev, 1.0);
        let l = 4.0 * (-2.0 * w4).exp() * lindblad39_residual(&w, 1.0);
        let scale = 4.0 * (-2.0 * w4).exp() * (w1 * w2).max(w3 * w3).max(((w4.exp() - 1.0) / 4.0).powi(2)).max(1e-300);
        prop_assert!((u - l).abs() <= 1e-10 * scale.max(u.abs()));
    }

    #[test]
    fn w_system_is_linear_in_sources(
        b11 in 0.1f64..2.0, b12 in -0.3f64..0.3, b22 in 0.1f64..2.0,
        k1 in -1.0f64..1.0, k2 in -1.0f64..1.0, k3 in -1.0f64..1.0,
    ) {
        let grid = fdi_lab::par::time_grid(4.0, 20);
        let c = CoefficientValues { b11, b12, b22, k1, k2, k3: Complex64::new(k3, 0.0) };
        let c2 = CoefficientValues { k1: 2.0 * k1, k2: 2.0 * k2, k3: Complex64::new(2.0 * k3, 0.0), ..c };
        let a = solve_w(&move |_t: f64| c, &grid).unwrap();
        let b = solve_w(&move |_t: f64| c2, &grid).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!(x.w4, 0.0);
            for (p, q) in [(x.w1, y.w1), (x.w2, y.w2), (x.w3, y.w3)] {
                prop_assert!((2.0 * p - q).abs() <= 1e-9 * q.abs().max(1.0));
            }
        }
    }

    #[test]
    fn appendix2_construction_violates_lindblad_but_not_uncertainty(
        split in 0.1f64..10.0,
        negative in any::<bool>(),
        rate in 0.1f64..3.0,
        state in common::state_strategy(),
    ) {
        let sign = if negative { W3Sign::Negative } else { W3Sign::Positive };
        let grid = fdi_lab::par::time_grid(5.0, 50);
        let ws = appendix2_construct(|t| rate * t, split, sign, &grid, 1.0).unwrap();
        for w in &ws {
            let rev = reversible_moments_constant(0.5, 0.0, 0.5, &state, w.t);
            let mm = master_moments(w, &rev, 1.0);
            if w.t > 0.0 {
                prop_assert!(lindblad39_residual(w, 1.0) < 0.0);
            }
            prop_assert!(mm.qq * mm.pp - 0.25 >= -1e-10);
            let g = w.w4.exp_m1();
            prop_assert!(appendix2_bracket(w, 1.0).abs() <= 1e-12 * (0.25 * g).max(2.0 * w.w1 * w.w2).max(1.0));
        }
    }

    #[test]
    fn ladder_operator_is_normalized(seed in any::<u64>(), t in 0.1f64..20.0, temp in 0.0f64..3.0) {
        let m = &common::random_models(seed, 1, 5)[0];
        let d = decompose(m).unwrap();
        if let Ok(lc) = ladder_coefficients(&d, m, temp, t) {
            prop_assert!((lc.commutator(m.hbar) - 1.0).abs() <= 1e-10);
            prop_assert!((0.0..=std::f64::consts::PI).contains(&lc.phi_minus_theta));
        }
    }
}

#[test]
fn master_route_reproduces_direct_moments() {
    let m = fdi_lab::OscillatorBathModel::new(1.0, vec![1.7, 2.5], vec![0.2, 0.25]);
    let d = decompose(&m).unwrap();
    let grid = fdi_lab::par::time_grid(6.0, 60);
    assert!(grid.iter().all(|&t| propagator_at(&d, t).r2 > 0.0));
    let states = [
        common::gaussian_state(0.0, 0.0, 0.0, 0.0, 0.0),
        common::gaussian_state(1.0, 0.4, 0.7, 1.0, -0.5),
        common::gaussian_state(0.3, 0.9, 2.0, -1.5, 0.2),
    ];
    for temp in [0.0, 0.7, 2.0] {
        let um = UllersmaMatched::new(m.clone(), temp).unwrap();
        let ws = solve_w(&um, &grid).unwrap();
        for s in &states {
            let revs = reversible_moments(&um, s, &grid).unwrap();
            for (w, rev) in ws.iter().zip(&revs) {
                let direct = evolve_moments(&d, &m, temp, s, w.t).unwrap();
                let via = master_moments(w, rev, m.hbar);
                for (a, b) in [(via.qq, direct.qq), (via.pp, direct.pp)] {
                    assert!((a - b).abs() <= 1e-8 * b.abs(), "t = {}: {a} vs {b}", w.t);
                }
                let cross = (direct.qq * direct.pp).sqrt();
                assert!((via.qp_sym - direct.qp_sym).abs() <= 1e-8 * direct.qp_sym.abs().max(cross));
                let direct_w = w_from_ullersma(&d, &m, temp, w.t).unwrap();
                assert!((direct_w.w1 - w.w1).abs() <= 1e-8 * direct_w.w1.abs().max(1e-3));
                assert!((direct_w.w4 - w.w4).abs() <= 1e-8);
            }
        }
    }
}
