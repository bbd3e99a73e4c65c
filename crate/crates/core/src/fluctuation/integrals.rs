//! Closed-form convolution integrals of the propagator against bath phases.
//!
//! For a bath frequency `w` and normal-mode frequency `W` the four kernels
//!
//! ```text
//! I_sc = int_0^t sin(W s) cos(w (t - s)) ds
//! I_ss = int_0^t sin(W s) sin(w (t - s)) ds
//! I_cc = int_0^t cos(W s) cos(w (t - s)) ds
//! I_cs = int_0^t cos(W s) sin(w (t - s)) ds
//! ```
//!
//! are written with `sigma = W + w`, `delta = W - w` and the helper
//! `sin(delta t / 2) / delta`, which is smooth through `delta = 0`. The
//! resonant limit is therefore the same formula, not a separate branch.

use crate::model::OscillatorBathModel;
use crate::propagator::SpectralDecomposition;

/// `sin(delta * t / 2) / delta`, tending to `t / 2` as `delta -> 0`.
pub(crate) fn half_sinc(delta: f64, t: f64) -> f64 {
    let x = 0.5 * delta * t;
    if x.abs() < 1e-4 {
        let x2 = x * x;
        0.5 * t * (1.0 - x2 / 6.0 * (1.0 - x2 / 20.0))
    } else {
        x.sin() / delta
    }
}

/// The four kernels `(I_sc, I_ss, I_cc, I_cs)` for one frequency pair.
pub fn kernels(mode_freq: f64, bath_freq: f64, t: f64) -> [f64; 4] {
    let (big, small) = (mode_freq, bath_freq);
    let sigma = big + small;
    let hs = half_sinc(big - small, t);
    let (s_sig, c_sig) = (0.5 * sigma * t).sin_cos();
    let isc = 2.0 * big * s_sig * hs / sigma;
    let ics = 2.0 * small * s_sig * hs / sigma;
    let iss = ((big * t).sin() - 2.0 * big * c_sig * hs) / sigma;
    let icc = ((small * t).sin() + 2.0 * big * c_sig * hs) / sigma;
    [isc, iss, icc, ics]
}

/// Per-bath-mode integrals at one time:
/// `C0 + i S0 = int_0^t A(s) e^{i w (t-s)} ds` and
/// `C1 + i S1 = int_0^t A_dot(s) e^{i w (t-s)} ds`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeIntegrals {
    pub t: f64,
    pub c0: Vec<f64>,
    pub s0: Vec<f64>,
    pub c1: Vec<f64>,
    pub s1: Vec<f64>,
}

impl ModeIntegrals {
    pub fn len(&self) -> usize {
        self.c0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c0.is_empty()
    }
}

/// Evaluate the integrals from the mode expansion
/// `A(s) = sum_j (U_0j^2 / W_j) sin(W_j s)`, `A_dot(s) = sum_j U_0j^2 cos(W_j s)`.
pub fn mode_integrals(
    decomp: &SpectralDecomposition,
    model: &OscillatorBathModel,
    t: f64,
) -> ModeIntegrals {
    let n = model.n_modes();
    let mut out = ModeIntegrals {
        t,
        c0: vec![0.0; n],
        s0: vec![0.0; n],
        c1: vec![0.0; n],
        s1: vec![0.0; n],
    };
    if t == 0.0 {
        return out;
    }
    let freqs = decomp.frequencies();
    let weights = decomp.system_weights();
    for (n_idx, &w) in model.bath_omegas.iter().enumerate() {
        let (mut c0, mut s0, mut c1, mut s1) = (0.0, 0.0, 0.0, 0.0);
        for (&big, &u2) in freqs.iter().zip(weights) {
            let [isc, iss, icc, ics] = kernels(big, w, t);
            let c = u2 / big;
            c0 += c * isc;
            s0 += c * iss;
            c1 += u2 * icc;
            s1 += u2 * ics;
        }
        out.c0[n_idx] = c0;
        out.s0[n_idx] = s0;
        out.c1[n_idx] = c1;
        out.s1[n_idx] = s1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::OscillatorBathModel;
    use crate::propagator::{decompose, propagator_at};
    use crate::testkit::adaptive_simpson;

    fn quad_kernels(big: f64, small: f64, t: f64) -> [f64; 4] {
        let tol = 1e-13;
        [
            adaptive_simpson(|s| (big * s).sin() * (small * (t - s)).cos(), 0.0, t, tol),
            adaptive_simpson(|s| (big * s).sin() * (small * (t - s)).sin(), 0.0, t, tol),
            adaptive_simpson(|s| (big * s).cos() * (small * (t - s)).cos(), 0.0, t, tol),
            adaptive_simpson(|s| (big * s).cos() * (small * (t - s)).sin(), 0.0, t, tol),
        ]
    }

    #[test]
    fn kernels_match_quadrature() {
        for &(big, small, t) in &[
            (1.0, 2.0, std::f64::consts::PI),
            (2.3, 0.4, 5.0),
            (0.7, 0.7, 9.0),
            (1.0, 1.0 + 1e-9, 12.0),
            (3.1, 2.9, 0.01),
        ] {
            let got = kernels(big, small, t);
            let want = quad_kernels(big, small, t);
            for k in 0..4 {
                assert!((got[k] - want[k]).abs() < 1e-10, "({big},{small},{t}) k={k}: {} vs {}", got[k], want[k]);
            }
        }
    }

    #[test]
    fn uncoupled_single_mode_values() {
        // A(s) = sin(s); bath mode at 2 is present but decoupled
        let m = OscillatorBathModel::new(1.0, vec![2.0], vec![0.0]);
        let d = decompose(&m).unwrap();
        let mi = mode_integrals(&d, &m, std::f64::consts::PI);
        assert!((mi.c0[0] + 2.0 / 3.0).abs() < 1e-14);
        assert!(mi.s0[0].abs() < 1e-14);
    }

    #[test]
    fn exact_resonance_matches_quadrature() {
        // decoupled bath mode at the system frequency: sqrt(lambda) == omega_n exactly
        let m = OscillatorBathModel::new(1.0, vec![1.0], vec![0.0]);
        let d = decompose(&m).unwrap();
        assert!(d.frequencies().iter().all(|&f| f == 1.0));
        let t = 7.3;
        let mi = mode_integrals(&d, &m, t);
        let q = quad_kernels(1.0, 1.0, t);
        assert!((mi.c0[0] - q[0]).abs() < 1e-9);
        assert!((mi.s0[0] - q[1]).abs() < 1e-9);
        assert!((mi.c1[0] - q[2]).abs() < 1e-9);
        assert!((mi.s1[0] - q[3]).abs() < 1e-9);
    }

    #[test]
    fn zero_time_is_zero() {
        let m = OscillatorBathModel::new(1.0, vec![0.5, 2.0], vec![0.2, 0.3]);
        let d = decompose(&m).unwrap();
        let mi = mode_integrals(&d, &m, 0.0);
        assert!(mi.c0.iter().chain(&mi.s0).chain(&mi.c1).chain(&mi.s1).all(|&v| v == 0.0));
    }

    #[test]
    fn integration_by_parts_identity() {
        let m = OscillatorBathModel::new(1.0, vec![0.4, 1.3, 2.2], vec![0.1, 0.3, -0.5]);
        let d = decompose(&m).unwrap();
        for &t in &[0.1, 1.0, 4.4, 19.0] {
            let mi = mode_integrals(&d, &m, t);
            let a = propagator_at(&d, t).a;
            for (n, &w) in m.bath_omegas.iter().enumerate() {
                // C1 + i S1 = A(t) + i w (C0 + i S0)
                assert!((mi.c1[n] - (a - w * mi.s0[n])).abs() < 1e-9);
                assert!((mi.s1[n] - w * mi.c0[n]).abs() < 1e-9);
            }
        }
    }
}
