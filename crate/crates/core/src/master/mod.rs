//! Quadratic master equations and their solution coefficients.
//!
//! The dissipative part of the solution is parameterized by four real
//! functions `w1..w4` obeying
//!
//! ```text
//! d/dt (w1, w2, w3) = 2 M (w1, w2, w3) + e^{w4} (k1, k2, Re k3)
//! d/dt w4           = -4 hbar Im k3
//! M = [[-2 b12, 0, -2 b11], [0, 2 b12, 2 b22], [b22, -b11, 0]]
//! ```
//!
//! where `H_s = b11 q^2 + b22 p^2 + b12 (qp + pq)` is the reversible part.

mod ladder;

pub use ladder::{first_exponent_coefficient, ladder_coefficients, ladder_from_samples, LadderCoefficients};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fluctuation::{bath_energies, mode_integrals, sample_from_parts, EnergyVariant, FluctuationSample};
use crate::model::OscillatorBathModel;
use crate::moments::GaussianMomentState;
use crate::ode::{integrate, OdeOptions, OdeSystem};
use crate::propagator::{decompose, propagator_at, PropagatorSample, SpectralDecomposition};

/// Coefficient values at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientValues {
    pub b11: f64,
    pub b12: f64,
    pub b22: f64,
    pub k1: f64,
    pub k2: f64,
    /// `k4` is the conjugate and is never stored.
    pub k3: Complex64,
}

impl CoefficientValues {
    pub const ZERO: Self = Self {
        b11: 0.0,
        b12: 0.0,
        b22: 0.0,
        k1: 0.0,
        k2: 0.0,
        k3: Complex64::new(0.0, 0.0),
    };

    /// Heisenberg generator: `d/dt (q, p) = G (q, p)`.
    pub fn generator(&self) -> [[f64; 2]; 2] {
        [
            [2.0 * self.b12, 2.0 * self.b22],
            [-2.0 * self.b11, -2.0 * self.b12],
        ]
    }
}

/// Time-dependent coefficients of a master equation.
pub trait MasterCoefficients: Sync {
    fn at(&self, t: f64) -> CoefficientValues;

    fn hbar(&self) -> f64 {
        1.0
    }
}

impl<F> MasterCoefficients for F
where
    F: Fn(f64) -> CoefficientValues + Sync,
{
    fn at(&self, t: f64) -> CoefficientValues {
        self(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantCoefficients {
    pub values: CoefficientValues,
    pub hbar: f64,
}

impl MasterCoefficients for ConstantCoefficients {
    fn at(&self, _t: f64) -> CoefficientValues {
        self.values
    }

    fn hbar(&self) -> f64 {
        self.hbar
    }
}

/// Coefficients that reproduce the exact reduced dynamics of an
/// oscillator-bath model at temperature `temperature`. Defined while `R^2 > 0`.
#[derive(Debug, Clone)]
pub struct UllersmaMatched {
    model: OscillatorBathModel,
    decomp: SpectralDecomposition,
    temperature: f64,
    energies: Vec<f64>,
}

impl UllersmaMatched {
    pub fn new(model: OscillatorBathModel, temperature: f64) -> Result<Self> {
        let decomp = decompose(&model)?;
        Self::with_decomposition(model, decomp, temperature)
    }

    pub fn with_decomposition(
        model: OscillatorBathModel,
        decomp: SpectralDecomposition,
        temperature: f64,
    ) -> Result<Self> {
        let energies = bath_energies(&model, &EnergyVariant::Thermal, temperature)?;
        Ok(Self {
            model,
            decomp,
            temperature,
            energies,
        })
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    fn parts(&self, t: f64) -> (PropagatorSample, FluctuationSample, f64, f64) {
        let prop = propagator_at(&self.decomp, t);
        let mi = mode_integrals(&self.decomp, &self.model, t);
        let (fl, rates) = sample_from_parts(&prop, &mi, &self.model, &self.energies, self.temperature);
        (prop, fl, rates.y_dot, rates.x_ddot)
    }
}

impl MasterCoefficients for UllersmaMatched {
    fn at(&self, t: f64) -> CoefficientValues {
        let (prop, fl, y_dot, x_ddot) = self.parts(t);
        let (m, h2) = (self.model.m0, self.model.hbar * self.model.hbar);
        let r2 = prop.r2;
        let r2d = prop.r2_dot();

        // reversible part from G = S_dot S^{-1}, S = (1/R)[[A_dot, A/m], [m A_ddot, A_dot]]
        let b12 = -r2d / (4.0 * r2);
        let b22 = 0.5 / m;
        let b11 = -m * (prop.a_dddot * prop.a_dot - prop.a_ddot * prop.a_ddot) / (2.0 * r2);

        let w1 = m * fl.y / (2.0 * h2 * r2);
        let w2 = fl.x / (2.0 * h2 * m * r2);
        let w3 = fl.x_dot / (4.0 * h2 * r2);
        let r4 = r2 * r2;
        let w1d = m * (y_dot * r2 - fl.y * r2d) / (2.0 * h2 * r4);
        let w2d = (fl.x_dot * r2 - fl.x * r2d) / (2.0 * h2 * m * r4);
        let w3d = (x_ddot * r2 - fl.x_dot * r2d) / (4.0 * h2 * r4);
        let w4d = -r2d / r2;

        // e^{-w4} = R^2
        CoefficientValues {
            b11,
            b12,
            b22,
            k1: r2 * (w1d + 4.0 * b12 * w1 + 4.0 * b11 * w3),
            k2: r2 * (w2d - 4.0 * b12 * w2 - 4.0 * b22 * w3),
            k3: Complex64::new(
                r2 * (w3d - 2.0 * b22 * w1 + 2.0 * b11 * w2),
                -w4d / (4.0 * self.model.hbar),
            ),
        }
    }

    fn hbar(&self) -> f64 {
        self.model.hbar
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WState {
    pub t: f64,
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub w4: f64,
}

impl WState {
    pub fn zero(t: f64) -> Self {
        Self { t, w1: 0.0, w2: 0.0, w3: 0.0, w4: 0.0 }
    }
}

struct WSystem<'a, C: ?Sized> {
    coeffs: &'a C,
}

impl<C: MasterCoefficients + ?Sized> OdeSystem for WSystem<'_, C> {
    fn dim(&self) -> usize {
        4
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        let c = self.coeffs.at(t);
        let e = y[3].exp();
        dy[0] = 2.0 * (-2.0 * c.b12 * y[0] - 2.0 * c.b11 * y[2]) + e * c.k1;
        dy[1] = 2.0 * (2.0 * c.b12 * y[1] + 2.0 * c.b22 * y[2]) + e * c.k2;
        dy[2] = 2.0 * (c.b22 * y[0] - c.b11 * y[1]) + e * c.k3.re;
        dy[3] = -4.0 * self.coeffs.hbar() * c.k3.im;
    }
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    match t_grid.first() {
        Some(&t0) if t0 == 0.0 => Ok(()),
        Some(&t0) => Err(Error::PreconditionFailure(format!("time grid must start at 0, got {t0}"))),
        None => Err(Error::PreconditionFailure("empty time grid".into())),
    }
}

/// Integrate the w-system from zero initial data over `t_grid`.
pub fn solve_w<C: MasterCoefficients + ?Sized>(coeffs: &C, t_grid: &[f64]) -> Result<Vec<WState>> {
    check_grid(t_grid)?;
    let sys = WSystem { coeffs };
    let ys = integrate(&sys, &[0.0; 4], t_grid, &OdeOptions::default())?;
    Ok(t_grid
        .iter()
        .zip(ys)
        .map(|(&t, y)| WState { t, w1: y[0], w2: y[1], w3: y[2], w4: y[3] })
        .collect())
}

struct ReversibleSystem<'a, C: ?Sized> {
    coeffs: &'a C,
}

impl<C: MasterCoefficients + ?Sized> OdeSystem for ReversibleSystem<'_, C> {
    fn dim(&self) -> usize {
        5
    }

    // (mean_q, mean_p, qq, pp, qp_sym) under d/dt (q, p) = G (q, p)
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        let g = self.coeffs.at(t).generator();
        let c = 0.5 * y[4];
        dy[0] = g[0][0] * y[0] + g[0][1] * y[1];
        dy[1] = g[1][0] * y[0] + g[1][1] * y[1];
        dy[2] = 2.0 * (g[0][0] * y[2] + g[0][1] * c);
        dy[3] = 2.0 * (g[1][0] * c + g[1][1] * y[3]);
        dy[4] = 2.0 * (g[0][0] * c + g[0][1] * y[3] + g[1][0] * y[2] + g[1][1] * c);
    }
}

/// Moments evolved by the reversible part `H_s` alone, by integration.
pub fn reversible_moments<C: MasterCoefficients + ?Sized>(
    coeffs: &C,
    initial: &GaussianMomentState,
    t_grid: &[f64],
) -> Result<Vec<GaussianMomentState>> {
    check_grid(t_grid)?;
    let s = initial;
    let y0 = [s.mean_q, s.mean_p, s.qq, s.pp, s.qp_sym];
    let ys = integrate(&ReversibleSystem { coeffs }, &y0, t_grid, &OdeOptions::default())?;
    Ok(ys
        .into_iter()
        .map(|y| GaussianMomentState { mean_q: y[0], mean_p: y[1], qq: y[2], pp: y[3], qp_sym: y[4] })
        .collect())
}

/// Closed-form reversible moments for constant `b` coefficients.
pub fn reversible_moments_constant(
    b11: f64,
    b12: f64,
    b22: f64,
    initial: &GaussianMomentState,
    t: f64,
) -> GaussianMomentState {
    let g = [[2.0 * b12, 2.0 * b22], [-2.0 * b11, -2.0 * b12]];
    // G is traceless, so G^2 = mu2 I with mu2 = -det G
    let mu2 = -(g[0][0] * g[1][1] - g[0][1] * g[1][0]);
    let (c, s) = if mu2 > 0.0 {
        let mu = mu2.sqrt();
        ((mu * t).cosh(), (mu * t).sinh() / mu)
    } else if mu2 < 0.0 {
        let nu = (-mu2).sqrt();
        ((nu * t).cos(), (nu * t).sin() / nu)
    } else {
        (1.0, t)
    };
    let m = [
        [c + s * g[0][0], s * g[0][1]],
        [s * g[1][0], c + s * g[1][1]],
    ];
    let x = initial;
    let cov = 0.5 * x.qp_sym;
    let qq = m[0][0] * m[0][0] * x.qq + 2.0 * m[0][0] * m[0][1] * cov + m[0][1] * m[0][1] * x.pp;
    let pp = m[1][0] * m[1][0] * x.qq + 2.0 * m[1][0] * m[1][1] * cov + m[1][1] * m[1][1] * x.pp;
    let qp = m[0][0] * m[1][0] * x.qq + (m[0][0] * m[1][1] + m[0][1] * m[1][0]) * cov + m[0][1] * m[1][1] * x.pp;
    GaussianMomentState {
        mean_q: m[0][0] * x.mean_q + m[0][1] * x.mean_p,
        mean_p: m[1][0] * x.mean_q + m[1][1] * x.mean_p,
        qq,
        pp,
        qp_sym: 2.0 * qp,
    }
}

/// w-coefficients of the exact reduced dynamics, from samples.
pub fn w_from_samples(prop: &PropagatorSample, fl: &FluctuationSample, m0: f64) -> Result<WState> {
    let r2 = prop.r2;
    if !(r2 > 0.0) {
        return Err(Error::NonPositiveR2 { t: prop.t, r2 });
    }
    let h2 = fl.hbar * fl.hbar;
    Ok(WState {
        t: prop.t,
        w1: m0 * fl.y / (2.0 * h2 * r2),
        w2: fl.x / (2.0 * h2 * m0 * r2),
        w3: fl.x_dot / (4.0 * h2 * r2),
        w4: -r2.ln(),
    })
}

pub fn w_from_ullersma(
    decomp: &SpectralDecomposition,
    model: &OscillatorBathModel,
    temp: f64,
    t: f64,
) -> Result<WState> {
    let prop = propagator_at(decomp, t);
    let fl = crate::fluctuation::xy_quantities(decomp, model, temp, t);
    w_from_samples(&prop, &fl, model.m0)
}

/// `w1 w2 - w3^2 - ((e^{w4} - 1)/(4 hbar))^2`; non-negative for Lindblad form.
pub fn lindblad39_residual(w: &WState, hbar: f64) -> f64 {
    let g = w.w4.exp_m1() / (4.0 * hbar);
    w.w1 * w.w2 - w.w3 * w.w3 - g * g
}

/// Second moments of the master-equation solution from the reversible ones.
/// Means are scaled by `e^{-w4/2}`, the square root of the variance factor.
pub fn master_moments(w: &WState, reversible: &GaussianMomentState, hbar: f64) -> GaussianMomentState {
    let f = (-w.w4).exp();
    let h2 = hbar * hbar;
    let half = (-0.5 * w.w4).exp();
    GaussianMomentState {
        mean_q: half * reversible.mean_q,
        mean_p: half * reversible.mean_p,
        qq: f * (reversible.qq + 2.0 * h2 * w.w2),
        pp: f * (reversible.pp + 2.0 * h2 * w.w1),
        qp_sym: f * (reversible.qp_sym + 4.0 * h2 * w.w3),
    }
}

/// Left minus right side of the master-route uncertainty relation.
pub fn uncertainty43_residual(
    w: &WState,
    reversible: &GaussianMomentState,
    evolved: &GaussianMomentState,
    hbar: f64,
) -> f64 {
    let f = (-w.w4).exp();
    let dq = evolved.qq - f * reversible.qq;
    let dp = evolved.pp - f * reversible.pp;
    let dc = evolved.qp_sym - f * reversible.qp_sym;
    let diss = -(-w.w4).exp_m1();
    dq * dp - 0.25 * dc * dc - 0.25 * hbar * hbar * diss * diss
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum W3Sign {
    Positive,
    Negative,
}

/// w-coefficients saturating `w1 w2 = w3^2 = (e^{2 w4} - 1)/(4 hbar)^2`, split
/// as `w1 = split * s`, `w2 = s / split`.
pub fn appendix2_construct<F: Fn(f64) -> f64>(
    w4_fn: F,
    split: f64,
    sign: W3Sign,
    t_grid: &[f64],
    hbar: f64,
) -> Result<Vec<WState>> {
    if !(split > 0.0 && split.is_finite()) {
        return Err(Error::PreconditionFailure(format!("split must be in (0, inf), got {split}")));
    }
    t_grid
        .iter()
        .map(|&t| {
            let w4 = w4_fn(t);
            if !(w4 >= 0.0) {
                return Err(Error::PreconditionFailure(format!("w4({t}) = {w4} must be >= 0")));
            }
            let s = (2.0 * w4).exp_m1().sqrt() / (4.0 * hbar);
            let w3 = match sign {
                W3Sign::Positive => s,
                W3Sign::Negative => -s,
            };
            Ok(WState { t, w1: split * s, w2: s / split, w3, w4 })
        })
        .collect()
}

/// Bracketed coefficient that must vanish for the saturating construction.
pub fn appendix2_bracket(w: &WState, hbar: f64) -> f64 {
    let g = w.w4.exp_m1();
    2.0 * hbar * hbar * (w.w1 * w.w2 - (g / (4.0 * hbar)).powi(2)) - 0.25 * g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fluctuation::xy_quantities;
    use crate::moments::{evolve_moments, reference_moments, InitialStatePreset};

    fn grid(t_max: f64, n: usize) -> Vec<f64> {
        crate::par::time_grid(t_max, n)
    }

    #[test]
    fn zero_coefficients_stay_zero() {
        let ws = solve_w(&|_t: f64| CoefficientValues::ZERO, &grid(5.0, 10)).unwrap();
        assert!(ws.iter().all(|w| (w.w1, w.w2, w.w3, w.w4) == (0.0, 0.0, 0.0, 0.0)));
    }

    #[test]
    fn constant_sources_grow_linearly() {
        let c = ConstantCoefficients {
            values: CoefficientValues { k1: 0.3, k2: 0.7, ..CoefficientValues::ZERO },
            hbar: 1.0,
        };
        for w in solve_w(&c, &grid(4.0, 8)).unwrap() {
            assert!((w.w1 - 0.3 * w.t).abs() < 1e-12);
            assert!((w.w2 - 0.7 * w.t).abs() < 1e-12);
            assert_eq!((w.w3, w.w4), (0.0, 0.0));
        }
    }

    #[test]
    fn linear_in_sources() {
        let base = CoefficientValues {
            b11: 0.5,
            b12: 0.1,
            b22: 0.5,
            k1: 0.2,
            k2: 0.4,
            k3: Complex64::new(0.1, 0.0),
        };
        let double = CoefficientValues { k1: 0.4, k2: 0.8, k3: Complex64::new(0.2, 0.0), ..base };
        let g = grid(6.0, 12);
        let a = solve_w(&ConstantCoefficients { values: base, hbar: 1.0 }, &g).unwrap();
        let b = solve_w(&ConstantCoefficients { values: double, hbar: 1.0 }, &g).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((2.0 * x.w1 - y.w1).abs() < 1e-9);
            assert!((2.0 * x.w2 - y.w2).abs() < 1e-9);
            assert!((2.0 * x.w3 - y.w3).abs() < 1e-9);
        }
    }

    #[test]
    fn grid_must_start_at_zero() {
        assert!(solve_w(&|_t: f64| CoefficientValues::ZERO, &[1.0, 2.0]).is_err());
        assert!(solve_w(&|_t: f64| CoefficientValues::ZERO, &[]).is_err());
    }

    #[test]
    fn reversible_closed_form_matches_integration() {
        let values = CoefficientValues { b11: 0.5, b12: 0.2, b22: 0.5, ..CoefficientValues::ZERO };
        let c = ConstantCoefficients { values, hbar: 1.0 };
        let m = OscillatorBathModel::uncoupled(1.0);
        let s = InitialStatePreset::Squeezed { r: 0.4, phi: 1.0 }.moments(&m);
        let g = grid(5.0, 10);
        let ode = reversible_moments(&c, &s, &g).unwrap();
        for (&t, o) in g.iter().zip(&ode) {
            let cf = reversible_moments_constant(0.5, 0.2, 0.5, &s, t);
            assert!((cf.qq - o.qq).abs() < 1e-9);
            assert!((cf.pp - o.pp).abs() < 1e-9);
            assert!((cf.qp_sym - o.qp_sym).abs() < 1e-9);
            assert!(cf.rs_residual(1.0).abs() < 1e-10);
        }
        // hyperbolic and parabolic generators
        for (b11, b12, b22) in [(-0.5, 0.0, 0.5), (0.0, 0.0, 0.5)] {
            let cf = reversible_moments_constant(b11, b12, b22, &s, 2.0);
            let c = ConstantCoefficients {
                values: CoefficientValues { b11, b12, b22, ..CoefficientValues::ZERO },
                hbar: 1.0,
            };
            let o = reversible_moments(&c, &s, &[0.0, 2.0]).unwrap()[1];
            assert!((cf.qq - o.qq).abs() < 1e-9 * cf.qq.abs().max(1.0));
        }
    }

    #[test]
    fn uncoupled_mapping_is_zero() {
        let m = OscillatorBathModel::new(1.0, vec![2.0], vec![0.0]);
        let d = decompose(&m).unwrap();
        let w = w_from_ullersma(&d, &m, 1.0, 3.0).unwrap();
        assert_eq!((w.w1, w.w2, w.w3), (0.0, 0.0, 0.0));
        assert!(w.w4.abs() < 1e-15);
        assert!(lindblad39_residual(&WState::zero(0.0), 1.0) == 0.0);
    }

    #[test]
    fn mapping_residual_matches_fd() {
        let m = OscillatorBathModel::new(1.0, vec![0.5, 1.7], vec![0.2, 0.4]);
        let d = decompose(&m).unwrap();
        for &t in &[0.5, 2.0, 7.0] {
            let w = w_from_ullersma(&d, &m, 0.7, t).unwrap();
            let f = xy_quantities(&d, &m, 0.7, t);
            let lhs = f.fd_residual();
            let rhs = 4.0 * f.r2 * f.r2 * lindblad39_residual(&w, 1.0);
            assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1e-300), "{lhs} {rhs}");
        }
    }

    #[test]
    fn matched_coefficients_reproduce_mapping_and_moments() {
        let m = OscillatorBathModel::new(1.0, vec![2.0], vec![0.5]);
        let um = UllersmaMatched::new(m.clone(), 1.0).unwrap();
        let d = decompose(&m).unwrap();
        let g = grid(3.0, 12);
        let ws = solve_w(&um, &g).unwrap();
        let s = InitialStatePreset::Squeezed { r: 0.6, phi: 0.8 }.moments(&m);
        let rev = reversible_moments(&um, &s, &g).unwrap();
        for ((w, r), &t) in ws.iter().zip(&rev).zip(&g) {
            let exact = w_from_ullersma(&d, &m, 1.0, t).unwrap();
            for (a, b) in [(w.w1, exact.w1), (w.w2, exact.w2), (w.w3, exact.w3), (w.w4, exact.w4)] {
                assert!((a - b).abs() <= 1e-7 * b.abs().max(1e-6), "t={t}: {a} vs {b}");
            }
            let rf = reference_moments(&d, &m, &s, t).unwrap();
            assert!((r.qq - rf.qq).abs() < 1e-8 * rf.qq.abs().max(1.0));
            assert!((r.pp - rf.pp).abs() < 1e-8 * rf.pp.abs().max(1.0));
            let ev = evolve_moments(&d, &m, 1.0, &s, t).unwrap();
            let mm = master_moments(w, r, 1.0);
            assert!((mm.qq - ev.qq).abs() < 1e-8 * ev.qq.abs());
            assert!((mm.pp - ev.pp).abs() < 1e-8 * ev.pp.abs());
            assert!((mm.qp_sym - ev.qp_sym).abs() < 1e-8 * ev.qq.abs().max(ev.pp.abs()));
            assert!((mm.mean_q - ev.mean_q).abs() < 1e-12);
        }
    }

    #[test]
    fn uncertainty_identity() {
        let w = WState { t: 1.0, w1: 0.3, w2: 0.8, w3: -0.2, w4: 0.4 };
        let m = OscillatorBathModel::uncoupled(1.0);
        let rev = InitialStatePreset::Squeezed { r: 0.2, phi: 1.0 }.moments(&m);
        for hbar in [1.0, 0.5] {
            let ev = master_moments(&w, &rev, hbar);
            let lhs = uncertainty43_residual(&w, &rev, &ev, hbar);
            let rhs = 4.0 * hbar.powi(4) * (-2.0 * w.w4).exp() * lindblad39_residual(&w, hbar);
            assert!((lhs - rhs).abs() < 1e-12 * rhs.abs().max(1.0));
        }
        assert_eq!(uncertainty43_residual(&WState::zero(0.0), &rev, &rev, 1.0), 0.0);
    }

    #[test]
    fn appendix2_reference_values() {
        let ws = appendix2_construct(|t| t, 1.0, W3Sign::Positive, &[0.0, 1.0], 1.0).unwrap();
        assert_eq!(ws[0], WState::zero(0.0));
        let w = ws[1];
        let e = std::f64::consts::E;
        assert!((w.w1 * w.w2 - (e * e - 1.0) / 16.0).abs() < 1e-15);
        assert!((w.w1 * w.w2 - 0.3993160061831656).abs() < 1e-15);
        assert!((lindblad39_residual(&w, 1.0) + 0.18453077762578496).abs() < 1e-15);
        assert!(appendix2_bracket(&w, 1.0).abs() < 1e-15);
        assert!(appendix2_construct(|t| t, 0.0, W3Sign::Negative, &[0.0], 1.0).is_err());
    }
}
