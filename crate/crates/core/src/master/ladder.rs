use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fluctuation::{xy_quantities, FluctuationSample};
use crate::model::OscillatorBathModel;
use crate::propagator::{propagator_at, PropagatorSample, SpectralDecomposition};

/// Coefficients of the ladder operator `B = u q + v p` that diagonalizes the
/// dissipative exponent of the exact solution. The free phase of `u` is 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderCoefficients {
    pub t: f64,
    pub a: f64,
    pub b: f64,
    pub c: Complex64,
    /// In `[0, pi]`.
    pub phi_minus_theta: f64,
    pub u: Complex64,
    pub v: Complex64,
    /// Coefficient of `{B, . , B}` in the two-exponential form.
    pub first_exponent: f64,
}

impl LadderCoefficients {
    /// `2 hbar |u| |v| sin(phi - theta)`, equal to 1 when `[B, B+] = 1`.
    pub fn commutator(&self, hbar: f64) -> f64 {
        2.0 * hbar * self.u.norm() * self.v.norm() * self.phi_minus_theta.sin()
    }
}

/// `-ln(R^2)/2 - ln(1 + (K/hbar + (1 - R^2)/2) / R^2)/2` with
/// `K = sqrt(XY - X_dot^2/4)`; zero when `K = hbar (1 - R^2)/2`.
pub fn first_exponent_coefficient(r2: f64, gap: f64, hbar: f64) -> f64 {
    let k = gap.max(0.0).sqrt();
    -0.5 * r2.ln() - 0.5 * (1.0 + (k / hbar + 0.5 * (1.0 - r2)) / r2).ln()
}

pub fn ladder_from_samples(
    prop: &PropagatorSample,
    fl: &FluctuationSample,
    m0: f64,
) -> Result<LadderCoefficients> {
    let fail = |what: String| Err(Error::PreconditionFailure(format!("{what} at t = {}", prop.t)));
    let r2 = prop.r2;
    if !(r2 > 0.0) {
        return fail(format!("R^2 = {r2} must be positive"));
    }
    let diss = 1.0 - r2;
    if diss.abs() <= 1e-12 {
        return fail(format!("1 - R^2 = {diss} must be nonzero"));
    }
    let gap = fl.covariance_gap();
    if !(gap > 0.0) {
        return fail(format!("XY - X_dot^2/4 = {gap} must be positive"));
    }
    let (a_, ad, add) = (prop.a, prop.a_dot, prop.a_ddot);
    let (x, y, xd, hbar, m) = (fl.x, fl.y, fl.x_dot, fl.hbar, m0);
    let h2 = hbar * hbar;
    let l = r2.ln();
    let a = -m * l / (2.0 * h2 * r2 * diss) * (add * add * x - ad * add * xd + ad * ad * y);
    let b = -l / (2.0 * m * h2 * r2 * diss) * (a_ * a_ * y - a_ * ad * xd + ad * ad * x);
    let c = l / (4.0 * h2 * r2 * diss)
        * Complex64::new(
            2.0 * a_ * ad * y - a_ * add * xd + 2.0 * ad * add * x - ad * ad * xd,
            -hbar * r2 * diss,
        );
    if !(a > 0.0 && b > 0.0) {
        return fail(format!("a = {a} and b = {b} must both be positive"));
    }
    let kappa2 = a * b - c.re * c.re;
    if !(kappa2 > 0.0) {
        return fail(format!("ab - Re(c)^2 = {kappa2} must be positive"));
    }
    let kappa = kappa2.sqrt();
    let angle = kappa.atan2(-c.re);
    let u = Complex64::new((a / (2.0 * hbar * kappa)).sqrt(), 0.0);
    let v = Complex64::from_polar((b / (2.0 * hbar * kappa)).sqrt(), angle);
    Ok(LadderCoefficients {
        t: prop.t,
        a,
        b,
        c,
        phi_minus_theta: angle,
        u,
        v,
        first_exponent: first_exponent_coefficient(r2, gap, hbar),
    })
}

pub fn ladder_coefficients(
    decomp: &SpectralDecomposition,
    model: &OscillatorBathModel,
    temp: f64,
    t: f64,
) -> Result<LadderCoefficients> {
    let prop = propagator_at(decomp, t);
    let fl = xy_quantities(decomp, model, temp, t);
    ladder_from_samples(&prop, &fl, model.m0)
}
