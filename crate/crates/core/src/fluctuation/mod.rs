//! Fluctuation integrals and the time-domain fluctuation-dissipation balance.
//!
//! For an energy function `E` the bath vector is
//! `F_n = -(eps_n/omega_n) sqrt(E(omega_n, x)) (C0_n + i S0_n)` with time
//! derivative `-(eps_n/omega_n) sqrt(E) (C1_n + i S1_n)`. The fluctuation terms
//! are `X = sum |F|^2`, `Y = sum |dF/dt|^2`, `X_dot = 2 sum Re(F* dF/dt)` and the
//! balance checked everywhere is `X Y - X_dot^2/4 - (hbar^2/4)(1 - R^2)^2`.

mod energy;
mod integrals;

pub use energy::{coth, EnergyFunction, EnergyVariant};
pub use integrals::{kernels, mode_integrals, ModeIntegrals};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::OscillatorBathModel;
use crate::par::{self, Execution};
use crate::propagator::{propagator_at, PropagatorSample, SpectralDecomposition};

/// `E(omega_n, x)` for every bath mode, rejecting negative values.
pub fn bath_energies<E: EnergyFunction + ?Sized>(
    model: &OscillatorBathModel,
    energy: &E,
    x: f64,
) -> Result<Vec<f64>> {
    model
        .bath_omegas
        .iter()
        .map(|&w| {
            let e = energy.energy(w, x, model.hbar, model.boltzmann);
            if e >= 0.0 {
                Ok(e)
            } else {
                Err(Error::NegativeEnergy { omega: w, x, value: e })
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeVectors {
    pub f: Vec<Complex64>,
    pub f_dot: Vec<Complex64>,
}

pub fn fe_vector<E: EnergyFunction + ?Sized>(
    decomp: &SpectralDecomposition,
    model: &OscillatorBathModel,
    energy: &E,
    x: f64,
    t: f64,
) -> Result<FeVectors> {
    let energies = bath_energies(model, energy, x)?;
    let mi = mode_integrals(decomp, model, t);
    let mut out = FeVectors {
        f: Vec::with_capacity(model.n_modes()),
        f_dot: Vec::with_capacity(model.n_modes()),
    };
    for n in 0..model.n_modes() {
        let pre = -model.bath_epsilons[n] / model.bath_omegas[n] * energies[n].sqrt();
        out.f.push(Complex64::new(pre * mi.c0[n], pre * mi.s0[n]));
        out.f_dot.push(Complex64::new(pre * mi.c1[n], pre * mi.s1[n]));
    }
    Ok(out)
}

/// Fluctuation terms and dissipation factor at one `(t, x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluctuationSample {
    pub t: f64,
    /// Energy-function parameter (the temperature for thermal variants).
    pub param: f64,
    pub x: f64,
    pub x_dot: f64,
    pub y: f64,
    pub r2: f64,
    pub hbar: f64,
}

impl FluctuationSample {
    /// `X Y - X_dot^2 / 4`, non-negative by Cauchy-Schwarz.
    pub fn covariance_gap(&self) -> f64 {
        self.x * self.y - 0.25 * self.x_dot * self.x_dot
    }

    /// `(hbar^2/4)(1 - R^2)^2`.
    pub fn dissipation_term(&self) -> f64 {
        let d = 1.0 - self.r2;
        0.25 * self.hbar * self.hbar * d * d
    }

    /// `X Y - X_dot^2/4 - (hbar^2/4)(1 - R^2)^2`.
    pub fn fd_residual(&self) -> f64 {
        self.covariance_gap() - self.dissipation_term()
    }

    /// `X Y - X_dot^2/4 - (hbar^2/4)(1 - R^4)`, the weaker-form comparison.
    pub fn ref2_residual(&self) -> f64 {
        self.covariance_gap() - 0.25 * self.hbar * self.hbar * (1.0 - self.r2 * self.r2)
    }

    /// `max(1, largest additive term)` used to scale tolerances.
    pub fn scale(&self) -> f64 {
        1f64.max((self.x * self.y).abs())
            .max(0.25 * self.x_dot * self.x_dot)
            .max(self.dissipation_term())
            .max(0.25 * self.hbar * self.hbar * (1.0 - self.r2 * self.r2).abs())
    }
}

/// Second-order rates of the fluctuation terms, for matching generators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluctuationRates {
    pub y_dot: f64,
    pub x_ddot: f64,
}

pub(crate) fn sample_from_parts(
    prop: &PropagatorSample,
    mi: &ModeIntegrals,
    model: &OscillatorBathModel,
    energies: &[f64],
    param: f64,
) -> (FluctuationSample, FluctuationRates) {
    let (mut x, mut y, mut xd) = (0.0, 0.0, 0.0);
    let (mut sum_c1, mut sum_x_dd) = (0.0, 0.0);
    for n in 0..model.n_modes() {
        let w = model.bath_omegas[n];
        let eps = model.bath_epsilons[n];
        let weight = eps * eps / (w * w) * energies[n];
        let (c0, s0, c1, s1) = (mi.c0[n], mi.s0[n], mi.c1[n], mi.s1[n]);
        x += weight * (c0 * c0 + s0 * s0);
        y += weight * (c1 * c1 + s1 * s1);
        xd += weight * (c0 * c1 + s0 * s1);
        sum_c1 += weight * c1;
        sum_x_dd += weight * (prop.a_dot * c0 - w * (c0 * s1 - s0 * c1));
    }
    let sample = FluctuationSample {
        t: prop.t,
        param,
        x,
        x_dot: 2.0 * xd,
        y,
        r2: prop.r2,
        hbar: model.hbar,
    };
    let rates = FluctuationRates {
        y_dot: 2.0 * prop.a_dot * sum_c1,
        x_ddot: 2.0 * y + 2.0 * sum_x_dd,
    };
    (sample, rates)
}

/// `X`, `X_dot`, `Y` for an arbitrary energy function.
pub fn fluctuation_sample<E: EnergyFunction + ?Sized>(
    decomp: &SpectralDecomposition,
    model: &OscillatorBathModel,
    energy: &E,
    x: f64,
    t: f64,
) -> Result<FluctuationSample> {
    Ok(sample_with_rates(decomp, model, energy, x, t)?.0)
}

pub fn sample_with_rates<E: EnergyFunction + ?Sized>(
    decomp: &SpectralDecomposition,
    model: &OscillatorBathModel,
    energy: &E,
    x: f64,
    t: f64,
) -> Result<(FluctuationSample, FluctuationRates)> {
    let energies = bath_energies(model, energy, x)?;
    let prop = propagator_at(decomp, t);
    let mi = mode_integrals(decomp, model, t);
    Ok(sample_from_parts(&prop, &mi, model, &energies, x))
}

/// Thermal `X`, `X_dot`, `Y` at temperature `temp` (0 allowed).
pub fn xy_quantities(
    decomp: &SpectralDecomposition,
    model: &OscillatorBathModel,
    temp: f64,
    t: f64,
) -> FluctuationSample {
    fluctuation_sample(decomp, model, &EnergyVariant::Thermal, temp, t)
        .expect("thermal energy is non-negative")
}

pub fn fd15_lhs<E: EnergyFunction + ?Sized>(
    decomp: &SpectralDecomposition,
    model: &OscillatorBathModel,
    energy: &E,
    x: f64,
    t: f64,
) -> Result<f64> {
    Ok(fluctuation_sample(decomp, model, energy, x, t)?.fd_residual())
}

pub fn fd17_residual(
    decomp: &SpectralDecomposition,
    model: &OscillatorBathModel,
    temp: f64,
    t: f64,
) -> f64 {
    xy_quantities(decomp, model, temp, t).fd_residual()
}

pub fn ref2_comparison_residual(
    decomp: &SpectralDecomposition,
    model: &OscillatorBathModel,
    temp: f64,
    t: f64,
) -> f64 {
    xy_quantities(decomp, model, temp, t).ref2_residual()
}

/// Samples over a time grid, evaluated cell-parallel.
pub fn fluctuation_series<E: EnergyFunction + ?Sized>(
    decomp: &SpectralDecomposition,
    model: &OscillatorBathModel,
    energy: &E,
    x: f64,
    times: &[f64],
    exec: Execution,
) -> Result<Vec<FluctuationSample>> {
    let energies = bath_energies(model, energy, x)?;
    Ok(par::map(times, exec, |&t| {
        let prop = propagator_at(decomp, t);
        let mi = mode_integrals(decomp, model, t);
        sample_from_parts(&prop, &mi, model, &energies, x).0
    }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XDerivativeCheck {
    /// Finite-difference `d/dx (X Y - X_dot^2/4)`.
    pub numeric: f64,
    /// Double mode sum of non-negative squares weighted by `E dE/dx`.
    pub closed_form: f64,
}

/// Compare the finite-difference x-derivative of the balance with its
/// closed-form double mode sum.
pub fn fd16_x_derivative_check<E: EnergyFunction + ?Sized>(
    decomp: &SpectralDecomposition,
    model: &OscillatorBathModel,
    energy: &E,
    x: f64,
    t: f64,
    dx: f64,
) -> Result<XDerivativeCheck> {
    if !(dx > 0.0) {
        return Err(Error::PreconditionFailure(format!("dx must be > 0, got {dx}")));
    }
    let mi = mode_integrals(decomp, model, t);
    let prop = propagator_at(decomp, t);
    let gap_at = |xv: f64| -> Result<f64> {
        let e = bath_energies(model, energy, xv)?;
        Ok(sample_from_parts(&prop, &mi, model, &e, xv).0.covariance_gap())
    };
    let numeric = if x >= dx {
        (gap_at(x + dx)? - gap_at(x - dx)?) / (2.0 * dx)
    } else {
        (-3.0 * gap_at(x)? + 4.0 * gap_at(x + dx)? - gap_at(x + 2.0 * dx)?) / (2.0 * dx)
    };

    let n = model.n_modes();
    let e = bath_energies(model, energy, x)?;
    let de: Vec<f64> = model
        .bath_omegas
        .iter()
        .map(|&w| energy.x_derivative(w, x, model.hbar, model.boltzmann))
        .collect();
    let a: Vec<f64> = (0..n)
        .map(|k| (model.bath_epsilons[k] / model.bath_omegas[k]).powi(2))
        .collect();
    let (c0, s0, c1, s1) = (&mi.c0, &mi.s0, &mi.c1, &mi.s1);
    let mut closed = 0.0;
    for m in 0..n {
        if a[m] * e[m] == 0.0 {
            continue;
        }
        for k in 0..n {
            let w = a[m] * a[k] * e[m] * de[k];
            if w == 0.0 {
                continue;
            }
            let t1 = c0[k] * c1[m] - c0[m] * c1[k];
            let t2 = s1[k] * c0[m] - s0[k] * c1[m];
            let t3 = s1[m] * c0[k] - s0[m] * c1[k];
            let t4 = s1[m] * s0[k] - s1[k] * s0[m];
            closed += w * (t1 * t1 + t2 * t2 + t3 * t3 + t4 * t4);
        }
    }
    Ok(XDerivativeCheck {
        numeric,
        closed_form: closed,
    })
}
