//! The oscillator-bath Hamiltonian and discretized baths.
//!
//! Coordinates are mass-weighted: `Q = sqrt(m) q`, `P = p / sqrt(m)`. The
//! potential part of the Hamiltonian is `Q^T V Q / 2` with `V_00 = omega0^2`,
//! `V_nn = omega_n^2` and `V_0n = V_n0 = eps_n`.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillatorBathModel {
    pub omega0: f64,
    pub bath_omegas: Vec<f64>,
    pub bath_epsilons: Vec<f64>,
    pub m0: f64,
    pub hbar: f64,
    pub boltzmann: f64,
}

/// A single failed invariant with its numeric slack (negative means violated).
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub bound: String,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// `sum eps_n^2 / omega_n^2`, NaN if it could not be formed.
    pub coupling_sum: f64,
    /// `omega0^2 - coupling_sum`.
    pub positivity_slack: f64,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl OscillatorBathModel {
    /// Model in natural units (`m0 = hbar = k = 1`).
    pub fn new(omega0: f64, bath_omegas: Vec<f64>, bath_epsilons: Vec<f64>) -> Self {
        Self {
            omega0,
            bath_omegas,
            bath_epsilons,
            m0: 1.0,
            hbar: 1.0,
            boltzmann: 1.0,
        }
    }

    pub fn uncoupled(omega0: f64) -> Self {
        Self::new(omega0, Vec::new(), Vec::new())
    }

    pub fn with_units(mut self, m0: f64, hbar: f64, boltzmann: f64) -> Self {
        self.m0 = m0;
        self.hbar = hbar;
        self.boltzmann = boltzmann;
        self
    }

    pub fn n_modes(&self) -> usize {
        self.bath_omegas.len()
    }

    pub fn coupling_sum(&self) -> f64 {
        self.bath_omegas
            .iter()
            .zip(&self.bath_epsilons)
            .map(|(w, e)| e * e / (w * w))
            .sum()
    }

    /// Dense `(N+1) x (N+1)` potential matrix.
    pub fn potential_matrix(&self) -> DMatrix<f64> {
        let n = self.n_modes();
        let mut v = DMatrix::zeros(n + 1, n + 1);
        v[(0, 0)] = self.omega0 * self.omega0;
        for (i, (w, e)) in self.bath_omegas.iter().zip(&self.bath_epsilons).enumerate() {
            v[(i + 1, i + 1)] = w * w;
            v[(0, i + 1)] = *e;
            v[(i + 1, 0)] = *e;
        }
        v
    }

    /// Check every model invariant. Never fails; an empty report means valid.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let mut push = |bound: &str, slack: f64| {
            violations.push(Violation {
                bound: bound.to_string(),
                slack,
            })
        };

        if !(self.omega0 > 0.0 && self.omega0.is_finite()) {
            push("omega0 > 0", self.omega0);
        }
        for (field, value) in [("m0", self.m0), ("hbar", self.hbar), ("boltzmann", self.boltzmann)] {
            if !(value > 0.0 && value.is_finite()) {
                push(&format!("{field} > 0"), value);
            }
        }
        if self.bath_omegas.len() != self.bath_epsilons.len() {
            push(
                "len(bath_omegas) == len(bath_epsilons)",
                -((self.bath_omegas.len() as f64) - (self.bath_epsilons.len() as f64)).abs(),
            );
        }
        for (n, w) in self.bath_omegas.iter().enumerate() {
            if !(*w > 0.0 && w.is_finite()) {
                push(&format!("omega_{} > 0", n + 1), *w);
            }
        }
        for (n, e) in self.bath_epsilons.iter().enumerate() {
            if !e.is_finite() {
                push(&format!("eps_{} finite", n + 1), f64::NEG_INFINITY);
            }
        }

        let coupling_sum = self.coupling_sum();
        let positivity_slack = self.omega0 * self.omega0 - coupling_sum;
        if !coupling_sum.is_finite() {
            push("sum eps^2/omega^2 finite", f64::NEG_INFINITY);
        } else if !(positivity_slack >= 0.0) {
            push("sum eps^2/omega^2 <= omega0^2", positivity_slack);
        }

        ValidationReport {
            violations,
            coupling_sum,
            positivity_slack,
        }
    }

    /// `self` if valid, otherwise the first violation as an error.
    pub fn validated(self) -> Result<Self> {
        let report = self.validate();
        match report.violations.first() {
            None => Ok(self),
            Some(v) if v.bound.starts_with("sum eps^2/omega^2 <=") => Err(Error::PositivityViolation {
                coupling_sum: report.coupling_sum,
                bound: self.omega0 * self.omega0,
            }),
            Some(v) => Err(Error::InvalidModel(format!(
                "{} (slack {})",
                v.bound, v.slack
            ))),
        }
    }
}

/// Frequency-dependent coupling strength `gamma^2(omega)` of a continuous
/// bath; the discretized couplings are `eps_n^2 = gamma^2(omega_n) * d_omega`.
pub trait SpectralStrength {
    fn strength_sq(&self, omega: f64) -> f64;
}

/// `gamma^2(w) = (2/pi) * Gamma * w^2 * alpha^2 / (w^2 + alpha^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrudeUllersma {
    pub gamma: f64,
    pub alpha: f64,
}

impl SpectralStrength for DrudeUllersma {
    fn strength_sq(&self, omega: f64) -> f64 {
        let w2 = omega * omega;
        let a2 = self.alpha * self.alpha;
        std::f64::consts::FRAC_2_PI * self.gamma * w2 * a2 / (w2 + a2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrudeBathRecipe {
    pub gamma: f64,
    pub alpha: f64,
    pub omega_max: f64,
    pub n_modes: usize,
}

impl DrudeBathRecipe {
    pub fn check(&self) -> Result<()> {
        let bad = |name: &str, v: f64| Error::InvalidRecipe(format!("{name} must be > 0, got {v}"));
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(bad("gamma", self.gamma));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(bad("alpha", self.alpha));
        }
        if !(self.omega_max > 0.0 && self.omega_max.is_finite()) {
            return Err(bad("omega_max", self.omega_max));
        }
        if self.n_modes == 0 {
            return Err(Error::InvalidRecipe("n_modes must be >= 1".into()));
        }
        Ok(())
    }

    /// Whether `alpha >= 3 Gamma`, the regime of the continuum negativity claim.
    pub fn in_negativity_regime(&self) -> bool {
        self.alpha >= 3.0 * self.gamma
    }

    pub fn strength(&self) -> DrudeUllersma {
        DrudeUllersma {
            gamma: self.gamma,
            alpha: self.alpha,
        }
    }
}

/// System parameters shared by every discretized bath.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelBase {
    pub omega0: f64,
    pub m0: f64,
    pub hbar: f64,
    pub boltzmann: f64,
}

impl ModelBase {
    pub fn natural(omega0: f64) -> Self {
        Self {
            omega0,
            m0: 1.0,
            hbar: 1.0,
            boltzmann: 1.0,
        }
    }
}

/// Midpoint grid `omega_n = (n - 1/2) * d_omega`, `d_omega = omega_max / N`.
pub fn midpoint_grid(omega_max: f64, n_modes: usize) -> Vec<f64> {
    let dw = omega_max / n_modes as f64;
    (1..=n_modes).map(|n| (n as f64 - 0.5) * dw).collect()
}

pub fn discretize_spectrum<S: SpectralStrength>(
    strength: &S,
    omega_max: f64,
    n_modes: usize,
    base: ModelBase,
) -> Result<OscillatorBathModel> {
    let dw = omega_max / n_modes as f64;
    let omegas = midpoint_grid(omega_max, n_modes);
    let eps = omegas
        .iter()
        .map(|&w| (strength.strength_sq(w) * dw).sqrt())
        .collect();
    OscillatorBathModel {
        omega0: base.omega0,
        bath_omegas: omegas,
        bath_epsilons: eps,
        m0: base.m0,
        hbar: base.hbar,
        boltzmann: base.boltzmann,
    }
    .validated()
}

pub fn discretize_drude(recipe: &DrudeBathRecipe, base: ModelBase) -> Result<OscillatorBathModel> {
    recipe.check()?;
    discretize_spectrum(&recipe.strength(), recipe.omega_max, recipe.n_modes, base)
}

/// Sampling ranges for [`random_valid_model`].
#[derive(Debug, Clone, Copy)]
pub struct RandomModelSpec {
    pub omega0: f64,
    pub omega_range: (f64, f64),
    /// Range of `sum eps^2/omega^2 / omega0^2`.
    pub coupling_fraction: (f64, f64),
}

impl Default for RandomModelSpec {
    fn default() -> Self {
        Self {
            omega0: 1.0,
            omega_range: (0.2, 3.0),
            coupling_fraction: (0.05, 0.9),
        }
    }
}

/// Random model with `n_modes` bath oscillators satisfying the positivity bound.
pub fn random_valid_model<R: Rng + ?Sized>(
    rng: &mut R,
    n_modes: usize,
    spec: &RandomModelSpec,
) -> OscillatorBathModel {
    let (lo, hi) = spec.omega_range;
    let omegas: Vec<f64> = (0..n_modes).map(|_| rng.random_range(lo..hi)).collect();
    let mut eps: Vec<f64> = (0..n_modes).map(|_| rng.random_range(-1.0..1.0)).collect();
    let raw: f64 = omegas.iter().zip(&eps).map(|(w, e)| e * e / (w * w)).sum();
    if n_modes > 0 && raw > 0.0 {
        let (flo, fhi) = spec.coupling_fraction;
        let frac = if fhi > flo { rng.random_range(flo..fhi) } else { flo };
        let scale = (frac * spec.omega0 * spec.omega0 / raw).sqrt();
        eps.iter_mut().for_each(|e| *e *= scale);
    }
    OscillatorBathModel::new(spec.omega0, omegas, eps)
}
