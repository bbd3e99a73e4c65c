use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::fluctuation::EnergyVariant;
use crate::model::{discretize_drude, DrudeBathRecipe, ModelBase, OscillatorBathModel};
use crate::moments::{GaussianMomentState, InitialStatePreset};

pub const STUDIES: [&str; 8] = [
    "fd-scan",
    "fd16-check",
    "d-scan",
    "moments",
    "neg-dissipation-search",
    "continuum-study",
    "appendix2-demo",
    "appendix1-check",
];

fn one() -> f64 {
    1.0
}

/// Model block: an explicit bath (`omegas` + `epsilons`), a `drude` recipe,
/// or neither for an uncoupled oscillator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub omega0: f64,
    #[serde(default = "one")]
    pub m0: f64,
    #[serde(default = "one")]
    pub hbar: f64,
    #[serde(default = "one")]
    pub boltzmann: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omegas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilons: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drude: Option<DrudeBathRecipe>,
}

impl ModelConfig {
    pub fn build(&self) -> Result<OscillatorBathModel, CliError> {
        let base = ModelBase {
            omega0: self.omega0,
            m0: self.m0,
            hbar: self.hbar,
            boltzmann: self.boltzmann,
        };
        let model = match (&self.omegas, &self.epsilons, &self.drude) {
            (None, None, Some(recipe)) => discretize_drude(recipe, base)?,
            (Some(w), Some(e), None) => OscillatorBathModel {
                omega0: base.omega0,
                bath_omegas: w.clone(),
                bath_epsilons: e.clone(),
                m0: base.m0,
                hbar: base.hbar,
                boltzmann: base.boltzmann,
            }
            .validated()?,
            (None, None, None) => OscillatorBathModel::uncoupled(base.omega0)
                .with_units(base.m0, base.hbar, base.boltzmann)
                .validated()?,
            _ => {
                return Err(CliError::Config(
                    "model needs either both `omegas` and `epsilons` or a `drude` recipe, not a mix".into(),
                ))
            }
        };
        Ok(model)
    }
}

/// An initial state: a preset name such as `"squeezed(0.5,0.3)"` or raw moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialStateSpec {
    Preset(String),
    Raw(GaussianMomentState),
}

impl InitialStateSpec {
    pub fn resolve(&self, model: &OscillatorBathModel) -> Result<(String, GaussianMomentState), CliError> {
        let (label, state) = match self {
            Self::Preset(s) => {
                let p: InitialStatePreset = s.parse().map_err(CliError::Config)?;
                (p.to_string(), p.moments(model))
            }
            Self::Raw(m) => (
                format!("raw({},{},{},{},{})", m.mean_q, m.mean_p, m.qq, m.pp, m.qp_sym),
                *m,
            ),
        };
        if !state.is_physical(model.hbar) {
            return Err(CliError::Config(format!(
                "initial state {label} violates the uncertainty principle (residual {})",
                state.rs_residual(model.hbar)
            )));
        }
        Ok((label, state))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfig {
    pub trials: usize,
    pub max_modes: usize,
    pub omega_min: f64,
    pub omega_max: f64,
    pub coupling_min: f64,
    pub coupling_max: f64,
    pub keep: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            trials: 2000,
            max_modes: 3,
            omega_min: 0.2,
            omega_max: 3.0,
            coupling_min: 0.05,
            coupling_max: 0.95,
            keep: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Fd16Config {
    pub dx: f64,
    /// Parameter values to test; defaults to the scenario temperatures.
    pub x_values: Option<Vec<f64>>,
}

impl Default for Fd16Config {
    fn default() -> Self {
        Self { dx: 1e-4, x_values: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MasterConfig {
    /// `"ullersma-matched"` or `"constant"`.
    pub preset: String,
    pub b11: f64,
    pub b12: f64,
    pub b22: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3_re: f64,
    pub k3_im: f64,
}

impl Default for MasterConfig {
    fn default() -> Self {
        Self {
            preset: "ullersma-matched".into(),
            b11: 0.0,
            b12: 0.0,
            b22: 0.0,
            k1: 0.0,
            k2: 0.0,
            k3_re: 0.0,
            k3_im: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Appendix2Config {
    /// `w4(t) = w4_rate * t`.
    pub w4_rate: f64,
    pub splits: Vec<f64>,
    /// Reversible part; defaults to the free system oscillator.
    pub b11: Option<f64>,
    pub b12: f64,
    pub b22: Option<f64>,
}

impl Default for Appendix2Config {
    fn default() -> Self {
        Self {
            w4_rate: 1.0,
            splits: vec![1.0, 0.25, 4.0],
            b11: None,
            b12: 0.0,
            b22: None,
        }
    }
}

fn default_temperatures() -> Vec<f64> {
    vec![1.0]
}

fn default_energy() -> String {
    "thermal".into()
}

fn default_states() -> Vec<InitialStateSpec> {
    vec![InitialStateSpec::Preset("ground".into())]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub study: Option<String>,
    pub model: ModelConfig,
    #[serde(default = "default_temperatures")]
    pub temperatures: Vec<f64>,
    #[serde(default = "default_energy")]
    pub energy_function: String,
    /// Variants compared by `continuum-study`; all three by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy_functions: Option<Vec<String>>,
    pub t_max: f64,
    pub n_steps: usize,
    #[serde(default = "default_states")]
    pub initial_states: Vec<InitialStateSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fd16: Option<Fd16Config>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub master: Option<MasterConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub appendix2: Option<Appendix2Config>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        s.check()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn check(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return bad(format!("t_max must be > 0, got {}", self.t_max));
        }
        if self.n_steps < 2 {
            return bad(format!("n_steps must be >= 2, got {}", self.n_steps));
        }
        if self.temperatures.is_empty() {
            return bad("temperatures must not be empty".into());
        }
        if let Some(t) = self.temperatures.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
            return bad(format!("temperatures must be finite and >= 0, got {t}"));
        }
        if let Some(study) = &self.study {
            if !STUDIES.contains(&study.as_str()) {
                return bad(format!("unknown study {study:?}"));
            }
        }
        self.energy()?;
        self.energies()?;
        if let Some(m) = &self.master {
            if m.preset != "ullersma-matched" && m.preset != "constant" {
                return bad(format!("unknown master preset {:?}", m.preset));
            }
        }
        if let Some(f) = &self.fd16 {
            if !(f.dx > 0.0) {
                return bad(format!("fd16.dx must be > 0, got {}", f.dx));
            }
        }
        if let Some(s) = &self.search {
            if s.max_modes == 0 || s.max_modes > 3 {
                return bad(format!("search.max_modes must be in 1..=3, got {}", s.max_modes));
            }
            if !(s.omega_min > 0.0 && s.omega_max > s.omega_min) {
                return bad("search frequency range must satisfy 0 < omega_min < omega_max".into());
            }
            if !(s.coupling_min > 0.0 && s.coupling_max >= s.coupling_min && s.coupling_max <= 1.0) {
                return bad("search coupling range must lie in (0, 1]".into());
            }
        }
        if let Some(a) = &self.appendix2 {
            if a.splits.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
                return bad("appendix2.splits must be positive".into());
            }
            if !(a.w4_rate > 0.0) {
                return bad("appendix2.w4_rate must be > 0".into());
            }
        }
        Ok(())
    }

    pub fn energy(&self) -> Result<EnergyVariant, CliError> {
        self.energy_function.parse().map_err(CliError::Config)
    }

    pub fn energies(&self) -> Result<Vec<EnergyVariant>, CliError> {
        match &self.energy_functions {
            None => Ok(EnergyVariant::ALL.to_vec()),
            Some(v) if v.is_empty() => Err(CliError::Config("energy_functions must not be empty".into())),
            Some(v) => v.iter().map(|s| s.parse().map_err(CliError::Config)).collect(),
        }
    }
}
