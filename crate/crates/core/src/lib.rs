//! Exact dynamics of a harmonic oscillator coupled to a finite bath of
//! oscillators, with numerical checks of the fluctuation-dissipation
//! inequality, the uncertainty relations built on it, and the matching
//! quadratic master equation.
//!
//! The usual entry point is [`model::OscillatorBathModel`], decomposed once
//! with [`propagator::decompose`] and then sampled at any time.

// `!(x > 0.0)` is used on purpose so that NaN fails the guard
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod fluctuation;
pub mod master;
pub mod model;
pub mod moments;
pub mod ode;
pub mod par;
pub mod propagator;

pub use error::{Error, Result};
pub use fluctuation::{EnergyFunction, EnergyVariant, FluctuationSample};
pub use master::{LadderCoefficients, MasterCoefficients, WState};
pub use model::{DrudeBathRecipe, ModelBase, OscillatorBathModel};
pub use moments::{DeltaQuantities, GaussianMomentState};
pub use par::Execution;
pub use propagator::{decompose, propagator_at, PropagatorSample, SpectralDecomposition};
