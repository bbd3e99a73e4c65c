//! Exact propagator family from the normal modes of the potential matrix.
//!
//! With `V = U diag(lambda) U^T`, the system row of the classical propagator is
//! `A_0v(t) = sum_j U_0j U_vj sin(sqrt(lambda_j) t) / sqrt(lambda_j)` and its
//! time derivatives follow termwise.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::model::OscillatorBathModel;
use crate::ode::{self, OdeOptions, OdeSystem};
use crate::par::{self, Execution};

#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    /// Ascending eigenvalues `lambda_j` of the potential matrix.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in eigenvalue order.
    pub eigenvectors: DMatrix<f64>,
    frequencies: Vec<f64>,
    system_weights: Vec<f64>,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Normal-mode frequencies `sqrt(lambda_j)`.
    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    /// `U_0j^2`, the weight of each normal mode in the system coordinate.
    pub fn system_weights(&self) -> &[f64] {
        &self.system_weights
    }
}

pub fn decompose(model: &OscillatorBathModel) -> Result<SpectralDecomposition> {
    let report = model.validate();
    if let Some(v) = report.violations.first() {
        return Err(Error::InvalidModel(format!("{} (slack {})", v.bound, v.slack)));
    }
    let v = model.potential_matrix();
    let dim = v.nrows();
    let eig = SymmetricEigen::try_new(v, f64::EPSILON, 100_000)
        .ok_or_else(|| Error::NumericalFailure("symmetric eigensolver did not converge".into()))?;

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    let mut eigenvectors = DMatrix::zeros(dim, dim);
    for (col, &j) in order.iter().enumerate() {
        eigenvectors.set_column(col, &eig.eigenvectors.column(j));
    }

    if let Some((index, &value)) = eigenvalues.iter().enumerate().find(|(_, &l)| !(l > 0.0)) {
        return Err(Error::NonPositiveMode { index, value });
    }
    let frequencies = eigenvalues.iter().map(|l| l.sqrt()).collect();
    let system_weights = (0..dim).map(|j| eigenvectors[(0, j)].powi(2)).collect();
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
        frequencies,
        system_weights,
    })
}

/// `A_0n` and its first two derivatives for each bath oscillator.
#[derive(Debug, Clone, PartialEq)]
pub struct BathPropagator {
    pub a: Vec<f64>,
    pub a_dot: Vec<f64>,
    pub a_ddot: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorSample {
    pub t: f64,
    pub a: f64,
    pub a_dot: f64,
    pub a_ddot: f64,
    /// Third derivative; needed for time derivatives of `R^2`.
    pub a_dddot: f64,
    /// `R^2 = A_dot^2 - A A_ddot`.
    pub r2: f64,
    pub bath: Option<BathPropagator>,
}

impl PropagatorSample {
    /// Values at `t = 0` for a model with `n_modes` bath oscillators. The
    /// third derivative depends on the model and is left at 0.
    pub fn identity(n_modes: usize, with_bath: bool) -> Self {
        Self {
            t: 0.0,
            a: 0.0,
            a_dot: 1.0,
            a_ddot: 0.0,
            a_dddot: 0.0,
            r2: 1.0,
            bath: with_bath.then(|| BathPropagator {
                a: vec![0.0; n_modes],
                a_dot: vec![0.0; n_modes],
                a_ddot: vec![0.0; n_modes],
            }),
        }
    }

    /// `d(R^2)/dt = A_dot A_ddot - A A_dddot`.
    pub fn r2_dot(&self) -> f64 {
        self.a_dot * self.a_ddot - self.a * self.a_dddot
    }

    /// `sum_n (A_dot_0n^2 - A_0n A_ddot_0n)`; `None` without bath data.
    pub fn bath_commutator_sum(&self) -> Option<f64> {
        self.bath.as_ref().map(|b| {
            b.a.iter()
                .zip(&b.a_dot)
                .zip(&b.a_ddot)
                .map(|((a, ad), add)| ad * ad - a * add)
                .sum()
        })
    }
}

/// System-only propagator sample. Any finite `t` is accepted; `t = 0` returns
/// the exact identity values.
pub fn propagator_at(decomp: &SpectralDecomposition, t: f64) -> PropagatorSample {
    sample(decomp, t, false)
}

/// Propagator sample including the `A_0n` family for every bath oscillator.
pub fn propagator_with_bath(decomp: &SpectralDecomposition, t: f64) -> PropagatorSample {
    sample(decomp, t, true)
}

fn sample(decomp: &SpectralDecomposition, t: f64, with_bath: bool) -> PropagatorSample {
    let dim = decomp.dim();
    if t == 0.0 {
        let mut id = PropagatorSample::identity(dim - 1, with_bath);
        // third derivative at 0 is -V_00, not 0
        id.a_dddot = -decomp
            .system_weights
            .iter()
            .zip(&decomp.eigenvalues)
            .map(|(u2, l)| u2 * l)
            .sum::<f64>();
        return id;
    }
    let mut sin_over = vec![0.0; dim];
    let mut cos_t = vec![0.0; dim];
    let (mut a, mut a_dot, mut a_ddot, mut a_dddot) = (0.0, 0.0, 0.0, 0.0);
    for j in 0..dim {
        let w = decomp.frequencies[j];
        let (s, c) = (w * t).sin_cos();
        sin_over[j] = s / w;
        cos_t[j] = c;
        let u2 = decomp.system_weights[j];
        a += u2 * s / w;
        a_dot += u2 * c;
        a_ddot -= u2 * w * s;
        a_dddot -= u2 * w * w * c;
    }
    let bath = with_bath.then(|| {
        let n = dim - 1;
        let mut b = BathPropagator {
            a: vec![0.0; n],
            a_dot: vec![0.0; n],
            a_ddot: vec![0.0; n],
        };
        for j in 0..dim {
            let u0 = decomp.eigenvectors[(0, j)];
            let w2 = decomp.eigenvalues[j];
            for nu in 0..n {
                let uu = u0 * decomp.eigenvectors[(nu + 1, j)];
                b.a[nu] += uu * sin_over[j];
                b.a_dot[nu] += uu * cos_t[j];
                b.a_ddot[nu] -= uu * w2 * sin_over[j];
            }
        }
        b
    });
    PropagatorSample {
        t,
        a,
        a_dot,
        a_ddot,
        a_dddot,
        r2: r2_pairwise(decomp, &sin_over, &cos_t),
        bath,
    }
}

/// `R^2` with each diagonal term `w_j^2 (cos^2 + sin^2)` reduced to `w_j^2`,
/// so only the cross terms carry rounding. Exact for an uncoupled oscillator.
fn r2_pairwise(decomp: &SpectralDecomposition, sin_over: &[f64], cos_t: &[f64]) -> f64 {
    let dim = sin_over.len();
    let diag: f64 = decomp.system_weights.iter().map(|w| w * w).sum();
    let mut cross = 0.0;
    for j in 0..dim {
        let uj = decomp.system_weights[j];
        if uj == 0.0 {
            continue;
        }
        let (wj2, sj, cj) = (decomp.eigenvalues[j], sin_over[j], cos_t[j]);
        for k in j + 1..dim {
            let uk = decomp.system_weights[k];
            let (wk2, sk, ck) = (decomp.eigenvalues[k], sin_over[k], cos_t[k]);
            cross += uj * uk * (2.0 * cj * ck + sj * sk * (wj2 + wk2));
        }
    }
    diag + cross
}

pub fn propagator_series(
    decomp: &SpectralDecomposition,
    times: &[f64],
    exec: Execution,
) -> Vec<PropagatorSample> {
    par::map(times, exec, |&t| propagator_at(decomp, t))
}

/// `Q'' = -V Q` in first-order form `(Q, Q')`.
struct NormalModeFlow {
    v: DMatrix<f64>,
}

impl OdeSystem for NormalModeFlow {
    fn dim(&self) -> usize {
        2 * self.v.nrows()
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        let n = self.v.nrows();
        let (q, p) = y.split_at(n);
        let (dq, dp) = dy.split_at_mut(n);
        dq.copy_from_slice(p);
        for i in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                acc += self.v[(i, k)] * q[k];
            }
            dp[i] = -acc;
        }
    }
}

/// Independent propagator by direct integration of the equations of motion.
///
/// Starting from `Q(0) = 0`, `P(0) = e_0` the trajectory is the system column
/// of `sin(sqrt(V) t)/sqrt(V)`, i.e. `Q_v(t) = A_0v(t)` by symmetry of `V`.
pub fn ode_oracle(model: &OscillatorBathModel, t_grid: &[f64]) -> Result<Vec<PropagatorSample>> {
    if t_grid.first().is_some_and(|&t0| t0 != 0.0) {
        return Err(Error::PreconditionFailure("oracle time grid must start at 0".into()));
    }
    let report = model.validate();
    if let Some(v) = report.violations.first() {
        return Err(Error::InvalidModel(format!("{} (slack {})", v.bound, v.slack)));
    }
    let v = model.potential_matrix();
    let n = v.nrows();
    let flow = NormalModeFlow { v: v.clone() };
    let mut y0 = vec![0.0; 2 * n];
    y0[n] = 1.0;
    let opts = OdeOptions {
        initial_step: 0.01,
        ..OdeOptions::default()
    };
    let states = ode::integrate(&flow, &y0, t_grid, &opts)?;

    Ok(t_grid
        .iter()
        .zip(states)
        .map(|(&t, y)| {
            let (q, p) = y.split_at(n);
            let acc: Vec<f64> = (0..n)
                .map(|i| -(0..n).map(|k| v[(i, k)] * q[k]).sum::<f64>())
                .collect();
            let jerk = -(0..n).map(|k| v[(0, k)] * p[k]).sum::<f64>();
            PropagatorSample {
                t,
                a: q[0],
                a_dot: p[0],
                a_ddot: acc[0],
                a_dddot: jerk,
                r2: p[0] * p[0] - q[0] * acc[0],
                bath: Some(BathPropagator {
                    a: q[1..].to_vec(),
                    a_dot: p[1..].to_vec(),
                    a_ddot: acc[1..].to_vec(),
                }),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipationMinimum {
    pub t: f64,
    /// Minimum of `1 - R^2` over the grid; negative means negative dissipation.
    pub value: f64,
}

/// Minimum of `1 - R^2` over the uniform grid `0..=t_max` with `n_steps`
/// intervals. Ties resolve to the earliest time.
pub fn min_dissipation_scan(
    model: &OscillatorBathModel,
    t_max: f64,
    n_steps: usize,
) -> Result<DissipationMinimum> {
    if !(t_max > 0.0) || n_steps < 2 {
        return Err(Error::PreconditionFailure(format!(
            "need t_max > 0 and n_steps >= 2, got {t_max} and {n_steps}"
        )));
    }
    let decomp = decompose(model)?;
    Ok(scan_decomposed(&decomp, t_max, n_steps))
}

pub(crate) fn scan_decomposed(
    decomp: &SpectralDecomposition,
    t_max: f64,
    n_steps: usize,
) -> DissipationMinimum {
    let mut best = DissipationMinimum { t: 0.0, value: 0.0 };
    for t in par::time_grid(t_max, n_steps) {
        let value = 1.0 - propagator_at(decomp, t).r2;
        if value < best.value {
            best = DissipationMinimum { t, value };
        }
    }
    best
}
