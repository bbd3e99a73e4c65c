//! Adaptive Gragg-Bulirsch-Stoer integrator for smooth non-stiff systems.
//!
//! Each macro step of size `H` runs the modified midpoint rule with
//! `n = 2, 4, ..., 2 * ROWS` substeps and extrapolates the results to zero
//! substep size (polynomial extrapolation in `h^2`). The difference between
//! the two highest extrapolation orders is the local error estimate.

use crate::error::{Error, Result};

const ROWS: usize = 8;
const SAFETY: f64 = 0.94;
const MAX_GROW: f64 = 4.0;
const MAX_SHRINK: f64 = 0.05;

pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]);
}

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub initial_step: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-11,
            atol: 1e-11,
            max_steps: 200_000,
            initial_step: 0.05,
        }
    }
}

/// Integrate from `t_grid[0]` and report the state at every grid point.
/// The grid must be non-decreasing; `out[0]` is `y0` exactly.
pub fn integrate<S: OdeSystem>(
    sys: &S,
    y0: &[f64],
    t_grid: &[f64],
    opts: &OdeOptions,
) -> Result<Vec<Vec<f64>>> {
    let dim = sys.dim();
    assert_eq!(y0.len(), dim, "initial state has wrong dimension");
    let mut out = Vec::with_capacity(t_grid.len());
    if t_grid.is_empty() {
        return Ok(out);
    }
    if t_grid.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::StepFailure {
            t: t_grid[0],
            reason: "time grid is not sorted".into(),
        });
    }

    let mut stepper = Stepper::new(dim);
    let mut y = y0.to_vec();
    let mut t = t_grid[0];
    let mut h = opts.initial_step;
    let mut steps = 0usize;
    out.push(y.clone());

    for &target in &t_grid[1..] {
        while t < target {
            if steps >= opts.max_steps {
                return Err(Error::StepFailure {
                    t,
                    reason: format!("exceeded {} steps", opts.max_steps),
                });
            }
            let remaining = target - t;
            let last = h >= remaining;
            let h_try = if last { remaining } else { h };
            let (err, y_new) = stepper.step(sys, t, &y, h_try, opts);
            if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
                h = h_try * 0.25;
                if h < 1e-14 * t.abs().max(1.0) {
                    return Err(Error::StepFailure {
                        t,
                        reason: "non-finite state".into(),
                    });
                }
                continue;
            }
            steps += 1;
            let factor = if err == 0.0 {
                MAX_GROW
            } else {
                (SAFETY * err.powf(-1.0 / (2 * ROWS - 1) as f64)).clamp(MAX_SHRINK, MAX_GROW)
            };
            if err <= 1.0 {
                t = if last { target } else { t + h_try };
                y.copy_from_slice(y_new);
                // keep the step size proposed before the clipped final step
                if !last {
                    h = h_try * factor;
                }
            } else {
                h = h_try * factor;
                if h < 1e-14 * t.abs().max(1.0) {
                    return Err(Error::StepFailure {
                        t,
                        reason: "step size underflow".into(),
                    });
                }
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}

struct Stepper {
    // tableau[k][j] = T_{k,j}; row k uses 2(k+1) midpoint substeps
    tableau: Vec<Vec<Vec<f64>>>,
    z_prev: Vec<f64>,
    z_cur: Vec<f64>,
    f0: Vec<f64>,
    f: Vec<f64>,
}

impl Stepper {
    fn new(dim: usize) -> Self {
        Self {
            tableau: (0..ROWS).map(|k| vec![vec![0.0; dim]; k + 1]).collect(),
            z_prev: vec![0.0; dim],
            z_cur: vec![0.0; dim],
            f0: vec![0.0; dim],
            f: vec![0.0; dim],
        }
    }

    /// One extrapolated step. Returns the scaled RMS error and the proposal.
    fn step<S: OdeSystem>(
        &mut self,
        sys: &S,
        t: f64,
        y: &[f64],
        big_h: f64,
        opts: &OdeOptions,
    ) -> (f64, &[f64]) {
        sys.rhs(t, y, &mut self.f0);
        for k in 0..ROWS {
            let n_k = 2 * (k + 1);
            self.midpoint(sys, t, y, big_h, n_k, k);
            let (above, below) = self.tableau.split_at_mut(k);
            let row = &mut below[0];
            for j in 1..=k {
                let n_kj = 2 * (k - j + 1);
                let ratio = (n_k as f64 / n_kj as f64).powi(2) - 1.0;
                let prev = &above[k - 1][j - 1];
                let (lo, hi) = row.split_at_mut(j);
                for ((out, cur), p) in hi[0].iter_mut().zip(lo[j - 1].iter()).zip(prev) {
                    *out = cur + (cur - p) / ratio;
                }
            }
        }
        let best = &self.tableau[ROWS - 1][ROWS - 1];
        let second = &self.tableau[ROWS - 1][ROWS - 2];
        let mut acc = 0.0;
        for i in 0..y.len() {
            let scale = opts.atol + opts.rtol * y[i].abs().max(best[i].abs());
            let e = (best[i] - second[i]) / scale;
            acc += e * e;
        }
        let err = (acc / y.len().max(1) as f64).sqrt();
        (err, &self.tableau[ROWS - 1][ROWS - 1])
    }

    /// Modified midpoint rule with Gragg smoothing; result goes to `T_{k,0}`.
    fn midpoint<S: OdeSystem>(
        &mut self,
        sys: &S,
        t: f64,
        y: &[f64],
        big_h: f64,
        n: usize,
        k: usize,
    ) {
        let h = big_h / n as f64;
        for i in 0..y.len() {
            self.z_prev[i] = y[i];
            self.z_cur[i] = y[i] + h * self.f0[i];
        }
        for m in 1..n {
            sys.rhs(t + m as f64 * h, &self.z_cur, &mut self.f);
            for i in 0..y.len() {
                let next = self.z_prev[i] + 2.0 * h * self.f[i];
                self.z_prev[i] = self.z_cur[i];
                self.z_cur[i] = next;
            }
        }
        sys.rhs(t + big_h, &self.z_cur, &mut self.f);
        let out = &mut self.tableau[k][0];
        for i in 0..y.len() {
            out[i] = 0.5 * (self.z_cur[i] + self.z_prev[i] + h * self.f[i]);
        }
    }
}
