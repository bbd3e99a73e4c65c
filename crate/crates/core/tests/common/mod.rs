#![allow(dead_code)]

use fdi_lab::model::{random_valid_model, OscillatorBathModel, RandomModelSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seeded batch of valid models with `1..=max_n` bath modes.
pub fn random_models(seed: u64, count: usize, max_n: usize) -> Vec<OscillatorBathModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = RandomModelSpec::default();
    (0..count)
        .map(|_| {
            let n = rng.random_range(1..=max_n);
            random_valid_model(&mut rng, n, &spec)
        })
        .collect()
}

pub fn random_times(seed: u64, count: usize, t_max: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t: Vec<f64> = (0..count).map(|_| rng.random_range(0.0..t_max)).collect();
    t.sort_by(f64::total_cmp);
    t
}

pub fn three_mode() -> OscillatorBathModel {
    OscillatorBathModel::new(1.0, vec![0.6, 1.4, 2.1], vec![0.2, 0.35, 0.3])
}

pub fn configs_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

/// Physical Gaussian state: thermal occupation `nbar`, squeezing `r` along
/// angle `phi`, displaced to `(q, p)`. Units with `m0 = hbar = omega = 1`.
pub fn gaussian_state(nbar: f64, r: f64, phi: f64, q: f64, p: f64) -> fdi_lab::GaussianMomentState {
    let v = nbar + 0.5;
    let (e2, em2) = ((2.0 * r).exp(), (-2.0 * r).exp());
    let (c, s) = (phi.cos(), phi.sin());
    let sqq = v * (c * c * e2 + s * s * em2);
    let spp = v * (s * s * e2 + c * c * em2);
    let sqp = v * c * s * (e2 - em2);
    fdi_lab::GaussianMomentState {
        mean_q: q,
        mean_p: p,
        qq: sqq + q * q,
        pp: spp + p * p,
        qp_sym: 2.0 * sqp + 2.0 * q * p,
    }
}

pub fn state_strategy() -> impl proptest::strategy::Strategy<Value = fdi_lab::GaussianMomentState> {
    use proptest::prelude::*;
    (0.0f64..3.0, 0.0f64..1.2, 0.0f64..3.2, -2.0f64..2.0, -2.0f64..2.0)
        .prop_map(|(n, r, phi, q, p)| gaussian_state(n, r, phi, q, p))
}
