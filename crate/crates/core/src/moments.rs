//! Gaussian first and second moments of the system oscillator.
//!
//! With `q(t) = A_dot q + (A/m) p + bath` and `p(t) = m A_ddot q + A_dot p + bath`
//! the second moments are the homogeneous map of the initial moments plus the
//! bath terms `X/m`, `m Y` and `X_dot`. The reference evolution divides the
//! homogeneous map by `R^2`, which makes it unitary; the remainders
//! `delta = moment - R^2 * reference` depend only on the bath.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fluctuation::{xy_quantities, FluctuationSample};
use crate::model::OscillatorBathModel;
use crate::propagator::{propagator_at, PropagatorSample, SpectralDecomposition};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianMomentState {
    pub mean_q: f64,
    pub mean_p: f64,
    /// `<q^2>`
    pub qq: f64,
    /// `<p^2>`
    pub pp: f64,
    /// `<qp + pq>`
    pub qp_sym: f64,
}

impl GaussianMomentState {
    pub fn var_q(&self) -> f64 {
        self.qq - self.mean_q * self.mean_q
    }

    pub fn var_p(&self) -> f64 {
        self.pp - self.mean_p * self.mean_p
    }

    /// Symmetrized central covariance `<qp + pq> - 2 <q><p>`.
    pub fn covariance(&self) -> f64 {
        self.qp_sym - 2.0 * self.mean_q * self.mean_p
    }

    pub fn rs_residual(&self, hbar: f64) -> f64 {
        rs_residual(self, hbar)
    }

    pub fn is_physical(&self, hbar: f64) -> bool {
        self.qq >= 0.0 && self.pp >= 0.0 && self.rs_residual(hbar) >= -1e-12 * hbar * hbar
    }

    fn check_physical(&self, hbar: f64) -> Result<()> {
        if self.is_physical(hbar) {
            Ok(())
        } else {
            Err(Error::UnphysicalInitialState {
                residual: self.rs_residual(hbar),
            })
        }
    }
}

/// `(dq)^2 (dp)^2 - C^2/4 - hbar^2/4` with central moments.
pub fn rs_residual(state: &GaussianMomentState, hbar: f64) -> f64 {
    let c = state.covariance();
    state.var_q() * state.var_p() - 0.25 * c * c - 0.25 * hbar * hbar
}

/// Named initial states, all built on the system frequency and mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialStatePreset {
    Ground,
    Coherent { q: f64, p: f64 },
    Squeezed { r: f64, phi: f64 },
    Thermal { nbar: f64 },
}

impl InitialStatePreset {
    pub fn moments(&self, model: &OscillatorBathModel) -> GaussianMomentState {
        let (m, w, hbar) = (model.m0, model.omega0, model.hbar);
        let q0 = hbar / (2.0 * m * w);
        let p0 = 0.5 * hbar * m * w;
        match *self {
            Self::Ground => GaussianMomentState {
                mean_q: 0.0,
                mean_p: 0.0,
                qq: q0,
                pp: p0,
                qp_sym: 0.0,
            },
            Self::Coherent { q, p } => GaussianMomentState {
                mean_q: q,
                mean_p: p,
                qq: q0 + q * q,
                pp: p0 + p * p,
                qp_sym: 2.0 * q * p,
            },
            Self::Squeezed { r, phi } => {
                let (ch, sh) = ((2.0 * r).cosh(), (2.0 * r).sinh());
                GaussianMomentState {
                    mean_q: 0.0,
                    mean_p: 0.0,
                    qq: q0 * (ch - sh * phi.cos()),
                    pp: p0 * (ch + sh * phi.cos()),
                    qp_sym: -hbar * sh * phi.sin(),
                }
            }
            Self::Thermal { nbar } => GaussianMomentState {
                mean_q: 0.0,
                mean_p: 0.0,
                qq: q0 * (2.0 * nbar + 1.0),
                pp: p0 * (2.0 * nbar + 1.0),
                qp_sym: 0.0,
            },
        }
    }
}

impl fmt::Display for InitialStatePreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Ground => write!(f, "ground"),
            Self::Coherent { q, p } => write!(f, "coherent({q},{p})"),
            Self::Squeezed { r, phi } => write!(f, "squeezed({r},{phi})"),
            Self::Thermal { nbar } => write!(f, "thermal({nbar})"),
        }
    }
}

impl FromStr for InitialStatePreset {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim();
        if s == "ground" {
            return Ok(Self::Ground);
        }
        let (name, rest) = s
            .split_once('(')
            .ok_or_else(|| format!("unknown initial state {s:?}"))?;
        let args = rest
            .strip_suffix(')')
            .ok_or_else(|| format!("missing ')' in {s:?}"))?;
        let args: Vec<f64> = args
            .split(',')
            .map(|a| a.trim().parse::<f64>().map_err(|e| format!("bad number {a:?} in {s:?}: {e}")))
            .collect::<std::result::Result<_, _>>()?;
        if args.iter().any(|v| !v.is_finite()) {
            return Err(format!("non-finite argument in {s:?}"));
        }
        match (name.trim(), args.as_slice()) {
            ("coherent", &[q, p]) => Ok(Self::Coherent { q, p }),
            ("squeezed", &[r, phi]) => Ok(Self::Squeezed { r, phi }),
            ("thermal", &[nbar]) if nbar >= 0.0 => Ok(Self::Thermal { nbar }),
            ("thermal", &[nbar]) => Err(format!("thermal occupation must be >= 0, got {nbar}")),
            (other, a) => Err(format!(
                "unknown initial state {other:?} with {} argument(s)",
                a.len()
            )),
        }
    }
}

/// Homogeneous part of the evolution: the initial moments carried by the
/// propagator alone, with no bath contribution.
pub fn homogeneous_moments(
    prop: &PropagatorSample,
    m0: f64,
    initial: &GaussianMomentState,
) -> GaussianMomentState {
    let (a, ad, add) = (prop.a, prop.a_dot, prop.a_ddot);
    let s = initial;
    GaussianMomentState {
        mean_q: ad * s.mean_q + a / m0 * s.mean_p,
        mean_p: m0 * add * s.mean_q + ad * s.mean_p,
        qq: ad * ad * s.qq + ad * a / m0 * s.qp_sym + a * a / (m0 * m0) * s.pp,
        pp: m0 * m0 * add * add * s.qq + m0 * add * ad * s.qp_sym + ad * ad * s.pp,
        qp_sym: 2.0 * m0 * ad * add * s.qq + (ad * ad + a * add) * s.qp_sym + 2.0 * ad * a / m0 * s.pp,
    }
}

/// Full evolution from precomputed propagator and fluctuation samples.
pub fn evolve_from_parts(
    prop: &PropagatorSample,
    fluct: &FluctuationSample,
    m0: f64,
    initial: &GaussianMomentState,
) -> GaussianMomentState {
    let mut out = homogeneous_moments(prop, m0, initial);
    out.qq += fluct.x / m0;
    out.pp += m0 * fluct.y;
    out.qp_sym += fluct.x_dot;
    out
}

pub fn evolve_moments(
    decomp: &SpectralDecomposition,
    model: &OscillatorBathModel,
    temp: f64,
    initial: &GaussianMomentState,
    t: f64,
) -> Result<GaussianMomentState> {
    initial.check_physical(model.hbar)?;
    if t == 0.0 {
        return Ok(*initial);
    }
    let prop = propagator_at(decomp, t);
    let fluct = xy_quantities(decomp, model, temp, t);
    Ok(evolve_from_parts(&prop, &fluct, model.m0, initial))
}

/// Reference (unitary) evolution from a propagator sample; needs `R^2 > 0`.
pub fn reference_from_parts(
    prop: &PropagatorSample,
    m0: f64,
    initial: &GaussianMomentState,
) -> Result<GaussianMomentState> {
    if !(prop.r2 > 0.0) {
        return Err(Error::NonPositiveR2 { t: prop.t, r2: prop.r2 });
    }
    let h = homogeneous_moments(prop, m0, initial);
    let r = prop.r2.sqrt();
    Ok(GaussianMomentState {
        mean_q: h.mean_q / r,
        mean_p: h.mean_p / r,
        qq: h.qq / prop.r2,
        pp: h.pp / prop.r2,
        qp_sym: h.qp_sym / prop.r2,
    })
}

pub fn reference_moments(
    decomp: &SpectralDecomposition,
    model: &OscillatorBathModel,
    initial: &GaussianMomentState,
    t: f64,
) -> Result<GaussianMomentState> {
    if t == 0.0 {
        return Ok(*initial);
    }
    reference_from_parts(&propagator_at(decomp, t), model.m0, initial)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaQuantities {
    pub delta_q: f64,
    pub delta_p: f64,
    pub c_delta: f64,
    /// `(dq)^2 (dp)^2 - C^2/4 - (hbar^2/4)(1 - R^2)^2`
    pub d_value: f64,
    /// Unclamped `(delta q)^2`; tiny negative values are rounding.
    pub delta_q2: f64,
    pub delta_p2: f64,
}

pub fn delta_from_parts(
    prop: &PropagatorSample,
    fluct: &FluctuationSample,
    m0: f64,
    initial: &GaussianMomentState,
) -> Result<DeltaQuantities> {
    let evolved = evolve_from_parts(prop, fluct, m0, initial);
    let reference = reference_from_parts(prop, m0, initial)?;
    let r2 = prop.r2;
    let dq2 = evolved.qq - r2 * reference.qq;
    let dp2 = evolved.pp - r2 * reference.pp;
    let c = evolved.qp_sym - r2 * reference.qp_sym;
    let diss = 1.0 - r2;
    let hbar = fluct.hbar;
    Ok(DeltaQuantities {
        delta_q: dq2.max(0.0).sqrt(),
        delta_p: dp2.max(0.0).sqrt(),
        c_delta: c,
        d_value: dq2 * dp2 - 0.25 * c * c - 0.25 * hbar * hbar * diss * diss,
        delta_q2: dq2,
        delta_p2: dp2,
    })
}

pub fn delta_quantities(
    decomp: &SpectralDecomposition,
    model: &OscillatorBathModel,
    temp: f64,
    initial: &GaussianMomentState,
    t: f64,
) -> Result<DeltaQuantities> {
    initial.check_physical(model.hbar)?;
    if t == 0.0 {
        return Ok(DeltaQuantities {
            delta_q: 0.0,
            delta_p: 0.0,
            c_delta: 0.0,
            d_value: 0.0,
            delta_q2: 0.0,
            delta_p2: 0.0,
        });
    }
    let prop = propagator_at(decomp, t);
    let fluct = xy_quantities(decomp, model, temp, t);
    delta_from_parts(&prop, &fluct, model.m0, initial)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Appendix1Report {
    pub t: f64,
    /// Moment-product expression with the special reference moments, minus `hbar^2/4`.
    pub special_moment_inequality_54: f64,
    /// `sqrt(XY - X_dot^2/4) - hbar (1 - R^2)/2`
    pub derived_55_residual: f64,
    pub fd17_residual: f64,
    pub r2: f64,
}

pub fn appendix1_from_sample(fl: &FluctuationSample, m0: f64) -> Result<Appendix1Report> {
    let (x, y, xd, r2, hbar) = (fl.x, fl.y, fl.x_dot, fl.r2, fl.hbar);
    if !(r2 > 0.0) {
        return Err(Error::PreconditionFailure(format!(
            "R^2 = {r2} must be positive at t = {}",
            fl.t
        )));
    }
    let disc = 4.0 * x * y - xd * xd;
    if !(disc > 0.0) {
        return Err(Error::PreconditionFailure(format!(
            "4XY - X_dot^2 = {disc} must be positive at t = {}",
            fl.t
        )));
    }
    let l = disc.sqrt();
    let ref_qq = hbar * x / (m0 * l);
    let ref_c = hbar * xd / (2.0 * l);
    let ref_pp = hbar * m0 * y / l;
    let product = x * y - 0.25 * xd * xd
        + r2 * r2 * (ref_qq * ref_pp - ref_c * ref_c)
        + r2 * (m0 * y * ref_qq - xd * ref_c + x / m0 * ref_pp);
    let gap = fl.covariance_gap();
    Ok(Appendix1Report {
        t: fl.t,
        special_moment_inequality_54: product - 0.25 * hbar * hbar,
        derived_55_residual: gap.sqrt() - 0.5 * hbar * (1.0 - r2),
        fd17_residual: fl.fd_residual(),
        r2,
    })
}

pub fn appendix1_check(
    decomp: &SpectralDecomposition,
    model: &OscillatorBathModel,
    temp: f64,
    t: f64,
) -> Result<Appendix1Report> {
    appendix1_from_sample(&xy_quantities(decomp, model, temp, t), model.m0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagator::decompose;

    fn weak() -> OscillatorBathModel {
        OscillatorBathModel::new(1.0, vec![0.7, 1.6], vec![0.15, 0.3])
    }

    fn presets() -> Vec<InitialStatePreset> {
        vec![
            InitialStatePreset::Ground,
            InitialStatePreset::Coherent { q: 0.4, p: -1.1 },
            InitialStatePreset::Squeezed { r: 0.5, phi: 0.3 },
            InitialStatePreset::Squeezed { r: 1.1, phi: 2.0 },
            InitialStatePreset::Thermal { nbar: 2.5 },
        ]
    }

    #[test]
    fn presets_parse_and_are_physical() {
        let m = weak();
        for p in presets() {
            let parsed: InitialStatePreset = p.to_string().parse().unwrap();
            assert_eq!(parsed, p);
            assert!(p.moments(&m).is_physical(1.0));
        }
        let pure = [presets()[0], presets()[1], presets()[2], presets()[3]];
        for p in pure {
            assert!(rs_residual(&p.moments(&m), 1.0).abs() < 1e-12);
        }
        for bad in ["", "excited", "coherent(1)", "thermal(-1)", "squeezed(1,x)", "coherent(1,2"] {
            assert!(bad.parse::<InitialStatePreset>().is_err(), "{bad}");
        }
    }

    #[test]
    fn zero_time_returns_initial() {
        let m = weak();
        let d = decompose(&m).unwrap();
        let s = presets()[2].moments(&m);
        assert_eq!(evolve_moments(&d, &m, 1.0, &s, 0.0).unwrap(), s);
        assert_eq!(reference_moments(&d, &m, &s, 0.0).unwrap(), s);
        let dq = delta_quantities(&d, &m, 1.0, &s, 0.0).unwrap();
        assert_eq!(dq.d_value, 0.0);
    }

    #[test]
    fn uncoupled_ground_is_stationary() {
        let m = OscillatorBathModel::new(1.3, vec![2.0], vec![0.0]).with_units(0.7, 1.0, 1.0);
        let d = decompose(&m).unwrap();
        let g = InitialStatePreset::Ground.moments(&m);
        for &t in &[0.5, 3.0, 17.0] {
            let e = evolve_moments(&d, &m, 2.0, &g, t).unwrap();
            assert!((e.qq - g.qq).abs() < 1e-13);
            assert!((e.pp - g.pp).abs() < 1e-13);
            assert!(e.qp_sym.abs() < 1e-13);
            assert_eq!(reference_moments(&d, &m, &g, t).unwrap().qq, e.qq);
            assert_eq!(delta_quantities(&d, &m, 2.0, &g, t).unwrap().d_value, 0.0);
        }
    }

    #[test]
    fn unphysical_initial_rejected() {
        let m = weak();
        let d = decompose(&m).unwrap();
        let bad = GaussianMomentState { mean_q: 0.0, mean_p: 0.0, qq: 0.1, pp: 0.1, qp_sym: 0.0 };
        assert!(matches!(
            evolve_moments(&d, &m, 1.0, &bad, 1.0),
            Err(Error::UnphysicalInitialState { .. })
        ));
    }

    #[test]
    fn reference_split_identity() {
        let m = weak();
        let d = decompose(&m).unwrap();
        let s = presets()[3].moments(&m);
        for &t in &[0.3, 2.0, 8.0] {
            let e = evolve_moments(&d, &m, 1.0, &s, t).unwrap();
            let r = reference_moments(&d, &m, &s, t).unwrap();
            let r2 = propagator_at(&d, t).r2;
            let f = xy_quantities(&d, &m, 1.0, t);
            let scale = e.qq.abs().max(1.0);
            assert!((r2 * r.qq + f.x - e.qq).abs() < 1e-12 * scale);
            assert!((r2 * r.pp + f.y - e.pp).abs() < 1e-12 * e.pp.abs().max(1.0));
            assert!((r2 * r.qp_sym + f.x_dot - e.qp_sym).abs() < 1e-12 * e.qp_sym.abs().max(1.0));
            // the reference evolution is unitary, so purity is preserved
            assert!(rs_residual(&r, 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn delta_is_state_independent() {
        let m = weak();
        let d = decompose(&m).unwrap();
        for &t in &[0.5, 4.0, 12.0] {
            let base = delta_quantities(&d, &m, 0.5, &presets()[0].moments(&m), t).unwrap();
            let f = xy_quantities(&d, &m, 0.5, t);
            assert!((base.d_value - f.fd_residual()).abs() < 1e-12);
            assert!((base.delta_q2 - f.x).abs() < 1e-12);
            assert!((base.c_delta - f.x_dot).abs() < 1e-12);
            for p in presets() {
                let other = delta_quantities(&d, &m, 0.5, &p.moments(&m), t).unwrap();
                assert!((other.d_value - base.d_value).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn displacement_leaves_rs_residual() {
        let m = weak();
        let a = InitialStatePreset::Ground.moments(&m);
        let b = InitialStatePreset::Coherent { q: 3.0, p: -2.0 }.moments(&m);
        assert!((rs_residual(&a, 1.0) - rs_residual(&b, 1.0)).abs() < 1e-12);
    }

    #[test]
    fn non_positive_r2_is_an_error() {
        let mut prop = PropagatorSample::identity(0, false);
        prop.t = 1.0;
        prop.r2 = -0.1;
        let s = InitialStatePreset::Ground.moments(&weak());
        assert!(matches!(
            reference_from_parts(&prop, 1.0, &s),
            Err(Error::NonPositiveR2 { .. })
        ));
    }

    #[test]
    fn appendix1_closed_form() {
        let m = weak();
        let d = decompose(&m).unwrap();
        let rep = appendix1_check(&d, &m, 1.0, 3.0).unwrap();
        let f = xy_quantities(&d, &m, 1.0, 3.0);
        let k = f.covariance_gap().sqrt();
        let closed = (k + 0.5 * f.r2).powi(2) - 0.25;
        assert!((rep.special_moment_inequality_54 - closed).abs() < 1e-12);
        assert!(rep.special_moment_inequality_54 >= 0.0);
        assert!(rep.derived_55_residual >= 0.0);

        let u = OscillatorBathModel::new(1.0, vec![2.0], vec![0.0]);
        let du = decompose(&u).unwrap();
        assert!(matches!(
            appendix1_check(&du, &u, 1.0, 1.0),
            Err(Error::PreconditionFailure(_))
        ));
    }
}
