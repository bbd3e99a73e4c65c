use std::fmt;
use std::str::FromStr;

/// Per-mode bath energy `E(omega, x)` for a non-negative parameter `x`.
///
/// Variants that report `satisfies_constraints` must obey
/// `E(omega, 0) = hbar omega / 2`, `E >= 0` and `dE/dx >= 0`.
pub trait EnergyFunction: Send + Sync {
    fn name(&self) -> &str;

    fn energy(&self, omega: f64, x: f64, hbar: f64, boltzmann: f64) -> f64;

    /// `dE/dx`; the default is a centered (one-sided near 0) difference.
    fn x_derivative(&self, omega: f64, x: f64, hbar: f64, boltzmann: f64) -> f64 {
        let h = 1e-6 * x.abs().max(1e-3);
        if x >= h {
            (self.energy(omega, x + h, hbar, boltzmann) - self.energy(omega, x - h, hbar, boltzmann))
                / (2.0 * h)
        } else {
            (-3.0 * self.energy(omega, x, hbar, boltzmann)
                + 4.0 * self.energy(omega, x + h, hbar, boltzmann)
                - self.energy(omega, x + 2.0 * h, hbar, boltzmann))
                / (2.0 * h)
        }
    }

    fn satisfies_constraints(&self) -> bool;
}

/// `coth(u)` for `u >= 0`, with `coth(inf) = 1` and no overflow for large `u`.
pub fn coth(u: f64) -> f64 {
    if u.is_infinite() {
        return 1.0;
    }
    // coth u = 1 + 2 / (e^{2u} - 1)
    1.0 + 2.0 / (2.0 * u).exp_m1()
}

/// `(u / sinh u)^2`, equal to 1 at `u = 0` and decaying to 0 without overflow.
fn u_over_sinh_sq(u: f64) -> f64 {
    if u == 0.0 {
        return 1.0;
    }
    if u > 350.0 {
        return 0.0;
    }
    let r = u / u.sinh();
    r * r
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnergyVariant {
    /// `(hbar w / 2) coth(hbar w / 2kT)`, the thermal mean energy.
    Thermal,
    /// `hbar w / (e^{hbar w/kT} - 1)`, thermal energy without zero point.
    NoZeroPoint,
    /// `kT`, the high-temperature limit.
    Classical,
}

impl EnergyVariant {
    pub const ALL: [EnergyVariant; 3] = [Self::Thermal, Self::NoZeroPoint, Self::Classical];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Thermal => "thermal",
            Self::NoZeroPoint => "no_zero_point",
            Self::Classical => "classical",
        }
    }
}

impl fmt::Display for EnergyVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EnergyVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "thermal" => Ok(Self::Thermal),
            "no_zero_point" => Ok(Self::NoZeroPoint),
            "classical" => Ok(Self::Classical),
            other => Err(format!(
                "unknown energy function {other:?} (expected thermal, no_zero_point or classical)"
            )),
        }
    }
}

impl EnergyFunction for EnergyVariant {
    fn name(&self) -> &str {
        self.as_str()
    }

    fn energy(&self, omega: f64, x: f64, hbar: f64, k: f64) -> f64 {
        let quantum = hbar * omega;
        match self {
            Self::Thermal => {
                if x == 0.0 {
                    0.5 * quantum
                } else {
                    0.5 * quantum * coth(quantum / (2.0 * k * x))
                }
            }
            Self::NoZeroPoint => {
                if x == 0.0 {
                    0.0
                } else {
                    quantum / (quantum / (k * x)).exp_m1()
                }
            }
            Self::Classical => k * x,
        }
    }

    fn x_derivative(&self, omega: f64, x: f64, hbar: f64, k: f64) -> f64 {
        match self {
            // both thermal forms share dE/dT = k (u / sinh u)^2, u = hbar w / 2kT
            Self::Thermal | Self::NoZeroPoint => {
                if x == 0.0 {
                    0.0
                } else {
                    k * u_over_sinh_sq(hbar * omega / (2.0 * k * x))
                }
            }
            Self::Classical => k,
        }
    }

    fn satisfies_constraints(&self) -> bool {
        matches!(self, Self::Thermal)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thermal_zero_point() {
        for w in [0.1, 1.0, 10.0] {
            let e = EnergyVariant::Thermal.energy(w, 0.0, 1.0, 1.0);
            assert!((e - w / 2.0).abs() <= 1e-12 * w / 2.0);
            // tiny positive temperature agrees with the coth -> 1 limit
            let e_small = EnergyVariant::Thermal.energy(w, 1e-4, 1.0, 1.0);
            assert!(((e_small - e) / e).abs() < 1e-8);
        }
    }

    #[test]
    fn thermal_monotone_and_nonnegative() {
        for w in [0.1, 1.0, 10.0] {
            let mut last = 0.0;
            for i in 0..200 {
                let x = i as f64 * 0.05;
                let e = EnergyVariant::Thermal.energy(w, x, 1.0, 1.0);
                assert!(e >= 0.0 && e >= last);
                last = e;
            }
        }
    }

    #[test]
    fn coth_series_near_zero_and_large() {
        for u in [1e-6f64, 1e-3, 0.5, 2.0] {
            let expect = u.cosh() / u.sinh();
            assert!((coth(u) - expect).abs() < 1e-12 * expect);
        }
        assert_eq!(coth(800.0), 1.0);
        assert_eq!(coth(f64::INFINITY), 1.0);
    }

    #[test]
    fn high_temperature_limits() {
        let w = 0.3;
        let t = 1e4;
        let th = EnergyVariant::Thermal.energy(w, t, 1.0, 1.0);
        let nz = EnergyVariant::NoZeroPoint.energy(w, t, 1.0, 1.0);
        assert!((th - t).abs() < 1e-4);
        assert!((nz + w / 2.0 - th).abs() < 1e-9);
    }

    #[test]
    fn analytic_derivative_matches_difference() {
        for v in EnergyVariant::ALL {
            for (w, x) in [(0.5, 0.3), (2.0, 1.0), (1.0, 7.0)] {
                let h = 1e-5;
                let fd = (v.energy(w, x + h, 1.0, 1.0) - v.energy(w, x - h, 1.0, 1.0)) / (2.0 * h);
                let an = v.x_derivative(w, x, 1.0, 1.0);
                assert!((fd - an).abs() < 1e-8, "{v} w={w} x={x}: {fd} vs {an}");
            }
        }
    }

    #[test]
    fn constraint_flags() {
        assert!(EnergyVariant::Thermal.satisfies_constraints());
        // violates E(w, 0) = hbar w / 2
        assert_eq!(EnergyVariant::NoZeroPoint.energy(1.0, 0.0, 1.0, 1.0), 0.0);
        assert!(!EnergyVariant::NoZeroPoint.satisfies_constraints());
        assert!(!EnergyVariant::Classical.satisfies_constraints());
    }

    #[test]
    fn parse_names() {
        for v in EnergyVariant::ALL {
            assert_eq!(v.as_str().parse::<EnergyVariant>().unwrap(), v);
        }
        assert!("quantum".parse::<EnergyVariant>().is_err());
    }
}
