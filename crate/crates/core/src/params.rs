//! Orders of the two fractional operators and their normalization constants.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// The pair (alpha, s) together with the derived constants.
///
/// `c_alpha = alpha / Γ(1 - alpha)` normalizes the Marchaud derivative and
/// `c_ns` is the constant of the fractional Laplacian in the convention where
/// its Fourier symbol is `|ξ|^{2s}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracParams {
    alpha: f64,
    s: f64,
    c_alpha: f64,
    c_1s: f64,
    c_2s: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    alpha: f64,
    s: f64,
}

impl Serialize for FracParams {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        RawParams { alpha: self.alpha, s: self.s }.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for FracParams {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawParams::deserialize(d)?;
        // Range violations are reported by validation with a field path, so
        // deserialization keeps the raw values.
        Ok(FracParams::unchecked(raw.alpha, raw.s))
    }
}

impl FracParams {
    pub fn new(alpha: f64, s: f64) -> Result<Self> {
        let p = Self::unchecked(alpha, s);
        p.validate()?;
        Ok(p)
    }

    fn unchecked(alpha: f64, s: f64) -> Self {
        FracParams { alpha, s, c_alpha: marchaud_constant(alpha), c_1s: laplacian_constant(1, s), c_2s: laplacian_constant(2, s) }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::param("alpha", format!("must lie in (0,1), got {}", self.alpha)));
        }
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(Error::param("s", format!("must lie in (0,1), got {}", self.s)));
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn c_alpha(&self) -> f64 {
        self.c_alpha
    }

    /// Normalization of `(-Δ)^s` in dimension `dim` (1 or 2).
    pub fn c_ns(&self, dim: usize) -> f64 {
        match dim {
            1 => self.c_1s,
            2 => self.c_2s,
            n => laplacian_constant(n, self.s),
        }
    }
}

/// `alpha / Γ(1 - alpha)`.
pub fn marchaud_constant(alpha: f64) -> f64 {
    alpha / gamma(1.0 - alpha)
}

/// `4^s Γ(n/2 + s) / (π^{n/2} |Γ(-s)|)`.
pub fn laplacian_constant(n: usize, s: f64) -> f64 {
    let half_n = n as f64 / 2.0;
    4f64.powf(s) * gamma(half_n + s) / (PI.powf(half_n) * gamma(-s).abs())
}

/// Value of `(-Δ)^s (1 - |x|^2)_+^s` inside the unit ball of R^n.
pub fn unit_ball_barrier_value(n: usize, s: f64) -> f64 {
    let half_n = n as f64 / 2.0;
    4f64.powf(s) * gamma(1.0 + s) * gamma(half_n + s) / gamma(half_n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rejects_boundary_orders() {
        assert!(FracParams::new(0.0, 0.5).is_err());
        assert!(FracParams::new(1.0, 0.5).is_err());
        assert!(FracParams::new(0.5, 0.0).is_err());
        assert!(FracParams::new(0.5, 1.0).is_err());
        assert!(FracParams::new(f64::NAN, 0.5).is_err());
    }

    #[test]
    fn half_order_constants() {
        let p = FracParams::new(0.5, 0.5).unwrap();
        // 0.5 / Γ(0.5) = 0.5 / sqrt(pi)
        assert_relative_eq!(p.c_alpha(), 0.5 / PI.sqrt(), max_relative = 1e-13);
        // the half Laplacian in 1-D has constant 1/pi
        assert_relative_eq!(p.c_ns(1), 1.0 / PI, max_relative = 1e-13);
        // in 2-D: 2 Γ(1.5) / (pi |Γ(-0.5)|) = 1/(2 pi)
        assert_relative_eq!(p.c_ns(2), 1.0 / (2.0 * PI), max_relative = 1e-13);
    }

    #[test]
    fn constants_positive_over_range() {
        for i in 1..20 {
            for j in 1..20 {
                let p = FracParams::new(i as f64 / 20.0, j as f64 / 20.0).unwrap();
                assert!(p.c_alpha() > 0.0 && p.c_ns(1) > 0.0 && p.c_ns(2) > 0.0);
            }
        }
    }

    #[test]
    fn ball_value_half_order_is_one() {
        assert_relative_eq!(unit_ball_barrier_value(1, 0.5), 1.0, max_relative = 1e-13);
    }
}
