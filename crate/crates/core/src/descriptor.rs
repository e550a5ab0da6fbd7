//! Analytic function families used for prehistory, exterior data and oracles.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Constant,
    Linear,
    Sine,
    Exponential,
    GaussianBump,
    BallBarrierPhi,
    SlabBarrierH,
    CutoffEta,
    CounterexampleU,
    Tabulated,
}

/// Declared behaviour of a descriptor far from the origin.
///
/// `EventuallyConstant` pins the value for arguments `<= below` and/or
/// `>= above`; whichever bound is absent is not claimed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailClass {
    EventuallyConstant {
        value: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        below: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        above: Option<f64>,
    },
    Bounded {
        bound: f64,
    },
    PowerGrowth {
        gamma: f64,
    },
}

/// Far-field behaviour of a descriptor on one side of the real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FarBehavior {
    /// Equals `value` for every argument beyond `beyond` on this side.
    Constant {
        beyond: f64,
        value: f64,
    },
    Bounded,
    Power {
        gamma: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionDescriptor {
    pub family: Family,
    #[serde(default)]
    pub params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<TailClass>,
}

fn param_count(family: Family) -> Option<usize> {
    Some(match family {
        Family::Constant => 1,
        Family::Linear => 2,
        Family::Sine => 3,
        Family::Exponential => 2,
        Family::GaussianBump => 3,
        Family::BallBarrierPhi => 3,
        Family::SlabBarrierH => 4,
        Family::CutoffEta => 2,
        Family::CounterexampleU => 1,
        Family::Tabulated => return None,
    })
}

/// Smooth step `0 -> 1` on `[0, 1]` built from `exp(-1/x)`.
fn smooth_step(x: f64) -> f64 {
    let psi = |y: f64| if y > 0.0 { (-1.0 / y).exp() } else { 0.0 };
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let a = psi(x);
        a / (a + psi(1.0 - x))
    }
}

/// C^∞ cutoff: 1 on `[-1, 1]`, 0 outside `(-2, 2)`, monotone in between.
pub fn eta(t: f64) -> f64 {
    let a = t.abs();
    if a <= 1.0 {
        1.0
    } else if a >= 2.0 {
        0.0
    } else {
        smooth_step(2.0 - a)
    }
}

/// `(1 - |x - x0|^2 / r^2)_+^s` with the multiplicative constant set to one.
pub fn barrier_phi(x: &[f64], x0: &[f64], r: f64, s: f64) -> f64 {
    let d2: f64 = x.iter().zip(x0).map(|(a, b)| (a - b) * (a - b)).sum();
    let q = 1.0 - d2 / (r * r);
    if q > 0.0 {
        q.powf(s)
    } else {
        0.0
    }
}

/// `[(1 - (x1 - (λ - l))^2 / l^2)_+^s + 1] (1 + |x'|^2)^{β/2}`.
pub fn barrier_h(x: &[f64], lambda: f64, l: f64, beta: f64, s: f64) -> f64 {
    let c = x[0] - (lambda - l);
    let q = 1.0 - c * c / (l * l);
    let bump = if q > 0.0 { q.powf(s) } else { 0.0 };
    let rest: f64 = x[1..].iter().map(|v| v * v).sum();
    (bump + 1.0) * (1.0 + rest).powf(0.5 * beta)
}

/// The one-variable counterexample trace: `sin t` for `t > 0`, `t` on
/// `(-R, 0]`, `-R` below.
pub fn counterexample_value(t: f64, r: f64) -> f64 {
    if t > 0.0 {
        t.sin()
    } else if t > -r {
        t
    } else {
        -r
    }
}

impl FunctionDescriptor {
    pub fn new(family: Family, params: Vec<f64>) -> Result<Self> {
        let d = FunctionDescriptor { family, params, tail: None };
        d.validate()?;
        Ok(d)
    }

    pub fn with_tail(mut self, tail: TailClass) -> Result<Self> {
        self.tail = Some(tail);
        self.validate()?;
        Ok(self)
    }

    pub fn constant(c: f64) -> Self {
        FunctionDescriptor { family: Family::Constant, params: vec![c], tail: None }
    }

    pub fn sine(amp: f64, freq: f64, phase: f64) -> Self {
        FunctionDescriptor { family: Family::Sine, params: vec![amp, freq, phase], tail: None }
    }

    pub fn exponential(amp: f64, rate: f64) -> Self {
        FunctionDescriptor { family: Family::Exponential, params: vec![amp, rate], tail: None }
    }

    pub fn gaussian(amp: f64, center: f64, width: f64) -> Self {
        FunctionDescriptor { family: Family::GaussianBump, params: vec![amp, center, width], tail: None }
    }

    pub fn ball_barrier(x0: f64, r: f64, s: f64) -> Self {
        FunctionDescriptor { family: Family::BallBarrierPhi, params: vec![x0, r, s], tail: None }
    }

    pub fn cutoff(t0: f64, scale: f64) -> Self {
        FunctionDescriptor { family: Family::CutoffEta, params: vec![t0, scale], tail: None }
    }

    pub fn counterexample(r: f64) -> Self {
        FunctionDescriptor { family: Family::CounterexampleU, params: vec![r], tail: None }
    }

    /// Piecewise-linear interpolant through `(x, v)` pairs, clamped outside.
    pub fn tabulated(points: &[(f64, f64)]) -> Result<Self> {
        let params = points.iter().flat_map(|&(x, v)| [x, v]).collect();
        Self::new(Family::Tabulated, params)
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.params;
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("params", "must be finite"));
        }
        match param_count(self.family) {
            Some(n) if p.len() != n => {
                return Err(Error::param("params", format!("{:?} expects {} parameters, got {}", self.family, n, p.len())))
            }
            None if p.len() < 2 || !p.len().is_multiple_of(2) => {
                return Err(Error::param("params", "tabulated expects (x, v) pairs"));
            }
            _ => {}
        }
        match self.family {
            Family::BallBarrierPhi if !(p[1] > 0.0 && p[2] > 0.0 && p[2] < 1.0) => {
                Err(Error::param("params", "ball barrier needs r > 0 and s in (0,1)"))
            }
            Family::SlabBarrierH if !(p[1] > 0.0 && p[2] > 0.0 && p[2] < 2.0 * p[3] && p[3] < 1.0) => {
                Err(Error::param("params", "slab barrier needs l > 0 and beta in (0, 2s)"))
            }
            Family::GaussianBump if p[2] <= 0.0 => Err(Error::param("params", "gaussian width must be positive")),
            Family::CutoffEta if p[1] <= 0.0 => Err(Error::param("params", "cutoff scale must be positive")),
            Family::CounterexampleU if p[0] <= 0.0 => Err(Error::param("params", "R must be positive")),
            Family::Tabulated if p.chunks(2).zip(p.chunks(2).skip(1)).any(|(a, b)| b[0] <= a[0]) => {
                Err(Error::param("params", "tabulated abscissae must increase strictly"))
            }
            _ => Ok(()),
        }?;
        match self.tail {
            Some(TailClass::Bounded { bound }) if !(bound >= 0.0) => Err(Error::param("tail.bound", "must be >= 0")),
            Some(TailClass::PowerGrowth { gamma }) if !(gamma > 0.0) => Err(Error::param("tail.gamma", "must be > 0")),
            Some(TailClass::EventuallyConstant { value, below, above }) => {
                if !value.is_finite() {
                    return Err(Error::param("tail.value", "must be finite"));
                }
                if below.is_none() && above.is_none() {
                    return Err(Error::param("tail", "eventually_constant needs `below` or `above`"));
                }
                for t in [below, above].into_iter().flatten() {
                    if (self.eval(t) - value).abs() > 1e-12 * (1.0 + value.abs()) {
                        return Err(Error::param("tail", "declared constant disagrees with the family at the cutoff"));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Evaluate at a scalar argument (time, or the first space coordinate).
    pub fn eval(&self, x: f64) -> f64 {
        let p = &self.params;
        match self.family {
            Family::Constant => p[0],
            Family::Linear => p[0] + p[1] * x,
            Family::Sine => p[0] * (p[1] * x + p[2]).sin(),
            Family::Exponential => p[0] * (p[1] * x).exp(),
            Family::GaussianBump => {
                let z = (x - p[1]) / p[2];
                p[0] * (-z * z).exp()
            }
            Family::BallBarrierPhi => barrier_phi(&[x], &[p[0]], p[1], p[2]),
            Family::SlabBarrierH => barrier_h(&[x], p[0], p[1], p[2], p[3]),
            Family::CutoffEta => eta((x - p[0]) / p[1]),
            Family::CounterexampleU => counterexample_value(x, p[0]),
            Family::Tabulated => {
                let n = p.len() / 2;
                let (x0, xn) = (p[0], p[2 * (n - 1)]);
                if x <= x0 {
                    return p[1];
                }
                if x >= xn {
                    return p[2 * n - 1];
                }
                let k = (1..n).find(|&k| p[2 * k] >= x).unwrap_or(n - 1);
                let (xa, va, xb, vb) = (p[2 * k - 2], p[2 * k - 1], p[2 * k], p[2 * k + 1]);
                va + (vb - va) * (x - xa) / (xb - xa)
            }
        }
    }

    /// Evaluate at a point of R^1 or R^2. Radial families are centred on the
    /// first axis; the others depend on the first coordinate only.
    pub fn eval_point(&self, x: &[f64]) -> f64 {
        let p = &self.params;
        let rest: f64 = x[1..].iter().map(|v| v * v).sum();
        match self.family {
            Family::GaussianBump => {
                let d2 = (x[0] - p[1]).powi(2) + rest;
                p[0] * (-d2 / (p[2] * p[2])).exp()
            }
            Family::BallBarrierPhi => {
                let d2 = (x[0] - p[0]).powi(2) + rest;
                let q = 1.0 - d2 / (p[1] * p[1]);
                if q > 0.0 {
                    q.powf(p[2])
                } else {
                    0.0
                }
            }
            Family::SlabBarrierH => barrier_h(x, p[0], p[1], p[2], p[3]),
            _ => self.eval(x[0]),
        }
    }

    /// Points where the family is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        let p = &self.params;
        match self.family {
            Family::BallBarrierPhi => vec![p[0] - p[1], p[0] + p[1]],
            Family::SlabBarrierH => vec![p[0] - 2.0 * p[1], p[0]],
            Family::CounterexampleU => vec![-p[0], 0.0],
            Family::Tabulated => p.chunks(2).map(|c| c[0]).collect(),
            _ => Vec::new(),
        }
    }

    /// Declared tail, falling back to the family default.
    pub fn tail_class(&self) -> TailClass {
        if let Some(t) = self.tail {
            return t;
        }
        let p = &self.params;
        match self.family {
            // constant on the whole line: below +∞ and above -∞
            Family::Constant => TailClass::EventuallyConstant { value: p[0], below: Some(f64::INFINITY), above: Some(f64::NEG_INFINITY) },
            Family::Linear if p[1] == 0.0 => {
                TailClass::EventuallyConstant { value: p[0], below: Some(f64::INFINITY), above: Some(f64::NEG_INFINITY) }
            }
            Family::Linear => TailClass::PowerGrowth { gamma: 1.0 },
            Family::Sine => TailClass::Bounded { bound: p[0].abs() },
            // bounded on the half line where it decays; growth on the other
            // side is irrelevant for past integrals
            Family::Exponential => TailClass::Bounded { bound: p[0].abs() },
            Family::GaussianBump => TailClass::Bounded { bound: p[0].abs() },
            Family::BallBarrierPhi => TailClass::EventuallyConstant { value: 0.0, below: Some(p[0] - p[1]), above: Some(p[0] + p[1]) },
            Family::SlabBarrierH => TailClass::EventuallyConstant { value: 1.0, below: Some(p[0] - 2.0 * p[1]), above: Some(p[0]) },
            Family::CutoffEta => {
                TailClass::EventuallyConstant { value: 0.0, below: Some(p[0] - 2.0 * p[1]), above: Some(p[0] + 2.0 * p[1]) }
            }
            Family::CounterexampleU => TailClass::EventuallyConstant { value: -p[0], below: Some(-p[0]), above: None },
            Family::Tabulated => TailClass::EventuallyConstant { value: p[1], below: Some(p[0]), above: None },
        }
    }

    /// Far-field behaviour on the left (`right == false`) or right side.
    pub fn far(&self, right: bool) -> FarBehavior {
        let p = &self.params;
        match self.family {
            Family::Tabulated => {
                let n = p.len();
                if right {
                    FarBehavior::Constant { beyond: p[n - 2], value: p[n - 1] }
                } else {
                    FarBehavior::Constant { beyond: p[0], value: p[1] }
                }
            }
            Family::Exponential => {
                let rate = p[1];
                if rate == 0.0 || p[0] == 0.0 {
                    FarBehavior::Constant { beyond: 0.0, value: p[0] }
                } else if (rate > 0.0) == right {
                    FarBehavior::Power { gamma: f64::INFINITY }
                } else {
                    FarBehavior::Bounded
                }
            }
            _ => match self.tail_class() {
                TailClass::EventuallyConstant { value, below, above } => match (right, below, above) {
                    (false, Some(b), _) => FarBehavior::Constant { beyond: b, value },
                    (true, _, Some(a)) => FarBehavior::Constant { beyond: a, value },
                    _ => FarBehavior::Bounded,
                },
                TailClass::Bounded { .. } => FarBehavior::Bounded,
                TailClass::PowerGrowth { gamma } => FarBehavior::Power { gamma },
            },
        }
    }

    /// Growth exponent of the past tail (0 for bounded or eventually constant).
    pub fn past_growth(&self) -> f64 {
        match self.far(false) {
            FarBehavior::Constant { .. } | FarBehavior::Bounded => 0.0,
            FarBehavior::Power { gamma } => gamma,
        }
    }
}

/// A separable space-time function `Σ_k space_k(x) time_k(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceTimeDescriptor {
    pub terms: Vec<SpaceTimeTerm>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceTimeTerm {
    pub space: FunctionDescriptor,
    pub time: FunctionDescriptor,
}

impl SpaceTimeDescriptor {
    pub fn zero() -> Self {
        SpaceTimeDescriptor { terms: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self::separable(FunctionDescriptor::constant(c), FunctionDescriptor::constant(1.0))
    }

    pub fn separable(space: FunctionDescriptor, time: FunctionDescriptor) -> Self {
        SpaceTimeDescriptor { terms: vec![SpaceTimeTerm { space, time }] }
    }

    /// Space-only function, constant in time.
    pub fn stationary(space: FunctionDescriptor) -> Self {
        Self::separable(space, FunctionDescriptor::constant(1.0))
    }

    pub fn plus(mut self, other: SpaceTimeDescriptor) -> Self {
        self.terms.extend(other.terms);
        self
    }

    pub fn validate(&self) -> Result<()> {
        for t in &self.terms {
            t.space.validate()?;
            t.time.validate()?;
        }
        Ok(())
    }

    pub fn eval(&self, x: f64, t: f64) -> f64 {
        self.terms.iter().map(|k| k.space.eval(x) * k.time.eval(t)).sum()
    }

    pub fn eval_point(&self, x: &[f64], t: f64) -> f64 {
        self.terms.iter().map(|k| k.space.eval_point(x) * k.time.eval(t)).sum()
    }

    /// The time trace at a fixed spatial point.
    pub fn at(&self, x: f64) -> TimeSlice<'_> {
        TimeSlice { desc: self, x }
    }
}

/// A scalar function of time with the metadata the Marchaud evaluator needs.
pub trait TimeFunction: Sync {
    fn value(&self, t: f64) -> f64;
    fn breakpoints(&self) -> Vec<f64>;
    /// `Some((value, cutoff))` when the function equals `value` for `t <= cutoff`.
    fn past_constant(&self) -> Option<(f64, f64)>;
    /// Growth exponent of `|u(t)|` as `t -> -∞` (0 when bounded).
    fn past_growth(&self) -> f64;
}

impl TimeFunction for FunctionDescriptor {
    fn value(&self, t: f64) -> f64 {
        self.eval(t)
    }

    fn breakpoints(&self) -> Vec<f64> {
        FunctionDescriptor::breakpoints(self)
    }

    fn past_constant(&self) -> Option<(f64, f64)> {
        match self.far(false) {
            FarBehavior::Constant { beyond, value } => Some((value, beyond)),
            _ => None,
        }
    }

    fn past_growth(&self) -> f64 {
        FunctionDescriptor::past_growth(self)
    }
}

pub struct TimeSlice<'a> {
    desc: &'a SpaceTimeDescriptor,
    x: f64,
}

impl TimeFunction for TimeSlice<'_> {
    fn value(&self, t: f64) -> f64 {
        self.desc.eval(self.x, t)
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.desc.terms.iter().flat_map(|k| k.time.breakpoints()).collect();
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    fn past_constant(&self) -> Option<(f64, f64)> {
        let mut value = 0.0;
        let mut cutoff = f64::INFINITY;
        for k in &self.desc.terms {
            let (v, c) = k.time.past_constant()?;
            value += k.space.eval(self.x) * v;
            cutoff = cutoff.min(c);
        }
        Some((value, cutoff))
    }

    fn past_growth(&self) -> f64 {
        self.desc.terms.iter().map(|k| k.time.past_growth()).fold(0.0, f64::max)
    }
}

/// Wraps a closure as a time function with no declared breakpoints.
pub struct FnTime<F> {
    pub f: F,
    pub past: Option<(f64, f64)>,
}

impl<F: Fn(f64) -> f64 + Sync> TimeFunction for FnTime<F> {
    fn value(&self, t: f64) -> f64 {
        (self.f)(t)
    }

    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    fn past_constant(&self) -> Option<(f64, f64)> {
        self.past
    }

    fn past_growth(&self) -> f64 {
        0.0
    }
}

/// Period of the counterexample's oscillating part.
pub const COUNTEREXAMPLE_PERIOD: f64 = 2.0 * PI;

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn eta_profile() {
        assert_eq!(eta(0.0), 1.0);
        assert_eq!(eta(1.0), 1.0);
        assert_eq!(eta(-2.5), 0.0);
        assert_eq!(eta(2.5), 0.0);
        let v = eta(1.5);
        assert!(v > 0.0 && v < 1.0);
        // symmetric shoulder
        assert_relative_eq!(v, 0.5, epsilon = 1e-15);
        // strictly decreasing wherever the values are not saturated
        let mut prev = eta(1.0);
        for i in 1..1000 {
            let t = 1.0 + i as f64 / 1000.0;
            let e = eta(t);
            assert!(e <= prev);
            if prev > 1e-12 && prev < 1.0 - 1e-12 {
                assert!(e < prev, "t = {t}");
            }
            prev = e;
        }
    }

    #[test]
    fn barrier_phi_values() {
        assert_eq!(barrier_phi(&[0.3], &[0.3], 1.0, 0.5), 1.0);
        assert_eq!(barrier_phi(&[1.0], &[0.0], 1.0, 0.5), 0.0);
        assert_relative_eq!(barrier_phi(&[0.5], &[0.0], 1.0, 0.5), 0.75f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(barrier_phi(&[0.0, 0.5], &[0.0, 0.0], 1.0, 0.5), 0.866_025_403_784_438_6, max_relative = 1e-15);
    }

    #[test]
    fn barrier_h_values() {
        let (lambda, l) = (3.0, 0.5);
        assert_eq!(barrier_h(&[lambda - l, 0.0], lambda, l, 0.5, 0.5), 2.0);
        assert_eq!(barrier_h(&[lambda - 3.0 * l, 0.0], lambda, l, 0.5, 0.5), 1.0);
        assert_relative_eq!(barrier_h(&[lambda - l, 1.0], lambda, l, 0.5, 0.5), 2.0 * 2f64.powf(0.25), max_relative = 1e-15);
        assert_relative_eq!(2.0 * 2f64.powf(0.25), 2.3784, epsilon = 1e-4);
    }

    #[test]
    fn counterexample_fixture() {
        let u = FunctionDescriptor::counterexample(100.0);
        assert_eq!(u.eval(PI / 2.0), 1.0);
        assert_eq!(u.eval(-105.0), -100.0);
        assert_eq!(u.eval(3.0 * PI / 2.0), -1.0);
        assert_eq!(u.eval(0.0), 0.0);
        assert_eq!(u.eval(-100.0), -100.0);
        assert!(matches!(
            u.tail_class(),
            TailClass::EventuallyConstant { value, below: Some(b), .. } if value == -100.0 && b == -100.0
        ));
    }

    #[test]
    fn tabulated_interpolates_and_clamps() {
        let d = FunctionDescriptor::tabulated(&[(0.0, 1.0), (1.0, 3.0), (3.0, -1.0)]).unwrap();
        assert_eq!(d.eval(-5.0), 1.0);
        assert_eq!(d.eval(0.5), 2.0);
        assert_eq!(d.eval(2.0), 1.0);
        assert_eq!(d.eval(10.0), -1.0);
        assert_eq!(d.far(true), FarBehavior::Constant { beyond: 3.0, value: -1.0 });
        assert!(FunctionDescriptor::tabulated(&[(0.0, 1.0), (0.0, 2.0)]).is_err());
    }

    #[test]
    fn rejects_wrong_arity_and_bad_tail() {
        assert!(FunctionDescriptor::new(Family::Sine, vec![1.0]).is_err());
        let bad = FunctionDescriptor::constant(2.0).with_tail(TailClass::EventuallyConstant { value: 3.0, below: Some(0.0), above: None });
        assert!(bad.is_err());
    }

    #[test]
    fn serde_round_trip() {
        let json = r#"{"family":"counterexample_u","params":[100.0],"tail":{"kind":"eventually_constant","value":-100.0,"below":-100.0}}"#;
        let d: FunctionDescriptor = serde_json::from_str(json).unwrap();
        assert_eq!(d.family, Family::CounterexampleU);
        let back = serde_json::to_string(&d).unwrap();
        let again: FunctionDescriptor = serde_json::from_str(&back).unwrap();
        assert_eq!(d, again);
        assert!(serde_json::from_str::<FunctionDescriptor>(r#"{"family":"sine","params":[1,1,0],"extra":1}"#).is_err());
    }

    #[test]
    fn space_time_slice() {
        let d = SpaceTimeDescriptor::separable(FunctionDescriptor::constant(2.0), FunctionDescriptor::counterexample(10.0));
        let s = d.at(0.0);
        assert_eq!(s.value(-20.0), -20.0);
        assert_eq!(s.past_constant(), Some((-20.0, -10.0)));
    }
}
