//! Marchaud fractional derivative of sampled histories.
//!
//! `∂_t^α u(t) = C_α ∫_{-∞}^t (u(t) - u(τ)) (t - τ)^{-1-α} dτ`
//!
//! The sampled part uses the piecewise-linear interpolant with closed-form
//! cell weights; the analytic past is integrated adaptively and closed
//! forms take over where the past becomes constant.

use serde::{Deserialize, Serialize};

use crate::descriptor::{eta, FunctionDescriptor, TimeFunction};
use crate::error::{Error, Result};
use crate::params::FracParams;
use crate::quad::{hat_moments, integrate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TimeScheme {
    #[default]
    L1PiecewiseLinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TailMode {
    /// Past must be eventually constant; the tail is integrated exactly.
    AnalyticConstant,
    /// Integrate up to `t_big` into the past, then treat the rest as constant.
    #[default]
    AdaptiveThenConstant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeQuadratureConfig {
    pub scheme: TimeScheme,
    pub tail_mode: TailMode,
    pub t_big: f64,
    pub adaptive_tol: f64,
}

impl Default for TimeQuadratureConfig {
    fn default() -> Self {
        TimeQuadratureConfig {
            scheme: TimeScheme::L1PiecewiseLinear,
            tail_mode: TailMode::AdaptiveThenConstant,
            t_big: 50.0,
            adaptive_tol: 1e-10,
        }
    }
}

impl TimeQuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_big > 0.0) {
            return Err(Error::param("t_big", "must be positive"));
        }
        if !(self.adaptive_tol > 0.0) {
            return Err(Error::param("adaptive_tol", "must be positive"));
        }
        Ok(())
    }
}

/// Uniformly sampled values from `t_start` on, with an analytic past.
#[derive(Clone, Copy)]
pub struct TimeTrace<'a> {
    pub t_start: f64,
    pub dt: f64,
    pub samples: &'a [f64],
    pub past: &'a dyn TimeFunction,
}

/// Dimensionless L1 cell weights for unit spacing.
///
/// On the cell `σ ∈ [k, k+1]` the node at `σ = k` carries `a[k]` and the node
/// at `σ = k+1` carries `b[k]`. `b[0] = 1/(1-α)`; `a[0]` is unused because
/// the near node coincides with the evaluation point.
#[derive(Debug, Clone)]
pub struct L1Weights {
    alpha: f64,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl L1Weights {
    pub fn new(alpha: f64, n_cells: usize) -> Self {
        let mut w = L1Weights { alpha, a: vec![0.0], b: vec![1.0 / (1.0 - alpha)] };
        w.extend(n_cells);
        w
    }

    pub fn extend(&mut self, n_cells: usize) {
        for k in self.b.len()..n_cells {
            let (ma, mb) = hat_moments(k as f64, k as f64 + 1.0, 1.0 + self.alpha);
            self.a.push(ma);
            self.b.push(mb);
        }
    }

    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    /// Weight of `u_n - u_{n-m}` when evaluating at level `n`, `1 <= m <= n`.
    pub fn weight(&self, n: usize, m: usize) -> f64 {
        if m < n {
            self.b[m - 1] + self.a[m]
        } else {
            self.b[m - 1]
        }
    }

    /// Coefficient of `u_n` in the full operator: the sampled weights plus
    /// the `∫_n^∞ σ^{-1-α}` part, which telescopes to `1/(α(1-α))`.
    pub fn diagonal(&self) -> f64 {
        1.0 / (self.alpha * (1.0 - self.alpha))
    }
}

fn check_finite(samples: &[f64]) -> Result<()> {
    match samples.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

/// `∫_{σ0}^∞ g(p(t - σ)) σ^{-1-α} dσ` where `p` is the analytic past and `g`
/// is affine in its argument.
fn past_integral<G: Fn(f64) -> f64>(
    past: &dyn TimeFunction,
    t: f64,
    sigma0: f64,
    g: G,
    alpha: f64,
    cfg: &TimeQuadratureConfig,
) -> Result<f64> {
    let growth = past.past_growth();
    if growth >= alpha {
        return Err(Error::Divergent(format!("past grows like |t|^{growth}, needs exponent below alpha = {alpha}")));
    }
    let (end, tail) = match past.past_constant() {
        Some((v, cut)) => {
            let sc = t - cut;
            if sc <= sigma0 {
                let gv = g(v);
                if sigma0 == 0.0 {
                    return if gv == 0.0 { Ok(0.0) } else { Err(Error::Divergent("jump at the evaluation time".into())) };
                }
                return Ok(gv * sigma0.powf(-alpha) / alpha);
            }
            (sc, g(v) * sc.powf(-alpha) / alpha)
        }
        None => {
            if cfg.tail_mode == TailMode::AnalyticConstant {
                return Err(Error::Unsupported("analytic_constant tail mode needs an eventually constant past".into()));
            }
            let sc = sigma0 + cfg.t_big;
            (sc, g(past.value(t - sc)) * sc.powf(-alpha) / alpha)
        }
    };
    let mut cuts = vec![sigma0];
    cuts.extend(past.breakpoints().into_iter().map(|b| t - b).filter(|&s| s > sigma0 && s < end));
    cuts.push(end);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let tol = cfg.adaptive_tol;
    let mut acc = tail;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a == 0.0 {
            // σ = v^{1/(1-α)} removes the weak singularity at the origin
            let q = 1.0 / (1.0 - alpha);
            let f = |v: f64| {
                if v <= 0.0 {
                    return 0.0;
                }
                let s = v.powf(q);
                g(past.value(t - s)) * v.powf(-q) * q
            };
            acc += integrate(&f, 0.0, b.powf(1.0 - alpha), tol, tol)?;
        } else {
            let f = |s: f64| g(past.value(t - s)) * s.powf(-1.0 - alpha);
            acc += integrate(&f, a, b, tol, tol)?;
        }
    }
    Ok(acc)
}

/// `∫_{t - t_start}^∞ p(t - σ) σ^{-1-α} dσ` for `t > t_start`: the part of the
/// operator that the past contributes to a time step.
pub fn past_load(past: &dyn TimeFunction, t: f64, t_start: f64, alpha: f64, cfg: &TimeQuadratureConfig) -> Result<f64> {
    let s0 = t - t_start;
    if !(s0 > 0.0) {
        return Err(Error::OutOfRange("past load needs t > t_start".into()));
    }
    past_integral(past, t, s0, |v| v, alpha, cfg)
}

/// Marchaud derivative of a sampled trace at `t_eval`.
///
/// `t_eval` may be any time up to the last sample; times before `t_start`
/// use the analytic past alone.
pub fn marchaud(trace: &TimeTrace<'_>, t_eval: f64, params: &FracParams, cfg: &TimeQuadratureConfig) -> Result<f64> {
    marchaud_with(trace, t_eval, params, cfg, None)
}

/// As [`marchaud`] with optionally precomputed unit weights.
pub fn marchaud_with(
    trace: &TimeTrace<'_>,
    t_eval: f64,
    params: &FracParams,
    cfg: &TimeQuadratureConfig,
    weights: Option<&L1Weights>,
) -> Result<f64> {
    let alpha = params.alpha();
    check_finite(trace.samples)?;
    if !(trace.dt > 0.0) {
        return Err(Error::param("dt", "must be positive"));
    }
    if trace.samples.is_empty() || t_eval <= trace.t_start {
        let u_e = if trace.samples.is_empty() || t_eval < trace.t_start { trace.past.value(t_eval) } else { trace.samples[0] };
        let v = past_integral(trace.past, t_eval, 0.0, |p| u_e - p, alpha, cfg)?;
        return Ok(params.c_alpha() * v);
    }
    let n_last = trace.samples.len() - 1;
    let f = (t_eval - trace.t_start) / trace.dt;
    if f > n_last as f64 * (1.0 + 1e-12) + 1e-9 {
        return Err(Error::OutOfRange(format!("t_eval {t_eval} beyond the last sample")));
    }
    let nearest = f.round();
    let sampled = if (f - nearest).abs() < 1e-9 {
        let n = nearest as usize;
        sampled_on_level(trace.samples, n, alpha, weights)
    } else {
        sampled_general(trace.samples, f, alpha)
    };
    let u_e = value_at(trace.samples, f);
    let scale = trace.dt.powf(-alpha);
    let sigma0 = t_eval - trace.t_start;
    let past = past_integral(trace.past, t_eval, sigma0, |p| u_e - p, alpha, cfg)?;
    Ok(params.c_alpha() * (scale * sampled + past))
}

/// Marchaud derivative on level `n >= 1` of samples starting at `t_start`,
/// given the [`past_load`] of the analytic past at that time.
pub fn marchaud_level(samples: &[f64], n: usize, dt: f64, load: f64, params: &FracParams, weights: Option<&L1Weights>) -> Result<f64> {
    if n == 0 || n >= samples.len() {
        return Err(Error::OutOfRange(format!("level {n} outside 1..{}", samples.len())));
    }
    check_finite(&samples[..=n])?;
    let alpha = params.alpha();
    let sigma0 = n as f64 * dt;
    let sampled = sampled_on_level(samples, n, alpha, weights);
    Ok(params.c_alpha() * (dt.powf(-alpha) * sampled + samples[n] * sigma0.powf(-alpha) / alpha - load))
}

fn value_at(samples: &[f64], f: f64) -> f64 {
    let n = samples.len() - 1;
    let i = (f.floor() as usize).min(n.saturating_sub(1));
    let th = f - i as f64;
    if th <= 1e-9 || n == 0 {
        return samples[i];
    }
    if th >= 1.0 - 1e-9 {
        return samples[i + 1];
    }
    samples[i] + (samples[i + 1] - samples[i]) * th
}

fn sampled_on_level(samples: &[f64], n: usize, alpha: f64, weights: Option<&L1Weights>) -> f64 {
    let local;
    let w = match weights {
        Some(w) if w.len() >= n => w,
        _ => {
            local = L1Weights::new(alpha, n);
            &local
        }
    };
    let u_n = samples[n];
    (1..=n).map(|m| w.weight(n, m) * (u_n - samples[n - m])).sum()
}

/// Sampled part at a fractional level `f` in units of `dt`.
fn sampled_general(samples: &[f64], f: f64, alpha: f64) -> f64 {
    let u_e = value_at(samples, f);
    let i = f.floor() as usize;
    let mut acc = 0.0;
    // partial cell [t_i, t_e]
    let s_b = f - i as f64;
    acc += (u_e - samples[i]) * s_b.powf(-alpha) / (1.0 - alpha);
    // full cells [t_{j}, t_{j+1}] for j < i, with σ measured from t_e
    for j in (0..i).rev() {
        let sa = f - (j + 1) as f64;
        let sb = sa + 1.0;
        let (ma, mb) = hat_moments(sa, sb, 1.0 + alpha);
        acc += (u_e - samples[j + 1]) * ma + (u_e - samples[j]) * mb;
    }
    acc
}

/// Outcome of the cutoff-function bound check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutoffBound {
    pub sup_abs: f64,
    pub bound: f64,
    pub lipschitz: f64,
    pub satisfied: bool,
}

/// Largest `|η'|` from central differences with spacing `1e-4`.
pub fn cutoff_lipschitz() -> f64 {
    let d = 1e-4;
    (0..=40_000).map(|i| -2.0 + i as f64 * d).map(|t| ((eta(t + d) - eta(t - d)) / (2.0 * d)).abs()).fold(0.0, f64::max)
}

/// Samples `∂_t^α η` on levels of `(-2, 2)` with spacing `dt`.
pub fn cutoff_derivative_samples(params: &FracParams, dt: f64, cfg: &TimeQuadratureConfig) -> Result<Vec<(f64, f64)>> {
    let n = (4.0 / dt).round() as usize;
    let dt = 4.0 / n as f64;
    let samples: Vec<f64> = (0..=n).map(|j| eta(-2.0 + j as f64 * dt)).collect();
    let past = FunctionDescriptor::cutoff(0.0, 1.0);
    let trace = TimeTrace { t_start: -2.0, dt, samples: &samples, past: &past };
    let w = L1Weights::new(params.alpha(), n);
    (1..n)
        .map(|j| {
            let t = -2.0 + j as f64 * dt;
            marchaud_with(&trace, t, params, cfg, Some(&w)).map(|v| (t, v))
        })
        .collect()
}

/// Compares `sup |∂_t^α η|` over `(-2, 2)` with
/// `C_α/α + C C_α 5^{1-α}/(1-α)`, `C` the Lipschitz constant of `η`.
pub fn check_cutoff_bound(params: &FracParams, cfg: &TimeQuadratureConfig) -> Result<CutoffBound> {
    let vals = cutoff_derivative_samples(params, 1e-3, cfg)?;
    let sup_abs = vals.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max);
    let a = params.alpha();
    let ca = params.c_alpha();
    let lipschitz = cutoff_lipschitz();
    let bound = ca / a + lipschitz * ca * 5f64.powf(1.0 - a) / (1.0 - a);
    Ok(CutoffBound { sup_abs, bound, lipschitz, satisfied: sup_abs <= bound })
}

/// Checks `∂_t^α[η((· - t0)/λ)](t0 + λτ) = λ^{-α} (∂_t^α η)(τ)` on a τ grid.
///
/// Each side is sampled on its own natural lattice (spacing `dt` in τ and
/// `λ dt` in t). The error is relative to the sup of the right side.
pub fn check_scaling_identity(params: &FracParams, lambda_scale: f64, cfg: &TimeQuadratureConfig) -> Result<f64> {
    if !(lambda_scale > 0.0 && lambda_scale.is_finite()) {
        return Err(Error::param("lambda_scale", "must be positive"));
    }
    let dt: f64 = 2e-3;
    let n = (4.0 / dt).round() as usize;
    let t0 = 0.7;
    let alpha = params.alpha();
    let w = L1Weights::new(alpha, n);

    let rhs_samples: Vec<f64> = (0..=n).map(|j| eta(-2.0 + j as f64 * dt)).collect();
    let rhs_past = FunctionDescriptor::cutoff(0.0, 1.0);
    let rhs_trace = TimeTrace { t_start: -2.0, dt, samples: &rhs_samples, past: &rhs_past };

    let lhs_past = FunctionDescriptor::cutoff(t0, lambda_scale);
    let lt0 = t0 - 2.0 * lambda_scale;
    let ldt = lambda_scale * dt;
    let lhs_samples: Vec<f64> = (0..=n).map(|j| lhs_past.eval(lt0 + j as f64 * ldt)).collect();
    let lhs_trace = TimeTrace { t_start: lt0, dt: ldt, samples: &lhs_samples, past: &lhs_past };

    let factor = lambda_scale.powf(-alpha);
    let mut pairs = Vec::new();
    for j in (1..n).step_by(5) {
        let tau = -2.0 + j as f64 * dt;
        let r = factor * marchaud_with(&rhs_trace, tau, params, cfg, Some(&w))?;
        let l = marchaud_with(&lhs_trace, lt0 + j as f64 * ldt, params, cfg, Some(&w))?;
        pairs.push((l, r));
    }
    let sup = pairs.iter().map(|(_, r)| r.abs()).fold(0.0, f64::max);
    Ok(pairs.iter().map(|(l, r)| (l - r).abs()).fold(0.0, f64::max) / sup)
}

/// The one-variable counterexample as a descriptor.
pub fn counterexample_trace(r: f64) -> Result<FunctionDescriptor> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::param("R", "must be positive"));
    }
    Ok(FunctionDescriptor::counterexample(r))
}

/// `∂_t^α u` of the counterexample at the `n` levels `2πj/n`, `j = 1..=n`,
/// sampling `u` on `[0, 2π]` and using the analytic past below 0.
pub fn counterexample_derivative(params: &FracParams, r: f64, n: usize, cfg: &TimeQuadratureConfig) -> Result<Vec<(f64, f64)>> {
    let u = counterexample_trace(r)?;
    let dt = 2.0 * std::f64::consts::PI / n as f64;
    let samples: Vec<f64> = (0..=n).map(|j| u.eval(j as f64 * dt)).collect();
    let trace = TimeTrace { t_start: 0.0, dt, samples: &samples, past: &u };
    let w = L1Weights::new(params.alpha(), n);
    (1..=n).map(|j| marchaud_with(&trace, j as f64 * dt, params, cfg, Some(&w)).map(|v| (j as f64 * dt, v))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descriptor::FnTime;
    use approx::assert_relative_eq;

    fn p(alpha: f64) -> FracParams {
        FracParams::new(alpha, 0.5).unwrap()
    }

    #[test]
    fn constants_vanish() {
        let past = FunctionDescriptor::constant(5.0);
        let samples = vec![5.0; 300];
        let tr = TimeTrace { t_start: -1.0, dt: 0.01, samples: &samples, past: &past };
        for t in [-1.0, -0.5, 0.0, 1.99, 0.123] {
            assert_eq!(marchaud(&tr, t, &p(0.4), &TimeQuadratureConfig::default()).unwrap(), 0.0);
        }
    }

    #[test]
    fn exponential_at_zero() {
        // ∂^α e^t = e^t
        let past = FunctionDescriptor::exponential(1.0, 1.0);
        let dt = 1e-3;
        let n = 20_000;
        let samples: Vec<f64> = (0..=n).map(|j| (-20.0 + j as f64 * dt).exp()).collect();
        let tr = TimeTrace { t_start: -20.0, dt, samples: &samples, past: &past };
        let v = marchaud(&tr, 0.0, &p(0.5), &TimeQuadratureConfig::default()).unwrap();
        assert_relative_eq!(v, 1.0, max_relative = 1e-3);
    }

    #[test]
    fn past_only_matches_closed_form() {
        // evaluating exactly at t_start uses only the analytic past
        let past = FunctionDescriptor::exponential(1.0, 2.0);
        let samples = [1.0];
        let tr = TimeTrace { t_start: 0.0, dt: 0.1, samples: &samples, past: &past };
        let v = marchaud(&tr, 0.0, &p(0.3), &TimeQuadratureConfig::default()).unwrap();
        assert_relative_eq!(v, 2f64.powf(0.3), max_relative = 1e-8);
    }

    #[test]
    fn level_form_matches_trace_form() {
        let past = FunctionDescriptor::exponential(2.0, 0.5);
        let samples: Vec<f64> = (0..=50).map(|j| 2.0 + (j as f64 * 0.02).sin()).collect();
        let tr = TimeTrace { t_start: 0.0, dt: 0.02, samples: &samples, past: &past };
        let cfg = TimeQuadratureConfig::default();
        for n in [1, 7, 50] {
            let t = n as f64 * 0.02;
            let a = marchaud(&tr, t, &p(0.6), &cfg).unwrap();
            let load = past_load(&past, t, 0.0, 0.6, &cfg).unwrap();
            let b = marchaud_level(&samples, n, 0.02, load, &p(0.6), None).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-9);
        }
        assert!(marchaud_level(&samples, 0, 0.02, 0.0, &p(0.6), None).is_err());
    }

    #[test]
    fn off_level_matches_refined_level() {
        let past = FunctionDescriptor::constant(0.0);
        let f = |t: f64| if t > 0.0 { t * t } else { 0.0 };
        let coarse: Vec<f64> = (0..=100).map(|j| f(j as f64 * 0.01)).collect();
        let tr = TimeTrace { t_start: 0.0, dt: 0.01, samples: &coarse, past: &past };
        let cfg = TimeQuadratureConfig::default();
        let off = marchaud(&tr, 0.555, &p(0.5), &cfg).unwrap();
        // exact: Γ(3)/Γ(3-α) t^{2-α}
        let exact = 2.0 / statrs::function::gamma::gamma(2.5) * 0.555f64.powf(1.5);
        assert_relative_eq!(off, exact, max_relative = 2e-3);
    }

    #[test]
    fn rejects_growth_and_nan() {
        let past = FunctionDescriptor::new(crate::descriptor::Family::Linear, vec![0.0, 1.0]).unwrap();
        let samples = [0.0, 0.1];
        let tr = TimeTrace { t_start: 0.0, dt: 0.1, samples: &samples, past: &past };
        assert!(matches!(marchaud(&tr, 0.1, &p(0.5), &TimeQuadratureConfig::default()), Err(Error::Divergent(_))));
        let bad = [0.0, f64::NAN];
        let c = FunctionDescriptor::constant(0.0);
        let tr = TimeTrace { t_start: 0.0, dt: 0.1, samples: &bad, past: &c };
        assert!(matches!(marchaud(&tr, 0.1, &p(0.5), &TimeQuadratureConfig::default()), Err(Error::NonFinite { index: 1 })));
    }

    #[test]
    fn analytic_mode_rejects_bounded_past() {
        let past = FunctionDescriptor::sine(1.0, 1.0, 0.0);
        let samples = [0.0, 0.1];
        let tr = TimeTrace { t_start: 0.0, dt: 0.1, samples: &samples, past: &past };
        let cfg = TimeQuadratureConfig { tail_mode: TailMode::AnalyticConstant, ..Default::default() };
        assert!(matches!(marchaud(&tr, 0.1, &p(0.5), &cfg), Err(Error::Unsupported(_))));
    }

    #[test]
    fn nondecreasing_is_nonnegative() {
        let past = FnTime { f: |t: f64| t.atan(), past: None };
        let dt = 0.01;
        let samples: Vec<f64> = (0..=400).map(|j| (-2.0 + j as f64 * dt).atan()).collect();
        let tr = TimeTrace { t_start: -2.0, dt, samples: &samples, past: &past };
        for j in (0..=400).step_by(13) {
            let v = marchaud(&tr, -2.0 + j as f64 * dt, &p(0.6), &TimeQuadratureConfig::default()).unwrap();
            assert!(v >= -1e-10, "{v}");
        }
    }

    #[test]
    fn cutoff_outside_support_is_zero() {
        let past = FunctionDescriptor::cutoff(0.0, 1.0);
        let samples = [0.0];
        let tr = TimeTrace { t_start: -3.0, dt: 0.01, samples: &samples, past: &past };
        assert_eq!(marchaud(&tr, -3.0, &p(0.5), &TimeQuadratureConfig::default()).unwrap(), 0.0);
        assert_eq!(marchaud(&tr, -4.0, &p(0.5), &TimeQuadratureConfig::default()).unwrap(), 0.0);
    }

    #[test]
    fn weights_positive_and_telescoping() {
        for k in 1..10 {
            let a = k as f64 / 10.0;
            let w = L1Weights::new(a, 10_000);
            let n = 10_000;
            let mut sum = 0.0;
            for m in 1..=n {
                let c = w.weight(n, m);
                assert!(c > 0.0);
                sum += c;
            }
            sum += (n as f64).powf(-a) / a;
            assert_relative_eq!(sum, w.diagonal(), max_relative = 1e-9);
        }
    }

    #[test]
    fn counterexample_fixture_values() {
        let u = counterexample_trace(100.0).unwrap();
        assert_eq!(u.eval(std::f64::consts::FRAC_PI_2), 1.0);
        assert_eq!(u.eval(-105.0), -100.0);
        assert!(u.eval(1.5 * std::f64::consts::PI) < 0.0);
        assert!(counterexample_trace(0.0).is_err());
    }

    #[test]
    fn lipschitz_estimate_is_stable() {
        let c = cutoff_lipschitz();
        assert!(c > 1.0 && c < 3.0, "{c}");
    }
}
