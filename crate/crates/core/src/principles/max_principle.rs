use serde::{Deserialize, Serialize};

use super::{far_offsets, operator_values, past_times, window_levels, Evaluators, PrincipleTolerance};
use crate::error::{Error, Result};
use crate::field::{Extension, HistoryField};
use crate::frac_time::{counterexample_derivative, TimeQuadratureConfig};
use crate::params::FracParams;
use crate::report::ExperimentReport;
use crate::solver::ReactionSpec;

fn min_with_arg(it: impl Iterator<Item = (f64, f64, f64)>) -> (f64, f64, f64) {
    it.fold((f64::INFINITY, f64::NAN, f64::NAN), |best, c| if c.0 < best.0 { c } else { best })
}

/// Minimum of the exterior data beyond the grid on `Data` sides.
fn far_exterior_min(traj: &HistoryField, levels: &[usize], left_limit: Option<f64>) -> f64 {
    let ax = traj.grid().axis(0);
    let ext = traj.exterior();
    let stride = (levels.len() / 20).max(1);
    let mut m = f64::INFINITY;
    for &j in levels.iter().step_by(stride) {
        let t = traj.time(j);
        for d in far_offsets() {
            if ext.left == Extension::Data {
                m = m.min(ext.data.eval(ax.x_min - d, t));
            }
            if ext.right == Extension::Data && left_limit.is_none_or(|lim| ax.x_max + d < lim) {
                m = m.min(ext.data.eval(ax.x_max + d, t));
            }
        }
    }
    m
}

/// Check of the bounded-domain maximum principle on `Ω × (t1, t2]`, with
/// `Ω` the interior of the trajectory's grid.
pub fn check_max_principle(traj: &HistoryField, window: (f64, f64), ev: &Evaluators, tol: &PrincipleTolerance) -> Result<ExperimentReport> {
    tol.validate()?;
    let levels = window_levels(traj, window)?;
    let grid = traj.grid();
    let (nodes, lu) = operator_values(traj, ev, &levels)?;
    let mut report = ExperimentReport::new("max_principle", tol.conclusion_tol);

    let op_min = lu.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    report.hypothesis("operator >= 0 in the domain", op_min, op_min >= -tol.hypothesis_tol);

    let mut ext_min = f64::INFINITY;
    for &j in &levels {
        let lv = traj.level(j);
        for k in (0..grid.len()).filter(|&k| !grid.is_interior(k)) {
            ext_min = ext_min.min(lv[k]);
        }
    }
    ext_min = ext_min.min(far_exterior_min(traj, &levels, None));
    report.hypothesis("u >= 0 outside the domain", ext_min, ext_min >= -tol.hypothesis_tol);

    let t1 = window.0;
    let mut past_min = f64::INFINITY;
    for j in (0..traj.n_levels()).filter(|&j| traj.time(j) <= t1 + 1e-9 * traj.dt()) {
        let lv = traj.level(j);
        for &k in &nodes {
            past_min = past_min.min(lv[k]);
        }
    }
    for t in past_times(traj.t_start()) {
        for &k in &nodes {
            past_min = past_min.min(traj.prehistory().eval(grid.x(k), t));
        }
    }
    report.hypothesis("u >= 0 in the domain before t1", past_min, past_min >= -tol.hypothesis_tol);

    let (min_u, x, t) = min_with_arg(levels.iter().flat_map(|&j| nodes.iter().map(move |&k| (traj.level(j)[k], grid.x(k), traj.time(j)))));
    report.metric("min_u", min_u);
    report.metric("argmin_x", x);
    report.metric("argmin_t", t);
    report.metric("min_operator", op_min);
    report.conclude_nonnegative("min of u over the domain and window", min_u);
    Ok(report)
}

/// How the antisymmetric function is obtained from the trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AntisymSource {
    /// `w = u(x^λ) - u(x)`.
    Difference,
    /// The trajectory is itself antisymmetric about `λ`; `w = u`.
    Direct,
}

/// Coefficient form `∂_t^α w + (-Δ)^s w = c w` with `c <= c0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientBound {
    pub reaction: ReactionSpec,
    pub c0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntisymCheck {
    pub lambda: f64,
    pub source: AntisymSource,
    /// When set, checks the coefficient form instead of `operator >= 0`.
    #[serde(default)]
    pub coefficient: Option<CoefficientBound>,
}

/// Check of the maximum principle for antisymmetric functions on
/// `Ω = Σ_λ ∩ interior` over the window.
pub fn check_antisym_max_principle(
    traj: &HistoryField,
    check: &AntisymCheck,
    window: (f64, f64),
    ev: &Evaluators,
    tol: &PrincipleTolerance,
) -> Result<ExperimentReport> {
    tol.validate()?;
    let grid = traj.grid();
    let lambda = check.lambda;
    if !grid.reflection_compatible(lambda) {
        return Err(Error::IncompatibleLambda { lambda, h: grid.h() });
    }
    let ax = grid.axis(0);
    if !(lambda > ax.x_min && lambda < ax.x_max) {
        return Err(Error::OutOfRange(format!("lambda {lambda} outside the grid")));
    }
    let levels = window_levels(traj, window)?;
    let (nodes, lu) = operator_values(traj, ev, &levels)?;
    let mut pos = vec![usize::MAX; grid.len()];
    for (p, &k) in nodes.iter().enumerate() {
        pos[k] = p;
    }
    let mirror = |k: usize| grid.lattice_index(2.0 * lambda - grid.x(k));
    let left: Vec<usize> = (0..grid.len()).filter(|&k| grid.x(k) < lambda - 1e-12 * (1.0 + lambda.abs())).collect();
    let omega: Vec<usize> = left
        .iter()
        .copied()
        .filter(|&k| {
            grid.is_interior(k)
                && match check.source {
                    AntisymSource::Direct => true,
                    AntisymSource::Difference => mirror(k).is_some_and(|m| grid.is_interior(m)),
                }
        })
        .collect();
    if omega.is_empty() {
        return Err(Error::Geometry("no interior nodes on the left of the plane".into()));
    }
    let w_at = |j: usize, k: usize| -> f64 {
        let lv = traj.level(j);
        match check.source {
            AntisymSource::Direct => lv[k],
            AntisymSource::Difference => match mirror(k) {
                Some(m) => lv[m] - lv[k],
                None => traj.value_at(j, 2.0 * lambda - grid.x(k)) - lv[k],
            },
        }
    };
    let lw_at = |li: usize, k: usize| -> f64 {
        match check.source {
            AntisymSource::Direct => lu[li][pos[k]],
            AntisymSource::Difference => lu[li][pos[mirror(k).unwrap()]] - lu[li][pos[k]],
        }
    };
    let name = match check.coefficient {
        Some(_) => "antisym_max_principle_coefficient",
        None => "antisym_max_principle",
    };
    let mut report = ExperimentReport::new(name, tol.conclusion_tol);

    match &check.coefficient {
        None => {
            let mut op_min = f64::INFINITY;
            for li in 0..levels.len() {
                for &k in &omega {
                    op_min = op_min.min(lw_at(li, k));
                }
            }
            report.hypothesis("operator on w >= 0 in the domain", op_min, op_min >= -tol.hypothesis_tol);
        }
        Some(cb) => {
            let mut eq_res: f64 = 0.0;
            let mut c_sup = f64::NEG_INFINITY;
            for (li, &j) in levels.iter().enumerate() {
                let t = traj.time(j);
                let lv = traj.level(j);
                for &k in &omega {
                    let x = grid.x(k);
                    let df = match check.source {
                        AntisymSource::Direct => cb.reaction.eval(x, t, lv[k]),
                        AntisymSource::Difference => {
                            let m = mirror(k).unwrap();
                            cb.reaction.eval(grid.x(m), t, lv[m]) - cb.reaction.eval(x, t, lv[k])
                        }
                    };
                    eq_res = eq_res.max((lw_at(li, k) - df).abs());
                    let w = w_at(j, k);
                    if w.abs() > tol.hypothesis_tol {
                        c_sup = c_sup.max(df / w);
                    }
                }
            }
            report.hypothesis("w solves the coefficient equation", eq_res, eq_res <= tol.hypothesis_tol);
            report.hypothesis("c <= c0", c_sup, c_sup <= cb.c0);
            report.metric("c_sup", c_sup);
            report.metric("c0", cb.c0);
        }
    }

    let mut out_min = f64::INFINITY;
    for &j in &levels {
        for &k in left.iter().filter(|k| !omega.contains(k)) {
            out_min = out_min.min(w_at(j, k));
        }
    }
    if check.source == AntisymSource::Direct && traj.exterior().left == Extension::Data {
        for &j in levels.iter().step_by((levels.len() / 20).max(1)) {
            for d in far_offsets() {
                out_min = out_min.min(traj.exterior().data.eval(ax.x_min - d, traj.time(j)));
            }
        }
    }
    report.hypothesis("w >= 0 on the half space outside the domain", out_min, out_min >= -tol.hypothesis_tol);

    let t1 = window.0;
    let mut past_min = f64::INFINITY;
    for j in (0..traj.n_levels()).filter(|&j| traj.time(j) <= t1 + 1e-9 * traj.dt()) {
        for &k in &omega {
            past_min = past_min.min(w_at(j, k));
        }
    }
    let pre = traj.prehistory();
    for t in past_times(traj.t_start()) {
        for &k in &omega {
            let x = grid.x(k);
            let v = match check.source {
                AntisymSource::Direct => pre.eval(x, t),
                AntisymSource::Difference => pre.eval(2.0 * lambda - x, t) - pre.eval(x, t),
            };
            past_min = past_min.min(v);
        }
    }
    report.hypothesis("w >= 0 in the domain before t1", past_min, past_min >= -tol.hypothesis_tol);

    let antisym = match check.source {
        AntisymSource::Difference => 0.0,
        AntisymSource::Direct => {
            let mut r: f64 = 0.0;
            for lv in traj.levels() {
                for &k in &left {
                    if let Some(m) = mirror(k) {
                        r = r.max((lv[k] + lv[m]).abs());
                    }
                }
            }
            r
        }
    };
    report.hypothesis("w is antisymmetric about the plane", antisym, antisym <= tol.hypothesis_tol);

    let (min_w, x, t) = min_with_arg(levels.iter().flat_map(|&j| omega.iter().map(move |&k| (w_at(j, k), grid.x(k), traj.time(j)))));
    report.metric("lambda", lambda);
    report.metric("min_w", min_w);
    report.metric("argmin_x", x);
    report.metric("argmin_t", t);
    report.conclude_nonnegative("min of w over the domain and window", min_w);
    Ok(report)
}

/// The one-variable counterexample: `∂_t^α u >= 0` on `(0, 2π]` and
/// `u(0) = 0`, yet `u` turns negative because the past is negative.
pub fn counterexample_experiment(
    params: &FracParams,
    r: f64,
    n: usize,
    cfg: &TimeQuadratureConfig,
    tol: &PrincipleTolerance,
) -> Result<ExperimentReport> {
    tol.validate()?;
    if n < 4 {
        return Err(Error::param("n", "must be >= 4"));
    }
    let d = counterexample_derivative(params, r, n, cfg)?;
    let (dmin, dt_arg) = d.iter().fold((f64::INFINITY, f64::NAN), |b, &(t, v)| if v < b.0 { (v, t) } else { b });
    let mut report = ExperimentReport::new("counterexample", tol.conclusion_tol);
    report.hypothesis("time derivative >= 0 on (0, 2pi]", dmin, dmin >= -tol.hypothesis_tol);
    report.hypothesis("u(0) >= 0", 0.0, true);
    report.hypothesis("u >= 0 on the whole past", -r, false);
    let (umin, ut) = d.iter().map(|&(t, _)| (crate::descriptor::counterexample_value(t, r), t)).fold((f64::INFINITY, f64::NAN), |b, c| {
        if c.0 < b.0 {
            c
        } else {
            b
        }
    });
    report.metric("alpha", params.alpha());
    report.metric("R", r);
    report.metric("min_derivative", dmin);
    report.metric("argmin_derivative_t", dt_arg);
    report.metric("min_u", umin);
    report.metric("argmin_u_t", ut);
    report.conclude_nonnegative("min of u over (0, 2pi]", umin);
    Ok(report)
}

/// `(R, min derivative)` rows and the smallest passing `R`.
pub type RSweep = (Vec<(f64, f64)>, Option<f64>);

/// Minimum derivative for each `R`; also the smallest `R` in the list
/// whose minimum is `>= -tol`.
pub fn counterexample_sweep(params: &FracParams, rs: &[f64], n: usize, cfg: &TimeQuadratureConfig, tol: f64) -> Result<RSweep> {
    let rows = rs
        .iter()
        .map(|&r| {
            let d = counterexample_derivative(params, r, n, cfg)?;
            Ok((r, d.iter().map(|p| p.1).fold(f64::INFINITY, f64::min)))
        })
        .collect::<Result<Vec<_>>>()?;
    let smallest = rows.iter().filter(|(_, m)| *m >= -tol).map(|(r, _)| *r).fold(None, |a: Option<f64>, r| Some(a.map_or(r, |a| a.min(r))));
    Ok((rows, smallest))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descriptor::{FunctionDescriptor, SpaceTimeDescriptor};
    use crate::field::Exterior;
    use crate::grid::{DomainKind, SpaceGrid};
    use crate::report::Verdict;
    use crate::solver::{run_ivp, Problem, SolveConfig};

    fn ev() -> Evaluators {
        Evaluators::new(FracParams::new(0.5, 0.5).unwrap())
    }

    #[test]
    fn zero_field_holds() {
        let grid = SpaceGrid::line(-1.0, 1.0, 21, DomainKind::Interval { a: -1.0, b: 1.0 }).unwrap();
        let f = HistoryField::from_levels(grid, 0.0, 0.1, vec![vec![0.0; 21]; 5], SpaceTimeDescriptor::zero(), Exterior::zero()).unwrap();
        let r = check_max_principle(&f, (0.0, 0.4), &ev(), &Default::default()).unwrap();
        assert_eq!(r.verdict(), Verdict::Holds);
        assert!(r.hypotheses.iter().all(|h| h.residual.abs() < 1e-12));
    }

    #[test]
    fn solver_run_holds() {
        let p = Problem {
            frac_params: FracParams::new(0.5, 0.5).unwrap(),
            grid: SpaceGrid::line(-1.0, 1.0, 41, DomainKind::Interval { a: -1.0, b: 1.0 }).unwrap(),
            t_start: 0.0,
            prehistory: SpaceTimeDescriptor::stationary(FunctionDescriptor::gaussian(1.0, 0.0, 0.3)),
            exterior: Exterior::data(SpaceTimeDescriptor::stationary(FunctionDescriptor::gaussian(0.5, 2.0, 0.5))),
            reaction: ReactionSpec::zero(),
            solve: SolveConfig::new(0.05, 20),
        };
        let tr = run_ivp(&p).unwrap();
        let r = check_max_principle(&tr.field, (0.0, 1.0), &ev(), &Default::default()).unwrap();
        assert_eq!(r.verdict(), Verdict::Holds, "{r:?}");
    }

    #[test]
    fn window_outside_is_error() {
        let grid = SpaceGrid::line(-1.0, 1.0, 21, DomainKind::Interval { a: -1.0, b: 1.0 }).unwrap();
        let f = HistoryField::from_levels(grid, 0.0, 0.1, vec![vec![0.0; 21]; 5], SpaceTimeDescriptor::zero(), Exterior::zero()).unwrap();
        assert!(check_max_principle(&f, (0.0, 3.0), &ev(), &Default::default()).is_err());
    }

    fn synthetic(values: impl Fn(f64) -> f64) -> HistoryField {
        let grid = SpaceGrid::line(0.0, 10.0, 101, DomainKind::HalfSpaceTruncation { length: 10.0 }).unwrap();
        let lv: Vec<f64> = grid.xs().into_iter().map(values).collect();
        let ext = Exterior { data: SpaceTimeDescriptor::zero(), left: Extension::Data, right: Extension::Freeze };
        HistoryField::from_levels(grid, 0.0, 0.1, vec![lv; 4], SpaceTimeDescriptor::zero(), ext).unwrap()
    }

    #[test]
    fn increasing_profile_antisym_nonnegative() {
        let f = synthetic(|x| x.atan());
        let chk = AntisymCheck { lambda: 3.0, source: AntisymSource::Difference, coefficient: None };
        let r = check_antisym_max_principle(&f, &chk, (0.0, 0.3), &ev(), &Default::default()).unwrap();
        assert!(r.conclusion.extremal_value >= 0.0);
        assert_ne!(r.verdict(), Verdict::Violated);
    }

    #[test]
    fn even_profile_gives_zero_w() {
        let f = synthetic(|x| (-(x - 4.0) * (x - 4.0)).exp());
        let chk = AntisymCheck { lambda: 4.0, source: AntisymSource::Difference, coefficient: None };
        let r = check_antisym_max_principle(&f, &chk, (0.0, 0.3), &ev(), &Default::default()).unwrap();
        assert!(r.get_metric("min_w").unwrap().abs() < 1e-14);
    }

    #[test]
    fn incompatible_lambda_rejected() {
        let f = synthetic(|x| x);
        let chk = AntisymCheck { lambda: 3.03, source: AntisymSource::Difference, coefficient: None };
        assert!(matches!(
            check_antisym_max_principle(&f, &chk, (0.0, 0.3), &ev(), &Default::default()),
            Err(Error::IncompatibleLambda { .. })
        ));
    }

    #[test]
    fn counterexample_is_inconclusive_not_violated() {
        let p = FracParams::new(0.5, 0.5).unwrap();
        let r = counterexample_experiment(&p, 100.0, 200, &Default::default(), &Default::default()).unwrap();
        assert_eq!(r.verdict(), Verdict::Inconclusive);
        assert_eq!(r.get_metric("min_u"), Some(-1.0));
        let t = r.get_metric("argmin_u_t").unwrap();
        assert!((t - 1.5 * std::f64::consts::PI).abs() < 1e-12);
        assert!(r.get_metric("min_derivative").unwrap() >= -1e-6);
    }
}
