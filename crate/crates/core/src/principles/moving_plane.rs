use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::descriptor::SpaceTimeDescriptor;
use crate::error::{Error, Result};
use crate::field::{antisymmetric_difference, Extension, Exterior, HistoryField};
use crate::grid::{DomainKind, SpaceGrid};
use crate::params::FracParams;
use crate::report::{Conclusion, ExperimentReport, Verdict};
use crate::solver::{run_ivp, Problem, ReactionSpec, SolveConfig, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanTolerance {
    /// A plane fails when `min w_λ < -w_tol`.
    pub w_tol: f64,
    /// Forward differences must exceed this for strict monotonicity.
    pub fd_tol: f64,
    /// Fraction of the stored levels forming the late window.
    pub window_fraction: f64,
    /// Monotonicity is checked for `x1 <` this; defaults to half the grid.
    pub monotone_limit: Option<f64>,
}

impl Default for ScanTolerance {
    fn default() -> Self {
        ScanTolerance { w_tol: 1e-8, fd_tol: 1e-8, window_fraction: 0.1, monotone_limit: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanRow {
    pub lambda: f64,
    pub min_w: f64,
    pub argmin_x: f64,
    pub argmin_t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MovingPlaneScan {
    pub rows: Vec<ScanRow>,
    /// First λ whose minimum undershoots; `None` means no critical plane.
    pub lambda0: Option<f64>,
    /// `lambda0` refined by bisection against its predecessor.
    pub lambda0_refined: Option<f64>,
    pub monotone: bool,
    pub min_forward_difference: f64,
    /// Where the profile first stops increasing on the last level.
    pub first_nonincrease_x: Option<f64>,
    pub window_start_level: usize,
    pub max_antisymmetry_residual: f64,
}

/// Lattice-compatible planes `λ = k h / 2` in `(x_min, x_max)`, every `stride` half-cells.
pub fn lattice_lambdas(grid: &SpaceGrid, from: f64, to: f64, stride: usize) -> Vec<f64> {
    let ax = grid.axis(0);
    let half = 0.5 * ax.h();
    let k0 = ((from.max(ax.x_min) - ax.x_min) / half).ceil() as usize;
    let k1 = ((to.min(ax.x_max) - ax.x_min) / half).floor() as usize;
    (k0..=k1).step_by(stride.max(1)).map(|k| ax.x_min + k as f64 * half).filter(|&l| l > ax.x_min && l < ax.x_max).collect()
}

fn min_w(field: &HistoryField, lambda: f64) -> Result<(ScanRow, f64)> {
    let w = antisymmetric_difference(field, lambda)?;
    let grid = field.grid();
    let mut row = ScanRow { lambda, min_w: f64::INFINITY, argmin_x: f64::NAN, argmin_t: f64::NAN };
    for (j, lv) in w.values.iter().enumerate() {
        for (m, &v) in lv.iter().enumerate() {
            if grid.is_interior(w.nodes[m]) && v < row.min_w {
                row.min_w = v;
                row.argmin_x = w.xs[m];
                row.argmin_t = field.time(j);
            }
        }
    }
    Ok((row, w.antisymmetry_residual))
}

/// Scan of `min w_λ` over the late window for each plane.
pub fn moving_plane_scan(traj: &HistoryField, lambdas: &[f64], tol: &ScanTolerance) -> Result<MovingPlaneScan> {
    if !(tol.window_fraction > 0.0 && tol.window_fraction <= 1.0) {
        return Err(Error::param("window_fraction", "must lie in (0, 1]"));
    }
    let grid = traj.grid();
    for &l in lambdas {
        if !grid.reflection_compatible(l) {
            return Err(Error::IncompatibleLambda { lambda: l, h: grid.h() });
        }
    }
    let n = traj.n_levels();
    let start = n - ((n as f64 * tol.window_fraction).ceil() as usize).clamp(1, n);
    let window = HistoryField::from_levels(
        grid.clone(),
        traj.time(start),
        traj.dt(),
        traj.levels()[start..].to_vec(),
        traj.prehistory().clone(),
        traj.exterior().clone(),
    )?;
    let mut sorted = lambdas.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let results = sorted.par_iter().map(|&l| min_w(&window, l)).collect::<Result<Vec<_>>>()?;
    let max_antisymmetry_residual = results.iter().map(|r| r.1).fold(0.0, f64::max);
    let rows: Vec<ScanRow> = results.into_iter().map(|r| r.0).collect();
    let fail = rows.iter().position(|r| r.min_w < -tol.w_tol);
    let lambda0 = fail.map(|i| rows[i].lambda);
    let lambda0_refined = match fail {
        Some(i) if i > 0 => {
            let (mut lo, mut hi) = (rows[i - 1].lambda, rows[i].lambda);
            while hi - lo > 1e-3 {
                let mid = 0.5 * (lo + hi);
                if min_w(&window, mid)?.0.min_w < -tol.w_tol {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            Some(hi)
        }
        Some(i) => Some(rows[i].lambda),
        None => None,
    };

    let ax = grid.axis(0);
    let limit = tol.monotone_limit.unwrap_or(0.5 * (ax.x_min + ax.x_max));
    let pairs: Vec<usize> =
        (0..grid.len() - 1).filter(|&k| grid.is_interior(k) && grid.is_interior(k + 1) && grid.x(k + 1) < limit).collect();
    let mut min_fd = f64::INFINITY;
    for lv in window.levels() {
        for &k in &pairs {
            min_fd = min_fd.min(lv[k + 1] - lv[k]);
        }
    }
    let last = window.last();
    let first_nonincrease_x = pairs.iter().find(|&&k| last[k + 1] - last[k] <= tol.fd_tol).map(|&k| grid.x(k));
    Ok(MovingPlaneScan {
        rows,
        lambda0,
        lambda0_refined,
        monotone: lambda0.is_none() && min_fd > tol.fd_tol,
        min_forward_difference: min_fd,
        first_nonincrease_x,
        window_start_level: start,
        max_antisymmetry_residual,
    })
}

/// `f(u) = 1 - u` on the truncated half line `(0, L)` with zero data on
/// the left, a frozen far field on the right and zero prehistory.
pub fn moving_plane_problem(params: FracParams, length: f64, nx: usize, dt: f64, max_steps: usize) -> Result<Problem> {
    let grid = SpaceGrid::line(0.0, length, nx + 1, DomainKind::HalfSpaceTruncation { length })?;
    let mut solve = SolveConfig::new(dt, max_steps);
    solve.steady_tol = Some(1e-6);
    Ok(Problem {
        frac_params: params,
        grid,
        t_start: 0.0,
        prehistory: SpaceTimeDescriptor::zero(),
        exterior: Exterior { data: SpaceTimeDescriptor::zero(), left: Extension::Data, right: Extension::Freeze },
        reaction: ReactionSpec::logistic_like(1.0),
        solve,
    })
}

/// Solve, then scan planes up to `lambda_max` (default half the domain).
pub fn moving_plane_experiment(
    problem: &Problem,
    lambda_max: Option<f64>,
    tol: &ScanTolerance,
) -> Result<(Trajectory, MovingPlaneScan, ExperimentReport)> {
    let tr = run_ivp(problem)?;
    let grid = tr.field.grid();
    let ax = grid.axis(0);
    let top = lambda_max.unwrap_or(0.5 * (ax.x_min + ax.x_max));
    if !(top > ax.x_min && top < ax.x_max) {
        return Err(Error::param("lambda_max", "must lie inside the grid"));
    }
    let lambdas = lattice_lambdas(grid, ax.x_min, top, 2);
    let scan = moving_plane_scan(&tr.field, &lambdas, tol)?;
    let f = &problem.reaction;
    let mut report = ExperimentReport::new("moving_plane", tol.w_tol);
    report.hypothesis("f(0) >= 0", f.f(0.0), f.f0_nonnegative());
    report.hypothesis("f'(0) <= 0", f.f_prime(0.0), f.f_prime0_nonpositive());
    report.hypothesis("f' bounded above", f.sup_f_prime(), f.f_prime_bounded_above());
    let late_min = tr.field.levels()[scan.window_start_level..]
        .iter()
        .flat_map(|lv| (0..grid.len()).filter(|&k| grid.is_interior(k)).map(move |k| lv[k]))
        .fold(f64::INFINITY, f64::min);
    report.hypothesis("u > 0 in the domain over the late window", late_min, late_min > 0.0);
    let steady = tr.diagnostics.last().map_or(f64::NAN, |d| d.increment);
    report.hypothesis("run reached steadiness", steady, tr.steady);
    report.metric("final_time", tr.field.t_end());
    report.metric("final_increment", steady);
    report.metric("min_forward_difference", scan.min_forward_difference);
    report.metric("lambda0", scan.lambda0.unwrap_or(f64::INFINITY));
    report.metric("min_w", scan.rows.iter().map(|r| r.min_w).fold(f64::INFINITY, f64::min));
    let verdict = if !report.hypotheses_hold() {
        Verdict::Inconclusive
    } else if scan.monotone {
        Verdict::Holds
    } else {
        Verdict::Violated
    };
    report.conclusion = Conclusion {
        description: "u strictly increasing in x1 away from the truncation".into(),
        extremal_value: scan.min_forward_difference,
        verdict,
    };
    Ok((tr, scan, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(f: impl Fn(f64) -> f64) -> HistoryField {
        let grid = SpaceGrid::line(0.0, 20.0, 201, DomainKind::HalfSpaceTruncation { length: 20.0 }).unwrap();
        let lv: Vec<f64> = grid.xs().into_iter().map(f).collect();
        let ext = Exterior { data: SpaceTimeDescriptor::zero(), left: Extension::Data, right: Extension::Freeze };
        HistoryField::from_levels(grid, 0.0, 1.0, vec![lv; 10], SpaceTimeDescriptor::zero(), ext).unwrap()
    }

    #[test]
    fn arctan_is_monotone() {
        let f = synthetic(|x| x.atan());
        let l = lattice_lambdas(f.grid(), 0.0, 10.0, 1);
        let scan = moving_plane_scan(&f, &l, &Default::default()).unwrap();
        assert!(scan.monotone);
        assert!(scan.lambda0.is_none());
        assert!(scan.rows.iter().all(|r| r.min_w >= 0.0));
        assert_eq!(scan.max_antisymmetry_residual, 0.0);
    }

    #[test]
    fn planted_dip_is_found() {
        let f = synthetic(|x| x.atan() - 0.3 * (-((x - 5.0) / 0.5).powi(2)).exp());
        let l = lattice_lambdas(f.grid(), 0.0, 10.0, 1);
        let scan = moving_plane_scan(&f, &l, &Default::default()).unwrap();
        assert!(!scan.monotone);
        let l0 = scan.lambda0.unwrap();
        assert!(l0 > 3.0 && l0 < 5.5, "{l0}");
        let x = scan.first_nonincrease_x.unwrap();
        assert!(x > 3.0 && x < 5.5, "{x}");
    }

    #[test]
    fn incompatible_lambda() {
        let f = synthetic(|x| x);
        assert!(moving_plane_scan(&f, &[1.03], &Default::default()).is_err());
    }

    #[test]
    fn lattice_lambdas_are_compatible() {
        let f = synthetic(|x| x);
        for l in lattice_lambdas(f.grid(), 0.0, 10.0, 3) {
            assert!(f.grid().reflection_compatible(l));
        }
    }
}
