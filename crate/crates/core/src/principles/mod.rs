//! Numerical checkers for the maximum principles, averaging effects and
//! monotonicity results of the dual fractional operator.

mod averaging;
mod max_principle;
mod moving_plane;
mod narrow;
mod suite;

pub use averaging::{
    antisym_averaging_experiment, averaging_distance_sweep, averaging_effect_experiment, kernel_difference_integral, kernel_integral,
    AveragingSetup,
};
pub use max_principle::{
    check_antisym_max_principle, check_max_principle, counterexample_experiment, counterexample_sweep, AntisymCheck, AntisymSource,
    CoefficientBound, RSweep,
};
pub use moving_plane::{
    lattice_lambdas, moving_plane_experiment, moving_plane_problem, moving_plane_scan, MovingPlaneScan, ScanRow, ScanTolerance,
};
pub use narrow::{narrow_region_experiment, narrow_region_sweep, NarrowRow, NarrowSetup, NarrowSweep};
pub use suite::{random_max_principle_suite, SuiteSummary};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::HistoryField;
use crate::frac_space::SpaceQuadratureConfig;
use crate::frac_time::TimeQuadratureConfig;
use crate::params::FracParams;
use crate::solver::{residual_at_levels, ReactionSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PrincipleTolerance {
    /// Slack for `>=` hypotheses evaluated numerically.
    pub hypothesis_tol: f64,
    /// Allowed undershoot below zero in a conclusion.
    pub conclusion_tol: f64,
}

impl Default for PrincipleTolerance {
    fn default() -> Self {
        PrincipleTolerance { hypothesis_tol: 1e-6, conclusion_tol: 1e-8 }
    }
}

impl PrincipleTolerance {
    pub fn validate(&self) -> Result<()> {
        if !(self.hypothesis_tol > 0.0) {
            return Err(Error::param("hypothesis_tol", "must be positive"));
        }
        if !(self.conclusion_tol > 0.0) {
            return Err(Error::param("conclusion_tol", "must be positive"));
        }
        Ok(())
    }
}

/// Parameters and quadrature settings used to re-evaluate the operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluators {
    pub params: FracParams,
    pub time: TimeQuadratureConfig,
    pub space: SpaceQuadratureConfig,
}

impl Evaluators {
    pub fn new(params: FracParams) -> Self {
        Evaluators { params, time: TimeQuadratureConfig::default(), space: SpaceQuadratureConfig::default() }
    }
}

/// Level indices with `t1 < t <= t2`.
pub(crate) fn window_levels(traj: &HistoryField, window: (f64, f64)) -> Result<Vec<usize>> {
    let (t1, t2) = window;
    let eps = 1e-9 * traj.dt();
    if !(t1 < t2) || t1 < traj.t_start() - eps || t2 > traj.t_end() + eps {
        return Err(Error::OutOfRange(format!("window ({t1}, {t2}] not inside the trajectory [{}, {}]", traj.t_start(), traj.t_end())));
    }
    let levels: Vec<usize> = (0..traj.n_levels())
        .filter(|&j| {
            let t = traj.time(j);
            t > t1 + eps && t <= t2 + eps
        })
        .collect();
    if levels.is_empty() {
        return Err(Error::OutOfRange("window contains no levels".into()));
    }
    Ok(levels)
}

/// `∂_t^α u + (-Δ)^s u` at every interior node of the given levels.
pub(crate) fn operator_values(traj: &HistoryField, ev: &Evaluators, levels: &[usize]) -> Result<(Vec<usize>, Vec<Vec<f64>>)> {
    let r = residual_at_levels(traj, &ReactionSpec::zero(), &ev.params, &ev.time, &ev.space, levels)?;
    Ok((r.nodes, r.values))
}

/// Times before `t_start` at which prehistory descriptors are sampled.
pub(crate) fn past_times(t_start: f64) -> Vec<f64> {
    (0..=28).map(|k| t_start - 10f64.powf(k as f64 / 4.0 - 3.0)).collect()
}

/// Distances beyond the grid ends at which exterior data is sampled.
pub(crate) fn far_offsets() -> Vec<f64> {
    (0..=24).map(|k| 10f64.powf(k as f64 / 4.0 - 2.0)).collect()
}
