use serde::{Deserialize, Serialize};

use super::{far_offsets, PrincipleTolerance};
use crate::descriptor::{FunctionDescriptor, SpaceTimeDescriptor};
use crate::error::{Error, Result};
use crate::field::{growth_check, Exterior};
use crate::grid::{DomainKind, SpaceGrid};
use crate::params::FracParams;
use crate::report::{ExperimentReport, Verdict};
use crate::solver::{residual, run_ivp, Problem, ReactionSpec, SolveConfig};

/// Linear antisymmetric problem `∂_t^α w + (-Δ)^s w = c(x) w` on the slab
/// `λ - 2l < x < λ` and its mirror image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NarrowSetup {
    pub params: FracParams,
    pub lambda: f64,
    /// Coefficient `c(x)`, required to be bounded above.
    pub c: FunctionDescriptor,
    #[serde(default = "one")]
    pub data_amplitude: f64,
    /// Grid cells per `l`.
    #[serde(default = "ten")]
    pub cells_per_l: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_steps")]
    pub n_steps: usize,
}

fn one() -> f64 {
    1.0
}
fn ten() -> usize {
    10
}
fn default_dt() -> f64 {
    0.02
}
fn default_steps() -> usize {
    50
}

impl NarrowSetup {
    pub fn new(params: FracParams, lambda: f64, c: FunctionDescriptor) -> Self {
        NarrowSetup { params, lambda, c, data_amplitude: 1.0, cells_per_l: 10, dt: default_dt(), n_steps: default_steps() }
    }

    /// Antisymmetric data: a bump left of the slab minus its mirror image.
    fn data(&self, l: f64) -> SpaceTimeDescriptor {
        let a = self.data_amplitude;
        SpaceTimeDescriptor::stationary(FunctionDescriptor::gaussian(a, self.lambda - 3.0 * l, l))
            .plus(SpaceTimeDescriptor::stationary(FunctionDescriptor::gaussian(-a, self.lambda + 3.0 * l, l)))
    }

    fn problem(&self, l: f64) -> Result<Problem> {
        let n = 8 * self.cells_per_l + 1;
        let grid = SpaceGrid::line(
            self.lambda - 4.0 * l,
            self.lambda + 4.0 * l,
            n,
            DomainKind::Interval { a: self.lambda - 2.0 * l, b: self.lambda + 2.0 * l },
        )?;
        let data = self.data(l);
        let solve = SolveConfig::new(self.dt, self.n_steps);
        Ok(Problem {
            frac_params: self.params,
            grid,
            t_start: 0.0,
            prehistory: data.clone(),
            exterior: Exterior::data(data),
            reaction: ReactionSpec::affine(0.0, 1.0).with_space_coefficient(self.c.clone()),
            solve,
        })
    }
}

/// One narrow-region instance of half-width `l`.
pub fn narrow_region_experiment(setup: &NarrowSetup, l: f64, tol: &PrincipleTolerance) -> Result<ExperimentReport> {
    tol.validate()?;
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::param("l", "must be positive"));
    }
    if setup.data_amplitude < 0.0 {
        return Err(Error::param("data_amplitude", "must be nonnegative"));
    }
    let problem = setup.problem(l)?;
    let tr = run_ivp(&problem)?;
    let f = &tr.field;
    let grid = f.grid();
    let lambda = setup.lambda;
    let mut report = ExperimentReport::new("narrow_region", tol.conclusion_tol);

    let mut c_sup = grid.xs().into_iter().map(|x| setup.c.eval(x)).fold(f64::NEG_INFINITY, f64::max);
    for d in far_offsets() {
        c_sup = c_sup.max(setup.c.eval(lambda - d)).max(setup.c.eval(lambda + d));
    }
    report.hypothesis("c bounded above", c_sup, c_sup.is_finite());

    let left: Vec<usize> = (0..grid.len()).filter(|&k| grid.x(k) < lambda - 1e-12).collect();
    let omega: Vec<usize> = left.iter().copied().filter(|&k| grid.is_interior(k)).collect();
    let mut out_min = f64::INFINITY;
    for lv in f.levels() {
        for &k in left.iter().filter(|&&k| !grid.is_interior(k)) {
            out_min = out_min.min(lv[k]);
        }
    }
    for d in far_offsets() {
        out_min = out_min.min(problem.exterior.data.eval(grid.axis(0).x_min - d, 0.0));
    }
    report.hypothesis("w >= 0 on the half space outside the slab", out_min, out_min >= -tol.hypothesis_tol);

    let mut antisym: f64 = 0.0;
    for lv in f.levels() {
        for &k in &left {
            if let Some(m) = grid.lattice_index(2.0 * lambda - grid.x(k)) {
                antisym = antisym.max((lv[k] + lv[m]).abs());
            }
        }
        if let Some(c) = grid.lattice_index(lambda) {
            antisym = antisym.max(lv[c].abs());
        }
    }
    report.hypothesis("w is antisymmetric about the plane", antisym, antisym <= tol.hypothesis_tol);

    let gamma = setup.params.s();
    let samples: Vec<(Vec<f64>, f64)> = f.levels().iter().flat_map(|lv| left.iter().map(move |&k| (vec![grid.x(k)], lv[k]))).collect();
    let growth = growth_check(&samples, gamma, None)?;
    report.hypothesis("w >= -C(1 + |x|^gamma)", growth.c_fit, growth.satisfied);

    let res = residual(f, &problem.reaction, &problem.frac_params, &problem.solve.time_quadrature, &problem.solve.space_quadrature)?;
    report.metric("equation_residual", res.sup());

    let mut min_w = f64::INFINITY;
    for lv in f.levels() {
        for &k in &omega {
            min_w = min_w.min(lv[k]);
        }
    }
    report.metric("l", l);
    report.metric("c_sup", c_sup);
    report.metric("min_w", min_w);
    report.conclude_nonnegative("min of w over the slab", min_w);
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NarrowRow {
    pub l: f64,
    pub min_w: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NarrowSweep {
    pub rows: Vec<NarrowRow>,
    /// Largest `l` such that every tested width up to it held.
    pub l_star: Option<f64>,
}

/// Runs the experiment for each width; the result is sorted by decreasing `l`.
pub fn narrow_region_sweep(setup: &NarrowSetup, ls: &[f64], tol: &PrincipleTolerance) -> Result<NarrowSweep> {
    let mut ls = ls.to_vec();
    ls.sort_by(|a, b| b.total_cmp(a));
    let rows = ls
        .iter()
        .map(|&l| {
            let r = narrow_region_experiment(setup, l, tol)?;
            Ok(NarrowRow { l, min_w: r.conclusion.extremal_value, verdict: r.verdict() })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut l_star = None;
    for row in rows.iter().rev() {
        if row.verdict != Verdict::Holds {
            break;
        }
        l_star = Some(row.l);
    }
    Ok(NarrowSweep { rows, l_star })
}
