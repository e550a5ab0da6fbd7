use serde::{Deserialize, Serialize};

use super::{far_offsets, operator_values, past_times, window_levels, Evaluators, PrincipleTolerance};
use crate::descriptor::{eta, FunctionDescriptor, SpaceTimeDescriptor};
use crate::error::{Error, Result};
use crate::field::{Exterior, HistoryField};
use crate::frac_space::verify_ball_constancy;
use crate::frac_time::check_cutoff_bound;
use crate::grid::{DomainKind, SpaceGrid};
use crate::params::FracParams;
use crate::quad::integrate;
use crate::report::ExperimentReport;
use crate::solver::{run_ivp, Problem, ReactionSpec, SolveConfig};

/// One-dimensional averaging-effect instance: `u >= C0` on `D = [a, b]`
/// spreads positivity into the ball `B_r(x0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AveragingSetup {
    pub params: FracParams,
    pub d: [f64; 2],
    pub x0: f64,
    pub r: f64,
    pub c0: f64,
    /// Grid cells per radius.
    #[serde(default = "default_cells")]
    pub cells_per_r: usize,
    /// Time steps across the half window `(t0 - ρ, t0]`.
    #[serde(default = "default_steps")]
    pub steps: usize,
}

fn default_cells() -> usize {
    50
}
fn default_steps() -> usize {
    40
}

impl AveragingSetup {
    pub fn new(params: FracParams, d: [f64; 2], x0: f64, r: f64, c0: f64) -> Self {
        AveragingSetup { params, d, x0, r, c0, cells_per_r: default_cells(), steps: default_steps() }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.d[0] < self.d[1]) || self.d.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("d", "need a < b"));
        }
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(Error::param("r", "must be positive"));
        }
        if !(self.c0 >= 0.0 && self.c0.is_finite()) {
            return Err(Error::param("c0", "must be >= 0"));
        }
        if self.cells_per_r < 4 || self.steps < 2 {
            return Err(Error::param("cells_per_r", "resolution too coarse"));
        }
        Ok(())
    }

    /// Time scale `ρ = r^{2s/α}` of the cylinder.
    pub fn rho(&self) -> f64 {
        self.r.powf(2.0 * self.params.s() / self.params.alpha())
    }

    fn dist(&self) -> f64 {
        if self.x0 < self.d[0] {
            self.d[0] - self.x0
        } else if self.x0 > self.d[1] {
            self.x0 - self.d[1]
        } else {
            0.0
        }
    }

    fn indicator(&self, a: f64, b: f64, value: f64) -> Result<FunctionDescriptor> {
        let w = 0.05 * (b - a);
        FunctionDescriptor::tabulated(&[(a - w, 0.0), (a, value), (b, value), (b + w, 0.0)])
    }
}

/// `∫_a^b |x - y|^{-1-2s} dy` for `x` outside `[a, b]`.
pub fn kernel_integral(x: f64, d: [f64; 2], s: f64) -> Result<f64> {
    if x >= d[0] && x <= d[1] {
        return Err(Error::Geometry("x lies in D".into()));
    }
    integrate(&|y: f64| (x - y).abs().powf(-1.0 - 2.0 * s), d[0], d[1], 1e-14, 1e-11)
}

/// `∫_a^b [|x - y|^{-1-2s} - |x - y^λ|^{-1-2s}] dy`, nonnegative when
/// `x` and `D` lie left of `λ`.
pub fn kernel_difference_integral(x: f64, d: [f64; 2], lambda: f64, s: f64) -> Result<f64> {
    if x >= d[0] && x <= d[1] {
        return Err(Error::Geometry("x lies in D".into()));
    }
    let p = -1.0 - 2.0 * s;
    integrate(&|y: f64| (x - y).abs().powf(p) - (x - (2.0 * lambda - y)).abs().powf(p), d[0], d[1], 1e-14, 1e-11)
}

/// Constants of the sub-solution `δ φ η`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AveragingConstants {
    pub c2: f64,
    pub c: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub ball_value: f64,
    pub sup_eta: f64,
}

fn constants(setup: &AveragingSetup, lambda: Option<f64>) -> Result<AveragingConstants> {
    let p = &setup.params;
    let s = p.s();
    let cns = p.c_ns(1);
    let probes: Vec<f64> = (0..=40).map(|k| setup.x0 - setup.r + setup.r * k as f64 / 20.0).collect();
    let mut kmin = f64::INFINITY;
    for &x in &probes {
        let k = match lambda {
            None => kernel_integral(x, setup.d, s)?,
            Some(l) => kernel_difference_integral(x, setup.d, l, s)?,
        };
        kmin = kmin.min(k);
    }
    let c2 = cns * setup.c0 * kmin;
    let ball = verify_ball_constancy(1.0, p, &Default::default())?;
    let ball_value = ball.mean * (1.0 + ball.rel_spread);
    let sup_eta = check_cutoff_bound(p, &Default::default())?.sup_abs;
    let r2s = setup.r.powf(2.0 * s);
    let mut c = ball_value + 2f64.powf(p.alpha()) * sup_eta;
    if let Some(l) = lambda {
        // the mirrored bump pushes the operator up inside the ball
        let xl = 2.0 * l - setup.x0;
        let mut m: f64 = 0.0;
        for &x in &probes {
            m = m.max(kernel_integral(x, [xl - setup.r, xl + setup.r], s)?);
        }
        c += r2s * cns * m;
    }
    Ok(AveragingConstants { c2, c, delta: c2 * r2s / (2.0 * c), epsilon: 0.5 * c2, ball_value, sup_eta })
}

/// `(dist(x0, D), C1)` with `D` translated to each distance to the right
/// of `x0`. `C1 = δ` from the measured kernel integral.
pub fn averaging_distance_sweep(setup: &AveragingSetup, distances: &[f64]) -> Result<Vec<(f64, f64)>> {
    setup.validate()?;
    let width = setup.d[1] - setup.d[0];
    distances
        .iter()
        .map(|&dist| {
            if !(dist > setup.r) {
                return Err(Error::Geometry(format!("distance {dist} does not clear the ball")));
            }
            let mut s = setup.clone();
            s.d = [setup.x0 + dist, setup.x0 + dist + width];
            Ok((dist, constants(&s, None)?.delta))
        })
        .collect()
}

fn run(setup: &AveragingSetup, lambda: Option<f64>) -> Result<(Problem, HistoryField)> {
    let h = setup.r / setup.cells_per_r as f64;
    let margin = (setup.cells_per_r as f64 * 0.2).ceil();
    let x_min = setup.x0 - (setup.cells_per_r as f64 + margin) * h;
    let (x_max, n, domain, data) = match lambda {
        None => {
            let n = 2 * (setup.cells_per_r + margin as usize) + 1;
            let data = SpaceTimeDescriptor::stationary(setup.indicator(setup.d[0], setup.d[1], setup.c0)?);
            (setup.x0 + (setup.cells_per_r as f64 + margin) * h, n, DomainKind::Ball { center: vec![setup.x0], radius: setup.r }, data)
        }
        Some(l) => {
            let half = (l - x_min) / h;
            if (2.0 * half - (2.0 * half).round()).abs() > 1e-9 {
                return Err(Error::IncompatibleLambda { lambda: l, h });
            }
            let cells = (2.0 * half).round() as usize;
            let (ra, rb) = (2.0 * l - setup.d[1], 2.0 * l - setup.d[0]);
            let data = SpaceTimeDescriptor::stationary(setup.indicator(setup.d[0], setup.d[1], setup.c0)?)
                .plus(SpaceTimeDescriptor::stationary(setup.indicator(ra, rb, -setup.c0)?));
            (2.0 * l - x_min, cells + 1, DomainKind::MirroredBall { center: vec![setup.x0], radius: setup.r, lambda: l }, data)
        }
    };
    let grid = SpaceGrid::line(x_min, x_max, n, domain)?;
    let rho = setup.rho();
    let problem = Problem {
        frac_params: setup.params,
        grid,
        t_start: 0.0,
        prehistory: SpaceTimeDescriptor::zero(),
        exterior: Exterior::data(data),
        reaction: ReactionSpec::zero(),
        solve: SolveConfig::new(rho / setup.steps as f64, setup.steps),
    };
    let tr = run_ivp(&problem)?;
    Ok((problem, tr.field))
}

fn experiment(setup: &AveragingSetup, lambda: Option<f64>, tol: &PrincipleTolerance) -> Result<ExperimentReport> {
    setup.validate()?;
    tol.validate()?;
    let (x0, r) = (setup.x0, setup.r);
    let dist = setup.dist();
    let name = if lambda.is_some() { "antisym_averaging_effect" } else { "averaging_effect" };
    let mut report = ExperimentReport::new(name, tol.conclusion_tol);
    if !(dist > r) {
        return Err(Error::Geometry("the ball meets the closure of D".into()));
    }
    if let Some(l) = lambda {
        if !(setup.d[1] < l) {
            return Err(Error::Geometry("D must lie left of the plane".into()));
        }
        if !(x0 + r < l && r <= 0.5 * (l - x0)) {
            return Err(Error::Geometry("need r <= dist(x0, plane) / 2".into()));
        }
    }
    report.hypothesis("ball does not meet D", dist - r, true);

    let k = constants(setup, lambda)?;
    let (problem, field) = run(setup, lambda)?;
    let grid = field.grid();
    let rho = setup.rho();
    let t0 = field.t_end();
    let levels = window_levels(&field, (t0 - rho, t0))?;

    let mut d_min = f64::INFINITY;
    for &j in &levels {
        for q in 0..=20 {
            let x = setup.d[0] + (setup.d[1] - setup.d[0]) * q as f64 / 20.0;
            d_min = d_min.min(problem.exterior.data.eval(x, field.time(j)));
        }
    }
    report.hypothesis("u >= C0 on D over the window", d_min - setup.c0, d_min >= setup.c0 - tol.hypothesis_tol);

    let (nodes, lu) = operator_values(&field, &Evaluators::new(setup.params), &levels)?;
    let ball: Vec<usize> = (0..nodes.len()).filter(|&p| (grid.x(nodes[p]) - x0).abs() < r).collect();
    let op_min = lu.iter().flat_map(|row| ball.iter().map(move |&p| row[p])).fold(f64::INFINITY, f64::min);
    report.hypothesis("operator >= -epsilon in the ball cylinder", op_min + k.epsilon, op_min >= -k.epsilon);

    let side = |x: f64| lambda.is_none_or(|l| x < l);
    let mut out_min = f64::INFINITY;
    for &j in &levels {
        let lv = field.level(j);
        for q in (0..grid.len()).filter(|&q| side(grid.x(q)) && (grid.x(q) - x0).abs() >= r) {
            out_min = out_min.min(lv[q]);
        }
        for d in far_offsets() {
            out_min = out_min.min(problem.exterior.data.eval(grid.axis(0).x_min - d, field.time(j)));
            if lambda.is_none() {
                out_min = out_min.min(problem.exterior.data.eval(grid.axis(0).x_max + d, field.time(j)));
            }
        }
    }
    report.hypothesis("u >= 0 outside the ball", out_min, out_min >= -tol.hypothesis_tol);

    let lv0 = field.level(0);
    let mut past_min = (0..grid.len()).filter(|&q| (grid.x(q) - x0).abs() < r).map(|q| lv0[q]).fold(f64::INFINITY, f64::min);
    for t in past_times(field.t_start()) {
        past_min = past_min.min(field.prehistory().eval(x0, t));
    }
    report.hypothesis("u >= 0 in the ball before the window", past_min, past_min >= -tol.hypothesis_tol);

    if let Some(l) = lambda {
        let mut anti: f64 = 0.0;
        for lv in field.levels() {
            for q in 0..grid.len() {
                if let Some(m) = grid.lattice_index(2.0 * l - grid.x(q)) {
                    anti = anti.max((lv[q] + lv[m]).abs());
                }
            }
        }
        report.hypothesis("w is antisymmetric about the plane", anti, anti <= tol.hypothesis_tol);
    }

    // sub-solution gap u - δ φ η on the ball cylinder
    let s = setup.params.s();
    let phi = FunctionDescriptor::ball_barrier(x0, r, s);
    let mut gap = f64::INFINITY;
    for &j in &levels {
        let e = eta(2.0 * (field.time(j) - t0) / rho);
        let lv = field.level(j);
        for &p in &ball {
            let q = nodes[p];
            gap = gap.min(lv[q] - k.delta * phi.eval(grid.x(q)) * e);
        }
    }
    let centre = grid.lattice_index(x0).ok_or_else(|| Error::Geometry("x0 is not a grid node".into()))?;
    let u_x0 = field.last()[centre];
    gap = gap.min(u_x0 - k.delta);

    report.metric("C2", k.c2);
    report.metric("C", k.c);
    report.metric("delta", k.delta);
    report.metric("C1", k.delta);
    report.metric("epsilon", k.epsilon);
    report.metric("ball_value", k.ball_value);
    report.metric("sup_eta_derivative", k.sup_eta);
    report.metric("dist", dist);
    report.metric("u_x0_t0", u_x0);
    report.metric("min_operator", op_min);
    report.conclude_nonnegative("u - delta phi eta on the ball cylinder", gap);
    Ok(report)
}

/// Plain averaging effect on the ball `B_r(x0)`.
pub fn averaging_effect_experiment(setup: &AveragingSetup, tol: &PrincipleTolerance) -> Result<ExperimentReport> {
    experiment(setup, None, tol)
}

/// Antisymmetric averaging effect about the plane `x = λ`.
pub fn antisym_averaging_experiment(setup: &AveragingSetup, lambda: f64, tol: &PrincipleTolerance) -> Result<ExperimentReport> {
    experiment(setup, Some(lambda), tol)
}
