//! Time stepping for `∂_t^α u + (-Δ)^s u = f(u)` on a 1-D grid.
//!
//! Diffusion is implicit and the reaction explicit, so every step solves the
//! same dense system `(a0 I + A) u^{n+1} = rhs`, factored once.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::descriptor::{FunctionDescriptor, SpaceTimeDescriptor};
use crate::error::{Error, Result};
use crate::field::{Extension, Exterior, HistoryField};
use crate::frac_space::{exterior_beyond, frac_laplacian_tails, ExteriorTails, GridKernel, SampledField, SpaceQuadratureConfig};
use crate::frac_time::{marchaud_level, past_load, L1Weights, TimeQuadratureConfig};
use crate::grid::SpaceGrid;
use crate::params::FracParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReactionFamily {
    /// `f(u) = 0`.
    Zero,
    /// `f(u) = a + b u`.
    Affine,
    /// `f(u) = a - u`.
    LogisticLike,
    /// `f(u) = a u - u^3`.
    Cubic,
}

/// Right-hand side `c(x) f(u) + F(x, t)`.
///
/// `space_coefficient` (default 1) and `forcing` (default 0) extend the
/// plain nonlinearity so linear comparison problems and manufactured
/// solutions fit the same solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReactionSpec {
    pub family: ReactionFamily,
    #[serde(default)]
    pub params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space_coefficient: Option<FunctionDescriptor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forcing: Option<SpaceTimeDescriptor>,
}

impl ReactionSpec {
    pub fn zero() -> Self {
        Self::plain(ReactionFamily::Zero, vec![])
    }

    pub fn affine(a: f64, b: f64) -> Self {
        Self::plain(ReactionFamily::Affine, vec![a, b])
    }

    pub fn logistic_like(a: f64) -> Self {
        Self::plain(ReactionFamily::LogisticLike, vec![a])
    }

    pub fn cubic(a: f64) -> Self {
        Self::plain(ReactionFamily::Cubic, vec![a])
    }

    fn plain(family: ReactionFamily, params: Vec<f64>) -> Self {
        ReactionSpec { family, params, space_coefficient: None, forcing: None }
    }

    pub fn with_forcing(mut self, forcing: SpaceTimeDescriptor) -> Self {
        self.forcing = Some(forcing);
        self
    }

    pub fn with_space_coefficient(mut self, c: FunctionDescriptor) -> Self {
        self.space_coefficient = Some(c);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let want = match self.family {
            ReactionFamily::Zero => 0,
            ReactionFamily::Affine => 2,
            ReactionFamily::LogisticLike | ReactionFamily::Cubic => 1,
        };
        if self.params.len() != want {
            return Err(Error::param("params", format!("{:?} expects {want} parameters", self.family)));
        }
        if self.params.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("params", "must be finite"));
        }
        if let Some(c) = &self.space_coefficient {
            c.validate()?;
        }
        if let Some(f) = &self.forcing {
            f.validate()?;
        }
        Ok(())
    }

    /// The nonlinearity `f(u)` alone.
    pub fn f(&self, u: f64) -> f64 {
        let p = &self.params;
        match self.family {
            ReactionFamily::Zero => 0.0,
            ReactionFamily::Affine => p[0] + p[1] * u,
            ReactionFamily::LogisticLike => p[0] - u,
            ReactionFamily::Cubic => p[0] * u - u * u * u,
        }
    }

    pub fn f_prime(&self, u: f64) -> f64 {
        let p = &self.params;
        match self.family {
            ReactionFamily::Zero => 0.0,
            ReactionFamily::Affine => p[1],
            ReactionFamily::LogisticLike => -1.0,
            ReactionFamily::Cubic => p[0] - 3.0 * u * u,
        }
    }

    /// `sup_u f'(u)` of the nonlinearity.
    pub fn sup_f_prime(&self) -> f64 {
        match self.family {
            ReactionFamily::Cubic => self.params[0],
            _ => self.f_prime(0.0),
        }
    }

    pub fn f0_nonnegative(&self) -> bool {
        self.f(0.0) >= 0.0
    }

    pub fn f_prime0_nonpositive(&self) -> bool {
        self.f_prime(0.0) <= 0.0
    }

    pub fn f_prime_bounded_above(&self) -> bool {
        self.sup_f_prime().is_finite()
    }

    fn coefficient(&self, x: f64) -> f64 {
        self.space_coefficient.as_ref().map_or(1.0, |c| c.eval(x))
    }

    /// Full right-hand side at `(x, t)`.
    pub fn eval(&self, x: f64, t: f64, u: f64) -> f64 {
        let forcing = self.forcing.as_ref().map_or(0.0, |f| f.eval(x, t));
        self.coefficient(x) * self.f(u) + forcing
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub dt: f64,
    pub n_steps: usize,
    #[serde(default)]
    pub time_quadrature: TimeQuadratureConfig,
    #[serde(default)]
    pub space_quadrature: SpaceQuadratureConfig,
    #[serde(default = "default_solver_tol")]
    pub linear_solver_tol: f64,
    /// Stop early once the sup-norm increment between levels drops below this.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steady_tol: Option<f64>,
    /// Compute the evaluator residual every this many steps (0 disables).
    #[serde(default)]
    pub residual_every: usize,
}

fn default_solver_tol() -> f64 {
    1e-10
}

impl SolveConfig {
    pub fn new(dt: f64, n_steps: usize) -> Self {
        SolveConfig {
            dt,
            n_steps,
            time_quadrature: TimeQuadratureConfig::default(),
            space_quadrature: SpaceQuadratureConfig::default(),
            linear_solver_tol: default_solver_tol(),
            steady_tol: None,
            residual_every: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("dt", "must be positive"));
        }
        if self.n_steps < 1 {
            return Err(Error::param("n_steps", "must be >= 1"));
        }
        if !(self.linear_solver_tol > 0.0) {
            return Err(Error::param("linear_solver_tol", "must be positive"));
        }
        self.time_quadrature.validate()?;
        self.space_quadrature.validate()
    }
}

/// Discrete `(-Δ)^s` on the interior nodes: `(-Δ)^s u ≈ A u_int + load(t)`.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub interior: Vec<usize>,
    pub matrix: DMatrix<f64>,
    /// Per exterior term `k`: the load for unit time factor.
    term_loads: Vec<DVector<f64>>,
    time_factors: Vec<FunctionDescriptor>,
}

impl OperatorMatrix {
    /// The exterior contribution at time `t`.
    pub fn load(&self, t: f64) -> DVector<f64> {
        let mut out = DVector::zeros(self.interior.len());
        for (l, f) in self.term_loads.iter().zip(&self.time_factors) {
            out.axpy(f.eval(t), l, 1.0);
        }
        out
    }
}

/// Assemble the interior matrix and the exterior load map.
///
/// Columns of exterior nodes on a frozen side fold onto the outermost
/// interior node; data sides and the far field go into the load.
pub fn assemble_operator_matrix(
    grid: &SpaceGrid,
    params: &FracParams,
    cfg: &SpaceQuadratureConfig,
    exterior: &Exterior,
) -> Result<OperatorMatrix> {
    let interior = grid.interior_nodes();
    if interior.len() < 3 {
        return Err(Error::Geometry("need at least 3 interior nodes".into()));
    }
    exterior.data.validate()?;
    let kernel = GridKernel::new(grid, params.s(), cfg)?;
    let n = grid.len();
    let mut pos = vec![usize::MAX; n];
    for (r, &k) in interior.iter().enumerate() {
        pos[k] = r;
    }
    let (first, last) = (interior[0], *interior.last().unwrap());
    let c = params.c_ns(1);
    let m = interior.len();
    let n_terms = exterior.data.terms.len();
    let rows: Vec<(Vec<f64>, Vec<f64>)> = interior
        .par_iter()
        .map(|&i| -> Result<(Vec<f64>, Vec<f64>)> {
            let row = kernel.row(i)?;
            let mut a = vec![0.0; m];
            let mut loads = vec![0.0; n_terms];
            let r = pos[i];
            let x = grid.x(i);
            for &(j, k) in &row.couplings {
                a[r] += k;
                if pos[j] != usize::MAX {
                    a[pos[j]] -= k;
                } else if j < first && exterior.left == Extension::Freeze {
                    a[pos[first]] -= k;
                } else if j > last && exterior.right == Extension::Freeze {
                    a[pos[last]] -= k;
                } else {
                    let xj = grid.x(j);
                    for (t, term) in exterior.data.terms.iter().enumerate() {
                        loads[t] -= k * term.space.eval(xj);
                    }
                }
            }
            for (right, b, ext) in [(false, row.left, exterior.left), (true, row.right, exterior.right)] {
                a[r] += b.weight;
                match ext {
                    Extension::Freeze => a[pos[if right { last } else { first }]] -= b.weight,
                    Extension::Data => {
                        for (t, term) in exterior.data.terms.iter().enumerate() {
                            let single = SpaceTimeDescriptor::stationary(term.space.clone());
                            loads[t] -= exterior_beyond(&single, 0.0, x, b.distance, right, grid, params.s(), cfg)?;
                        }
                    }
                }
            }
            Ok((a, loads))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut matrix = DMatrix::zeros(m, m);
    let mut term_loads = vec![DVector::zeros(m); n_terms];
    for (r, (a, loads)) in rows.into_iter().enumerate() {
        for (col, v) in a.into_iter().enumerate() {
            matrix[(r, col)] = c * v;
        }
        for (t, v) in loads.into_iter().enumerate() {
            term_loads[t][r] = c * v;
        }
    }
    Ok(OperatorMatrix { interior, matrix, term_loads, time_factors: exterior.data.terms.iter().map(|t| t.time.clone()).collect() })
}

/// Per-step diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepDiagnostics {
    pub level: usize,
    pub t: f64,
    pub min: f64,
    pub max: f64,
    pub increment: f64,
    /// Sup of the evaluator residual at this level when it was computed.
    pub residual: Option<f64>,
}

/// A prepared stepper: the factored system plus cached weights and loads.
pub struct Stepper {
    params: FracParams,
    reaction: ReactionSpec,
    cfg: SolveConfig,
    op: OperatorMatrix,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    system: DMatrix<f64>,
    a0: f64,
    weights: L1Weights,
    xs: Vec<f64>,
    pre_space: Vec<Vec<f64>>,
}

impl Stepper {
    pub fn new(state: &HistoryField, reaction: &ReactionSpec, params: &FracParams, cfg: &SolveConfig) -> Result<Self> {
        cfg.validate()?;
        reaction.validate()?;
        params.validate()?;
        if (state.dt() - cfg.dt).abs() > 1e-12 * cfg.dt {
            return Err(Error::param("dt", "state and config disagree on dt"));
        }
        let op = assemble_operator_matrix(state.grid(), params, &cfg.space_quadrature, state.exterior())?;
        let alpha = params.alpha();
        let weights = L1Weights::new(alpha, state.n_levels() + cfg.n_steps);
        let a0 = params.c_alpha() * cfg.dt.powf(-alpha) * weights.diagonal();
        let m = op.interior.len();
        let system = &op.matrix + DMatrix::identity(m, m) * a0;
        let lu = system.clone().lu();
        let xs: Vec<f64> = op.interior.iter().map(|&k| state.grid().x(k)).collect();
        let pre_space = state.prehistory().terms.iter().map(|t| xs.iter().map(|&x| t.space.eval(x)).collect()).collect();
        Ok(Stepper { params: *params, reaction: reaction.clone(), cfg: *cfg, op, lu, system, a0, weights, xs, pre_space })
    }

    pub fn operator(&self) -> &OperatorMatrix {
        &self.op
    }

    /// Coefficient of `u^{n+1}` from the time discretization.
    pub fn a0(&self) -> f64 {
        self.a0
    }

    /// Append one level to `state`.
    pub fn step(&mut self, state: &mut HistoryField) -> Result<StepDiagnostics> {
        let n1 = state.n_levels();
        let t = state.time(n1);
        let alpha = self.params.alpha();
        let ca = self.params.c_alpha();
        let scale = ca * self.cfg.dt.powf(-alpha);
        self.weights.extend(n1);
        let m = self.op.interior.len();
        let interior = &self.op.interior;

        // history sum Σ c_m u^{n+1-m}
        let mut hist = vec![0.0; m];
        for mm in 1..=n1 {
            let w = scale * self.weights.weight(n1, mm);
            let lv = state.level(n1 - mm);
            for (h, &k) in hist.iter_mut().zip(interior) {
                *h += w * lv[k];
            }
        }
        let mut rhs = DVector::from_vec(hist);
        for (term, space) in state.prehistory().terms.iter().zip(&self.pre_space) {
            let pl = past_load(&term.time, t, state.t_start(), alpha, &self.cfg.time_quadrature)?;
            for r in 0..m {
                rhs[r] += ca * space[r] * pl;
            }
        }
        let prev = state.last();
        for r in 0..m {
            let f = self.reaction.eval(self.xs[r], t - self.cfg.dt, prev[interior[r]]);
            let forcing_t = self.reaction.forcing.as_ref().map_or(0.0, |f| f.eval(self.xs[r], t) - f.eval(self.xs[r], t - self.cfg.dt));
            let val = f + forcing_t;
            if !val.is_finite() {
                return Err(Error::NonFinite { index: interior[r] });
            }
            rhs[r] += val;
        }
        rhs -= self.op.load(t);

        let sol = self.lu.solve(&rhs).ok_or_else(|| Error::LinearSolve("singular system matrix".into()))?;
        if sol.iter().any(|v| !v.is_finite()) {
            return Err(Error::LinearSolve("non-finite solution".into()));
        }
        let res = (&self.system * &sol - &rhs).amax();
        if res > self.cfg.linear_solver_tol * (1.0 + rhs.amax()) {
            return Err(Error::LinearSolve(format!("residual {res:e} above tolerance")));
        }
        let mut next = prev.to_vec();
        for (r, &k) in interior.iter().enumerate() {
            next[k] = sol[r];
        }
        let increment = interior.iter().map(|&k| (next[k] - prev[k]).abs()).fold(0.0, f64::max);
        let (min, max) = sol.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        state.push_level(next)?;
        Ok(StepDiagnostics { level: n1, t, min, max, increment, residual: None })
    }
}

/// One semi-implicit step; returns the state with one more level.
pub fn step(state: &HistoryField, reaction: &ReactionSpec, params: &FracParams, cfg: &SolveConfig) -> Result<HistoryField> {
    let one = SolveConfig { n_steps: 1, ..*cfg };
    let mut stepper = Stepper::new(state, reaction, params, &one)?;
    let mut next = state.clone();
    stepper.step(&mut next)?;
    Ok(next)
}

/// A complete initial-value problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Problem {
    pub frac_params: FracParams,
    pub grid: SpaceGrid,
    #[serde(default)]
    pub t_start: f64,
    pub prehistory: SpaceTimeDescriptor,
    pub exterior: Exterior,
    pub reaction: ReactionSpec,
    pub solve: SolveConfig,
}

impl Problem {
    pub fn validate(&self) -> Result<()> {
        self.frac_params.validate()?;
        self.grid.validate()?;
        self.prehistory.validate()?;
        self.exterior.data.validate()?;
        self.reaction.validate()?;
        self.solve.validate()
    }

    pub fn initial_field(&self) -> Result<HistoryField> {
        HistoryField::new(self.grid.clone(), self.t_start, self.solve.dt, self.prehistory.clone(), self.exterior.clone())
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub field: HistoryField,
    pub diagnostics: Vec<StepDiagnostics>,
    /// Whether the run stopped on the steadiness criterion.
    pub steady: bool,
}

/// March `n_steps` steps (or until steady when `steady_tol` is set).
pub fn run_ivp(problem: &Problem) -> Result<Trajectory> {
    problem.validate()?;
    let mut field = problem.initial_field()?;
    let cfg = &problem.solve;
    let mut stepper = Stepper::new(&field, &problem.reaction, &problem.frac_params, cfg)?;
    let mut diagnostics = Vec::with_capacity(cfg.n_steps);
    let mut steady = false;
    for n in 1..=cfg.n_steps {
        let mut d = stepper.step(&mut field)?;
        if cfg.residual_every > 0 && n % cfg.residual_every == 0 {
            let r = residual_at_levels(&field, &problem.reaction, &problem.frac_params, &cfg.time_quadrature, &cfg.space_quadrature, &[n])?;
            d.residual = Some(r.sup());
        }
        diagnostics.push(d);
        if cfg.steady_tol.is_some_and(|tol| d.increment < tol) {
            steady = true;
            break;
        }
    }
    Ok(Trajectory { field, diagnostics, steady })
}

/// Manufactured problem with exact solution `U = e^t (1 - x^2)_+^s` on
/// `(-1, 1)`: `f(u) = u` plus the forcing `K_s e^t`, where `K_s` is the
/// constant value of `(-Δ)^s (1 - x^2)_+^s` inside the ball.
pub fn manufactured_problem(params: FracParams, nx: usize, dt: f64, n_steps: usize) -> Result<Problem> {
    let s = params.s();
    let k = crate::params::unit_ball_barrier_value(1, s);
    let exp_t = FunctionDescriptor::exponential(1.0, 1.0);
    Ok(Problem {
        frac_params: params,
        grid: SpaceGrid::line(-1.0, 1.0, nx + 1, crate::grid::DomainKind::Interval { a: -1.0, b: 1.0 })?,
        t_start: 0.0,
        prehistory: SpaceTimeDescriptor::separable(FunctionDescriptor::ball_barrier(0.0, 1.0, s), exp_t.clone()),
        exterior: Exterior::zero(),
        reaction: ReactionSpec::affine(0.0, 1.0).with_forcing(SpaceTimeDescriptor::separable(FunctionDescriptor::constant(k), exp_t)),
        solve: SolveConfig::new(dt, n_steps),
    })
}

/// Residual values at interior nodes on selected levels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualField {
    pub levels: Vec<usize>,
    pub nodes: Vec<usize>,
    /// `values[l][m]` at `levels[l]`, `nodes[m]`.
    pub values: Vec<Vec<f64>>,
}

impl ResidualField {
    pub fn sup(&self) -> f64 {
        self.values.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

/// `∂_t^α u + (-Δ)^s u - f(u)` from the standalone evaluators at every
/// interior node of every level after the first.
pub fn residual(
    traj: &HistoryField,
    reaction: &ReactionSpec,
    params: &FracParams,
    tcfg: &TimeQuadratureConfig,
    scfg: &SpaceQuadratureConfig,
) -> Result<ResidualField> {
    if traj.n_levels() < 2 {
        return Err(Error::param("levels", "need at least 2 levels"));
    }
    let levels: Vec<usize> = (1..traj.n_levels()).collect();
    residual_at_levels(traj, reaction, params, tcfg, scfg, &levels)
}

pub fn residual_at_levels(
    traj: &HistoryField,
    reaction: &ReactionSpec,
    params: &FracParams,
    tcfg: &TimeQuadratureConfig,
    scfg: &SpaceQuadratureConfig,
    levels: &[usize],
) -> Result<ResidualField> {
    let grid = traj.grid();
    let nodes = grid.interior_nodes();
    let kernel = GridKernel::new(grid, params.s(), scfg)?;
    let tails = ExteriorTails::new(&kernel, grid, traj.exterior(), &nodes, params.s(), scfg)?;
    let weights = L1Weights::new(params.alpha(), traj.n_levels());
    let traces: Vec<Vec<f64>> = nodes.iter().map(|&k| traj.trace(k)).collect();
    let past = &traj.prehistory().terms;
    let past_space: Vec<Vec<f64>> = nodes.iter().map(|&k| past.iter().map(|p| p.space.eval(grid.x(k))).collect()).collect();
    let values = levels
        .par_iter()
        .map(|&j| -> Result<Vec<f64>> {
            let t = traj.time(j);
            let loads = past.iter().map(|p| past_load(&p.time, t, traj.t_start(), params.alpha(), tcfg)).collect::<Result<Vec<_>>>()?;
            let field = SampledField { grid, values: traj.level(j), exterior: traj.exterior(), t };
            nodes
                .iter()
                .zip(&traces)
                .zip(&past_space)
                .map(|((&k, tr), sp)| {
                    let load: f64 = sp.iter().zip(&loads).map(|(a, b)| a * b).sum();
                    let dt_a = marchaud_level(tr, j, traj.dt(), load, params, Some(&weights))?;
                    let lap = frac_laplacian_tails(&kernel, &field, k, params, &tails)?;
                    Ok(dt_a + lap - reaction.eval(grid.x(k), t, traj.level(j)[k]))
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ResidualField { levels: levels.to_vec(), nodes, values })
}
