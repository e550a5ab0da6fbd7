use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use fracdual::principles::{PrincipleTolerance, ScanTolerance};
use fracdual::solver::{Problem, ReactionSpec, SolveConfig};
use fracdual::{Error, Exterior, FracParams, FunctionDescriptor, SpaceGrid, SpaceTimeDescriptor, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Operators,
    Simulate,
    Counterexample,
    Averaging,
    NarrowRegion,
    MovingPlane,
    VerifyAppendix,
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Operators => "operators",
            Command::Simulate => "simulate",
            Command::Counterexample => "counterexample",
            Command::Averaging => "averaging",
            Command::NarrowRegion => "narrow-region",
            Command::MovingPlane => "moving-plane",
            Command::VerifyAppendix => "verify-appendix",
            Command::Report => "report",
        }
    }
}

/// Everything a run needs. Sections not used by the command keep their
/// defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub command: Option<Command>,
    #[serde(default)]
    pub problem: ProblemSection,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: PrincipleTolerance,
    /// Relative tolerance used by `--check`.
    #[serde(default = "default_check_tol")]
    pub check_tolerance: f64,
    /// Report name to expected verdict. Unlisted reports must hold, except
    /// `counterexample`, which is expected to be inconclusive.
    #[serde(default)]
    pub expectations: BTreeMap<String, Verdict>,
    #[serde(default)]
    pub operators: OperatorsSection,
    #[serde(default)]
    pub suite: Option<SuiteSection>,
    #[serde(default)]
    pub counterexample: CounterexampleSection,
    #[serde(default)]
    pub averaging: AveragingSection,
    #[serde(default)]
    pub narrow_region: NarrowSection,
    #[serde(default)]
    pub moving_plane: MovingPlaneSection,
    #[serde(default)]
    pub verify_appendix: AppendixSection,
}

fn default_check_tol() -> f64 {
    1e-9
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty config is valid")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    #[serde(default = "default_params")]
    pub frac_params: FracParams,
    #[serde(default)]
    pub grid: Option<SpaceGrid>,
    #[serde(default)]
    pub t_start: f64,
    #[serde(default)]
    pub prehistory: Option<SpaceTimeDescriptor>,
    #[serde(default)]
    pub exterior: Option<Exterior>,
    #[serde(default)]
    pub reaction: Option<ReactionSpec>,
    #[serde(default)]
    pub solve: Option<SolveConfig>,
}

fn default_params() -> FracParams {
    FracParams::new(0.5, 0.5).expect("defaults are valid")
}

impl Default for ProblemSection {
    fn default() -> Self {
        ProblemSection {
            frac_params: default_params(),
            grid: None,
            t_start: 0.0,
            prehistory: None,
            exterior: None,
            reaction: None,
            solve: None,
        }
    }
}

impl ProblemSection {
    /// The full initial value problem; missing data and reaction default to
    /// zero.
    pub fn to_problem(&self) -> Result<Problem, ConfigError> {
        let grid = self.grid.clone().ok_or_else(|| ConfigError::field("problem.grid", "required for simulate"))?;
        let solve = self.solve.ok_or_else(|| ConfigError::field("problem.solve", "required for simulate"))?;
        Ok(Problem {
            frac_params: self.frac_params,
            grid,
            t_start: self.t_start,
            prehistory: self.prehistory.clone().unwrap_or_else(SpaceTimeDescriptor::zero),
            exterior: self.exterior.clone().unwrap_or_else(Exterior::zero),
            reaction: self.reaction.clone().unwrap_or_else(ReactionSpec::zero),
            solve,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OperatorsSection {
    /// Rates of the exponential eigenfunctions of the time operator.
    pub rates: Vec<f64>,
    pub dt: f64,
    pub history: f64,
    /// Ball radii for the barrier constancy check.
    pub radii: Vec<f64>,
    /// Probe points for the sine symbol check.
    pub probes: Vec<f64>,
    pub z_max: f64,
    /// Largest accepted relative errors of the three checks.
    pub marchaud_tol: f64,
    pub ball_tol: f64,
    pub symbol_tol: f64,
}

impl Default for OperatorsSection {
    fn default() -> Self {
        OperatorsSection {
            rates: vec![0.5, 1.0, 2.0],
            dt: 1e-3,
            history: 20.0,
            radii: vec![1.0, 2.0],
            probes: vec![0.3, 0.8, 1.4, 2.0, 2.7],
            z_max: 200.0,
            marchaud_tol: 1e-3,
            ball_tol: 0.02,
            symbol_tol: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuiteSection {
    pub runs: usize,
}

impl Default for SuiteSection {
    fn default() -> Self {
        SuiteSection { runs: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CounterexampleSection {
    #[serde(rename = "R")]
    pub r: f64,
    /// Probe count on `(0, 2π]`.
    pub n: usize,
    /// Optional list of `R` values to sweep.
    #[serde(rename = "R_sweep")]
    pub r_sweep: Vec<f64>,
}

impl Default for CounterexampleSection {
    fn default() -> Self {
        CounterexampleSection { r: 100.0, n: 200, r_sweep: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AveragingSection {
    pub d: [f64; 2],
    pub x0: f64,
    pub r: f64,
    pub c0: f64,
    pub cells_per_r: usize,
    pub steps: usize,
    /// Distances for the `C1` sweep.
    pub distances: Vec<f64>,
    /// Plane of the antisymmetric variant; `null` skips it.
    pub lambda: Option<f64>,
}

impl Default for AveragingSection {
    fn default() -> Self {
        AveragingSection {
            d: [2.0, 4.0],
            x0: 0.0,
            r: 0.5,
            c0: 1.0,
            cells_per_r: 50,
            steps: 40,
            distances: vec![1.0, 2.0, 4.0, 8.0],
            lambda: Some(6.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NarrowSection {
    pub lambda: f64,
    pub c: FunctionDescriptor,
    pub widths: Vec<f64>,
    pub data_amplitude: f64,
    pub cells_per_l: usize,
    pub dt: f64,
    pub n_steps: usize,
}

impl Default for NarrowSection {
    fn default() -> Self {
        NarrowSection {
            lambda: 1.0,
            c: FunctionDescriptor::constant(0.0),
            widths: vec![2.0, 0.5, 0.05],
            data_amplitude: 1.0,
            cells_per_l: 10,
            dt: 0.02,
            n_steps: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MovingPlaneSection {
    pub length: f64,
    pub nx: usize,
    pub dt: f64,
    pub max_steps: usize,
    pub steady_tol: f64,
    pub lambda_max: Option<f64>,
    /// Extra truncation lengths for a sensitivity sweep.
    pub lengths: Vec<f64>,
    pub tolerance: ScanTolerance,
}

impl Default for MovingPlaneSection {
    fn default() -> Self {
        MovingPlaneSection {
            length: 20.0,
            nx: 200,
            dt: 1.0,
            max_steps: 5000,
            steady_tol: 1e-6,
            lambda_max: None,
            lengths: Vec::new(),
            tolerance: ScanTolerance { monotone_limit: Some(10.0), ..Default::default() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AppendixSection {
    pub alphas: Vec<f64>,
    /// Radius entering the scale `r^{2s/α}`.
    pub r: f64,
    pub scales: Vec<f64>,
    pub scaling_tol: f64,
}

impl Default for AppendixSection {
    fn default() -> Self {
        AppendixSection { alphas: vec![0.25, 0.5, 0.75], r: 0.5, scales: vec![0.5, 2.0], scaling_tol: 1e-4 }
    }
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub alpha: Option<f64>,
    pub s: Option<f64>,
    pub r: Option<f64>,
    pub lambda_max: Option<f64>,
    pub l: Option<f64>,
    pub dt: Option<f64>,
    pub nx: Option<usize>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
}

#[derive(Debug)]
pub enum ConfigError {
    Parse(String),
    Invalid { path: String, reason: String },
}

impl ConfigError {
    pub fn field(path: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Invalid { path: path.into(), reason: reason.into() }
    }
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Parse(m) => write!(f, "parse error: {m}"),
            ConfigError::Invalid { path, reason } => write!(f, "invalid config at {path}: {reason}"),
        }
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Parse(format!("{}: {e}", path.display())))?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<RunConfig, ConfigError> {
    serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
}

/// Prefix a library validation error with the config path of the object.
fn at(prefix: &str, r: fracdual::Result<()>) -> Result<(), ConfigError> {
    r.map_err(|e| match e {
        Error::InvalidParameter { field, reason } => ConfigError::field(format!("{prefix}.{field}"), reason),
        other => ConfigError::field(prefix, other.to_string()),
    })
}

fn positive(path: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::field(path, format!("must be positive, got {v}")))
    }
}

fn nonempty<T>(path: &str, v: &[T]) -> Result<(), ConfigError> {
    if v.is_empty() {
        Err(ConfigError::field(path, "must not be empty"))
    } else {
        Ok(())
    }
}

impl RunConfig {
    pub fn apply(&mut self, o: &Overrides) {
        let p = &mut self.problem;
        if o.alpha.is_some() || o.s.is_some() {
            let alpha = o.alpha.unwrap_or(p.frac_params.alpha());
            let s = o.s.unwrap_or(p.frac_params.s());
            p.frac_params = serde_json::from_value(serde_json::json!({ "alpha": alpha, "s": s })).expect("raw params always deserialize");
        }
        if let Some(r) = o.r {
            self.counterexample.r = r;
        }
        if let Some(l) = o.lambda_max {
            self.moving_plane.lambda_max = Some(l);
        }
        if let Some(l) = o.l {
            self.narrow_region.widths = vec![l];
        }
        if let Some(dt) = o.dt {
            if let Some(s) = p.solve.as_mut() {
                s.dt = dt;
            }
            self.narrow_region.dt = dt;
            self.moving_plane.dt = dt;
            self.operators.dt = dt;
        }
        if let Some(nx) = o.nx {
            if let Some(g) = p.grid.as_ref() {
                let ax = *g.axis(0);
                let kind = g.domain_kind().clone();
                if let Ok(ng) = SpaceGrid::line(ax.x_min, ax.x_max, nx + 1, kind) {
                    p.grid = Some(ng);
                }
            }
            self.moving_plane.nx = nx;
        }
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(out) = &o.output {
            self.output_dir = Some(out.clone());
        }
    }

    /// Checks every section the command reads before anything runs.
    pub fn validate(&self, command: Command) -> Result<(), ConfigError> {
        at("problem.frac_params", self.problem.frac_params.validate())?;
        at("tolerances", self.tolerances.validate())?;
        positive("check_tolerance", self.check_tolerance)?;
        let p = &self.problem;
        if let Some(g) = &p.grid {
            at("problem.grid", g.validate())?;
        }
        if let Some(d) = &p.prehistory {
            at("problem.prehistory", d.validate())?;
        }
        if let Some(e) = &p.exterior {
            at("problem.exterior.data", e.data.validate())?;
        }
        if let Some(r) = &p.reaction {
            at("problem.reaction", r.validate())?;
        }
        if let Some(s) = &p.solve {
            at("problem.solve", s.validate())?;
        }
        match command {
            Command::Operators => {
                let o = &self.operators;
                nonempty("operators.rates", &o.rates)?;
                for (i, &r) in o.rates.iter().enumerate() {
                    positive(&format!("operators.rates[{i}]"), r)?;
                }
                positive("operators.dt", o.dt)?;
                positive("operators.history", o.history)?;
                for (i, &r) in o.radii.iter().enumerate() {
                    positive(&format!("operators.radii[{i}]"), r)?;
                }
                positive("operators.z_max", o.z_max)?;
                positive("operators.marchaud_tol", o.marchaud_tol)?;
                positive("operators.ball_tol", o.ball_tol)?;
                positive("operators.symbol_tol", o.symbol_tol)?;
            }
            Command::Simulate => {
                if self.suite.is_none() || p.grid.is_some() {
                    p.to_problem()?;
                }
                if let Some(s) = &self.suite {
                    if s.runs == 0 {
                        return Err(ConfigError::field("suite.runs", "must be >= 1"));
                    }
                }
            }
            Command::Counterexample => {
                let c = &self.counterexample;
                positive("counterexample.R", c.r)?;
                if c.n < 2 {
                    return Err(ConfigError::field("counterexample.n", "must be >= 2"));
                }
                for (i, &r) in c.r_sweep.iter().enumerate() {
                    positive(&format!("counterexample.R_sweep[{i}]"), r)?;
                }
            }
            Command::Averaging => {
                let a = &self.averaging;
                at("averaging", self.averaging_setup().validate())?;
                for (i, &d) in a.distances.iter().enumerate() {
                    if !(d > a.r) {
                        return Err(ConfigError::field(format!("averaging.distances[{i}]"), "must exceed r"));
                    }
                }
            }
            Command::NarrowRegion => {
                let n = &self.narrow_region;
                nonempty("narrow_region.widths", &n.widths)?;
                for (i, &l) in n.widths.iter().enumerate() {
                    positive(&format!("narrow_region.widths[{i}]"), l)?;
                }
                at("narrow_region.c", n.c.validate())?;
                positive("narrow_region.dt", n.dt)?;
                if n.n_steps == 0 {
                    return Err(ConfigError::field("narrow_region.n_steps", "must be >= 1"));
                }
                if n.cells_per_l < 2 {
                    return Err(ConfigError::field("narrow_region.cells_per_l", "must be >= 2"));
                }
                if n.data_amplitude < 0.0 {
                    return Err(ConfigError::field("narrow_region.data_amplitude", "must be nonnegative"));
                }
            }
            Command::MovingPlane => {
                let m = &self.moving_plane;
                positive("moving_plane.length", m.length)?;
                positive("moving_plane.dt", m.dt)?;
                positive("moving_plane.steady_tol", m.steady_tol)?;
                if m.nx < 4 {
                    return Err(ConfigError::field("moving_plane.nx", "must be >= 4"));
                }
                if m.max_steps == 0 {
                    return Err(ConfigError::field("moving_plane.max_steps", "must be >= 1"));
                }
                if let Some(l) = m.lambda_max {
                    if !(l > 0.0 && l < m.length) {
                        return Err(ConfigError::field("moving_plane.lambda_max", "must lie in (0, length)"));
                    }
                }
                for (i, &l) in m.lengths.iter().enumerate() {
                    positive(&format!("moving_plane.lengths[{i}]"), l)?;
                }
                let t = &m.tolerance;
                positive("moving_plane.tolerance.w_tol", t.w_tol)?;
                positive("moving_plane.tolerance.fd_tol", t.fd_tol)?;
                if !(t.window_fraction > 0.0 && t.window_fraction <= 1.0) {
                    return Err(ConfigError::field("moving_plane.tolerance.window_fraction", "must lie in (0, 1]"));
                }
            }
            Command::VerifyAppendix => {
                let a = &self.verify_appendix;
                nonempty("verify_appendix.alphas", &a.alphas)?;
                for (i, &al) in a.alphas.iter().enumerate() {
                    if !(al > 0.0 && al < 1.0) {
                        return Err(ConfigError::field(format!("verify_appendix.alphas[{i}]"), "must lie in (0,1)"));
                    }
                }
                positive("verify_appendix.r", a.r)?;
                for (i, &l) in a.scales.iter().enumerate() {
                    positive(&format!("verify_appendix.scales[{i}]"), l)?;
                }
                positive("verify_appendix.scaling_tol", a.scaling_tol)?;
            }
            Command::Report => {}
        }
        Ok(())
    }

    pub fn averaging_setup(&self) -> fracdual::principles::AveragingSetup {
        let a = &self.averaging;
        let mut s = fracdual::principles::AveragingSetup::new(self.problem.frac_params, a.d, a.x0, a.r, a.c0);
        s.cells_per_r = a.cells_per_r;
        s.steps = a.steps;
        s
    }

    /// Expected verdict for a report name.
    pub fn expected(&self, name: &str) -> Verdict {
        self.expectations.get(name).copied().unwrap_or(if name == "counterexample" { Verdict::Inconclusive } else { Verdict::Holds })
    }
}
