use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use fracdual::frac_space::{frac_laplacian_profile, verify_ball_constancy, SpaceQuadratureConfig};
use fracdual::frac_time::{
    check_cutoff_bound, check_scaling_identity, counterexample_derivative, counterexample_trace, cutoff_derivative_samples, marchaud_with,
    L1Weights, TimeQuadratureConfig, TimeTrace,
};
use fracdual::principles::{
    antisym_averaging_experiment, averaging_distance_sweep, averaging_effect_experiment, counterexample_experiment, counterexample_sweep,
    moving_plane_experiment, moving_plane_problem, narrow_region_experiment, random_max_principle_suite, NarrowSetup, SuiteSummary,
};
use fracdual::report::Conclusion;
use fracdual::{run_ivp, Error, ExperimentReport, FracParams, FunctionDescriptor, Verdict};

use super::config::{Command, RunConfig};
use super::output::{Output, VerdictEntry};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_INVALID: i32 = 3;
pub const EXIT_MISMATCH: i32 = 4;
pub const EXIT_NUMERICAL: i32 = 5;

/// A library failure tagged with the stage that raised it.
#[derive(Debug)]
pub struct StageError {
    pub stage: &'static str,
    pub error: Error,
}

impl std::fmt::Display for StageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.stage, self.error)
    }
}

trait Stage<T> {
    fn stage(self, stage: &'static str) -> Result<T, StageError>;
}

impl<T> Stage<T> for fracdual::Result<T> {
    fn stage(self, stage: &'static str) -> Result<T, StageError> {
        self.map_err(|error| StageError { stage, error })
    }
}

fn report_path(r: &ExperimentReport) -> String {
    let safe: String =
        r.name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '.' || c == '-' { c } else { '_' }).collect();
    format!("reports/{}.json", safe.trim_end_matches('_'))
}

/// Records a report file and its verdict against the expectations.
fn emit(cfg: &RunConfig, out: &mut Output, r: ExperimentReport) {
    out.json(report_path(&r), "report", &r);
    let base = r.name.split('[').next().unwrap_or(&r.name);
    let expected = cfg.expectations.get(&r.name).copied().unwrap_or_else(|| cfg.expected(base));
    out.verdicts.push(VerdictEntry { name: r.name.clone(), verdict: r.verdict(), expected });
}

fn bound_report(name: String, description: &str, margin: f64, metrics: Vec<(&str, f64)>) -> ExperimentReport {
    let mut r = ExperimentReport::new(name, 0.0);
    for (k, v) in metrics {
        r.metric(k, v);
    }
    r.conclusion = Conclusion {
        description: description.into(),
        extremal_value: margin,
        verdict: if margin > 0.0 { Verdict::Holds } else { Verdict::Violated },
    };
    r
}

fn operators(cfg: &RunConfig, out: &mut Output) -> Result<(), StageError> {
    let o = &cfg.operators;
    let p = cfg.problem.frac_params;
    let tcfg = TimeQuadratureConfig::default();
    let n = ((o.history + 1.0) / o.dt).round() as usize;
    let w = L1Weights::new(p.alpha(), n);
    let mut worst: f64 = 0.0;
    let mut table = String::from("rate,t,value,exact\n");
    for (i, &rate) in o.rates.iter().enumerate() {
        let past = FunctionDescriptor::exponential(1.0, rate);
        let samples: Vec<f64> = (0..=n).map(|j| (rate * (-o.history + j as f64 * o.dt)).exp()).collect();
        let tr = TimeTrace { t_start: -o.history, dt: o.dt, samples: &samples, past: &past };
        let mut rows = Vec::new();
        for k in 0..10 {
            let t = 0.1 * k as f64;
            let v = marchaud_with(&tr, t, &p, &tcfg, Some(&w)).stage("frac_time")?;
            let exact = rate.powf(p.alpha()) * (rate * t).exp();
            worst = worst.max(((v - exact) / exact).abs());
            table.push_str(&format!(
                "{},{},{},{}\n",
                super::output::num(rate),
                super::output::num(t),
                super::output::num(v),
                super::output::num(exact)
            ));
            rows.push((t, v));
        }
        out.series(format!("plot/marchaud_exp_{i}.csv"), ("t", "value"), &rows);
    }
    out.add("marchaud_eigenfunction.csv", "table", table);
    emit(
        cfg,
        out,
        bound_report(
            "marchaud_eigenfunction".into(),
            "tolerance minus largest relative error against rate^alpha e^(rate t)",
            o.marchaud_tol - worst,
            vec![("max_rel_error", worst), ("alpha", p.alpha())],
        ),
    );

    let scfg = SpaceQuadratureConfig::default();
    let mut spread: f64 = 0.0;
    let mut exact_err: f64 = 0.0;
    for (i, &r) in o.radii.iter().enumerate() {
        let b = verify_ball_constancy(r, &p, &scfg).stage("frac_space")?;
        spread = spread.max(b.rel_spread);
        exact_err = exact_err.max((b.mean / b.exact - 1.0).abs());
        let phi = FunctionDescriptor::ball_barrier(0.0, r, p.s());
        let rows = (-4..=4)
            .map(|k| {
                let x = 0.2 * r * k as f64;
                Ok((x, frac_laplacian_profile(&phi, x, 1e-3 * r, &p, &scfg)?))
            })
            .collect::<fracdual::Result<Vec<_>>>()
            .stage("frac_space")?;
        out.series(format!("plot/ball_barrier_{i}.csv"), ("x", "value"), &rows);
    }
    emit(
        cfg,
        out,
        bound_report(
            "ball_barrier".into(),
            "tolerance minus largest spread or deviation from the closed form",
            o.ball_tol - spread.max(exact_err),
            vec![("max_rel_spread", spread), ("max_rel_error_vs_closed_form", exact_err), ("s", p.s())],
        ),
    );

    let zcfg = SpaceQuadratureConfig { z_max: Some(o.z_max), ..Default::default() };
    let u = FunctionDescriptor::sine(1.0, 1.0, 0.0);
    let symbol = 1.0;
    let mut worst: f64 = 0.0;
    let mut rows = Vec::new();
    for &x in &o.probes {
        let v = frac_laplacian_profile(&u, x, 1e-3, &p, &zcfg).stage("frac_space")?;
        worst = worst.max((v / (symbol * x.sin()) - 1.0).abs());
        rows.push((x, v));
    }
    out.series("plot/sine_symbol.csv", ("x", "value"), &rows);
    emit(
        cfg,
        out,
        bound_report(
            "fourier_symbol".into(),
            "tolerance minus largest relative error against sin",
            o.symbol_tol - worst,
            vec![("max_rel_error", worst), ("z_max", o.z_max)],
        ),
    );
    Ok(())
}

fn suite_report(name: &str, s: &SuiteSummary) -> ExperimentReport {
    let mut r = ExperimentReport::new(name, 1e-10);
    r.metric("runs", s.runs as f64);
    r.metric("failures", s.failures.len() as f64);
    r.hypothesis("every run passed its checker", s.failures.len() as f64, s.failures.is_empty());
    r.conclude_nonnegative("smallest interior value over all runs", s.worst_min);
    r
}

fn simulate(cfg: &RunConfig, out: &mut Output) -> Result<(), StageError> {
    if cfg.suite.is_none() || cfg.problem.grid.is_some() {
        let problem = cfg.problem.to_problem().expect("validated");
        let tr = run_ivp(&problem).stage("solver")?;
        out.trajectory("trajectory.csv", &tr.field);
        let grid = tr.field.grid();
        let last: Vec<(f64, f64)> = tr.field.last().iter().enumerate().map(|(k, &u)| (grid.x(k), u)).collect();
        out.series("plot/final_profile.csv", ("x", "u"), &last);
        out.json(
            "trajectory.json",
            "metadata",
            &json!({
                "problem": problem,
                "steady": tr.steady,
                "diagnostics": tr.diagnostics,
            }),
        );
        let mut r = ExperimentReport::new("simulate", 0.0);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for lv in tr.field.levels() {
            for &v in lv {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        r.metric("min", lo);
        r.metric("max", hi);
        r.metric("levels", tr.field.n_levels() as f64);
        r.metric("final_time", tr.field.t_end());
        if let Some(d) = tr.diagnostics.last() {
            r.metric("final_increment", d.increment);
        }
        r.conclusion =
            Conclusion { description: "trajectory is finite".into(), extremal_value: hi.abs().max(lo.abs()), verdict: Verdict::Holds };
        emit(cfg, out, r);
    }
    if let Some(s) = cfg.suite {
        let tol = cfg.tolerances;
        let plain = random_max_principle_suite(cfg.seed, s.runs, false, &tol).stage("principles")?;
        let mirror = random_max_principle_suite(cfg.seed.wrapping_add(1), s.runs, true, &tol).stage("principles")?;
        out.json("suite.json", "table", &json!({ "plain": plain, "antisymmetric": mirror }));
        emit(cfg, out, suite_report("max_principle_suite", &plain));
        emit(cfg, out, suite_report("antisym_max_principle_suite", &mirror));
    }
    Ok(())
}

fn counterexample(cfg: &RunConfig, out: &mut Output) -> Result<(), StageError> {
    let c = &cfg.counterexample;
    let p = cfg.problem.frac_params;
    let tcfg = TimeQuadratureConfig::default();
    let r = counterexample_experiment(&p, c.r, c.n, &tcfg, &cfg.tolerances).stage("principles")?;
    let d = counterexample_derivative(&p, c.r, c.n, &tcfg).stage("frac_time")?;
    out.series("plot/derivative.csv", ("t", "value"), &d);
    let u = counterexample_trace(c.r).stage("frac_time")?;
    let rows: Vec<(f64, f64)> =
        (0..=400).map(|j| -3.0 + j as f64 * (3.0 + 2.0 * std::f64::consts::PI) / 400.0).map(|t| (t, u.eval(t))).collect();
    out.series("plot/trace.csv", ("t", "u"), &rows);
    emit(cfg, out, r);
    if !c.r_sweep.is_empty() {
        let (rows, smallest) = counterexample_sweep(&p, &c.r_sweep, c.n, &tcfg, cfg.tolerances.conclusion_tol).stage("principles")?;
        out.series("plot/r_sweep.csv", ("R", "min_derivative"), &rows);
        out.json("r_sweep.json", "table", &json!({ "rows": rows, "smallest_nonnegative_R": smallest }));
    }
    Ok(())
}

fn averaging(cfg: &RunConfig, out: &mut Output) -> Result<(), StageError> {
    let a = &cfg.averaging;
    let setup = cfg.averaging_setup();
    let r = averaging_effect_experiment(&setup, &cfg.tolerances).stage("principles")?;
    emit(cfg, out, r);
    if !a.distances.is_empty() {
        let sweep = averaging_distance_sweep(&setup, &a.distances).stage("principles")?;
        out.series("plot/c1_vs_distance.csv", ("distance", "C1"), &sweep);
        let worst = sweep.windows(2).map(|w| w[0].1 - w[1].1).fold(f64::INFINITY, f64::min);
        let mut rep = ExperimentReport::new("averaging_distance_sweep", 0.0);
        rep.metric("points", sweep.len() as f64);
        rep.conclude_nonnegative("smallest decrease of C1 between consecutive distances", if sweep.len() < 2 { 0.0 } else { worst });
        emit(cfg, out, rep);
    }
    if let Some(l) = a.lambda {
        let r = antisym_averaging_experiment(&setup, l, &cfg.tolerances).stage("principles")?;
        emit(cfg, out, r);
    }
    Ok(())
}

fn narrow(cfg: &RunConfig, out: &mut Output) -> Result<(), StageError> {
    let n = &cfg.narrow_region;
    let mut setup = NarrowSetup::new(cfg.problem.frac_params, n.lambda, n.c.clone());
    setup.data_amplitude = n.data_amplitude;
    setup.cells_per_l = n.cells_per_l;
    setup.dt = n.dt;
    setup.n_steps = n.n_steps;
    let mut widths = n.widths.clone();
    widths.sort_by(|a, b| b.total_cmp(a));
    let mut table = String::from("l,min_w,verdict\n");
    let mut verdicts = Vec::new();
    for &l in &widths {
        let mut r = narrow_region_experiment(&setup, l, &cfg.tolerances).stage("principles")?;
        r.name = format!("narrow_region[l={l}]");
        table.push_str(&format!(
            "{},{},{}\n",
            super::output::num(l),
            super::output::num(r.conclusion.extremal_value),
            verdict_name(r.verdict())
        ));
        verdicts.push((l, r.verdict()));
        emit(cfg, out, r);
    }
    let mut l_star = None;
    for &(l, v) in verdicts.iter().rev() {
        if v != Verdict::Holds {
            break;
        }
        l_star = Some(l);
    }
    out.add("narrow_sweep.csv", "table", table);
    out.json("narrow_sweep.json", "table", &json!({ "l_star": l_star }));
    Ok(())
}

pub fn verdict_name(v: Verdict) -> String {
    match serde_json::to_value(v) {
        Ok(Value::String(s)) => s,
        _ => format!("{v:?}"),
    }
}

fn moving_plane(cfg: &RunConfig, out: &mut Output) -> Result<(), StageError> {
    let m = &cfg.moving_plane;
    let p = cfg.problem.frac_params;
    let mut lengths = vec![m.length];
    lengths.extend(m.lengths.iter().copied().filter(|&l| l != m.length));
    for (i, &length) in lengths.iter().enumerate() {
        let nx = ((m.nx as f64) * length / m.length).round().max(4.0) as usize;
        let mut problem = moving_plane_problem(p, length, nx, m.dt, m.max_steps).stage("solver")?;
        problem.solve.steady_tol = Some(m.steady_tol);
        let mut tol = m.tolerance;
        if let Some(limit) = tol.monotone_limit {
            tol.monotone_limit = Some(limit.min(0.5 * length));
        }
        let lambda_max = m.lambda_max.filter(|&l| l < length);
        let (tr, scan, mut report) = moving_plane_experiment(&problem, lambda_max, &tol).stage("principles")?;
        let grid = tr.field.grid();
        let last: Vec<(f64, f64)> = tr.field.last().iter().enumerate().map(|(k, &u)| (grid.x(k), u)).collect();
        let tag = if i == 0 { String::new() } else { format!("_L{i}") };
        out.scan(format!("scan{tag}.csv"), &scan.rows);
        out.series(format!("plot/steady_profile{tag}.csv"), ("x", "u"), &last);
        out.json(format!("scan{tag}.json"), "table", &scan);
        if i > 0 {
            report.name = format!("moving_plane[L={length}]");
        }
        report.metric("length", length);
        emit(cfg, out, report);
    }
    Ok(())
}

fn verify_appendix(cfg: &RunConfig, out: &mut Output) -> Result<(), StageError> {
    let a = &cfg.verify_appendix;
    let s = cfg.problem.frac_params.s();
    let tcfg = TimeQuadratureConfig::default();
    let mut bounds = String::from("alpha,sup_abs,bound,lipschitz\n");
    let mut scaling = String::from("alpha,lambda,max_rel_error\n");
    let f = super::output::num;
    for (i, &alpha) in a.alphas.iter().enumerate() {
        let p = FracParams::new(alpha, s).stage("params")?;
        let b = check_cutoff_bound(&p, &tcfg).stage("frac_time")?;
        bounds.push_str(&format!("{},{},{},{}\n", f(alpha), f(b.sup_abs), f(b.bound), f(b.lipschitz)));
        let samples = cutoff_derivative_samples(&p, 2e-3, &tcfg).stage("frac_time")?;
        out.series(format!("plot/cutoff_derivative_{i}.csv"), ("t", "value"), &samples);
        let mut r = bound_report(
            format!("cutoff_bound[alpha={alpha}]"),
            "bound minus sup of the Marchaud derivative of the cutoff",
            b.bound - b.sup_abs,
            vec![("alpha", alpha), ("sup_abs", b.sup_abs), ("bound", b.bound), ("lipschitz", b.lipschitz)],
        );
        if !b.satisfied {
            r.conclusion.verdict = Verdict::Violated;
        }
        emit(cfg, out, r);

        let mut scales = a.scales.clone();
        scales.push(a.r.powf(2.0 * s / alpha));
        let mut worst: f64 = 0.0;
        for &l in &scales {
            let e = check_scaling_identity(&p, l, &tcfg).stage("frac_time")?;
            scaling.push_str(&format!("{},{},{}\n", f(alpha), f(l), f(e)));
            worst = worst.max(e);
        }
        emit(
            cfg,
            out,
            bound_report(
                format!("scaling_identity[alpha={alpha}]"),
                "tolerance minus largest relative error of the rescaling identity",
                a.scaling_tol - worst,
                vec![("alpha", alpha), ("max_rel_error", worst)],
            ),
        );
    }
    out.add("cutoff_bound.csv", "table", bounds);
    out.add("scaling_identity.csv", "table", scaling);
    Ok(())
}

/// Executes an experiment command, filling `out`.
pub fn execute(cfg: &RunConfig, command: Command, out: &mut Output) -> Result<(), StageError> {
    match command {
        Command::Operators => operators(cfg, out),
        Command::Simulate => simulate(cfg, out),
        Command::Counterexample => counterexample(cfg, out),
        Command::Averaging => averaging(cfg, out),
        Command::NarrowRegion => narrow(cfg, out),
        Command::MovingPlane => moving_plane(cfg, out),
        Command::VerifyAppendix => verify_appendix(cfg, out),
        Command::Report => Ok(()),
    }
}

/// Run directories below (and including) `dir` that hold a manifest.
fn run_dirs(dir: &Path) -> Vec<PathBuf> {
    let mut dirs = Vec::new();
    if dir.join("MANIFEST.json").is_file() {
        dirs.push(dir.to_path_buf());
    }
    if let Ok(rd) = std::fs::read_dir(dir) {
        let mut subs: Vec<PathBuf> = rd.filter_map(|e| e.ok()).map(|e| e.path()).filter(|p| p.join("MANIFEST.json").is_file()).collect();
        subs.sort();
        dirs.extend(subs);
    }
    dirs
}

/// Summarizes the manifests under `dir`; returns the summary text and
/// whether every recorded verdict matched its expectation.
pub fn summarize(dir: &Path) -> std::io::Result<(String, Value, bool)> {
    let mut text = String::from("| run | command | complete | report | verdict | expected |\n|---|---|---|---|---|---|\n");
    let mut runs = Vec::new();
    let mut all_ok = true;
    for d in run_dirs(dir) {
        let m: Value = serde_json::from_str(&std::fs::read_to_string(d.join("MANIFEST.json"))?).map_err(std::io::Error::other)?;
        let run = d.strip_prefix(dir).ok().map(|p| p.display().to_string()).filter(|s| !s.is_empty()).unwrap_or_else(|| ".".into());
        let command = m["command"].as_str().unwrap_or("?").to_string();
        let complete = m["complete"].as_bool().unwrap_or(false);
        all_ok &= complete;
        let verdicts = m["verdicts"].as_array().cloned().unwrap_or_default();
        for v in &verdicts {
            let (got, want) = (v["verdict"].as_str().unwrap_or("?"), v["expected"].as_str().unwrap_or("?"));
            all_ok &= got == want;
            text.push_str(&format!("| {run} | {command} | {complete} | {} | {got} | {want} |\n", v["name"].as_str().unwrap_or("?")));
        }
        runs.push(json!({ "run": run, "command": command, "complete": complete, "verdicts": verdicts }));
    }
    Ok((text, json!({ "runs": runs, "all_as_expected": all_ok }), all_ok))
}
