use std::time::{Duration, Instant};

use fracdual::descriptor::SpaceTimeDescriptor;
use fracdual::frac_space::{frac_laplacian_profile, verify_ball_constancy, SpaceQuadratureConfig};
use fracdual::frac_time::{check_cutoff_bound, check_scaling_identity, marchaud_with, L1Weights, TimeQuadratureConfig, TimeTrace};
use fracdual::principles::{
    antisym_averaging_experiment, averaging_distance_sweep, averaging_effect_experiment, counterexample_experiment, lattice_lambdas,
    moving_plane_experiment, moving_plane_problem, moving_plane_scan, random_max_principle_suite, AveragingSetup, ScanTolerance,
};
use fracdual::solver::{manufactured_problem, residual};
use fracdual::{DomainKind, Extension, Exterior, FracParams, FunctionDescriptor, HistoryField, SpaceGrid, Verdict};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(start: Instant, limit: Duration, detail: String) -> Outcome {
    let el = start.elapsed();
    check(el < limit, format!("{detail}, {:.2}s", el.as_secs_f64()))
}

fn marchaud_eigenfunction() -> Outcome {
    let start = Instant::now();
    let cfg = TimeQuadratureConfig::default();
    let dt: f64 = 1e-3;
    let depth = 20.0;
    let n = ((depth + 1.0) / dt).round() as usize;
    let mut worst: f64 = 0.0;
    for alpha in [0.25, 0.5, 0.75] {
        let params = FracParams::new(alpha, 0.5).map_err(|e| e.to_string())?;
        let w = L1Weights::new(alpha, n);
        for lambda in [0.5, 1.0, 2.0] {
            let past = FunctionDescriptor::exponential(1.0, lambda);
            let samples: Vec<f64> = (0..=n).map(|j| (lambda * (-depth + j as f64 * dt)).exp()).collect();
            let tr = TimeTrace { t_start: -depth, dt, samples: &samples, past: &past };
            for p in 0..10 {
                let t = 0.1 * p as f64;
                let v = marchaud_with(&tr, t, &params, &cfg, Some(&w)).map_err(|e| e.to_string())?;
                let exact = lambda.powf(alpha) * (lambda * t).exp();
                worst = worst.max(((v - exact) / exact).abs());
            }
        }
    }
    if worst >= 1e-3 {
        return Err(format!("max relative error {worst:.3e}"));
    }
    within(start, Duration::from_secs(10), format!("max relative error {worst:.3e}"))
}

fn counterexample() -> Outcome {
    let start = Instant::now();
    let params = FracParams::new(0.5, 0.5).unwrap();
    let r =
        counterexample_experiment(&params, 100.0, 200, &TimeQuadratureConfig::default(), &Default::default()).map_err(|e| e.to_string())?;
    let min_d = r.get_metric("min_derivative").unwrap();
    let min_u = r.get_metric("min_u").unwrap();
    let at = r.get_metric("argmin_u_t").unwrap();
    let ok = min_d >= -1e-6
        && min_u == -1.0
        && (at - 1.5 * std::f64::consts::PI).abs() <= std::f64::consts::PI / 100.0
        && r.verdict() == Verdict::Inconclusive;
    let detail = format!("min derivative {min_d:.3e}, min u {min_u} at t={at:.4}, verdict {:?}", r.verdict());
    if !ok {
        return Err(detail);
    }
    within(start, Duration::from_secs(5), detail)
}

fn ball_constancy() -> Outcome {
    let cfg = SpaceQuadratureConfig::default();
    let mut worst_spread: f64 = 0.0;
    let mut worst_scale: f64 = 0.0;
    for s in [0.3, 0.5, 0.7] {
        let p = FracParams::new(0.5, s).unwrap();
        let b1 = verify_ball_constancy(1.0, &p, &cfg).map_err(|e| e.to_string())?;
        let b2 = verify_ball_constancy(2.0, &p, &cfg).map_err(|e| e.to_string())?;
        worst_spread = worst_spread.max(b1.rel_spread).max(b2.rel_spread);
        let expect = 2f64.powf(-2.0 * s);
        worst_scale = worst_scale.max(((b2.mean / b1.mean) / expect - 1.0).abs());
    }
    check(worst_spread < 0.02 && worst_scale < 0.02, format!("max spread {worst_spread:.3e}, max scaling error {worst_scale:.3e}"))
}

fn fourier_symbol() -> Outcome {
    let cfg = SpaceQuadratureConfig { z_max: Some(200.0), ..Default::default() };
    let p = FracParams::new(0.5, 0.5).unwrap();
    let u = FunctionDescriptor::sine(1.0, 1.0, 0.0);
    let mut worst: f64 = 0.0;
    for x in [0.3, 0.8, 1.4, 2.0, 2.7] {
        let v = frac_laplacian_profile(&u, x, 1e-3, &p, &cfg).map_err(|e| e.to_string())?;
        worst = worst.max((v / x.sin() - 1.0).abs());
    }
    check(worst < 0.01, format!("max relative error {worst:.3e}"))
}

fn scaling_identity() -> Outcome {
    let cfg = TimeQuadratureConfig::default();
    let p = FracParams::new(0.5, 0.5).unwrap();
    let r: f64 = 0.5;
    let mut worst: f64 = 0.0;
    for l in [0.5, 2.0, r.powf(2.0 * p.s() / p.alpha())] {
        worst = worst.max(check_scaling_identity(&p, l, &cfg).map_err(|e| e.to_string())?);
    }
    check(worst < 1e-4, format!("max relative error {worst:.3e}"))
}

fn cutoff_bound() -> Outcome {
    let cfg = TimeQuadratureConfig::default();
    let mut parts = Vec::new();
    let mut ok = true;
    for alpha in [0.25, 0.5, 0.75] {
        let b = check_cutoff_bound(&FracParams::new(alpha, 0.5).unwrap(), &cfg).map_err(|e| e.to_string())?;
        ok &= b.satisfied && b.sup_abs < b.bound;
        parts.push(format!("alpha={alpha}: {:.4} < {:.4}", b.sup_abs, b.bound));
    }
    check(ok, parts.join("; "))
}

fn discrete_max_principle() -> Outcome {
    let start = Instant::now();
    let tol = Default::default();
    let plain = random_max_principle_suite(20240601, 100, false, &tol).map_err(|e| e.to_string())?;
    let mirror = random_max_principle_suite(20240602, 100, true, &tol).map_err(|e| e.to_string())?;
    let ok = plain.failures.is_empty() && mirror.failures.is_empty() && plain.worst_min >= -1e-10 && mirror.worst_min >= -1e-10;
    let detail = format!(
        "plain min {:.3e} ({} failed), antisymmetric min {:.3e} ({} failed)",
        plain.worst_min,
        plain.failures.len(),
        mirror.worst_min,
        mirror.failures.len()
    );
    if !ok {
        return Err(detail);
    }
    within(start, Duration::from_secs(120), detail)
}

fn averaging() -> Outcome {
    let p = FracParams::new(0.5, 0.5).unwrap();
    let setup = AveragingSetup::new(p, [2.0, 4.0], 0.0, 0.5, 1.0);
    let tol = Default::default();
    let r = averaging_effect_experiment(&setup, &tol).map_err(|e| e.to_string())?;
    let delta = r.get_metric("delta").unwrap();
    let u = r.get_metric("u_x0_t0").unwrap();
    let sweep = averaging_distance_sweep(&setup, &[1.0, 2.0, 4.0, 8.0]).map_err(|e| e.to_string())?;
    let monotone = sweep.windows(2).all(|w| w[1].1 <= w[0].1);
    let a = antisym_averaging_experiment(&setup, 6.0, &tol).map_err(|e| e.to_string())?;
    let ok = r.verdict() == Verdict::Holds && delta > 0.0 && u >= delta && monotone && a.verdict() == Verdict::Holds;
    check(
        ok,
        format!(
            "u(x0,t0)={u:.4e} >= delta={delta:.4e}, sweep {:?}, antisymmetric {:?}",
            sweep.iter().map(|r| r.1).collect::<Vec<_>>(),
            a.verdict()
        ),
    )
}

fn planted_dip() -> Result<(f64, f64), String> {
    let grid = SpaceGrid::line(0.0, 20.0, 201, DomainKind::HalfSpaceTruncation { length: 20.0 }).map_err(|e| e.to_string())?;
    let lv: Vec<f64> = grid.xs().into_iter().map(|x| 1.0 - (-x).exp() - 0.3 * (-((x - 5.0) / 0.5).powi(2)).exp()).collect();
    let ext = Exterior { data: SpaceTimeDescriptor::zero(), left: Extension::Data, right: Extension::Freeze };
    let f = HistoryField::from_levels(grid, 0.0, 1.0, vec![lv; 10], SpaceTimeDescriptor::zero(), ext).map_err(|e| e.to_string())?;
    let l = lattice_lambdas(f.grid(), 0.0, 10.0, 1);
    let scan = moving_plane_scan(&f, &l, &Default::default()).map_err(|e| e.to_string())?;
    match (scan.lambda0, scan.first_nonincrease_x) {
        (Some(l0), Some(x)) => Ok((l0, x)),
        _ => Err("planted dip not detected".into()),
    }
}

fn moving_plane() -> Outcome {
    let start = Instant::now();
    let p = FracParams::new(0.5, 0.5).unwrap();
    let problem = moving_plane_problem(p, 20.0, 200, 1.0, 5000).map_err(|e| e.to_string())?;
    let tol = ScanTolerance { monotone_limit: Some(10.0), ..Default::default() };
    let (tr, scan, report) = moving_plane_experiment(&problem, None, &tol).map_err(|e| e.to_string())?;
    let (l0, dip_x) = planted_dip()?;
    let ok = tr.steady && scan.lambda0.is_none() && scan.monotone && scan.min_forward_difference > 1e-8 && (3.5..=5.5).contains(&dip_x);
    let detail = format!(
        "steady={} at t={}, lambda0={:?}, min forward difference {:.3e}, verdict {:?}; planted dip lambda0={l0:.3}, first non-increase at x={dip_x:.2}",
        tr.steady,
        tr.field.t_end(),
        scan.lambda0,
        scan.min_forward_difference,
        report.verdict()
    );
    if !ok {
        return Err(detail);
    }
    within(start, Duration::from_secs(300), detail)
}

fn residual_consistency() -> Outcome {
    let p = FracParams::new(0.5, 0.5).unwrap();
    let t_end = 0.5;
    let mut sups = Vec::new();
    for (nx, dt) in [(40, 0.05), (80, 0.025)] {
        let problem = manufactured_problem(p, nx, dt, (t_end / dt).round() as usize).map_err(|e| e.to_string())?;
        let tr = fracdual::run_ivp(&problem).map_err(|e| e.to_string())?;
        let res = residual(&tr.field, &problem.reaction, &p, &TimeQuadratureConfig::default(), &SpaceQuadratureConfig::default())
            .map_err(|e| e.to_string())?;
        sups.push(res.sup());
    }
    let ratio = sups[0] / sups[1];
    check(ratio >= 1.5, format!("residual {:.3e} -> {:.3e}, ratio {ratio:.3}", sups[0], sups[1]))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("marchaud eigenfunction", marchaud_eigenfunction),
        ("counterexample", counterexample),
        ("ball barrier constancy", ball_constancy),
        ("fourier symbol", fourier_symbol),
        ("scaling identity", scaling_identity),
        ("cutoff bound", cutoff_bound),
        ("discrete maximum principle", discrete_max_principle),
        ("averaging effects", averaging),
        ("moving plane monotonicity", moving_plane),
        ("residual consistency", residual_consistency),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(d) => println!("PASS {:>2} {name}: {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {d}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
