//! Evaluators against brute-force double-exponential quadrature.

use quadrature::double_exponential::integrate;

use fracdual::descriptor::{barrier_phi, FunctionDescriptor};
use fracdual::frac_space::{
    frac_laplacian_profile, frac_laplacian_with, one_sided_integral, verify_ball_constancy, ExteriorTails, GridKernel, SampledField,
    SpaceQuadratureConfig,
};
use fracdual::frac_time::{marchaud, past_load, TimeQuadratureConfig, TimeTrace};
use fracdual::principles::{kernel_difference_integral, kernel_integral};
use fracdual::solver::{manufactured_problem, residual};
use fracdual::{run_ivp, DomainKind, Exterior, FracParams, SpaceGrid, SpaceTimeDescriptor};

fn de(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    integrate(f, a, b, 1e-13).integral
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn past_load_matches_oracle() {
    let cfg = TimeQuadratureConfig::default();
    for alpha in [0.2, 0.5, 0.8] {
        for past in [FunctionDescriptor::exponential(1.0, 1.0), FunctionDescriptor::gaussian(2.0, -1.0, 0.7)] {
            let t = 0.5;
            let got = past_load(&past, t, 0.0, alpha, &cfg).unwrap();
            let want = de(|s| past.eval(t - s) * s.powf(-1.0 - alpha), 0.5, 60.0);
            assert!(rel(got, want) < 1e-8, "alpha {alpha} {:?}: {got} vs {want}", past.family);
        }
    }
}

#[test]
fn sampled_marchaud_matches_interpolant_oracle() {
    let samples = [0.3, 1.0, -0.4, 0.2, 0.9, 0.5, 1.4];
    let dt = 0.25;
    let past = FunctionDescriptor::constant(samples[0]);
    for alpha in [0.3, 0.7] {
        let p = FracParams::new(alpha, 0.5).unwrap();
        for (i, theta) in [(5usize, 1.0), (4, 0.5), (2, 0.2)] {
            let t = (i as f64 + theta) * dt;
            let ut = samples[i] + (samples[i + 1] - samples[i]) * theta;
            // u(t) - u(t - s) is linear in s on each cell; on the first it is
            // head * s, integrated exactly
            let first = theta * dt;
            let head = (samples[i + 1] - samples[i]) / dt;
            let mut body = head * first.powf(1.0 - alpha) / (1.0 - alpha);
            for k in 0..i {
                let (hi, lo) = (samples[i - k], samples[i - k - 1]);
                let a = first + k as f64 * dt;
                body += de(|s| (ut - (hi + (lo - hi) * (s - a) / dt)) * s.powf(-1.0 - alpha), a, a + dt);
            }
            let want = p.c_alpha() * (body + (ut - samples[0]) * t.powf(-alpha) / alpha);
            let tr = TimeTrace { t_start: 0.0, dt, samples: &samples, past: &past };
            let got = marchaud(&tr, t, &p, &Default::default()).unwrap();
            assert!((got - want).abs() < 1e-9 * (1.0 + want.abs()), "alpha {alpha} t {t}: {got} vs {want}");
        }
    }
}

#[test]
fn profile_laplacian_matches_oracle() {
    let cfg = SpaceQuadratureConfig::default();
    let (amp, c, w) = (1.0, 0.2, 0.8);
    let g = FunctionDescriptor::gaussian(amp, c, w);
    for s in [0.25, 0.5, 0.75] {
        let p = FracParams::new(0.5, s).unwrap();
        for x in [-0.7, 0.0, 0.9] {
            let got = frac_laplacian_profile(&g, x, 0.01, &p, &cfg).unwrap();
            let px = g.eval(x);
            let u: f64 = (x - c) / w;
            let e = amp * (-u * u).exp();
            let d2 = e * (4.0 * u * u - 2.0) / (w * w);
            let d4 = e * (16.0 * u.powi(4) - 48.0 * u * u + 12.0) / w.powi(4);
            // Taylor expansion on (0, rho), brute force beyond
            let (rho, z_end): (f64, f64) = (1e-3, 40.0);
            let near = -d2 * rho.powf(2.0 - 2.0 * s) / (2.0 - 2.0 * s) - d4 / 12.0 * rho.powf(4.0 - 2.0 * s) / (4.0 - 2.0 * s);
            let body = de(|z| (2.0 * px - g.eval(x + z) - g.eval(x - z)) * z.powf(-1.0 - 2.0 * s), rho, z_end);
            let want = p.c_ns(1) * (near + body + 2.0 * px * z_end.powf(-2.0 * s) / (2.0 * s));
            assert!(rel(got, want) < 1e-6, "s {s} x {x}: {got} vs {want}");
        }
    }
}

#[test]
fn one_sided_integral_matches_oracle() {
    let cfg = SpaceQuadratureConfig::default();
    let g = FunctionDescriptor::gaussian(1.5, 2.0, 0.6);
    for s in [0.3, 0.6] {
        for (d, right) in [(0.5, true), (1.3, true), (0.4, false)] {
            let x = 0.5;
            let got = one_sided_integral(&g, x, d, right, 0.05, s, &cfg, 100.0).unwrap();
            let sgn = if right { 1.0 } else { -1.0 };
            let want = de(|z| g.eval(x + sgn * z) * z.powf(-1.0 - 2.0 * s), d, d + 40.0);
            assert!((got - want).abs() < 1e-8 * (1.0 + want.abs()), "s {s} d {d}: {got} vs {want}");
        }
    }
}

#[test]
fn exterior_tails_match_oracle() {
    let p = FracParams::new(0.5, 0.4).unwrap();
    let s = p.s();
    let grid = SpaceGrid::line(-1.0, 1.0, 21, DomainKind::Interval { a: -1.0, b: 1.0 }).unwrap();
    let space = FunctionDescriptor::gaussian(1.0, 1.6, 0.5);
    let time = FunctionDescriptor::exponential(1.0, -0.5);
    let ext = Exterior::data(SpaceTimeDescriptor::separable(space.clone(), time.clone()).plus(SpaceTimeDescriptor::constant(0.3)));
    let cfg = SpaceQuadratureConfig::default();
    let kernel = GridKernel::new(&grid, s, &cfg).unwrap();
    let nodes = grid.interior_nodes();
    let tails = ExteriorTails::new(&kernel, &grid, &ext, &nodes, s, &cfg).unwrap();
    let t = 0.7;
    for &k in &nodes {
        let x = grid.x(k);
        let (dl, dr) = (x + 1.0, 1.0 - x);
        let constant = |d: f64| 0.3 * d.powf(-2.0 * s) / (2.0 * s);
        let right = time.eval(t) * de(|z| space.eval(x + z) * z.powf(-1.0 - 2.0 * s), dr, dr + 40.0) + constant(dr);
        let left = time.eval(t) * de(|z| space.eval(x - z) * z.powf(-1.0 - 2.0 * s), dl, dl + 40.0) + constant(dl);
        assert!(rel(tails.at(k, true, t).unwrap(), right) < 1e-7, "node {k}");
        assert!(rel(tails.at(k, false, t).unwrap(), left) < 1e-7, "node {k}");
    }
}

#[test]
fn grid_laplacian_converges_to_sine_symbol() {
    let p = FracParams::new(0.5, 0.5).unwrap();
    let sine = FunctionDescriptor::sine(1.0, 1.0, 0.0);
    let ext = Exterior::data(SpaceTimeDescriptor::stationary(sine.clone()));
    let cfg = SpaceQuadratureConfig { z_max: Some(200.0), ..Default::default() };
    let mut errs = Vec::new();
    for n in [21, 41, 81] {
        let grid = SpaceGrid::line(-1.0, 1.0, n, DomainKind::Interval { a: -1.0, b: 1.0 }).unwrap();
        let k = grid.lattice_index(0.3).unwrap();
        let values: Vec<f64> = grid.xs().into_iter().map(|x| x.sin()).collect();
        let kernel = GridKernel::new(&grid, p.s(), &cfg).unwrap();
        let field = SampledField { grid: &grid, values: &values, exterior: &ext, t: 0.0 };
        let v = frac_laplacian_with(&kernel, &field, k, &p, &cfg).unwrap();
        errs.push((v - 0.3f64.sin()).abs());
    }
    assert!(errs[2] < 0.01 * 0.3f64.sin(), "{errs:?}");
    assert!(errs[1] < errs[0] && errs[2] < errs[1], "{errs:?}");
}

#[test]
fn ball_barrier_matches_oracle() {
    for s in [0.3, 0.5, 0.7] {
        let p = FracParams::new(0.5, s).unwrap();
        let ball = verify_ball_constancy(1.0, &p, &Default::default()).unwrap();
        let phi = |z: f64| barrier_phi(&[z], &[0.0], 1.0, s);
        let body = de(|z| 2.0 * (phi(0.0) - phi(z)) * z.powf(-1.0 - 2.0 * s), 0.0, 1.0);
        let want = p.c_ns(1) * (body + 2.0 * phi(0.0) / (2.0 * s));
        assert!(rel(ball.mean, want) < 1e-3, "s {s}: {} vs {want}", ball.mean);
    }
}

#[test]
fn kernel_integrals_match_oracle() {
    let s = 0.5;
    let d = [2.0, 4.0];
    for x in [-1.0, 0.0, 1.5] {
        let k = kernel_integral(x, d, s).unwrap();
        assert!(rel(k, de(|y| (x - y).abs().powf(-1.0 - 2.0 * s), d[0], d[1])) < 1e-10);
        let kd = kernel_difference_integral(x, d, 6.0, s).unwrap();
        let want = de(|y| (x - y).abs().powf(-2.0) - (x - (12.0 - y)).abs().powf(-2.0), d[0], d[1]);
        assert!(rel(kd, want) < 1e-10);
        assert!(kd > 0.0);
    }
}

#[test]
fn smooth_run_residual_within_scheme_order() {
    let p = FracParams::new(0.5, 0.5).unwrap();
    let (nx, dt) = (40, 0.05);
    let problem = manufactured_problem(p, nx, dt, 10).unwrap();
    let tr = run_ivp(&problem).unwrap();
    let r = residual(&tr.field, &problem.reaction, &p, &Default::default(), &Default::default()).unwrap();
    let h = problem.grid.h();
    assert!(r.sup() < 10.0 * (dt + h), "{} vs {}", r.sup(), 10.0 * (dt + h));
}

#[test]
fn logistic_run_settles_to_a_fixed_point() {
    let p = FracParams::new(0.5, 0.5).unwrap();
    let length = 10.0;
    let grid = SpaceGrid::line(0.0, length, 41, DomainKind::HalfSpaceTruncation { length }).unwrap();
    let run = |steps: usize| {
        let mut problem = fracdual::principles::moving_plane_problem(p, length, 40, 2.0, steps).unwrap();
        problem.grid = grid.clone();
        problem.solve.steady_tol = None;
        run_ivp(&problem).unwrap()
    };
    let runs: Vec<_> = [150, 300, 600].into_iter().map(run).collect();
    let gap = |i: usize| {
        let (a, b) = (runs[i].field.last(), runs[i + 1].field.last());
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    };
    let (g0, g1) = (gap(0), gap(1));
    assert!(g1 < g0 && g1 < 1e-2, "{g0} {g1}");
    assert!(runs[2].field.last().iter().all(|&v| v >= 0.0));
    assert!(runs[2].diagnostics.last().unwrap().increment < runs[1].diagnostics.last().unwrap().increment);
}
