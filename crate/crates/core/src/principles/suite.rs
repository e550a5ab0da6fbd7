use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{check_antisym_max_principle, check_max_principle, AntisymCheck, AntisymSource, Evaluators, PrincipleTolerance};
use crate::descriptor::{FunctionDescriptor, SpaceTimeDescriptor};
use crate::error::Result;
use crate::field::{Extension, Exterior};
use crate::grid::{DomainKind, SpaceGrid};
use crate::params::FracParams;
use crate::report::Verdict;
use crate::solver::{run_ivp, Problem, ReactionSpec, SolveConfig};

/// Outcome of a batch of randomized `f ≡ 0` runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteSummary {
    pub runs: usize,
    pub seed: u64,
    /// Smallest interior value seen across all runs.
    pub worst_min: f64,
    /// Runs whose checker verdict was not `holds`.
    pub failures: Vec<usize>,
}

fn time_factor(rng: &mut ChaCha8Rng) -> FunctionDescriptor {
    match rng.gen_range(0..3) {
        0 => FunctionDescriptor::constant(1.0),
        1 => FunctionDescriptor::cutoff(rng.gen_range(-1.0..0.5), rng.gen_range(0.2..1.0)),
        _ => FunctionDescriptor::exponential(1.0, rng.gen_range(0.1..2.0)),
    }
}

/// Nonnegative data: bumps with nonnegative amplitudes times nonnegative
/// time factors, plus a constant. With `mirror`, each bump sits left of 0
/// and is paired with its negated reflection.
fn random_data(rng: &mut ChaCha8Rng, mirror: bool) -> SpaceTimeDescriptor {
    let mut d = SpaceTimeDescriptor::zero();
    if !mirror && rng.gen_bool(0.5) {
        d = d.plus(SpaceTimeDescriptor::separable(FunctionDescriptor::constant(rng.gen_range(0.0..1.0)), time_factor(rng)));
    }
    for _ in 0..rng.gen_range(1..=3) {
        let amp = rng.gen_range(0.0..2.0);
        let c = if mirror { rng.gen_range(-2.0..-0.05) } else { rng.gen_range(-2.0..2.0) };
        let w = rng.gen_range(0.05..1.0);
        let t = time_factor(rng);
        d = d.plus(SpaceTimeDescriptor::separable(FunctionDescriptor::gaussian(amp, c, w), t.clone()));
        if mirror {
            d = d.plus(SpaceTimeDescriptor::separable(FunctionDescriptor::gaussian(-amp, -c, w), t));
        }
    }
    d
}

fn random_problem(rng: &mut ChaCha8Rng, mirror: bool) -> Result<Problem> {
    let params = FracParams::new(rng.gen_range(0.1..0.9), rng.gen_range(0.1..0.9))?;
    let half = rng.gen_range(5..=99usize);
    let a = rng.gen_range(0.4..0.95);
    let (domain, left, right) = if mirror {
        (DomainKind::Interval { a: -a, b: a }, Extension::Data, Extension::Data)
    } else {
        let b = rng.gen_range(0.4..0.95);
        let side = |r: &mut ChaCha8Rng| if r.gen_bool(0.3) { Extension::Freeze } else { Extension::Data };
        let (l, r) = (side(rng), side(rng));
        (DomainKind::Interval { a: -a, b }, l, r)
    };
    let grid = SpaceGrid::line(-1.0, 1.0, 2 * half + 1, domain)?;
    let prehistory = random_data(rng, mirror);
    let data = random_data(rng, mirror);
    let solve = SolveConfig::new(rng.gen_range(0.01..0.2), rng.gen_range(5..=25));
    Ok(Problem {
        frac_params: params,
        grid,
        t_start: 0.0,
        prehistory,
        exterior: Exterior { data, left, right },
        reaction: ReactionSpec::zero(),
        solve,
    })
}

/// `n` randomized runs with `f ≡ 0` and nonnegative data, each checked by
/// the bounded-domain maximum principle (or, with `mirror`, its
/// antisymmetric form about `x = 0`).
pub fn random_max_principle_suite(seed: u64, n: usize, mirror: bool, tol: &PrincipleTolerance) -> Result<SuiteSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let problems = (0..n).map(|_| random_problem(&mut rng, mirror)).collect::<Result<Vec<_>>>()?;
    let results = problems
        .par_iter()
        .map(|p| -> Result<(f64, Verdict)> {
            let tr = run_ivp(p)?;
            let f = &tr.field;
            let window = (f.t_start(), f.t_end());
            let ev = Evaluators { params: p.frac_params, time: p.solve.time_quadrature, space: p.solve.space_quadrature };
            let report = if mirror {
                let chk = AntisymCheck { lambda: 0.0, source: AntisymSource::Direct, coefficient: None };
                check_antisym_max_principle(f, &chk, window, &ev, tol)?
            } else {
                check_max_principle(f, window, &ev, tol)?
            };
            let grid = f.grid();
            let min = f
                .levels()
                .iter()
                .flat_map(|lv| (0..grid.len()).filter(|&k| grid.is_interior(k) && (!mirror || grid.x(k) < 0.0)).map(move |k| lv[k]))
                .fold(f64::INFINITY, f64::min);
            Ok((min, report.verdict()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SuiteSummary {
        runs: n,
        seed,
        worst_min: results.iter().map(|r| r.0).fold(f64::INFINITY, f64::min),
        failures: results.iter().enumerate().filter(|(_, r)| r.1 != Verdict::Holds).map(|(i, _)| i).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suites_hold() {
        let s = random_max_principle_suite(7, 4, false, &Default::default()).unwrap();
        assert!(s.failures.is_empty(), "{s:?}");
        assert!(s.worst_min >= -1e-10);
        let s = random_max_principle_suite(7, 4, true, &Default::default()).unwrap();
        assert!(s.failures.is_empty(), "{s:?}");
    }
}
