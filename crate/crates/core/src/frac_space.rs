//! Fractional Laplacian in one and two dimensions.
//!
//! All evaluators work with the symmetrized form
//! `(-Δ)^s u(x) = C_{1,s} ∫_0^∞ (2u(x) - u(x+z) - u(x-z)) z^{-1-2s} dz`,
//! which needs no principal value. Near `z = 0` a Taylor expansion replaces
//! the integrand by `-u''(x) z^{1-2s}`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::descriptor::{FarBehavior, FunctionDescriptor, SpaceTimeDescriptor};
use crate::error::{Error, Result};
use crate::field::{Extension, Exterior};
use crate::grid::SpaceGrid;
use crate::params::{unit_ball_barrier_value, FracParams};
use crate::quad::{gauss_legendre8, hat_moments};

pub use crate::descriptor::{barrier_h, barrier_phi};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SpaceTailMode {
    /// Only eventually constant far fields are integrated exactly.
    ConstantExact,
    /// Also correct power-growth far fields with their leading term.
    #[default]
    PowerSeries,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpaceQuadratureConfig {
    /// Radius of the Taylor zone in units of `h`.
    pub inner_radius_factor: f64,
    /// Far-field cut; `None` picks 100 times the grid extent.
    pub z_max: Option<f64>,
    /// Number of geometric refinement levels next to non-smooth points.
    pub boundary_refine: usize,
    pub tail_mode: SpaceTailMode,
    /// Largest panel width of the composite rule.
    pub far_panel_max: f64,
}

impl Default for SpaceQuadratureConfig {
    fn default() -> Self {
        SpaceQuadratureConfig {
            inner_radius_factor: 1.0,
            z_max: None,
            boundary_refine: 16,
            tail_mode: SpaceTailMode::PowerSeries,
            far_panel_max: 0.5,
        }
    }
}

impl SpaceQuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.inner_radius_factor >= 1.0) {
            return Err(Error::param("inner_radius_factor", "must be >= 1"));
        }
        if let Some(z) = self.z_max {
            if !(z > 0.0) {
                return Err(Error::param("z_max", "must be positive"));
            }
        }
        if self.boundary_refine < 1 {
            return Err(Error::param("boundary_refine", "must be >= 1"));
        }
        if !(self.far_panel_max > 0.0) {
            return Err(Error::param("far_panel_max", "must be positive"));
        }
        Ok(())
    }
}

/// A function of one real variable with the metadata needed for quadrature.
pub trait Profile1d: Sync {
    fn value(&self, x: f64) -> f64;
    fn breakpoints(&self) -> Vec<f64>;
    fn far(&self, right: bool) -> FarBehavior;
}

impl Profile1d for FunctionDescriptor {
    fn value(&self, x: f64) -> f64 {
        self.eval(x)
    }

    fn breakpoints(&self) -> Vec<f64> {
        FunctionDescriptor::breakpoints(self)
    }

    fn far(&self, right: bool) -> FarBehavior {
        FunctionDescriptor::far(self, right)
    }
}

/// A space-time descriptor frozen at time `t`.
pub struct SpaceSlice<'a> {
    pub desc: &'a SpaceTimeDescriptor,
    pub t: f64,
}

impl Profile1d for SpaceSlice<'_> {
    fn value(&self, x: f64) -> f64 {
        self.desc.eval(x, self.t)
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.desc.terms.iter().flat_map(|k| k.space.breakpoints()).collect();
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    fn far(&self, right: bool) -> FarBehavior {
        combine_far(self.desc.terms.iter().map(|k| (k.space.far(right), k.time.eval(self.t))), right)
    }
}

fn combine_far(parts: impl Iterator<Item = (FarBehavior, f64)>, right: bool) -> FarBehavior {
    let mut beyond = if right { f64::NEG_INFINITY } else { f64::INFINITY };
    let mut value = 0.0;
    let mut gamma: f64 = 0.0;
    let mut constant = true;
    for (f, scale) in parts {
        match f {
            FarBehavior::Constant { beyond: b, value: v } => {
                beyond = if right { beyond.max(b) } else { beyond.min(b) };
                value += scale * v;
            }
            FarBehavior::Bounded => constant = false,
            FarBehavior::Power { gamma: g } => {
                constant = false;
                gamma = gamma.max(g);
            }
        }
    }
    if gamma > 0.0 {
        FarBehavior::Power { gamma }
    } else if constant {
        FarBehavior::Constant { beyond, value }
    } else {
        FarBehavior::Bounded
    }
}

/// A closure with explicit breakpoints and far-field behaviour.
pub struct FnProfile<F> {
    pub f: F,
    pub breakpoints: Vec<f64>,
    pub far_left: FarBehavior,
    pub far_right: FarBehavior,
}

impl<F: Fn(f64) -> f64 + Sync> Profile1d for FnProfile<F> {
    fn value(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.breakpoints.clone()
    }

    fn far(&self, right: bool) -> FarBehavior {
        if right {
            self.far_right
        } else {
            self.far_left
        }
    }
}

fn check_growth(f: FarBehavior, s: f64) -> Result<()> {
    if let FarBehavior::Power { gamma } = f {
        if gamma >= 2.0 * s {
            return Err(Error::Divergent(format!("exterior grows like |x|^{gamma}, needs exponent below 2s = {}", 2.0 * s)));
        }
    }
    Ok(())
}

/// Composite Gauss-Legendre on `[a, b]`, panels of width
/// `clamp(0.1 z, h, far_panel_max)`, graded geometrically toward any end
/// flagged as non-smooth.
fn composite<G: Fn(f64) -> f64>(g: &G, a: f64, b: f64, h: f64, rough_a: bool, rough_b: bool, cfg: &SpaceQuadratureConfig) -> f64 {
    if b <= a {
        return 0.0;
    }
    let hi = cfg.far_panel_max.max(h);
    let mut edges = vec![a];
    let mut z = a;
    while z < b {
        let w = (0.1 * z).clamp(h, hi);
        z = if z + 1.5 * w >= b { b } else { z + w };
        edges.push(z);
    }
    let mut acc = 0.0;
    let last = edges.len() - 2;
    for (k, e) in edges.windows(2).enumerate() {
        let (p, q) = (e[0], e[1]);
        let grade_left = k == 0 && rough_a;
        let grade_right = k == last && rough_b;
        acc += match (grade_left, grade_right) {
            (false, false) => gauss_legendre8(g, p, q),
            (true, false) => graded(g, p, q, true, cfg.boundary_refine),
            (false, true) => graded(g, p, q, false, cfg.boundary_refine),
            (true, true) => {
                let m = 0.5 * (p + q);
                graded(g, p, m, true, cfg.boundary_refine) + graded(g, m, q, false, cfg.boundary_refine)
            }
        };
    }
    acc
}

/// Panel split into halves repeatedly toward the rough end.
fn graded<G: Fn(f64) -> f64>(g: &G, a: f64, b: f64, toward_a: bool, levels: usize) -> f64 {
    let mut acc = 0.0;
    let (mut lo, mut hi) = (a, b);
    for _ in 0..levels {
        let m = 0.5 * (lo + hi);
        if toward_a {
            acc += gauss_legendre8(g, m, hi);
            hi = m;
        } else {
            acc += gauss_legendre8(g, lo, m);
            lo = m;
        }
    }
    acc + gauss_legendre8(g, lo, hi)
}

/// Split points in `(lo, hi)` at distances from `x` where `p(x ± z)` is rough.
fn rough_distances(bps: &[f64], x: f64, lo: f64, hi: f64, sides: (bool, bool)) -> Vec<f64> {
    let mut d: Vec<f64> =
        bps.iter().filter(|&&b| (sides.1 && b > x) || (sides.0 && b < x)).map(|&b| (b - x).abs()).filter(|&z| z > lo && z < hi).collect();
    d.sort_by(f64::total_cmp);
    d.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs().max(1.0));
    d
}

fn integrate_split<G: Fn(f64) -> f64>(g: &G, lo: f64, hi: f64, splits: &[f64], lo_rough: bool, h: f64, cfg: &SpaceQuadratureConfig) -> f64 {
    let mut pts = vec![lo];
    pts.extend_from_slice(splits);
    pts.push(hi);
    let n = pts.len();
    let mut acc = 0.0;
    for k in 0..n - 1 {
        let ra = if k == 0 { lo_rough } else { true };
        let rb = k + 1 < n - 1;
        acc += composite(g, pts[k], pts[k + 1], h, ra, rb, cfg);
    }
    acc
}

/// `∫_0^∞ (2p(x) - p(x+z) - p(x-z)) z^{-1-2s} dz` for an analytic profile,
/// without the normalization constant. `h` sets the Taylor radius and the
/// near-field panel width.
pub fn symmetric_integral(profile: &dyn Profile1d, x: f64, h: f64, s: f64, cfg: &SpaceQuadratureConfig) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::param("h", "must be positive"));
    }
    let (fl, fr) = (profile.far(false), profile.far(true));
    check_growth(fl, s)?;
    check_growth(fr, s)?;
    let bps = profile.breakpoints();
    let px = profile.value(x);
    let two_s = 2.0 * s;

    let nearest = bps.iter().map(|b| (b - x).abs()).filter(|&d| d > 1e-14).fold(f64::INFINITY, f64::min);
    let rho = (cfg.inner_radius_factor * h).min(0.5 * nearest);
    let (pr, pl) = (profile.value(x + rho), profile.value(x - rho));
    let d2 = (pr - 2.0 * px + pl) / (rho * rho);
    // fourth-order term, including the one hidden in the difference quotient
    let d4 = if 2.0 * rho <= nearest {
        (profile.value(x + 2.0 * rho) - 4.0 * pr + 6.0 * px - 4.0 * pl + profile.value(x - 2.0 * rho)) / rho.powi(4)
    } else {
        0.0
    };
    let taylor =
        -d2 * rho.powf(2.0 - two_s) / (2.0 - two_s) + d4 / 12.0 * rho.powf(4.0 - two_s) * (1.0 / (2.0 - two_s) - 1.0 / (4.0 - two_s));

    // choose the outer cut
    let (z_cut, exact_tail) = match (fl, fr) {
        (FarBehavior::Constant { beyond: bl, value: vl }, FarBehavior::Constant { beyond: br, value: vr }) => {
            let z = (x - bl).max(br - x).max(rho);
            (z, Some((vl, vr)))
        }
        _ => (cfg.z_max.unwrap_or(200.0).max(2.0 * rho), None),
    };
    let g = |z: f64| (2.0 * px - profile.value(x + z) - profile.value(x - z)) * z.powf(-1.0 - two_s);
    let splits = rough_distances(&bps, x, rho, z_cut, (true, true));
    let body = integrate_split(&g, rho, z_cut, &splits, false, h, cfg);

    let zt = z_cut.powf(-two_s) / two_s;
    let tail = match exact_tail {
        Some((vl, vr)) => (2.0 * px - vl - vr) * zt,
        None => {
            let side = |f: FarBehavior, xs: f64| match f {
                FarBehavior::Constant { beyond, value } => {
                    let inside = if xs > x { xs >= beyond } else { xs <= beyond };
                    if inside {
                        value * zt
                    } else {
                        0.0
                    }
                }
                FarBehavior::Bounded => 0.0,
                FarBehavior::Power { gamma } => match cfg.tail_mode {
                    SpaceTailMode::PowerSeries => profile.value(xs) * z_cut.powf(-two_s) / (two_s - gamma),
                    SpaceTailMode::ConstantExact => 0.0,
                },
            };
            2.0 * px * zt - side(fl, x - z_cut) - side(fr, x + z_cut)
        }
    };
    Ok(taylor + body + tail)
}

/// `∫_D^∞ p(x ± z) z^{-1-2s} dz` (sign `+` when `right`).
#[allow(clippy::too_many_arguments)]
pub fn one_sided_integral(
    profile: &dyn Profile1d,
    x: f64,
    d: f64,
    right: bool,
    h: f64,
    s: f64,
    cfg: &SpaceQuadratureConfig,
    z_default: f64,
) -> Result<f64> {
    let far = profile.far(right);
    check_growth(far, s)?;
    let two_s = 2.0 * s;
    let sgn = if right { 1.0 } else { -1.0 };
    let (z_cut, tail) = match far {
        FarBehavior::Constant { beyond, value } => {
            let z = (sgn * (beyond - x)).max(d);
            (z, value * z.powf(-two_s) / two_s)
        }
        FarBehavior::Bounded => (cfg.z_max.unwrap_or(z_default).max(d), 0.0),
        FarBehavior::Power { gamma } => {
            let z = cfg.z_max.unwrap_or(z_default).max(d);
            let t = match cfg.tail_mode {
                SpaceTailMode::PowerSeries => profile.value(x + sgn * z) * z.powf(-two_s) / (two_s - gamma),
                SpaceTailMode::ConstantExact => 0.0,
            };
            (z, t)
        }
    };
    let g = |z: f64| profile.value(x + sgn * z) * z.powf(-1.0 - two_s);
    let bps = profile.breakpoints();
    let splits = rough_distances(&bps, x, d, z_cut, (!right, right));
    Ok(integrate_split(&g, d, z_cut, &splits, false, h, cfg) + tail)
}

/// `(-Δ)^s p(x)` for an analytic 1-D profile.
pub fn frac_laplacian_profile(profile: &dyn Profile1d, x: f64, h: f64, params: &FracParams, cfg: &SpaceQuadratureConfig) -> Result<f64> {
    Ok(params.c_ns(1) * symmetric_integral(profile, x, h, params.s(), cfg)?)
}

/// `(-Δ)^s u(x)` in two dimensions by rays: `C_{2,s} ∫_0^π I_θ dθ` with `I_θ`
/// the symmetric 1-D integral along direction `θ`, trapezoid rule in angle.
pub fn frac_laplacian_2d<F>(u: &F, x: [f64; 2], h: f64, n_theta: usize, params: &FracParams, cfg: &SpaceQuadratureConfig) -> Result<f64>
where
    F: Fn([f64; 2]) -> f64 + Sync,
{
    if n_theta < 4 {
        return Err(Error::param("n_theta", "need at least 4 directions"));
    }
    let mut acc = 0.0;
    for k in 0..n_theta {
        let th = PI * k as f64 / n_theta as f64;
        let (c, sn) = (th.cos(), th.sin());
        let ray = FnProfile {
            f: |r: f64| u([x[0] + r * c, x[1] + r * sn]),
            breakpoints: Vec::new(),
            far_left: FarBehavior::Bounded,
            far_right: FarBehavior::Bounded,
        };
        acc += symmetric_integral(&ray, 0.0, h, params.s(), cfg)?;
    }
    Ok(params.c_ns(2) * acc * PI / n_theta as f64)
}

/// Grid values at one time level with their exterior continuation.
#[derive(Clone, Copy)]
pub struct SampledField<'a> {
    pub grid: &'a SpaceGrid,
    pub values: &'a [f64],
    pub exterior: &'a Exterior,
    pub t: f64,
}

/// Continuation past one end of the grid for a given row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Beyond {
    /// Distance from the node to the grid end.
    pub distance: f64,
    /// `distance^{-2s} / (2s)` in physical units.
    pub weight: f64,
}

/// One row of the discrete operator (without `C_{1,s}`):
/// `Σ_j k_j (u_i - u_j)` plus the two beyond-grid parts.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelRow {
    pub node: usize,
    pub couplings: Vec<(usize, f64)>,
    pub left: Beyond,
    pub right: Beyond,
}

/// Dimensionless cell weights of the sampled operator on a 1-D grid.
#[derive(Debug, Clone)]
pub struct GridKernel {
    s: f64,
    h: f64,
    n: usize,
    kappa: usize,
    taylor: f64,
    a: Vec<f64>,
    b: Vec<f64>,
    scale: f64,
}

impl GridKernel {
    pub fn new(grid: &SpaceGrid, s: f64, cfg: &SpaceQuadratureConfig) -> Result<Self> {
        cfg.validate()?;
        if grid.dim() != 1 {
            return Err(Error::Unsupported("sampled operator is one dimensional".into()));
        }
        let kf = cfg.inner_radius_factor;
        if (kf - kf.round()).abs() > 1e-12 {
            return Err(Error::param("inner_radius_factor", "must be an integer on grids"));
        }
        let kappa = kf.round() as usize;
        let n = grid.len();
        let h = grid.h();
        let p = 1.0 + 2.0 * s;
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        for k in kappa..n {
            let (ma, mb) = hat_moments(k as f64, k as f64 + 1.0, p);
            a[k] = ma;
            b[k] = mb;
        }
        Ok(GridKernel { s, h, n, kappa, taylor: (kappa as f64).powf(2.0 - 2.0 * s) / (2.0 - 2.0 * s), a, b, scale: h.powf(-2.0 * s) })
    }

    /// Dimensionless weight of the node at offset `d >= 1` when `dmax` is the
    /// number of nodes on that side.
    fn weight(&self, d: usize, dmax: usize) -> f64 {
        let mut w = 0.0;
        if d == 1 {
            w += self.taylor;
        }
        if d >= self.kappa && d < dmax {
            w += self.a[d];
        }
        if d > self.kappa {
            w += self.b[d - 1];
        }
        w
    }

    pub fn row(&self, i: usize) -> Result<KernelRow> {
        if i < self.kappa || i + self.kappa > self.n - 1 {
            return Err(Error::InsufficientStencil { node: i });
        }
        let (dl, dr) = (i, self.n - 1 - i);
        let mut couplings = Vec::with_capacity(self.n - 1);
        for d in 1..=dl {
            couplings.push((i - d, self.scale * self.weight(d, dl)));
        }
        for d in 1..=dr {
            couplings.push((i + d, self.scale * self.weight(d, dr)));
        }
        let two_s = 2.0 * self.s;
        let beyond = |d: usize| {
            let distance = d as f64 * self.h;
            Beyond { distance, weight: distance.powf(-two_s) / two_s }
        };
        Ok(KernelRow { node: i, couplings, left: beyond(dl), right: beyond(dr) })
    }
}

fn boundary_interior(grid: &SpaceGrid) -> Result<(usize, usize)> {
    let nodes = grid.interior_nodes();
    match (nodes.first(), nodes.last()) {
        (Some(&a), Some(&b)) => Ok((a, b)),
        _ => Err(Error::Geometry("grid has no interior nodes".into())),
    }
}

/// Default far-field cut for a grid: 100 times its extent.
pub fn grid_z_default(grid: &SpaceGrid) -> f64 {
    let ax = grid.axis(0);
    100.0 * (ax.x_max - ax.x_min)
}

/// `∫_D^∞ p(x ± z, t) z^{-1-2s}` for the exterior data, term by term.
#[allow(clippy::too_many_arguments)]
pub fn exterior_beyond(
    data: &SpaceTimeDescriptor,
    t: f64,
    x: f64,
    d: f64,
    right: bool,
    grid: &SpaceGrid,
    s: f64,
    cfg: &SpaceQuadratureConfig,
) -> Result<f64> {
    let mut acc = 0.0;
    for term in &data.terms {
        let c = term.time.eval(t);
        if c != 0.0 {
            acc += c * one_sided_integral(&term.space, x, d, right, grid.h(), s, cfg, grid_z_default(grid))?;
        }
    }
    Ok(acc)
}

/// `(-Δ)^s u` at grid node `node` from sampled values and the exterior.
pub fn frac_laplacian(field: &SampledField<'_>, node: usize, params: &FracParams, cfg: &SpaceQuadratureConfig) -> Result<f64> {
    let kernel = GridKernel::new(field.grid, params.s(), cfg)?;
    frac_laplacian_with(&kernel, field, node, params, cfg)
}

/// As [`frac_laplacian`] with a prebuilt kernel.
pub fn frac_laplacian_with(
    kernel: &GridKernel,
    field: &SampledField<'_>,
    node: usize,
    params: &FracParams,
    cfg: &SpaceQuadratureConfig,
) -> Result<f64> {
    let x = field.grid.x(node);
    sampled_with_tails(kernel, field, node, params, |right, b| {
        exterior_beyond(&field.exterior.data, field.t, x, b.distance, right, field.grid, params.s(), cfg)
    })
}

/// As [`frac_laplacian_with`] with the far-field integrals taken from `tails`.
pub fn frac_laplacian_tails(
    kernel: &GridKernel,
    field: &SampledField<'_>,
    node: usize,
    params: &FracParams,
    tails: &ExteriorTails,
) -> Result<f64> {
    sampled_with_tails(kernel, field, node, params, |right, _| tails.at(node, right, field.t))
}

fn sampled_with_tails(
    kernel: &GridKernel,
    field: &SampledField<'_>,
    node: usize,
    params: &FracParams,
    beyond: impl Fn(bool, Beyond) -> Result<f64>,
) -> Result<f64> {
    let u = field.values;
    if u.len() != field.grid.len() {
        return Err(Error::param("values", "length does not match the grid"));
    }
    if let Some(index) = u.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let row = kernel.row(node)?;
    let ui = u[node];
    let mut acc: f64 = row.couplings.iter().map(|&(j, k)| k * (ui - u[j])).sum();
    let (first, last) = boundary_interior(field.grid)?;
    for (right, b, ext) in [(false, row.left, field.exterior.left), (true, row.right, field.exterior.right)] {
        acc += match ext {
            Extension::Freeze => b.weight * (ui - u[if right { last } else { first }]),
            Extension::Data => b.weight * ui - beyond(right, b)?,
        };
    }
    Ok(params.c_ns(1) * acc)
}

/// Far-field integrals of separable exterior data, one per term and node,
/// so that the tail at time `t` is `Σ_k time_k(t) I_k`.
#[derive(Debug, Clone)]
pub struct ExteriorTails {
    left: Vec<Vec<f64>>,
    right: Vec<Vec<f64>>,
    times: Vec<FunctionDescriptor>,
}

impl ExteriorTails {
    pub fn new(
        kernel: &GridKernel,
        grid: &SpaceGrid,
        exterior: &Exterior,
        nodes: &[usize],
        s: f64,
        cfg: &SpaceQuadratureConfig,
    ) -> Result<Self> {
        let n = grid.len();
        let mut left = vec![Vec::new(); n];
        let mut right = vec![Vec::new(); n];
        for &k in nodes {
            let row = kernel.row(k)?;
            let x = grid.x(k);
            for (side, b, out) in [(false, row.left, &mut left), (true, row.right, &mut right)] {
                out[k] = exterior
                    .data
                    .terms
                    .iter()
                    .map(|term| one_sided_integral(&term.space, x, b.distance, side, grid.h(), s, cfg, grid_z_default(grid)))
                    .collect::<Result<Vec<_>>>()?;
            }
        }
        Ok(ExteriorTails { left, right, times: exterior.data.terms.iter().map(|t| t.time.clone()).collect() })
    }

    pub fn at(&self, node: usize, right: bool, t: f64) -> Result<f64> {
        let v = if right { &self.right } else { &self.left };
        let parts = v.get(node).filter(|p| p.len() == self.times.len()).ok_or_else(|| Error::param("node", "no cached tail"))?;
        Ok(parts.iter().zip(&self.times).map(|(i, f)| i * f.eval(t)).sum())
    }
}

/// Mean and relative spread of `(-Δ)^s φ` over probes `|x - x0| <= 0.8 r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BallConstancy {
    pub mean: f64,
    pub rel_spread: f64,
    /// Closed-form value `4^s Γ(1+s) Γ(1/2+s) / (Γ(1/2) r^{2s})`.
    pub exact: f64,
}

pub fn verify_ball_constancy(r: f64, params: &FracParams, cfg: &SpaceQuadratureConfig) -> Result<BallConstancy> {
    if !(r > 0.0) {
        return Err(Error::param("r", "must be positive"));
    }
    let s = params.s();
    let phi = FunctionDescriptor::ball_barrier(0.0, r, s);
    let h = 1e-3 * r;
    let probes: Vec<f64> = (-4..=4).map(|k| 0.2 * r * k as f64).collect();
    let vals = probes.iter().map(|&x| frac_laplacian_profile(&phi, x, h, params, cfg)).collect::<Result<Vec<_>>>()?;
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(BallConstancy { mean, rel_spread: (max - min) / mean, exact: unit_ball_barrier_value(1, s) * r.powf(-2.0 * s) })
}

/// `mean(r) / mean(1)` for `r ∈ {0.5, 2}` paired with the exact `r^{-2s}`.
pub fn ball_scaling(params: &FracParams, cfg: &SpaceQuadratureConfig) -> Result<Vec<(f64, f64, f64)>> {
    let base = verify_ball_constancy(1.0, params, cfg)?.mean;
    [0.5, 2.0].iter().map(|&r| Ok((r, verify_ball_constancy(r, params, cfg)?.mean / base, r.powf(-2.0 * params.s())))).collect()
}

/// Smallest observed `(-Δ)^s h / (h l^{-2s})` over slab probes, 1-D.
pub fn slab_barrier_ratio(lambda: f64, l: f64, beta: f64, params: &FracParams, cfg: &SpaceQuadratureConfig) -> Result<f64> {
    let s = params.s();
    let hd = FunctionDescriptor::new(crate::descriptor::Family::SlabBarrierH, vec![lambda, l, beta, s])?;
    let mut best = f64::INFINITY;
    for k in 1..20 {
        let x = lambda - 2.0 * l + 0.1 * l * k as f64;
        let v = frac_laplacian_profile(&hd, x, 1e-3 * l, params, cfg)?;
        best = best.min(v / (hd.eval(x) * l.powf(-2.0 * s)));
    }
    Ok(best)
}
