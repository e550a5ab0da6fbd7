//! Space-time fields on a grid, plus reflection utilities.

use serde::{Deserialize, Serialize};

use crate::descriptor::SpaceTimeDescriptor;
use crate::error::{Error, Result};
use crate::grid::SpaceGrid;

/// How the field is continued beyond the last interior node on one side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Extension {
    /// Values come from the exterior descriptor.
    #[default]
    Data,
    /// Values equal the outermost interior node (artificial far field).
    Freeze,
}

/// Exterior data: a descriptor plus the continuation rule on each side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Exterior {
    pub data: SpaceTimeDescriptor,
    #[serde(default)]
    pub left: Extension,
    #[serde(default)]
    pub right: Extension,
}

impl Exterior {
    pub fn data(data: SpaceTimeDescriptor) -> Self {
        Exterior { data, left: Extension::Data, right: Extension::Data }
    }

    pub fn zero() -> Self {
        Self::data(SpaceTimeDescriptor::zero())
    }
}

/// `(2 lambda - x1, x2, ...)`.
pub fn reflect_point(x: &[f64], lambda: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    y[0] = 2.0 * lambda - x[0];
    y
}

/// Solution values on a uniform space-time lattice together with the data
/// that define the field outside it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistoryField {
    grid: SpaceGrid,
    t_start: f64,
    dt: f64,
    levels: Vec<Vec<f64>>,
    prehistory: SpaceTimeDescriptor,
    exterior: Exterior,
    #[serde(skip)]
    first_interior: usize,
    #[serde(skip)]
    last_interior: usize,
}

impl HistoryField {
    /// A field with a single level at `t_start` taken from the prehistory.
    pub fn new(grid: SpaceGrid, t_start: f64, dt: f64, prehistory: SpaceTimeDescriptor, exterior: Exterior) -> Result<Self> {
        let level0: Vec<f64> = (0..grid.len()).map(|k| prehistory.eval(grid.x(k), t_start)).collect();
        Self::from_levels(grid, t_start, dt, vec![level0], prehistory, exterior)
    }

    /// Build from explicit levels; exterior nodes are overwritten with the
    /// exterior data so the stored values are always consistent.
    pub fn from_levels(
        grid: SpaceGrid,
        t_start: f64,
        dt: f64,
        levels: Vec<Vec<f64>>,
        prehistory: SpaceTimeDescriptor,
        exterior: Exterior,
    ) -> Result<Self> {
        grid.validate()?;
        if grid.dim() != 1 {
            return Err(Error::Unsupported("space-time fields are one dimensional".into()));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::param("dt", "must be positive"));
        }
        if !t_start.is_finite() {
            return Err(Error::param("t_start", "must be finite"));
        }
        if levels.is_empty() {
            return Err(Error::param("levels", "need at least one level"));
        }
        prehistory.validate()?;
        exterior.data.validate()?;
        let interior = grid.interior_nodes();
        let (Some(&first_interior), Some(&last_interior)) = (interior.first(), interior.last()) else {
            return Err(Error::Geometry("grid has no interior nodes".into()));
        };
        let mut f = HistoryField {
            grid,
            t_start,
            dt,
            levels: Vec::with_capacity(levels.len()),
            prehistory,
            exterior,
            first_interior,
            last_interior,
        };
        for lv in levels {
            f.push_level(lv)?;
        }
        Ok(f)
    }

    /// Append a level; exterior-masked nodes are rewritten.
    pub fn push_level(&mut self, mut values: Vec<f64>) -> Result<()> {
        if values.len() != self.grid.len() {
            return Err(Error::param("levels", format!("expected {} values, got {}", self.grid.len(), values.len())));
        }
        let t = self.time(self.levels.len());
        self.fill_exterior(&mut values, t);
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        self.levels.push(values);
        Ok(())
    }

    fn fill_exterior(&self, values: &mut [f64], t: f64) {
        let (a, b) = (self.first_interior, self.last_interior);
        let (va, vb) = (values[a], values[b]);
        for (k, v) in values.iter_mut().enumerate() {
            if self.grid.is_interior(k) {
                continue;
            }
            *v = if k < a && self.exterior.left == Extension::Freeze {
                va
            } else if k > b && self.exterior.right == Extension::Freeze {
                vb
            } else {
                self.exterior.data.eval(self.grid.x(k), t)
            };
        }
    }

    pub fn grid(&self) -> &SpaceGrid {
        &self.grid
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn time(&self, level: usize) -> f64 {
        self.t_start + level as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.levels.len() - 1)
    }

    pub fn level(&self, j: usize) -> &[f64] {
        &self.levels[j]
    }

    pub fn levels(&self) -> &[Vec<f64>] {
        &self.levels
    }

    pub fn last(&self) -> &[f64] {
        self.levels.last().expect("at least one level")
    }

    pub fn prehistory(&self) -> &SpaceTimeDescriptor {
        &self.prehistory
    }

    pub fn exterior(&self) -> &Exterior {
        &self.exterior
    }

    pub fn first_interior(&self) -> usize {
        self.first_interior
    }

    pub fn last_interior(&self) -> usize {
        self.last_interior
    }

    /// Time trace of node `k` over all stored levels.
    pub fn trace(&self, k: usize) -> Vec<f64> {
        self.levels.iter().map(|lv| lv[k]).collect()
    }

    /// Value at an arbitrary `x` on level `j`: linear interpolation inside the
    /// grid, the continuation rule outside it.
    pub fn value_at(&self, j: usize, x: f64) -> f64 {
        let ax = self.grid.axis(0);
        let lv = &self.levels[j];
        let n = ax.n;
        if x < ax.x_min {
            return match self.exterior.left {
                Extension::Freeze => lv[self.first_interior],
                Extension::Data => self.exterior.data.eval(x, self.time(j)),
            };
        }
        if x > ax.x_max {
            return match self.exterior.right {
                Extension::Freeze => lv[self.last_interior],
                Extension::Data => self.exterior.data.eval(x, self.time(j)),
            };
        }
        let f = (x - ax.x_min) / ax.h();
        let i = (f.floor() as usize).min(n - 2);
        let th = f - i as f64;
        if th.abs() < 1e-12 {
            return lv[i];
        }
        if (1.0 - th).abs() < 1e-12 {
            return lv[i + 1];
        }
        lv[i] * (1.0 - th) + lv[i + 1] * th
    }
}

/// `w(x, t) = u(x^λ, t) - u(x, t)` on the grid nodes with `x1 < λ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AntisymmetricField {
    pub lambda: f64,
    /// Grid node indices with `x1 < lambda`.
    pub nodes: Vec<usize>,
    pub xs: Vec<f64>,
    /// `values[j][m]` is `w` at `nodes[m]` on level `j`.
    pub values: Vec<Vec<f64>>,
    /// Largest `|w(x) + w(x^λ)|` over pairs where both points are nodes.
    pub antisymmetry_residual: f64,
    /// Whether every reflected point landed on a lattice node.
    pub lattice_exact: bool,
}

impl AntisymmetricField {
    pub fn min(&self) -> (f64, usize, usize) {
        let mut best = (f64::INFINITY, 0, 0);
        for (j, lv) in self.values.iter().enumerate() {
            for (m, &v) in lv.iter().enumerate() {
                if v < best.0 {
                    best = (v, j, m);
                }
            }
        }
        best
    }
}

pub fn antisymmetric_difference(u: &HistoryField, lambda: f64) -> Result<AntisymmetricField> {
    let g = u.grid();
    let ax = g.axis(0);
    if !(lambda >= ax.x_min && lambda <= ax.x_max) {
        return Err(Error::OutOfRange(format!("lambda {lambda} outside [{}, {}]", ax.x_min, ax.x_max)));
    }
    let nodes: Vec<usize> = (0..g.len()).filter(|&k| g.x(k) < lambda - 1e-12 * (1.0 + lambda.abs())).collect();
    let xs: Vec<f64> = nodes.iter().map(|&k| g.x(k)).collect();
    let lattice_exact = g.reflection_compatible(lambda);
    let mirror: Vec<Option<usize>> = xs.iter().map(|&x| g.lattice_index(2.0 * lambda - x)).collect();
    let values: Vec<Vec<f64>> = (0..u.n_levels())
        .map(|j| {
            let lv = u.level(j);
            nodes
                .iter()
                .zip(&xs)
                .zip(&mirror)
                .map(|((&k, &x), m)| match m {
                    Some(i) => lv[*i] - lv[k],
                    None => u.value_at(j, 2.0 * lambda - x) - lv[k],
                })
                .collect()
        })
        .collect();
    // the value at a mirrored node is u(x) - u(x^λ) by definition; measure
    // how far the two stored samples are from cancelling
    let mut residual: f64 = 0.0;
    for (j, lv) in values.iter().enumerate() {
        let raw = u.level(j);
        for ((&k, m), w) in nodes.iter().zip(&mirror).zip(lv) {
            if let Some(i) = m {
                let w_mirror = raw[k] - raw[*i];
                residual = residual.max((w + w_mirror).abs());
            }
        }
    }
    Ok(AntisymmetricField { lambda, nodes, xs, values, antisymmetry_residual: residual, lattice_exact })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthFit {
    pub c_fit: f64,
    pub satisfied: bool,
}

/// Smallest `C >= 0` with `value >= -C (1 + |x|^gamma)` over the samples.
/// `satisfied` is false only when `budget` is given and exceeded.
pub fn growth_check(samples: &[(Vec<f64>, f64)], gamma: f64, budget: Option<f64>) -> Result<GrowthFit> {
    if samples.is_empty() {
        return Err(Error::param("samples", "empty sample list"));
    }
    let mut c: f64 = 0.0;
    for (x, v) in samples {
        if !v.is_finite() {
            return Err(Error::param("samples", "non-finite value"));
        }
        let r = x.iter().map(|a| a * a).sum::<f64>().sqrt();
        c = c.max(-v / (1.0 + r.powf(gamma)));
    }
    Ok(GrowthFit { c_fit: c, satisfied: budget.is_none_or(|b| c <= b) })
}
