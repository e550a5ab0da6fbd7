//! Uniform grids with an interior/exterior classification.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
}

impl Axis {
    pub fn h(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.h()
    }
}

/// Which nodes are unknowns. Boundaries are excluded (open sets).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainKind {
    /// `a < x1 < b`.
    Interval { a: f64, b: f64 },
    /// `|x - center| < radius`.
    Ball { center: Vec<f64>, radius: f64 },
    /// `lambda - 2 l < x1 < lambda`.
    Slab { lambda: f64, l: f64 },
    /// `0 < x1 < length`; the half space cut at a finite length.
    HalfSpaceTruncation { length: f64 },
    /// A ball together with its mirror image across `x1 = lambda`.
    MirroredBall { center: Vec<f64>, radius: f64, lambda: f64 },
}

impl DomainKind {
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            DomainKind::Interval { a, b } => *a < x[0] && x[0] < *b,
            DomainKind::Ball { center, radius } => dist(x, center) < *radius,
            DomainKind::Slab { lambda, l } => lambda - 2.0 * l < x[0] && x[0] < *lambda,
            DomainKind::HalfSpaceTruncation { length } => 0.0 < x[0] && x[0] < *length,
            DomainKind::MirroredBall { center, radius, lambda } => {
                let mut m = center.clone();
                m[0] = 2.0 * lambda - center[0];
                dist(x, center) < *radius || dist(x, &m) < *radius
            }
        }
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpaceGrid {
    axes: Vec<Axis>,
    domain_kind: DomainKind,
    #[serde(skip)]
    interior_mask: Vec<bool>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    axes: Vec<Axis>,
    domain_kind: DomainKind,
}

impl<'de> Deserialize<'de> for SpaceGrid {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawGrid::deserialize(d)?;
        Ok(SpaceGrid::build(raw.axes, raw.domain_kind))
    }
}

impl SpaceGrid {
    pub fn new(axes: Vec<Axis>, domain_kind: DomainKind) -> Result<Self> {
        let g = Self::build(axes, domain_kind);
        g.validate()?;
        Ok(g)
    }

    pub fn line(x_min: f64, x_max: f64, n: usize, domain_kind: DomainKind) -> Result<Self> {
        Self::new(vec![Axis { x_min, x_max, n }], domain_kind)
    }

    fn build(axes: Vec<Axis>, domain_kind: DomainKind) -> Self {
        let mut g = SpaceGrid { axes, domain_kind, interior_mask: Vec::new() };
        if g.axes.iter().all(|a| a.n >= 2) && !g.axes.is_empty() {
            // nodes within rounding of the boundary count as exterior
            let eps = 1e-9 * g.axes.iter().map(Axis::h).fold(f64::INFINITY, f64::min);
            g.interior_mask = (0..g.len())
                .map(|k| {
                    let x = g.point(k);
                    (0..x.len()).all(|i| {
                        [-eps, 0.0, eps].iter().all(|d| {
                            let mut y = x.clone();
                            y[i] += d;
                            g.domain_kind.contains(&y)
                        })
                    })
                })
                .collect();
        }
        g
    }

    pub fn validate(&self) -> Result<()> {
        if self.axes.is_empty() || self.axes.len() > 2 {
            return Err(Error::param("axes", "dimension must be 1 or 2"));
        }
        for (i, a) in self.axes.iter().enumerate() {
            if a.n < 3 {
                return Err(Error::param(format!("axes[{i}].n"), "need at least 3 points"));
            }
            if !(a.x_min.is_finite() && a.x_max.is_finite() && a.x_max > a.x_min) {
                return Err(Error::param(format!("axes[{i}]"), "need finite x_min < x_max"));
            }
        }
        let dim = self.axes.len();
        let bad_center = match &self.domain_kind {
            DomainKind::Ball { center, radius } | DomainKind::MirroredBall { center, radius, .. } => {
                if !(*radius > 0.0) {
                    return Err(Error::param("domain_kind.radius", "must be positive"));
                }
                center.len() != dim
            }
            DomainKind::Interval { a, b } if !(a < b) => {
                return Err(Error::param("domain_kind", "interval needs a < b"));
            }
            DomainKind::Slab { l, .. } if !(*l > 0.0) => {
                return Err(Error::param("domain_kind.l", "must be positive"));
            }
            DomainKind::HalfSpaceTruncation { length } if !(*length > 0.0) => {
                return Err(Error::param("domain_kind.length", "must be positive"));
            }
            _ => false,
        };
        if bad_center {
            return Err(Error::param("domain_kind.center", "dimension mismatch"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axis(&self, k: usize) -> &Axis {
        &self.axes[k]
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn domain_kind(&self) -> &DomainKind {
        &self.domain_kind
    }

    /// Spacing along the first axis.
    pub fn h(&self) -> f64 {
        self.axes[0].h()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.n).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinates of node `k` (first axis varies fastest).
    pub fn point(&self, k: usize) -> Vec<f64> {
        let mut rem = k;
        self.axes
            .iter()
            .map(|a| {
                let i = rem % a.n;
                rem /= a.n;
                a.node(i)
            })
            .collect()
    }

    /// First coordinate of node `k`.
    pub fn x(&self, k: usize) -> f64 {
        self.axes[0].node(k % self.axes[0].n)
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.axes[0].n).map(|i| self.axes[0].node(i)).collect()
    }

    pub fn is_interior(&self, k: usize) -> bool {
        self.interior_mask[k]
    }

    pub fn interior_mask(&self) -> &[bool] {
        &self.interior_mask
    }

    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.len()).filter(|&k| self.interior_mask[k]).collect()
    }

    /// Index of the node at `x` on the first axis if `x` is a lattice point.
    pub fn lattice_index(&self, x: f64) -> Option<usize> {
        let a = &self.axes[0];
        let f = (x - a.x_min) / a.h();
        let i = f.round();
        if (f - i).abs() < 1e-9 && i >= 0.0 && (i as usize) < a.n {
            Some(i as usize)
        } else {
            None
        }
    }

    /// Whether reflecting across `x1 = lambda` maps lattice points to lattice
    /// points, i.e. `2 (lambda - x_min) / h` is an integer.
    pub fn reflection_compatible(&self, lambda: f64) -> bool {
        let f = 2.0 * (lambda - self.axes[0].x_min) / self.h();
        (f - f.round()).abs() < 1e-9
    }
}
