use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};

/// Geometry of the sampled region.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    EuclideanBox,
    EuclideanTorus,
    /// Space-time box; axis 0 is time.
    ParabolicBox,
    /// Space-time box periodic in every axis; axis 0 is time.
    ParabolicTorus,
    /// Box whose lower face on axis 0 is the wall `x1 = lo`.
    HalfSpaceBox,
}

impl DomainKind {
    pub fn is_parabolic(self) -> bool {
        matches!(self, DomainKind::ParabolicBox | DomainKind::ParabolicTorus)
    }

    pub fn is_periodic(self) -> bool {
        matches!(self, DomainKind::EuclideanTorus | DomainKind::ParabolicTorus)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AxisRole {
    Time,
    Space,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub role: AxisRole,
}

impl Axis {
    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / self.points as f64
    }

    /// Cell-centered coordinate of index `i`.
    pub fn center(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.step()
    }
}

/// A uniform, cell-centered grid on a box, torus, or space-time region.
///
/// Values are stored row-major with the last axis contiguous.
#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    kind: DomainKind,
    m: u32,
    axes: Vec<Axis>,
}

/// JSON form of a [`Domain`]: `{kind, d, m, extents:[[lo,hi],…], points:[…]}`.
///
/// For parabolic kinds the first extent/point entry is the time axis and `d`
/// counts the spatial axes only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub kind: DomainKind,
    pub d: usize,
    #[serde(default = "one")]
    pub m: u32,
    pub extents: Vec<[f64; 2]>,
    pub points: Vec<usize>,
}

fn one() -> u32 {
    1
}

impl Domain {
    /// `extents`/`points` list the time axis first for parabolic kinds.
    pub fn new(kind: DomainKind, d: usize, m: u32, extents: &[[f64; 2]], points: &[usize]) -> Result<Self> {
        if m == 0 {
            return arg("parabolic order m must be a positive integer");
        }
        if !kind.is_parabolic() && m != 1 {
            return arg(format!("non-parabolic domain requires m = 1, got {m}"));
        }
        let n_axes = if kind.is_parabolic() { d + 1 } else { d };
        if n_axes == 0 || n_axes > 8 {
            return arg(format!("domains have 1 to 8 axes, got {n_axes}"));
        }
        if extents.len() != n_axes || points.len() != n_axes {
            return arg(format!(
                "expected {n_axes} extents and point counts, got {} and {}",
                extents.len(),
                points.len()
            ));
        }
        let mut axes = Vec::with_capacity(n_axes);
        for (k, (e, &n)) in extents.iter().zip(points).enumerate() {
            if !(e[0].is_finite() && e[1].is_finite()) || e[1] <= e[0] {
                return Err(Error::Domain(format!("axis {k} extent [{}, {}] has no positive length", e[0], e[1])));
            }
            if n < 2 {
                return Err(Error::Domain(format!("axis {k} needs at least 2 grid points, got {n}")));
            }
            let role = if kind.is_parabolic() && k == 0 { AxisRole::Time } else { AxisRole::Space };
            axes.push(Axis { lo: e[0], hi: e[1], points: n, role });
        }
        Ok(Domain { kind, m, axes })
    }

    /// Unit-length box `[0,1)^d` style helper used throughout tests.
    pub fn interval(kind: DomainKind, lo: f64, hi: f64, points: usize) -> Result<Self> {
        Domain::new(kind, 1, 1, &[[lo, hi]], &[points])
    }

    pub fn from_spec(spec: &DomainSpec) -> Result<Self> {
        Domain::new(spec.kind, spec.d, spec.m, &spec.extents, &spec.points)
    }

    pub fn to_spec(&self) -> DomainSpec {
        DomainSpec {
            kind: self.kind,
            d: self.spatial_dim(),
            m: self.m,
            extents: self.axes.iter().map(|a| [a.lo, a.hi]).collect(),
            points: self.axes.iter().map(|a| a.points).collect(),
        }
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, k: usize) -> &Axis {
        &self.axes[k]
    }

    pub fn ndim(&self) -> usize {
        self.axes.len()
    }

    pub fn spatial_dim(&self) -> usize {
        self.axes.iter().filter(|a| a.role == AxisRole::Space).count()
    }

    pub fn time_axis(&self) -> Option<usize> {
        self.axes.iter().position(|a| a.role == AxisRole::Time)
    }

    pub fn spatial_axes(&self) -> Vec<usize> {
        (0..self.ndim()).filter(|&k| self.axes[k].role == AxisRole::Space).collect()
    }

    pub fn is_periodic(&self) -> bool {
        self.kind.is_periodic()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.points).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.points).collect()
    }

    pub fn steps(&self) -> Vec<f64> {
        self.axes.iter().map(Axis::step).collect()
    }

    pub fn cell_measure(&self) -> f64 {
        self.axes.iter().map(Axis::step).product()
    }

    pub fn measure(&self) -> f64 {
        self.axes.iter().map(Axis::length).product()
    }

    /// Row-major strides (last axis contiguous).
    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.ndim()];
        for k in (0..self.ndim().saturating_sub(1)).rev() {
            s[k] = s[k + 1] * self.axes[k + 1].points;
        }
        s
    }

    pub fn unravel_into(&self, mut flat: usize, out: &mut [usize]) {
        for k in (0..self.ndim()).rev() {
            let n = self.axes[k].points;
            out[k] = flat % n;
            flat /= n;
        }
    }

    pub fn unravel(&self, flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.ndim()];
        self.unravel_into(flat, &mut out);
        out
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.axes).fold(0, |acc, (&i, a)| acc * a.points + i)
    }

    pub fn cell_center(&self, flat: usize) -> Vec<f64> {
        let idx = self.unravel(flat);
        idx.iter().zip(&self.axes).map(|(&i, a)| a.center(i)).collect()
    }

    /// Index of the cell whose half-open extent contains `point`.
    pub fn locate(&self, point: &[f64]) -> Result<Vec<usize>> {
        if point.len() != self.ndim() {
            return Err(Error::Domain(format!("point has {} coordinates, domain has {} axes", point.len(), self.ndim())));
        }
        let mut idx = Vec::with_capacity(self.ndim());
        for (k, (&x, a)) in point.iter().zip(&self.axes).enumerate() {
            if !(x >= a.lo && x < a.hi) {
                return Err(Error::Domain(format!("coordinate {x} outside axis {k} extent [{}, {})", a.lo, a.hi)));
            }
            let i = (((x - a.lo) / a.step()).floor() as usize).min(a.points - 1);
            idx.push(i);
        }
        Ok(idx)
    }

    /// Sub-grid on the listed axes (kept in the given order). The kind is
    /// derived from the retained axes: a retained time axis keeps the domain
    /// parabolic, a retained wall axis keeps it a half space.
    pub fn restrict(&self, axes: &[usize]) -> Result<Domain> {
        if axes.is_empty() {
            return arg("cannot restrict a domain to zero axes");
        }
        for (i, &k) in axes.iter().enumerate() {
            if k >= self.ndim() || axes[..i].contains(&k) {
                return arg(format!("invalid axis list {axes:?}"));
            }
        }
        let has_time = axes.iter().any(|&k| self.axes[k].role == AxisRole::Time);
        if has_time && self.axes[axes[0]].role != AxisRole::Time {
            return arg("the time axis must come first in a restricted axis list");
        }
        let kind = match (self.kind, has_time) {
            (DomainKind::ParabolicBox, true) => DomainKind::ParabolicBox,
            (DomainKind::ParabolicTorus, true) => DomainKind::ParabolicTorus,
            (DomainKind::ParabolicTorus, false) | (DomainKind::EuclideanTorus, _) => DomainKind::EuclideanTorus,
            (DomainKind::HalfSpaceBox, _) if axes.contains(&0) => DomainKind::HalfSpaceBox,
            _ => DomainKind::EuclideanBox,
        };
        let m = if kind.is_parabolic() { self.m } else { 1 };
        Ok(Domain {
            kind,
            m,
            axes: axes.iter().map(|&k| self.axes[k].clone()).collect(),
        })
    }
}
