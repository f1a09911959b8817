use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};
use crate::lattice::{AxisRole, Domain, DomainKind, GridFunction};

use super::BallFamily;

#[derive(Clone, Debug, PartialEq)]
pub enum WeightStructure {
    Plain,
    Power { axis: usize, exponent: f64, offset: f64 },
    /// `w₁(x′)·w₂(x″)` with `x′` the axes in `split`.
    Product { split: Vec<usize>, w1: Box<Weight>, w2: Box<Weight> },
}

/// A strictly positive grid function, optionally with known structure.
#[derive(Clone, Debug, PartialEq)]
pub struct Weight {
    base: GridFunction,
    structure: WeightStructure,
    cached_ap: Vec<(f64, u64, f64)>,
}

impl Weight {
    pub fn new(base: GridFunction) -> Result<Self> {
        Self::with_structure(base, WeightStructure::Plain)
    }

    fn with_structure(base: GridFunction, structure: WeightStructure) -> Result<Self> {
        if let Some(i) = base.values().iter().position(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::Invariant(format!(
                "weight value {} at cell {:?} is not positive and finite",
                base.values()[i],
                base.domain().unravel(i)
            )));
        }
        Ok(Weight { base, structure, cached_ap: Vec::new() })
    }

    pub fn unit(domain: impl Into<Arc<Domain>>) -> Self {
        Weight { base: GridFunction::constant(domain, 1.0), structure: WeightStructure::Plain, cached_ap: Vec::new() }
    }

    pub fn base(&self) -> &GridFunction {
        &self.base
    }

    pub fn values(&self) -> &[f64] {
        self.base.values()
    }

    pub fn domain(&self) -> &Domain {
        self.base.domain()
    }

    pub fn structure(&self) -> &WeightStructure {
        &self.structure
    }

    pub fn is_unit(&self) -> bool {
        self.values().iter().all(|&v| v == 1.0)
    }

    /// `w^s` pointwise.
    pub fn powf(&self, s: f64) -> Result<Weight> {
        Weight::new(self.base.map(|v| v.powf(s)))
    }

    /// `ω(E)` for a cell list.
    pub fn measure_of(&self, cells: &[usize]) -> f64 {
        cells.iter().map(|&c| self.values()[c]).sum::<f64>() * self.base.cell_measure()
    }

    pub fn total_measure(&self) -> f64 {
        self.base.integral()
    }

    /// Family estimate of `[w]_{A_p}`, computed once per `(p, family)`.
    pub fn cache_ap(&mut self, p: f64, fam: &BallFamily) -> Result<f64> {
        if let Some(v) = self.cached_ap_for(p, fam) {
            return Ok(v);
        }
        let v = super::ap_characteristic(self, p, fam)?;
        self.cached_ap.push((p, fam.fingerprint(), v));
        Ok(v)
    }

    pub fn cached_ap_for(&self, p: f64, fam: &BallFamily) -> Option<f64> {
        let fp = fam.fingerprint();
        self.cached_ap.iter().find(|(q, f, _)| *q == p && *f == fp).map(|e| e.2)
    }

    /// All cached `(p, [w]_{A_p})` entries.
    pub fn cached_ap(&self) -> Vec<(f64, f64)> {
        self.cached_ap.iter().map(|e| (e.0, e.2)).collect()
    }
}

/// `|x_axis − offset|^exponent`; on a half space, axis 0 measures distance to the wall.
pub fn power_weight(axis: usize, exponent: f64, domain: impl Into<Arc<Domain>>) -> Result<Weight> {
    power_weight_with_offset(axis, exponent, 0.0, domain)
}

pub fn power_weight_with_offset(axis: usize, exponent: f64, offset: f64, domain: impl Into<Arc<Domain>>) -> Result<Weight> {
    let domain = domain.into();
    if axis >= domain.ndim() {
        return arg(format!("axis {axis} outside a {}-axis domain", domain.ndim()));
    }
    if !exponent.is_finite() {
        return arg("exponent must be finite");
    }
    let origin = if domain.kind() == DomainKind::HalfSpaceBox && axis == 0 { domain.axis(0).lo } else { offset };
    let a = domain.axis(axis);
    for i in 0..a.points {
        if exponent != 0.0 && a.center(i) - origin == 0.0 {
            return Err(Error::Construction(format!(
                "grid point {} on axis {axis} sits on the singular set of |x - {origin}|^{exponent}",
                a.center(i)
            )));
        }
    }
    let base = GridFunction::from_fn(domain, |x| (x[axis] - origin).abs().powf(exponent));
    Weight::with_structure(base, WeightStructure::Power { axis, exponent, offset: origin })
        .map_err(|e| Error::Construction(e.to_string()))
}

/// Complement of `split` in `0..ndim`, in increasing order.
pub fn complement_axes(ndim: usize, split: &[usize]) -> Vec<usize> {
    (0..ndim).filter(|k| !split.contains(k)).collect()
}

/// Checks that `split` is a proper, time-free subset of the axes.
pub fn check_split(domain: &Domain, split: &[usize]) -> Result<Vec<usize>> {
    if split.is_empty() || split.len() >= domain.ndim() {
        return arg(format!("split {split:?} must be a nonempty proper subset of {} axes", domain.ndim()));
    }
    for (i, &k) in split.iter().enumerate() {
        if k >= domain.ndim() || split[..i].contains(&k) {
            return arg(format!("invalid split {split:?}"));
        }
        if domain.axis(k).role == AxisRole::Time {
            return arg("the time axis belongs to the x'' factor");
        }
    }
    Ok(complement_axes(domain.ndim(), split))
}

/// Index maps from full cells to `(x′ cell, x″ cell)`.
pub fn split_indices(domain: &Domain, split: &[usize], rest: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let shape = domain.shape();
    let mut idx = vec![0usize; domain.ndim()];
    let mut i1 = Vec::with_capacity(domain.len());
    let mut i2 = Vec::with_capacity(domain.len());
    for flat in 0..domain.len() {
        domain.unravel_into(flat, &mut idx);
        i1.push(split.iter().fold(0, |acc, &k| acc * shape[k] + idx[k]));
        i2.push(rest.iter().fold(0, |acc, &k| acc * shape[k] + idx[k]));
    }
    (i1, i2)
}

/// `w(x) = w₁(x′)·w₂(x″)`; `w1` lives on the `split` axes, `w2` on the rest.
pub fn product_weight(domain: impl Into<Arc<Domain>>, split: &[usize], w1: Weight, w2: Weight) -> Result<Weight> {
    let domain = domain.into();
    let rest = check_split(&domain, split)?;
    if *w1.domain() != domain.restrict(split)? {
        return arg("w1 must live on the split axes of the domain");
    }
    if *w2.domain() != domain.restrict(&rest)? {
        return arg("w2 must live on the remaining axes of the domain");
    }
    let (i1, i2) = split_indices(&domain, split, &rest);
    let values = i1.iter().zip(&i2).map(|(&a, &b)| w1.values()[a] * w2.values()[b]).collect();
    let base = GridFunction::new(domain, values)?;
    Weight::with_structure(base, WeightStructure::Product { split: split.to_vec(), w1: Box::new(w1), w2: Box::new(w2) })
}

/// JSON description of a weight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "structure", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSpec {
    Unit,
    Power {
        axis: usize,
        exponent: f64,
        #[serde(default)]
        offset: f64,
    },
    Product {
        #[serde(default)]
        split: Option<Vec<usize>>,
        w1: Box<WeightSpec>,
        w2: Box<WeightSpec>,
    },
}

impl WeightSpec {
    pub fn build(&self, domain: impl Into<Arc<Domain>>) -> Result<Weight> {
        let domain = domain.into();
        match self {
            WeightSpec::Unit => Ok(Weight::unit(domain)),
            WeightSpec::Power { axis, exponent, offset } => power_weight_with_offset(*axis, *exponent, *offset, domain),
            WeightSpec::Product { split, w1, w2 } => {
                let split = match split {
                    Some(s) => s.clone(),
                    None => vec![*domain.spatial_axes().first().ok_or_else(|| Error::Argument("no spatial axis".into()))?],
                };
                let rest = check_split(&domain, &split)?;
                let a = w1.build(domain.restrict(&split)?)?;
                let b = w2.build(domain.restrict(&rest)?)?;
                product_weight(domain, &split, a, b)
            }
        }
    }
}
