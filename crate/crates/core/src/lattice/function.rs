use std::sync::Arc;

use crate::error::{arg, Error, Result};

use super::Domain;

/// Real samples at the cell centers of a [`Domain`].
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    domain: Arc<Domain>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(domain: impl Into<Arc<Domain>>, values: Vec<f64>) -> Result<Self> {
        let domain = domain.into();
        if values.len() != domain.len() {
            return arg(format!("expected {} values, got {}", domain.len(), values.len()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Invariant(format!("non-finite value at cell {i}")));
        }
        Ok(GridFunction { domain, values })
    }

    pub fn constant(domain: impl Into<Arc<Domain>>, c: f64) -> Self {
        let domain = domain.into();
        let values = vec![c; domain.len()];
        GridFunction { domain, values }
    }

    pub fn zeros(domain: impl Into<Arc<Domain>>) -> Self {
        Self::constant(domain, 0.0)
    }

    /// Samples `f` at every cell center.
    pub fn from_fn(domain: impl Into<Arc<Domain>>, mut f: impl FnMut(&[f64]) -> f64) -> Self {
        let domain = domain.into();
        let nd = domain.ndim();
        let mut idx = vec![0usize; nd];
        let mut x = vec![0.0; nd];
        let values = (0..domain.len())
            .map(|flat| {
                domain.unravel_into(flat, &mut idx);
                for k in 0..nd {
                    x[k] = domain.axis(k).center(idx[k]);
                }
                f(&x)
            })
            .collect();
        GridFunction { domain, values }
    }

    /// Same domain, new values; lengths must agree.
    pub fn with_values(&self, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), self.values.len(), "value count mismatch");
        GridFunction { domain: self.domain.clone(), values }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        self.with_values(self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.require_same_domain(other)?;
        Ok(self.with_values(self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect()))
    }

    pub fn abs(&self) -> Self {
        self.map(f64::abs)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn domain_arc(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn cell_measure(&self) -> f64 {
        self.domain.cell_measure()
    }

    pub fn same_domain(&self, other: &GridFunction) -> bool {
        Arc::ptr_eq(&self.domain, &other.domain) || *self.domain == *other.domain
    }

    pub fn require_same_domain(&self, other: &GridFunction) -> Result<()> {
        if self.same_domain(other) {
            Ok(())
        } else {
            arg("grid functions live on different domains")
        }
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_measure()
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// `‖f‖_{L_p(μ)}`; `p = ∞` gives the max norm.
    pub fn lp_norm(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.sup_abs();
        }
        let s: f64 = self.values.iter().map(|v| v.abs().powf(p)).sum();
        (s * self.cell_measure()).powf(1.0 / p)
    }

    /// `‖f‖_{L_p(w dμ)}` with `w` sampled on the same grid.
    pub fn weighted_lp_norm(&self, w: &[f64], p: f64) -> f64 {
        debug_assert_eq!(w.len(), self.values.len());
        let s: f64 = self.values.iter().zip(w).map(|(v, w)| v.abs().powf(p) * w).sum();
        (s * self.cell_measure()).powf(1.0 / p)
    }

    /// `∫ f w dμ`.
    pub fn weighted_integral(&self, w: &[f64]) -> f64 {
        self.values.iter().zip(w).map(|(v, w)| v * w).sum::<f64>() * self.cell_measure()
    }

    /// Cells where `f ≠ 0`.
    pub fn support(&self) -> Vec<bool> {
        self.values.iter().map(|&v| v != 0.0).collect()
    }
}
