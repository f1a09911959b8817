//! Weighted mixed `L_{p,q}` norms and λ-scaled derivative sums.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{arg, Result};
use crate::lattice::{Domain, GridFunction};
use crate::pdecheck::DerivativeStack;
use crate::weights::{check_split, split_indices, Weight, WeightSpec, WeightStructure};

/// Inner `L_p(w₁)` over the `split` axes, outer `L_q(w₂)` over the rest.
#[derive(Clone, Debug)]
pub struct MixedNormSpec {
    domain: Arc<Domain>,
    split: Vec<usize>,
    rest: Vec<usize>,
    p: f64,
    q: f64,
    w1: Weight,
    w2: Weight,
    i1: Vec<usize>,
    i2: Vec<usize>,
}

impl MixedNormSpec {
    pub fn new(domain: impl Into<Arc<Domain>>, split: &[usize], p: f64, q: f64, w1: Weight, w2: Weight) -> Result<Self> {
        let domain = domain.into();
        for (name, e) in [("p", p), ("q", q)] {
            if !(e > 1.0 && e.is_finite()) {
                return arg(format!("{name} must lie in (1, ∞), got {e}"));
            }
        }
        let rest = check_split(&domain, split)?;
        if *w1.domain() != domain.restrict(split)? || *w2.domain() != domain.restrict(&rest)? {
            return arg("weight factors do not match the axis split");
        }
        let (i1, i2) = split_indices(&domain, split, &rest);
        Ok(MixedNormSpec { domain, split: split.to_vec(), rest, p, q, w1, w2, i1, i2 })
    }

    /// Unit weights on both factors.
    pub fn unweighted(domain: impl Into<Arc<Domain>>, split: &[usize], p: f64, q: f64) -> Result<Self> {
        let domain = domain.into();
        let rest = check_split(&domain, split)?;
        let w1 = Weight::unit(domain.restrict(split)?);
        let w2 = Weight::unit(domain.restrict(&rest)?);
        Self::new(domain, split, p, q, w1, w2)
    }

    /// Uses the factors of a product weight.
    pub fn from_weight(w: &Weight, p: f64, q: f64) -> Result<Self> {
        match w.structure() {
            WeightStructure::Product { split, w1, w2 } => {
                Self::new(Arc::new(w.domain().clone()), split, p, q, (**w1).clone(), (**w2).clone())
            }
            _ => arg("mixed norms need a product weight"),
        }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn split(&self) -> &[usize] {
        &self.split
    }

    pub fn rest(&self) -> &[usize] {
        &self.rest
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn w1(&self) -> &Weight {
        &self.w1
    }

    pub fn w2(&self) -> &Weight {
        &self.w2
    }

    /// Same split and weights, new exponents.
    pub fn with_exponents(&self, p: f64, q: f64) -> Result<Self> {
        Self::new(self.domain.clone(), &self.split, p, q, self.w1.clone(), self.w2.clone())
    }

    /// The product weight `w₁ ⊗ w₂` on the full domain.
    pub fn full_weight(&self) -> Vec<f64> {
        self.i1.iter().zip(&self.i2).map(|(&a, &b)| self.w1.values()[a] * self.w2.values()[b]).collect()
    }

    /// `(∫(∫|f|^p w₁ dμ₁)^{q/p} w₂ dμ₂)^{1/q}` for raw values on the domain.
    pub fn norm_of(&self, values: &[f64]) -> f64 {
        let mut inner = vec![0.0; self.w2.values().len()];
        let w1 = self.w1.values();
        for ((v, &a), &b) in values.iter().zip(&self.i1).zip(&self.i2) {
            inner[b] += v.abs().powf(self.p) * w1[a];
        }
        let h1 = self.w1.base().cell_measure();
        let h2 = self.w2.base().cell_measure();
        let outer: f64 = inner.iter().zip(self.w2.values()).map(|(s, w)| (s * h1).powf(self.q / self.p) * w).sum();
        (outer * h2).powf(1.0 / self.q)
    }
}

/// JSON form: `{split, p, q, w1, w2}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixedNormConfig {
    pub split: Vec<usize>,
    pub p: f64,
    pub q: f64,
    #[serde(default = "unit_spec")]
    pub w1: WeightSpec,
    #[serde(default = "unit_spec")]
    pub w2: WeightSpec,
}

fn unit_spec() -> WeightSpec {
    WeightSpec::Unit
}

impl MixedNormConfig {
    pub fn build(&self, domain: impl Into<Arc<Domain>>) -> Result<MixedNormSpec> {
        let domain = domain.into();
        let rest = check_split(&domain, &self.split)?;
        let w1 = self.w1.build(domain.restrict(&self.split)?)?;
        let w2 = self.w2.build(domain.restrict(&rest)?)?;
        MixedNormSpec::new(domain, &self.split, self.p, self.q, w1, w2)
    }
}

pub fn mixed_norm(f: &GridFunction, spec: &MixedNormSpec) -> Result<f64> {
    if f.domain() != spec.domain() {
        return arg("function domain does not match the mixed-norm axes");
    }
    Ok(spec.norm_of(f.values()))
}

/// `‖u_t‖ + Σ_{k ≤ 2m} λ^{1−k/2m} ‖D^k u‖`, with `|D^k u|` the pointwise
/// Euclidean norm over multi-indices of order `k`.
pub fn lambda_scaled_sum(stack: &DerivativeStack, lambda: f64, m: u32, spec: &MixedNormSpec) -> Result<f64> {
    if !(lambda >= 1.0 && lambda.is_finite()) {
        return arg(format!("lambda must be at least 1, got {lambda}"));
    }
    if m == 0 {
        return arg("m must be positive");
    }
    let top = 2 * m as usize;
    if stack.max_order() < top {
        return arg(format!("stack holds orders up to {}, need {top}", stack.max_order()));
    }
    let mut total = mixed_norm(&stack.ut, spec)?;
    for k in 0..=top {
        let scale = lambda.powf(1.0 - k as f64 / top as f64);
        total += scale * mixed_norm(&stack.order_magnitude(k)?, spec)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::DomainKind;
    use crate::pdecheck::{differentiate, Backend};
    use crate::weights::power_weight;

    fn plane() -> Arc<Domain> {
        Arc::new(Domain::new(DomainKind::EuclideanBox, 2, 1, &[[-1.0, 1.0], [0.0, 1.0]], &[16, 8]).unwrap())
    }

    #[test]
    fn collapses_to_lp_when_p_equals_q() {
        let d = plane();
        let f = GridFunction::from_fn(d.clone(), |x| x[0] * x[0] - x[1] + 0.3);
        let spec = MixedNormSpec::unweighted(d, &[0], 2.5, 2.5).unwrap();
        let a = mixed_norm(&f, &spec).unwrap();
        assert!((a - f.lp_norm(2.5)).abs() < 1e-10 * a);
    }

    #[test]
    fn weighted_collapse_and_separable_product() {
        let d = plane();
        let w1 = power_weight(0, 0.5, d.restrict(&[0]).unwrap()).unwrap();
        let w2 = Weight::new(GridFunction::from_fn(d.restrict(&[1]).unwrap(), |x| 1.0 + x[0])).unwrap();
        let spec = MixedNormSpec::new(d.clone(), &[0], 3.0, 3.0, w1.clone(), w2.clone()).unwrap();
        let f = GridFunction::from_fn(d.clone(), |x| (3.0 * x[0]).sin() + x[1]);
        let full = spec.full_weight();
        assert!((mixed_norm(&f, &spec).unwrap() - f.weighted_lp_norm(&full, 3.0)).abs() < 1e-10);
        let spec = MixedNormSpec::new(d.clone(), &[0], 2.0, 3.0, w1.clone(), w2.clone()).unwrap();
        let g = GridFunction::from_fn(d.restrict(&[0]).unwrap(), |x| x[0].cos());
        let h = GridFunction::from_fn(d.restrict(&[1]).unwrap(), |x| 2.0 - x[0]);
        let f = GridFunction::from_fn(d, |x| x[0].cos() * (2.0 - x[1]));
        let expect = g.weighted_lp_norm(w1.values(), 2.0) * h.weighted_lp_norm(w2.values(), 3.0);
        assert!((mixed_norm(&f, &spec).unwrap() - expect).abs() < 1e-10 * expect);
    }

    #[test]
    fn unit_function_on_unit_domain() {
        let d = Arc::new(Domain::new(DomainKind::EuclideanBox, 2, 1, &[[0.0, 1.0]; 2], &[4, 4]).unwrap());
        let spec = MixedNormSpec::unweighted(d.clone(), &[1], 2.0, 4.0).unwrap();
        assert!((mixed_norm(&GridFunction::constant(d, 1.0), &spec).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn lambda_scaled_sum_arithmetic() {
        let d = Arc::new(Domain::new(DomainKind::ParabolicTorus, 1, 1, &[[0.0, 1.0], [0.0, 1.0]], &[8, 16]).unwrap());
        let spec = MixedNormSpec::unweighted(d.clone(), &[1], 2.0, 2.0).unwrap();
        let zero = differentiate(&GridFunction::zeros(d.clone()), 2, Backend::Spectral).unwrap();
        assert_eq!(lambda_scaled_sum(&zero, 4.0, 1, &spec).unwrap(), 0.0);
        let u = GridFunction::from_fn(d, |x| (2.0 * std::f64::consts::PI * x[1]).sin());
        let s = differentiate(&u, 2, Backend::Spectral).unwrap();
        let n: Vec<f64> = (0..=2).map(|k| mixed_norm(&s.order_magnitude(k).unwrap(), &spec).unwrap()).collect();
        let got = lambda_scaled_sum(&s, 4.0, 1, &spec).unwrap();
        assert!((got - (4.0 * n[0] + 2.0 * n[1] + n[2])).abs() < 1e-9 * got);
        let short = differentiate(&u, 1, Backend::Spectral).unwrap();
        assert!(lambda_scaled_sum(&short, 4.0, 1, &spec).is_err());
    }
}
