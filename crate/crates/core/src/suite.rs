//! Seeded test-function suites: band-limited trigonometric polynomials,
//! optionally masked by a smooth bump.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{arg, Result};
use crate::lattice::{AxisRole, Domain, GridFunction};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupportSpec {
    pub center: Vec<f64>,
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteSpec {
    pub count: usize,
    pub modes: usize,
    pub seed: u64,
    #[serde(default)]
    pub support: Option<SupportSpec>,
}

#[derive(Clone, Debug)]
pub struct SuiteMember {
    pub seed: u64,
    pub f: GridFunction,
}

impl SuiteSpec {
    pub fn new(count: usize, modes: usize, seed: u64) -> Self {
        SuiteSpec { count, modes, seed, support: None }
    }

    pub fn with_support(mut self, center: Vec<f64>, radius: f64) -> Self {
        self.support = Some(SupportSpec { center, radius });
        self
    }

    /// Member `i` is drawn from `ChaCha8Rng::seed_from_u64(seed + i)`.
    pub fn members(&self, domain: impl Into<Arc<Domain>>) -> Result<Vec<SuiteMember>> {
        let domain = domain.into();
        if self.count == 0 {
            return arg("empty suite");
        }
        if self.modes == 0 {
            return arg("a suite needs at least one mode");
        }
        if let Some(s) = &self.support {
            if s.center.len() != domain.ndim() || !(s.radius > 0.0) {
                return arg("support needs one center coordinate per axis and a positive radius");
            }
        }
        Ok((0..self.count as u64)
            .map(|i| {
                let seed = self.seed.wrapping_add(i);
                SuiteMember { seed, f: self.member(domain.clone(), seed) }
            })
            .collect())
    }

    fn member(&self, domain: Arc<Domain>, seed: u64) -> GridFunction {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nd = domain.ndim();
        let m = self.modes as i64;
        let terms: Vec<(Vec<f64>, f64, f64)> = (0..self.modes)
            .map(|_| {
                let mut k: Vec<i64> = (0..nd).map(|_| rng.gen_range(-m..=m)).collect();
                if k.iter().all(|&v| v == 0) {
                    let j = rng.gen_range(0..nd);
                    k[j] = rng.gen_range(1..=m);
                }
                let amp = rng.gen_range(-1.0..1.0);
                let phase = rng.gen_range(0.0..2.0 * PI);
                (k.into_iter().map(|v| v as f64).collect(), amp, phase)
            })
            .collect();
        let support = self.support.clone();
        let d = domain.clone();
        GridFunction::from_fn(domain, move |x| match &support {
            None => {
                let t: Vec<f64> = (0..nd).map(|j| (x[j] - d.axis(j).lo) / d.axis(j).length()).collect();
                series(&terms, &t)
            }
            Some(s) => {
                let delta = displacement(&d, x, &s.center);
                let rho = metric_norm(&d, &delta) / s.radius;
                if rho >= 1.0 {
                    return 0.0;
                }
                let t: Vec<f64> = delta.iter().map(|v| v / (2.0 * s.radius)).collect();
                series(&terms, &t) * (1.0 - 1.0 / (1.0 - rho * rho)).exp()
            }
        })
    }
}

fn series(terms: &[(Vec<f64>, f64, f64)], t: &[f64]) -> f64 {
    terms
        .iter()
        .map(|(k, a, ph)| a * (2.0 * PI * k.iter().zip(t).map(|(k, t)| k * t).sum::<f64>() + ph).cos())
        .sum()
}

/// `x − c`, wrapped to the nearest image on periodic domains.
pub fn displacement(domain: &Domain, x: &[f64], c: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(c)
        .zip(domain.axes())
        .map(|((&x, &c), a)| {
            let mut d = x - c;
            if domain.is_periodic() {
                let l = a.length();
                d -= l * (d / l).round();
            }
            d
        })
        .collect()
}

/// Metric size of a displacement: Euclidean, or `|x| + |t|^{1/2m}`.
pub fn metric_norm(domain: &Domain, delta: &[f64]) -> f64 {
    let mut space = 0.0;
    let mut time = 0.0;
    for (a, d) in domain.axes().iter().zip(delta) {
        match a.role {
            AxisRole::Space => space += d * d,
            AxisRole::Time => time = d.abs().powf(1.0 / (2 * domain.m()) as f64),
        }
    }
    space.sqrt() + time
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::DomainKind;

    #[test]
    fn deterministic_and_seed_sensitive() {
        let d = Arc::new(Domain::interval(DomainKind::EuclideanTorus, 0.0, 1.0, 64).unwrap());
        let s = SuiteSpec::new(3, 4, 7);
        let a = s.members(d.clone()).unwrap();
        let b = s.members(d.clone()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.f.values(), y.f.values());
        }
        assert_ne!(a[0].f.values(), a[1].f.values());
        assert_eq!(a[2].seed, 9);
    }

    #[test]
    fn unmasked_members_have_zero_mean() {
        let d = Arc::new(Domain::new(DomainKind::EuclideanTorus, 2, 1, &[[0.0, 1.0], [0.0, 2.0]], &[32, 32]).unwrap());
        for m in SuiteSpec::new(5, 6, 1).members(d).unwrap() {
            assert!(m.f.integral().abs() < 1e-10);
        }
    }

    #[test]
    fn masked_members_vanish_off_support() {
        let d = Arc::new(Domain::interval(DomainKind::EuclideanTorus, -8.0, 8.0, 1024).unwrap());
        for m in SuiteSpec::new(4, 5, 2).with_support(vec![0.0], 0.5).members(d.clone()).unwrap() {
            for (i, v) in m.f.values().iter().enumerate() {
                if d.cell_center(i)[0].abs() >= 0.5 {
                    assert_eq!(*v, 0.0);
                }
            }
            assert!(m.f.sup_abs() > 0.0);
        }
    }
}
