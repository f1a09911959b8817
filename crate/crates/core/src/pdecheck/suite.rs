use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{arg, Result};
use crate::lattice::{Domain, DomainKind, DomainSpec};
use crate::mixednorm::MixedNormSpec;
use crate::suite::SuiteSpec;
use crate::weights::{WeightSpec, WeightStructure};

use super::diff::{differentiate, Backend};
use super::model::{apriori_ratio, manufacture_rhs, rough_coefficient, Form, ModelOperator, Profile, ProfileAxis};
use super::oscillation::{oscillations, Oscillations};

fn default_backend() -> Backend {
    Backend::Spectral
}

fn default_form() -> Form {
    Form::NonDivergence
}

fn default_axis() -> ProfileAxis {
    ProfileAxis::X1
}

fn default_pieces() -> Vec<usize> {
    vec![1]
}

fn default_lambda0() -> f64 {
    1.0
}

fn default_spread() -> f64 {
    3.0
}

/// Experiment description for [`estimate_suite`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdeSuiteConfig {
    pub m: u32,
    pub d: usize,
    pub delta: f64,
    pub lambdas: Vec<f64>,
    /// `unit`, or a `product` whose split matches `split`.
    pub weight: WeightSpec,
    pub p: f64,
    pub q: f64,
    /// Axes of the inner `L_p` norm.
    pub split: Vec<usize>,
    pub suite: SuiteSpec,
    #[serde(default = "default_backend")]
    pub backend: Backend,
    /// Space-time grid; defaults to a periodic unit cell with 32 points per axis.
    #[serde(default)]
    pub domain: Option<DomainSpec>,
    #[serde(default = "default_form")]
    pub form: Form,
    /// Piece counts of the leading coefficient; 1 means constant.
    #[serde(default = "default_pieces")]
    pub pieces: Vec<usize>,
    #[serde(default = "default_axis")]
    pub profile_axis: ProfileAxis,
    #[serde(default)]
    pub coefficient_seed: u64,
    #[serde(default = "default_lambda0")]
    pub lambda0: f64,
    /// Largest allowed max/min of sup ratios across `λ` or across roughness.
    #[serde(default = "default_spread")]
    pub max_spread: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PdeRow {
    pub seed: u64,
    pub lambda: f64,
    pub pieces: usize,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PdeSup {
    pub lambda: f64,
    pub pieces: usize,
    pub sup_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProfileDiagnostics {
    pub pieces: usize,
    pub oscillations: Oscillations,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PdeSuiteReport {
    /// Sorted by `(seed, λ, pieces)`.
    pub rows: Vec<PdeRow>,
    pub sups: Vec<PdeSup>,
    pub diagnostics: Vec<ProfileDiagnostics>,
}

impl PdeSuiteReport {
    /// `max/min` of the sup ratios over `λ` at a fixed piece count.
    pub fn lambda_spread(&self, pieces: usize) -> f64 {
        spread(self.sups.iter().filter(|s| s.pieces == pieces).map(|s| s.sup_ratio))
    }

    /// Worst `λ` spread over all piece counts.
    pub fn worst_lambda_spread(&self) -> f64 {
        let mut pieces: Vec<usize> = self.sups.iter().map(|s| s.pieces).collect();
        pieces.sort_unstable();
        pieces.dedup();
        pieces.iter().map(|&p| self.lambda_spread(p)).fold(1.0, f64::max)
    }

    /// Largest `max/min` of the sup ratios over piece counts at a fixed `λ`.
    pub fn roughness_spread(&self) -> f64 {
        let mut lambdas: Vec<f64> = self.sups.iter().map(|s| s.lambda).collect();
        lambdas.dedup();
        lambdas
            .iter()
            .map(|&l| spread(self.sups.iter().filter(|s| s.lambda == l).map(|s| s.sup_ratio)))
            .fold(1.0, f64::max)
    }
}

fn spread(it: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = it.fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo.is_finite() && lo > 0.0 {
        hi / lo
    } else {
        1.0
    }
}

impl PdeSuiteConfig {
    pub fn build_domain(&self) -> Result<Domain> {
        match &self.domain {
            Some(spec) => {
                if spec.d != self.d || spec.m != self.m {
                    return arg("domain d and m must match the experiment");
                }
                Domain::from_spec(spec)
            }
            None => {
                let n = self.d + 1;
                Domain::new(DomainKind::ParabolicTorus, self.d, self.m, &vec![[0.0, 1.0]; n], &vec![32; n])
            }
        }
    }

    pub fn norm_spec(&self, domain: &Arc<Domain>) -> Result<MixedNormSpec> {
        match &self.weight {
            WeightSpec::Unit => MixedNormSpec::unweighted(domain.clone(), &self.split, self.p, self.q),
            other => {
                let w = other.build(domain.clone())?;
                match w.structure() {
                    WeightStructure::Product { split, .. } if *split == self.split => {
                        MixedNormSpec::from_weight(&w, self.p, self.q)
                    }
                    WeightStructure::Product { .. } => arg("the product weight split differs from the norm split"),
                    _ => arg("mixed norms need a unit or product weight"),
                }
            }
        }
    }

    fn profile(&self, pieces: usize) -> Result<Profile> {
        if pieces == 1 {
            return Ok(Profile::constant(1.0));
        }
        rough_coefficient(self.coefficient_seed, self.delta, pieces, self.profile_axis)
    }
}

/// Manufactured-rhs ratios for every seeded `u`, `λ` and coefficient roughness.
pub fn estimate_suite(cfg: &PdeSuiteConfig) -> Result<PdeSuiteReport> {
    if cfg.suite.count == 0 {
        return arg("empty suite");
    }
    if cfg.lambdas.is_empty() || cfg.pieces.is_empty() {
        return arg("need at least one lambda and one piece count");
    }
    if let Some(&l) = cfg.lambdas.iter().find(|&&l| !(l >= cfg.lambda0 && l >= 1.0)) {
        return arg(format!("lambda = {l} is below lambda0 = {}", cfg.lambda0));
    }
    let domain = Arc::new(cfg.build_domain()?);
    let spec = cfg.norm_spec(&domain)?;
    let profiles: Vec<(usize, Profile)> = cfg.pieces.iter().map(|&n| Ok((n, cfg.profile(n)?))).collect::<Result<_>>()?;
    let members = cfg.suite.members(domain.clone())?;
    let mut rows = Vec::new();
    for m in &members {
        let stack = differentiate(&m.f, 2 * cfg.m as usize, cfg.backend)?;
        for &lambda in &cfg.lambdas {
            for (pieces, a) in &profiles {
                let op = match cfg.form {
                    Form::NonDivergence => ModelOperator::second_order(a.clone(), cfg.delta, lambda),
                    Form::HigherOrder => ModelOperator::higher_order(cfg.m, a.clone(), cfg.delta, lambda),
                };
                let f = manufacture_rhs(&stack, &op)?;
                rows.push(PdeRow { seed: m.seed, lambda, pieces: *pieces, ratio: apriori_ratio(&stack, &f, &op, &spec)? });
            }
        }
    }
    rows.sort_by(|a, b| (a.seed, a.lambda, a.pieces).partial_cmp(&(b.seed, b.lambda, b.pieces)).unwrap());
    let mut sups = Vec::new();
    for &lambda in &cfg.lambdas {
        for &(pieces, _) in &profiles {
            let sup_ratio = rows
                .iter()
                .filter(|r| r.lambda == lambda && r.pieces == pieces)
                .map(|r| r.ratio)
                .fold(0.0, f64::max);
            sups.push(PdeSup { lambda, pieces, sup_ratio });
        }
    }
    let diagnostics = profiles
        .iter()
        .map(|(pieces, a)| {
            let g = crate::lattice::GridFunction::new(domain.clone(), a.sample(&domain)?)?;
            let radii = diagnostic_radii(&domain);
            Ok(ProfileDiagnostics { pieces: *pieces, oscillations: oscillations(&g, &radii)? })
        })
        .collect::<Result<_>>()?;
    Ok(PdeSuiteReport { rows, sups, diagnostics })
}

/// A few radii from two cells up to a quarter of the shortest spatial axis.
fn diagnostic_radii(domain: &Domain) -> Vec<f64> {
    let space = domain.spatial_axes();
    let h = space.iter().map(|&k| domain.axis(k).step()).fold(0.0, f64::max);
    let l = space.iter().map(|&k| domain.axis(k).length()).fold(f64::INFINITY, f64::min);
    let mut r = 2.0 * h;
    let mut out = Vec::new();
    while r <= l / 4.0 + 1e-12 {
        out.push(r);
        r *= 2.0;
    }
    if out.is_empty() {
        out.push(l / 4.0);
    }
    out
}
