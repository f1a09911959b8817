//! One JSON schema per subcommand. Unknown fields are rejected.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::Result;
use crate::lattice::{build_lattice, Domain, DomainSpec, DyadicLattice};
use crate::report::Regime;
use crate::suite::SuiteSpec;
use crate::weights::{BallFamily, WeightSpec};

/// Why a config could not be used.
#[derive(Debug)]
pub enum ConfigError {
    Read(String),
    Parse(String),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Read(s) => write!(f, "cannot read config: {s}"),
            ConfigError::Parse(s) => write!(f, "invalid config: {s}"),
        }
    }
}

pub fn load<T: DeserializeOwned>(path: &Path) -> std::result::Result<T, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read(format!("{}: {e}", path.display())))?;
    parse(&text).map_err(|e| match e {
        ConfigError::Parse(s) => ConfigError::Parse(format!("{}: {s}", path.display())),
        other => other,
    })
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    #[serde(default)]
    pub n_min: i32,
    pub n_max: i32,
}

impl LatticeSpec {
    pub fn build(&self, domain: &std::sync::Arc<Domain>) -> Result<DyadicLattice> {
        build_lattice(domain.clone(), self.n_min, self.n_max)
    }
}

/// Balls of radii `r0·2^k`, `k = 0..=k_max`, about every cell or the listed ones.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub r0: f64,
    pub k_max: u32,
    #[serde(default)]
    pub centers: Option<Vec<usize>>,
}

impl FamilySpec {
    pub fn build(&self, domain: &Domain) -> Result<BallFamily> {
        let fam = BallFamily::all_centers(domain, self.r0, self.k_max)?;
        match &self.centers {
            Some(c) => fam.with_centers(c.clone()),
            None => Ok(fam),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeValidateConfig {
    pub domain: DomainSpec,
    pub lattice: LatticeSpec,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApConstantConfig {
    pub domain: DomainSpec,
    pub weight: WeightSpec,
    pub p: f64,
    pub family: FamilySpec,
    /// Also check `[w]_{A_q} ≤ [w]_{A_p}` at this larger exponent.
    #[serde(default)]
    pub inclusion_q: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaximalBoundConfig {
    pub domain: DomainSpec,
    pub weight: WeightSpec,
    pub p: f64,
    pub family: FamilySpec,
    pub suite: SuiteSpec,
    /// When present, each member is also compared dyadic vs ball.
    #[serde(default)]
    pub lattice: Option<LatticeSpec>,
}

/// A second resolution for the stability comparison.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSpec {
    pub points: Vec<usize>,
    pub n_max: i32,
}

fn default_stability() -> f64 {
    1.25
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FsCheckConfig {
    pub domain: DomainSpec,
    pub weight: WeightSpec,
    pub p: f64,
    /// Outer exponent; needs a product weight.
    #[serde(default)]
    pub q: Option<f64>,
    pub lattice: LatticeSpec,
    pub suite: SuiteSpec,
    pub regime: Regime,
    #[serde(default)]
    pub compare: Option<CompareSpec>,
    #[serde(default = "default_stability")]
    pub max_stability: f64,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    Abs,
    Padded,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    pub count: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GfsCheckConfig {
    pub domain: DomainSpec,
    pub weight: WeightSpec,
    pub p: f64,
    #[serde(default)]
    pub q: Option<f64>,
    pub lattice: LatticeSpec,
    pub suite: SuiteSpec,
    pub regime: Regime,
    pub provider: ProviderKind,
    /// Fixed exponent; otherwise fitted from `pairs`.
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub pairs: Option<PairSpec>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelsetConfig {
    pub domain: DomainSpec,
    pub weight: WeightSpec,
    pub p: f64,
    pub lattice: LatticeSpec,
    pub suite: SuiteSpec,
    /// Thresholds as fractions of `sup|f|`, per member.
    pub lambdas: Vec<f64>,
    pub regime: Regime,
    pub pairs: PairSpec,
}

/// The operator `T` of the pairs `(T h, h)` fed to the transfer check.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TransferKind {
    ConditionalExpectation { level: i32 },
    DyadicMaximal,
}

fn default_k_terms() -> usize {
    40
}

fn default_tolerance() -> f64 {
    1e-3
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtrapolateConfig {
    pub domain: DomainSpec,
    pub weight: WeightSpec,
    pub p0: f64,
    pub p: f64,
    #[serde(default = "default_k_terms")]
    pub k_terms: usize,
    pub family: FamilySpec,
    pub suite: SuiteSpec,
    pub lattice: LatticeSpec,
    pub transfer: TransferKind,
    /// Lower bounds for the maximal norms; calibrated values are used when larger.
    #[serde(default)]
    pub n1_hat: Option<f64>,
    #[serde(default)]
    pub n2_hat: Option<f64>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

pub use crate::pdecheck::PdeSuiteConfig as PdeRatioConfig;

/// Parses a config string.
pub fn parse<T: DeserializeOwned>(text: &str) -> std::result::Result<T, ConfigError> {
    serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_fields_are_rejected() {
        let ok = r#"{"domain":{"kind":"euclidean_torus","d":1,"extents":[[0,1]],"points":[8]},"lattice":{"n_max":3}}"#;
        assert!(parse::<LatticeValidateConfig>(ok).is_ok());
        let bad = r#"{"domain":{"kind":"euclidean_torus","d":1,"extents":[[0,1]],"points":[8]},"lattice":{"n_max":3},"x":1}"#;
        assert!(matches!(parse::<LatticeValidateConfig>(bad), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn transfer_kinds_parse() {
        let t: TransferKind = serde_json::from_str(r#"{"kind":"conditional_expectation","level":2}"#).unwrap();
        assert!(matches!(t, TransferKind::ConditionalExpectation { level: 2 }));
        let t: TransferKind = serde_json::from_str(r#"{"kind":"dyadic_maximal"}"#).unwrap();
        assert!(matches!(t, TransferKind::DyadicMaximal));
    }
}
