//! Suite-level ratio reports shared by the checking modules.

use serde::{Deserialize, Serialize};

/// Which branch of the Fefferman–Stein bound a suite exercises.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regime {
    FiniteMeasure,
    InfiniteMeasure,
    SmallSupport { epsilon: f64 },
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::FiniteMeasure => "finite_measure",
            Regime::InfiniteMeasure => "infinite_measure",
            Regime::SmallSupport { .. } => "small_support",
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Regime::InfiniteMeasure)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MemberRatio {
    pub seed: u64,
    pub ratio: f64,
    /// Set when the ratio was 0/0 and counted as a pass.
    pub flagged: bool,
}

/// Per-member empirical ratios of a seeded suite and their supremum.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioReport {
    pub suite_id: String,
    pub regime: Option<Regime>,
    pub members: Vec<MemberRatio>,
    pub sup_ratio: f64,
    /// `max(a/b, b/a)` of sup ratios at two resolutions, once compared.
    pub stability: Option<f64>,
    pub notes: Vec<String>,
}

impl RatioReport {
    pub fn new(suite_id: impl Into<String>, regime: Option<Regime>) -> Self {
        RatioReport {
            suite_id: suite_id.into(),
            regime,
            members: Vec::new(),
            sup_ratio: 0.0,
            stability: None,
            notes: Vec::new(),
        }
    }

    /// Adds a member; `None` marks a 0/0 ratio.
    pub fn push(&mut self, seed: u64, ratio: Option<f64>) {
        let (ratio, flagged) = match ratio {
            Some(r) => (r, false),
            None => (0.0, true),
        };
        if ratio > self.sup_ratio || ratio.is_nan() {
            self.sup_ratio = ratio;
        }
        self.members.push(MemberRatio { seed, ratio, flagged });
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn is_finite(&self) -> bool {
        self.sup_ratio.is_finite()
    }

    /// Records the stability factor against the same suite at another resolution.
    pub fn compare(&mut self, other: &RatioReport) -> f64 {
        let s = stability_factor(self.sup_ratio, other.sup_ratio);
        self.stability = Some(s);
        s
    }

    pub fn flagged_count(&self) -> usize {
        self.members.iter().filter(|m| m.flagged).count()
    }
}

/// `max(a/b, b/a)`; 1 when both vanish, ∞ when exactly one does.
pub fn stability_factor(a: f64, b: f64) -> f64 {
    if a == 0.0 && b == 0.0 {
        1.0
    } else if a == 0.0 || b == 0.0 {
        f64::INFINITY
    } else {
        (a / b).max(b / a)
    }
}

/// `lhs/rhs`, or `None` for 0/0; a positive numerator over 0 is infinite.
pub fn ratio_or_flag(lhs: f64, rhs: f64) -> Option<f64> {
    if rhs == 0.0 {
        if lhs == 0.0 {
            None
        } else {
            Some(f64::INFINITY)
        }
    } else {
        Some(lhs / rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sup_dominates_members() {
        let mut r = RatioReport::new("t", None);
        r.push(1, Some(2.0));
        r.push(2, None);
        r.push(3, Some(1.5));
        assert_eq!(r.sup_ratio, 2.0);
        assert!(r.members.iter().all(|m| m.ratio <= r.sup_ratio));
        assert_eq!(r.flagged_count(), 1);
    }

    #[test]
    fn stability() {
        assert_eq!(stability_factor(2.0, 1.6), 1.25);
        assert_eq!(stability_factor(0.0, 0.0), 1.0);
        assert!(stability_factor(0.0, 1.0).is_infinite());
    }
}
