use serde::Serialize;

use crate::error::{arg, Error, Result};
use crate::lattice::{Domain, DyadicLattice, GridFunction};
use crate::mixednorm::MixedNormSpec;
use crate::operators::dyadic_sharp_values;
use crate::report::{ratio_or_flag, RatioReport, Regime};
use crate::suite::{displacement, metric_norm, SuiteMember};
use crate::weights::{BallEngine, Weight};

/// The norm a Fefferman–Stein check is measured in.
#[derive(Clone, Debug)]
pub enum FsNorm {
    Lp { p: f64 },
    Mixed(MixedNormSpec),
}

impl FsNorm {
    /// `L_p(w)`, or `L_{p,q}` built from the factors of a product weight.
    pub fn for_weight(w: &Weight, p: f64, q: Option<f64>) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return arg(format!("p must lie in (1, ∞), got {p}"));
        }
        match q {
            None => Ok(FsNorm::Lp { p }),
            Some(q) => Ok(FsNorm::Mixed(MixedNormSpec::from_weight(w, p, q)?)),
        }
    }

    pub fn p(&self) -> f64 {
        match self {
            FsNorm::Lp { p } => *p,
            FsNorm::Mixed(s) => s.p(),
        }
    }

    pub fn eval(&self, w: &Weight, values: &[f64]) -> f64 {
        match self {
            FsNorm::Lp { p } => {
                let h = w.domain().cell_measure();
                let s: f64 = values.iter().zip(w.values()).map(|(v, w)| v.abs().powf(*p) * w).sum();
                (s * h).powf(1.0 / p)
            }
            FsNorm::Mixed(s) => s.norm_of(values),
        }
    }

    fn check(&self, w: &Weight) -> Result<()> {
        if let FsNorm::Mixed(s) = self {
            if s.domain() != w.domain() {
                return arg("mixed-norm axes do not match the weight domain");
            }
        }
        Ok(())
    }
}

/// Ingredients of one member's Fefferman–Stein ratio.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FsMember {
    pub seed: u64,
    pub norm_f: f64,
    pub norm_sharp: f64,
    /// Finite-measure correction; 0 in the other regimes.
    pub residual: f64,
}

impl FsMember {
    pub fn ratio(&self) -> Option<f64> {
        ratio_or_flag(self.norm_f, self.norm_sharp + self.residual)
    }

    pub fn ratio_without_residual(&self) -> Option<f64> {
        ratio_or_flag(self.norm_f, self.norm_sharp)
    }
}

fn indicator(mask: &[bool]) -> Vec<f64> {
    mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
}

/// Measure of the smallest metric ball about a near-central cell that holds the support.
pub fn support_ball_measure(domain: &Domain, support: &[bool]) -> Option<f64> {
    let cells: Vec<usize> = (0..support.len()).filter(|&i| support[i]).collect();
    let first = domain.cell_center(*cells.first()?);
    let nd = domain.ndim();
    let mut lo = vec![f64::INFINITY; nd];
    let mut hi = vec![f64::NEG_INFINITY; nd];
    for &c in &cells {
        let d = displacement(domain, &domain.cell_center(c), &first);
        for k in 0..nd {
            lo[k] = lo[k].min(d[k]);
            hi[k] = hi[k].max(d[k]);
        }
    }
    let mid: Vec<f64> = (0..nd)
        .map(|k| {
            let a = domain.axis(k);
            let mut x = first[k] + (lo[k] + hi[k]) / 2.0;
            if domain.is_periodic() {
                x = a.lo + (x - a.lo).rem_euclid(a.length());
            }
            x.clamp(a.lo, a.hi - 0.5 * a.step())
        })
        .collect();
    let center = domain.ravel(&domain.locate(&mid).ok()?);
    let cpt = domain.cell_center(center);
    let radius = cells
        .iter()
        .map(|&c| metric_norm(domain, &displacement(domain, &domain.cell_center(c), &cpt)))
        .fold(0.0, f64::max);
    let r = radius * (1.0 + 1e-6) + 1e-12;
    let engine = BallEngine::with_radii(domain, &[r]);
    Some(engine.count(center, 0) as f64 * domain.cell_measure())
}

fn check_regime(regime: Regime) -> Result<()> {
    match regime {
        Regime::SmallSupport { epsilon } if !(epsilon > 0.0 && epsilon < 1.0) => {
            arg(format!("epsilon must lie in (0, 1), got {epsilon}"))
        }
        _ => Ok(()),
    }
}

fn small_support_guard(f: &GridFunction, seed: u64, epsilon: f64) -> Result<()> {
    let domain = f.domain();
    if let Some(mu) = support_ball_measure(domain, &f.support()) {
        let limit = epsilon * domain.measure();
        if mu > limit * (1.0 + 1e-12) {
            return Err(Error::Precondition(format!(
                "member {seed}: support ball has measure {mu:.6e} > ε μ(X) = {limit:.6e}"
            )));
        }
    }
    Ok(())
}

/// Norms of `f` and `f#_dy` per member, plus the regime's residual.
pub fn fs_members(suite: &[SuiteMember], w: &Weight, norm: &FsNorm, lat: &DyadicLattice, regime: Regime) -> Result<Vec<FsMember>> {
    if suite.is_empty() {
        return arg("empty suite");
    }
    norm.check(w)?;
    check_regime(regime)?;
    let mu_x = lat.domain().measure();
    let mut out = Vec::with_capacity(suite.len());
    for m in suite {
        lat.check_function(&m.f)?;
        m.f.require_same_domain(w.base())?;
        if let Regime::SmallSupport { epsilon } = regime {
            small_support_guard(&m.f, m.seed, epsilon)?;
        }
        let sharp = dyadic_sharp_values(m.f.values(), lat);
        let residual = match regime {
            Regime::FiniteMeasure => norm.eval(w, &indicator(&m.f.support())) * m.f.lp_norm(1.0) / mu_x,
            _ => 0.0,
        };
        out.push(FsMember { seed: m.seed, norm_f: norm.eval(w, m.f.values()), norm_sharp: norm.eval(w, &sharp), residual });
    }
    Ok(out)
}

/// `sup ‖f‖ / (‖f#_dy‖ + residual)` over a suite.
pub fn fefferman_stein_check(suite: &[SuiteMember], w: &Weight, norm: &FsNorm, lat: &DyadicLattice, regime: Regime) -> Result<RatioReport> {
    let members = fs_members(suite, w, norm, lat, regime)?;
    let mut report = RatioReport::new(format!("fefferman_stein p={}", norm.p()), Some(regime));
    let mut bare = 0.0f64;
    for m in &members {
        report.push(m.seed, m.ratio());
        if let Some(r) = m.ratio_without_residual() {
            bare = bare.max(r);
        }
    }
    if matches!(regime, Regime::FiniteMeasure) {
        report.note(format!("sup ratio without residual: {bare:.6e}"));
    }
    Ok(report)
}

/// Supplies the local majorant `f^Q` on the cells of a cube.
pub trait MajorantProvider {
    fn majorant(&self, f: &[f64], cells: &[usize]) -> Vec<f64>;
}

/// `f^Q = |f|`.
#[derive(Clone, Copy, Debug)]
pub struct AbsMajorant;

/// `f^Q = |f| + min_Q |f|`.
#[derive(Clone, Copy, Debug)]
pub struct PaddedMajorant;

impl MajorantProvider for AbsMajorant {
    fn majorant(&self, f: &[f64], cells: &[usize]) -> Vec<f64> {
        cells.iter().map(|&c| f[c].abs()).collect()
    }
}

impl MajorantProvider for PaddedMajorant {
    fn majorant(&self, f: &[f64], cells: &[usize]) -> Vec<f64> {
        let floor = cells.iter().map(|&c| f[c].abs()).fold(f64::INFINITY, f64::min);
        cells.iter().map(|&c| f[c].abs() + floor).collect()
    }
}

impl<F: Fn(&[f64], &[usize]) -> Vec<f64>> MajorantProvider for F {
    fn majorant(&self, f: &[f64], cells: &[usize]) -> Vec<f64> {
        self(f, cells)
    }
}

#[derive(Clone, Debug)]
pub struct GfsMember {
    pub seed: u64,
    pub f: GridFunction,
    /// Upper envelope: `f^Q ≤ v` on every cube.
    pub v: GridFunction,
    /// Oscillation control: `⨍_Q |f^Q − (f^Q)_Q| ≤ g(y)` for `y ∈ Q`.
    pub g: GridFunction,
}

impl GfsMember {
    /// `v = |f|`, `g = 2f#_dy`; fits [`AbsMajorant`].
    pub fn plain(seed: u64, f: &GridFunction, lat: &DyadicLattice) -> Self {
        let sharp = dyadic_sharp_values(f.values(), lat);
        GfsMember { seed, f: f.clone(), v: f.abs(), g: f.with_values(sharp.iter().map(|s| 2.0 * s).collect()) }
    }

    /// `v = 2|f|`, `g = 2f#_dy`; fits [`PaddedMajorant`].
    pub fn padded(seed: u64, f: &GridFunction, lat: &DyadicLattice) -> Self {
        let mut m = Self::plain(seed, f, lat);
        m.v = m.v.scale(2.0);
        m
    }
}

/// Checks the majorant hypotheses on every cube, then reports
/// `sup ‖f‖^p / (‖g‖^β ‖v‖^{p−β} + residual)`.
pub fn generalized_fs_check(
    members: &[GfsMember],
    provider: &dyn MajorantProvider,
    w: &Weight,
    norm: &FsNorm,
    beta: f64,
    lat: &DyadicLattice,
    regime: Regime,
) -> Result<RatioReport> {
    if members.is_empty() {
        return arg("empty suite");
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return arg(format!("beta must lie in (0, 1], got {beta}"));
    }
    norm.check(w)?;
    check_regime(regime)?;
    let p = norm.p();
    let domain = lat.domain();
    let mu_x = domain.measure();
    let tol = 1e-12;
    let mut report = RatioReport::new(format!("generalized_fefferman_stein p={p} beta={beta}"), Some(regime));
    for m in members {
        for g in [&m.f, &m.v, &m.g] {
            lat.check_function(g)?;
            g.require_same_domain(w.base())?;
        }
        if let Regime::SmallSupport { epsilon } = regime {
            small_support_guard(&m.v, m.seed, epsilon)?;
        }
        let (f, v, g) = (m.f.values(), m.v.values(), m.g.values());
        for level in lat.levels() {
            for (q, cube) in level.cubes.iter().enumerate() {
                let cells = cube.cells(domain);
                let fq = provider.majorant(f, &cells);
                if fq.len() != cells.len() {
                    return arg(format!("majorant returned {} values for {} cells", fq.len(), cells.len()));
                }
                let fail = |what: &str| {
                    Err(Error::Precondition(format!("member {}: cube (level {}, index {q}): {what}", m.seed, level.n)))
                };
                for (&c, &x) in cells.iter().zip(&fq) {
                    if f[c].abs() > x * (1.0 + tol) + 1e-300 {
                        return fail("|f| exceeds the majorant");
                    }
                    if x > v[c] * (1.0 + tol) + 1e-300 {
                        return fail("majorant exceeds v");
                    }
                }
                let mean = fq.iter().sum::<f64>() / fq.len() as f64;
                let osc = fq.iter().map(|x| (x - mean).abs()).sum::<f64>() / fq.len() as f64;
                let gmin = cells.iter().map(|&c| g[c]).fold(f64::INFINITY, f64::min);
                if osc > gmin * (1.0 + tol) + 1e-14 * mean.abs() {
                    return fail("oscillation of the majorant exceeds g");
                }
            }
        }
        let nv = norm.eval(w, v);
        let residual = match regime {
            Regime::InfiniteMeasure => 0.0,
            Regime::FiniteMeasure => (norm.eval(w, &indicator(&m.v.support())) * m.v.lp_norm(1.0) / mu_x).powf(p),
            Regime::SmallSupport { epsilon } => (epsilon * nv).powf(p),
        };
        let lhs = norm.eval(w, f).powf(p);
        let rhs = norm.eval(w, g).powf(beta) * nv.powf(p - beta) + residual;
        report.push(m.seed, ratio_or_flag(lhs, rhs));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_lattice, DomainKind};
    use crate::suite::SuiteSpec;
    use std::sync::Arc;

    #[test]
    fn generalized_matches_plain_in_infinite_regime() {
        let d = Arc::new(Domain::interval(DomainKind::EuclideanTorus, -8.0, 8.0, 1024).unwrap());
        let lat = build_lattice(d.clone(), 0, 10).unwrap();
        let w = Weight::unit(d.clone());
        let suite = SuiteSpec::new(6, 4, 11).with_support(vec![0.0], 0.5).members(d).unwrap();
        let norm = FsNorm::Lp { p: 2.0 };
        let plain = fefferman_stein_check(&suite, &w, &norm, &lat, Regime::InfiniteMeasure).unwrap();
        let gm: Vec<GfsMember> = suite.iter().map(|m| GfsMember::plain(m.seed, &m.f, &lat)).collect();
        let beta = 0.7;
        let gen = generalized_fs_check(&gm, &AbsMajorant, &w, &norm, beta, &lat, Regime::InfiniteMeasure).unwrap();
        for (a, b) in plain.members.iter().zip(&gen.members) {
            let expect = 2.0 * b.ratio.powf(1.0 / beta);
            assert!((a.ratio - expect).abs() < 1e-9 * a.ratio, "{} vs {expect}", a.ratio);
        }
    }

    #[test]
    fn padded_majorant_passes_and_bad_g_is_caught() {
        let d = Arc::new(Domain::interval(DomainKind::EuclideanBox, 0.0, 1.0, 128).unwrap());
        let lat = build_lattice(d.clone(), 0, 7).unwrap();
        let w = Weight::unit(d.clone());
        let f = GridFunction::from_fn(d, |x| (7.0 * x[0]).sin() + 0.3);
        let norm = FsNorm::Lp { p: 2.0 };
        let ok = GfsMember::padded(1, &f, &lat);
        assert!(generalized_fs_check(std::slice::from_ref(&ok), &PaddedMajorant, &w, &norm, 1.0, &lat, Regime::FiniteMeasure).is_ok());
        let mut bad = ok;
        bad.g = bad.g.scale(0.1);
        let err = generalized_fs_check(&[bad], &PaddedMajorant, &w, &norm, 1.0, &lat, Regime::FiniteMeasure);
        match err {
            Err(Error::Precondition(msg)) => assert!(msg.contains("cube (level")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn small_support_guard_names_member() {
        let d = Arc::new(Domain::interval(DomainKind::EuclideanBox, 0.0, 1.0, 256).unwrap());
        let lat = build_lattice(d.clone(), 0, 8).unwrap();
        let w = Weight::unit(d.clone());
        let narrow = SuiteSpec::new(2, 3, 5).with_support(vec![0.5], 0.005).members(d.clone()).unwrap();
        let reg = Regime::SmallSupport { epsilon: 1.0 / 64.0 };
        let norm = FsNorm::Lp { p: 2.0 };
        assert!(fefferman_stein_check(&narrow, &w, &norm, &lat, reg).is_ok());
        let wide = SuiteSpec::new(2, 3, 5).with_support(vec![0.5], 0.2).members(d).unwrap();
        match fefferman_stein_check(&wide, &w, &norm, &lat, reg) {
            Err(Error::Precondition(msg)) => assert!(msg.starts_with("member 5")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn support_ball_of_an_interval() {
        let d = Domain::interval(DomainKind::EuclideanBox, 0.0, 1.0, 100).unwrap();
        let mask: Vec<bool> = (0..100).map(|i| (40..50).contains(&i)).collect();
        let mu = support_ball_measure(&d, &mask).unwrap();
        assert!((0.1 - 1e-12..=0.12).contains(&mu), "{mu}");
        assert!(support_ball_measure(&d, &[false; 100]).is_none());
    }
}
