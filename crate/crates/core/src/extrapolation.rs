//! Rubio de Francia iteration.
//!
//! `R h = Σ_k M^k|h| / (2N₁)^k` and its dual `R′` built on `M′h = M(hw)/w`,
//! the weight `w̃ = (Rg)^{1−p₀}(R′h)w`, and the transfer of a `p₀` bound to `p`.

use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};
use crate::lattice::GridFunction;
use crate::operators::BallOperator;
use crate::report::{ratio_or_flag, RatioReport};
use crate::weights::{ap_ball_values, ap_characteristic, BallFamily, Weight};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RdfConfig {
    pub p0: f64,
    pub p: f64,
    pub k_terms: usize,
    pub n1_hat: f64,
    pub n2_hat: f64,
}

/// Relative size allowed for the dropped series tail `(2N)^{−K}`.
pub const TAIL_BOUND: f64 = 1e-6;

impl RdfConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, e) in [("p0", self.p0), ("p", self.p)] {
            if !(e > 1.0 && e.is_finite()) {
                return arg(format!("{name} must lie in (1, ∞), got {e}"));
            }
        }
        if self.k_terms == 0 {
            return arg("k_terms must be at least 1");
        }
        for (name, n) in [("n1_hat", self.n1_hat), ("n2_hat", self.n2_hat)] {
            if !(n >= 1.0 && n.is_finite()) {
                return arg(format!("{name} must be at least 1, got {n}"));
            }
        }
        Ok(())
    }

    /// Conjugate exponent `p′`.
    pub fn p_dual(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    fn check_tail(&self, n: f64) -> Result<()> {
        // M does not increase sup norms, so term k is at most sup|h|/(2N)^k
        let tail = (2.0 * n).powf(-(self.k_terms as f64));
        if tail >= TAIL_BOUND {
            return arg(format!("k_terms = {} leaves a tail of {tail:.3e}; need more terms", self.k_terms));
        }
        Ok(())
    }
}

fn lp(values: &[f64], w: &Weight, p: f64) -> f64 {
    let h = w.domain().cell_measure();
    let s: f64 = values.iter().zip(w.values()).map(|(v, w)| v.abs().powf(p) * w).sum();
    (s * h).powf(1.0 / p)
}

fn dual_step(op: &BallOperator, w: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    let hw: Vec<f64> = v.iter().zip(w).map(|(a, b)| a * b).collect();
    Ok(op.maximal(&hw, None)?.iter().zip(w).map(|(m, b)| m / b).collect())
}

/// Partial sum `Σ_{k ≤ K} T^k|h| / (2N)^k`, stopping with an error once a term's
/// norm grows.
fn series(
    h: &[f64],
    n_hat: f64,
    k_terms: usize,
    step: impl Fn(&[f64]) -> Result<Vec<f64>>,
    norm: impl Fn(&[f64]) -> f64,
    which: &str,
) -> Result<Vec<f64>> {
    let mut iterate: Vec<f64> = h.iter().map(|v| v.abs()).collect();
    let mut acc = iterate.clone();
    let mut prev = norm(&iterate);
    let mut scale = 1.0;
    for k in 1..=k_terms {
        iterate = step(&iterate)?;
        scale /= 2.0 * n_hat;
        let size = norm(&iterate) * scale;
        if prev > 0.0 && size > prev * (1.0 + 1e-12) {
            return Err(Error::Divergence(format!(
                "term {k} of the {which} series grew ({size:.3e} > {prev:.3e}); recalibrate the maximal norm upward"
            )));
        }
        prev = size;
        for (a, v) in acc.iter_mut().zip(&iterate) {
            *a += v * scale;
        }
    }
    Ok(acc)
}

fn check_family(h: &GridFunction, w: &Weight) -> Result<()> {
    h.require_same_domain(w.base())
}

/// `R h = Σ_{k ≤ K} M^k|h| / (2N₁)^k`.
pub fn rubio_r(h: &GridFunction, w: &Weight, cfg: &RdfConfig, fam: &BallFamily) -> Result<GridFunction> {
    cfg.validate()?;
    cfg.check_tail(cfg.n1_hat)?;
    check_family(h, w)?;
    let op = BallOperator::new(h.domain(), fam)?;
    let out = series(h.values(), cfg.n1_hat, cfg.k_terms, |v| op.maximal(v, None), |v| lp(v, w, cfg.p), "R")?;
    Ok(h.with_values(out))
}

/// `R′h = Σ_{k ≤ K} (M′)^k|h| / (2N₂)^k` with `M′h = M(hw)/w`.
pub fn rubio_r_dual(h: &GridFunction, w: &Weight, cfg: &RdfConfig, fam: &BallFamily) -> Result<GridFunction> {
    cfg.validate()?;
    cfg.check_tail(cfg.n2_hat)?;
    check_family(h, w)?;
    let op = BallOperator::new(h.domain(), fam)?;
    let pd = cfg.p_dual();
    let out = series(h.values(), cfg.n2_hat, cfg.k_terms, |v| dual_step(&op, w.values(), v), |v| lp(v, w, pd), "R′")?;
    Ok(h.with_values(out))
}

/// `Λ₀ = 2^{p₀} N₁^{p₀−1} N₂`.
pub fn lambda0_constant(p0: f64, n1_hat: f64, n2_hat: f64) -> Result<f64> {
    if !(p0 > 1.0 && p0.is_finite()) {
        return arg(format!("p0 must lie in (1, ∞), got {p0}"));
    }
    if !(n1_hat >= 1.0 && n2_hat >= 1.0 && n1_hat.is_finite() && n2_hat.is_finite()) {
        return arg("maximal norms must be at least 1");
    }
    Ok(2f64.powf(p0) * n1_hat.powf(p0 - 1.0) * n2_hat)
}

/// `w̃ = (Rg)^{1−p₀}(R′h)w`.
pub fn build_extrapolation_weight(g: &GridFunction, h: &GridFunction, w: &Weight, cfg: &RdfConfig, fam: &BallFamily) -> Result<Weight> {
    if g.is_zero() || h.is_zero() {
        return arg("g and h must not vanish identically");
    }
    let rg = rubio_r(g, w, cfg, fam)?;
    let rh = rubio_r_dual(h, w, cfg, fam)?;
    let vals: Vec<f64> = rg
        .values()
        .iter()
        .zip(rh.values())
        .zip(w.values())
        .map(|((a, b), c)| a.powf(1.0 - cfg.p0) * b * c)
        .collect();
    Weight::new(w.base().with_values(vals)).map_err(|e| Error::Argument(format!("degenerate extrapolation weight: {e}")))
}

/// Largest one-step growth `‖M^{k+1}h‖/‖M^k h‖` in `L_p(w)` over the inputs and their
/// first `k_terms` iterates, floored at 1.
pub fn calibrate_n1(inputs: &[GridFunction], w: &Weight, p: f64, k_terms: usize, fam: &BallFamily) -> Result<f64> {
    calibrate(inputs, w, p, k_terms, fam, false)
}

/// As [`calibrate_n1`] for `M′` on `L_{p′}(w)`.
pub fn calibrate_n2(inputs: &[GridFunction], w: &Weight, p: f64, k_terms: usize, fam: &BallFamily) -> Result<f64> {
    calibrate(inputs, w, p / (p - 1.0), k_terms, fam, true)
}

fn calibrate(inputs: &[GridFunction], w: &Weight, p: f64, k_terms: usize, fam: &BallFamily, dual: bool) -> Result<f64> {
    if !(p > 1.0 && p.is_finite()) {
        return arg(format!("p must lie in (1, ∞), got {p}"));
    }
    let op = BallOperator::new(w.domain(), fam)?;
    let mut best = 1.0f64;
    for h in inputs {
        check_family(h, w)?;
        let mut v: Vec<f64> = h.values().iter().map(|x| x.abs()).collect();
        let mut nv = lp(&v, w, p);
        for _ in 0..k_terms {
            if nv == 0.0 {
                break;
            }
            v = if dual { dual_step(&op, w.values(), &v)? } else { op.maximal(&v, None)? };
            let next = lp(&v, w, p);
            best = best.max(next / nv);
            nv = next;
        }
    }
    Ok(best)
}

/// The three properties of `R` (or `R′`) on one input.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyReport {
    /// `|h| ≤ Rh` at every cell.
    pub dominates: bool,
    /// `‖Rh‖/‖h‖`, to compare with 2.
    pub norm_ratio: f64,
    /// `sup M(Rh)/(2N·Rh)` (or the `M′` analogue), to compare with 1.
    pub a1_ratio: f64,
}

impl PropertyReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.dominates && self.norm_ratio <= 2.0 * (1.0 + tol) && self.a1_ratio <= 1.0 + tol
    }
}

fn properties(h: &GridFunction, r: &GridFunction, mr: &[f64], n: f64, w: &Weight, p: f64) -> PropertyReport {
    let dominates = h.values().iter().zip(r.values()).all(|(a, b)| a.abs() <= *b);
    let norm_ratio = ratio_or_flag(lp(r.values(), w, p), lp(h.values(), w, p)).unwrap_or(0.0);
    let a1_ratio = mr
        .iter()
        .zip(r.values())
        .map(|(m, v)| ratio_or_flag(*m, 2.0 * n * v).unwrap_or(0.0))
        .fold(0.0, f64::max);
    PropertyReport { dominates, norm_ratio, a1_ratio }
}

pub fn check_r_properties(h: &GridFunction, w: &Weight, cfg: &RdfConfig, fam: &BallFamily) -> Result<PropertyReport> {
    let r = rubio_r(h, w, cfg, fam)?;
    let op = BallOperator::new(h.domain(), fam)?;
    let mr = op.maximal(r.values(), None)?;
    Ok(properties(h, &r, &mr, cfg.n1_hat, w, cfg.p))
}

pub fn check_r_dual_properties(h: &GridFunction, w: &Weight, cfg: &RdfConfig, fam: &BallFamily) -> Result<PropertyReport> {
    let r = rubio_r_dual(h, w, cfg, fam)?;
    let op = BallOperator::new(h.domain(), fam)?;
    let mr = dual_step(&op, w.values(), r.values())?;
    Ok(properties(h, &r, &mr, cfg.n2_hat, w, cfg.p_dual()))
}

/// `([w^{1−p′}]_{A_{p′}}, [w]_{A_p}^{1/(p−1)})` on one family; equal ball by ball.
pub fn dual_ap_identity(w: &Weight, p: f64, fam: &BallFamily) -> Result<(f64, f64)> {
    let pd = p / (p - 1.0);
    let sigma = w.powf(1.0 - pd)?;
    let direct = ap_characteristic(&sigma, pd, fam)?;
    let via = ap_characteristic(w, p, fam)?.powf(1.0 / (p - 1.0));
    Ok((direct, via))
}

/// A pair for the transfer check; `n0 = None` certifies the constant on the
/// constructed weight itself.
#[derive(Clone, Debug)]
pub struct TransferPair {
    pub seed: u64,
    pub f: GridFunction,
    pub g: GridFunction,
    pub n0: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransferReport {
    /// `‖f‖_{L_p(w)} / (4N₀‖g‖_{L_p(w)})` per pair.
    pub ratios: RatioReport,
    pub n1_hat: f64,
    pub n2_hat: f64,
    pub lambda0: f64,
    /// Family estimate of `[w̃]_{A_{p₀}}` per pair.
    pub ap_tilde: Vec<f64>,
    /// Constant used per pair.
    pub n0: Vec<f64>,
}

impl TransferReport {
    pub fn ap_within_lambda0(&self, tol: f64) -> bool {
        self.ap_tilde.iter().all(|&a| a <= self.lambda0 * (1.0 + tol))
    }
}

/// Builds `w̃` from `g` and the dual extremizer `h = (|f|/‖f‖)^{p−1}` of each pair,
/// checks the `p₀` hypothesis on it and reports the transferred `p` ratio.
pub fn transfer_check(pairs: &[TransferPair], w: &Weight, cfg: &RdfConfig, fam: &BallFamily) -> Result<TransferReport> {
    cfg.validate()?;
    if pairs.is_empty() {
        return arg("no pairs to transfer");
    }
    let p = cfg.p;
    let duals: Vec<GridFunction> = pairs
        .iter()
        .map(|pr| {
            let nf = lp(pr.f.values(), w, p);
            if nf == 0.0 {
                pr.f.clone()
            } else {
                pr.f.map(|v| (v.abs() / nf).powf(p - 1.0))
            }
        })
        .collect();
    let gs: Vec<GridFunction> = pairs.iter().map(|pr| pr.g.clone()).collect();
    let n1 = cfg.n1_hat.max(calibrate_n1(&gs, w, p, cfg.k_terms, fam)?);
    let n2 = cfg.n2_hat.max(calibrate_n2(&duals, w, p, cfg.k_terms, fam)?);
    let tuned = RdfConfig { n1_hat: n1, n2_hat: n2, ..cfg.clone() };
    let lambda0 = lambda0_constant(cfg.p0, n1, n2)?;
    let mut ratios = RatioReport::new(format!("transfer p0={} p={p}", cfg.p0), None);
    ratios.note("hypothesis verified only on the weights constructed from each pair");
    let mut ap_tilde = Vec::with_capacity(pairs.len());
    let mut used = Vec::with_capacity(pairs.len());
    for (pr, h) in pairs.iter().zip(&duals) {
        pr.f.require_same_domain(w.base())?;
        if pr.g.is_zero() || h.is_zero() {
            return Err(Error::Precondition(format!("pair {}: f or g vanishes identically", pr.seed)));
        }
        let wt = build_extrapolation_weight(&pr.g, h, w, &tuned, fam)?;
        ap_tilde.push(ap_characteristic(&wt, cfg.p0, fam)?);
        let observed = lp(pr.f.values(), &wt, cfg.p0) / lp(pr.g.values(), &wt, cfg.p0);
        let n0 = match pr.n0 {
            None => observed,
            Some(n0) if observed <= n0 * (1.0 + 1e-12) => n0,
            Some(n0) => {
                return Err(Error::Precondition(format!(
                    "pair {}: ‖f‖/‖g‖ = {observed:.6e} on the constructed weight exceeds N0 = {n0}",
                    pr.seed
                )))
            }
        };
        used.push(n0);
        ratios.push(pr.seed, ratio_or_flag(lp(pr.f.values(), w, p), 4.0 * n0 * lp(pr.g.values(), w, p)));
    }
    Ok(TransferReport { ratios, n1_hat: n1, n2_hat: n2, lambda0, ap_tilde, n0: used })
}

/// Largest per-ball `A_{p₀}` value of `w̃` relative to `Λ₀`.
pub fn ap_margin(w_tilde: &Weight, p0: f64, lambda0: f64, fam: &BallFamily) -> Result<f64> {
    let vals = ap_ball_values(w_tilde, p0, fam)?;
    Ok(vals.iter().flatten().fold(0.0f64, |m, &v| m.max(v)) / lambda0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Domain, DomainKind};
    use crate::weights::power_weight;
    use std::sync::Arc;

    fn setup() -> (Arc<Domain>, BallFamily) {
        let d = Arc::new(Domain::interval(DomainKind::EuclideanTorus, -1.0, 1.0, 128).unwrap());
        let fam = BallFamily::all_centers(&d, 1.5 / 64.0, 6).unwrap();
        (d, fam)
    }

    fn cfg(n1: f64, n2: f64) -> RdfConfig {
        RdfConfig { p0: 2.0, p: 2.0, k_terms: 40, n1_hat: n1, n2_hat: n2 }
    }

    #[test]
    fn lambda0_examples() {
        assert_eq!(lambda0_constant(2.0, 3.0, 5.0).unwrap(), 60.0);
        assert_eq!(lambda0_constant(2.0, 1.0, 1.0).unwrap(), 4.0);
        assert_eq!(lambda0_constant(3.0, 2.0, 2.0).unwrap(), 64.0);
        assert!(lambda0_constant(1.0, 2.0, 2.0).is_err());
    }

    #[test]
    fn constants_and_zero() {
        let (d, fam) = setup();
        let w = Weight::unit(d.clone());
        let c = cfg(1.5, 1.5);
        let r = rubio_r(&GridFunction::constant(d.clone(), 0.7), &w, &c, &fam).unwrap();
        let expect = 0.7 * (1.0 - 3f64.powi(-41)) / (1.0 - 1.0 / 3.0);
        assert!(r.values().iter().all(|v| (v - expect).abs() < 1e-12));
        assert!(rubio_r(&GridFunction::zeros(d.clone()), &w, &c, &fam).unwrap().is_zero());
        let h = GridFunction::from_fn(d, |x| (4.0 * x[0]).sin());
        let a = rubio_r(&h, &w, &c, &fam).unwrap();
        let b = rubio_r_dual(&h, &w, &c, &fam).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn divergence_is_reported() {
        let (d, fam) = setup();
        let w = Weight::unit(d.clone());
        // near p = 1 a single spike more than doubles under M
        let h = GridFunction::from_fn(d, |x| if x[0].abs() < 0.01 { 1.0 } else { 0.0 });
        let mut c = cfg(1.0, 1.0);
        c.p = 1.05;
        c.k_terms = 25;
        assert!(matches!(rubio_r(&h, &w, &c, &fam), Err(Error::Divergence(_))));
    }

    #[test]
    fn properties_hold_with_calibrated_norms() {
        let (d, fam) = setup();
        let w = power_weight(0, 0.5, d.clone()).unwrap();
        let h = GridFunction::from_fn(d.clone(), |x| (1.0 - 16.0 * x[0] * x[0]).max(0.0) * (9.0 * x[0]).cos());
        let n1 = calibrate_n1(std::slice::from_ref(&h), &w, 2.0, 40, &fam).unwrap();
        let n2 = calibrate_n2(std::slice::from_ref(&h), &w, 2.0, 40, &fam).unwrap();
        let c = cfg(n1, n2);
        assert!(check_r_properties(&h, &w, &c, &fam).unwrap().passed(1e-3));
        assert!(check_r_dual_properties(&h, &w, &c, &fam).unwrap().passed(1e-3));
        let (a, b) = dual_ap_identity(&w, 3.0, &fam).unwrap();
        assert!((a - b).abs() < 1e-9 * a);
    }

    #[test]
    fn constant_weight_for_constant_inputs() {
        let (d, fam) = setup();
        let w = Weight::unit(d.clone());
        let one = GridFunction::constant(d, 1.0);
        let wt = build_extrapolation_weight(&one, &one, &w, &cfg(1.0, 1.0), &fam).unwrap();
        assert!((ap_characteristic(&wt, 2.0, &fam).unwrap() - 1.0).abs() < 1e-12);
        assert!(build_extrapolation_weight(&GridFunction::zeros(wt.domain().clone()), &one, &w, &cfg(1.0, 1.0), &fam).is_err());
    }
}
