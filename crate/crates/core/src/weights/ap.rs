use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{arg, Error, Result};
use crate::lattice::{CubeId, DyadicLattice, GridFunction};

use super::ball::{BallEngine, LinePrefix};
use super::weight::{split_indices, WeightStructure};
use super::{Ball, BallFamily, Metric, Weight};

fn check_p(p: f64) -> Result<()> {
    if !(p > 1.0 && p.is_finite()) {
        return arg(format!("A_p needs 1 < p < ∞, got {p}"));
    }
    Ok(())
}

/// `(⨍_B w)(⨍_B w^{−1/(p−1)})^{p−1}` for every family ball, indexed `[radius][center]`.
pub fn ap_ball_values(w: &Weight, p: f64, fam: &BallFamily) -> Result<Vec<Vec<f64>>> {
    check_p(p)?;
    if fam.is_empty() {
        return arg("empty ball family");
    }
    let domain = w.domain();
    let engine = BallEngine::new(domain, fam)?;
    let sigma: Vec<f64> = w.values().iter().map(|v| v.powf(-1.0 / (p - 1.0))).collect();
    let pw = LinePrefix::new(domain, w.values());
    let ps = LinePrefix::new(domain, &sigma);
    let mut out = Vec::with_capacity(fam.radii().len());
    for r in 0..fam.radii().len() {
        let row = fam
            .centers()
            .iter()
            .map(|&c| {
                let n = engine.count(c, r) as f64;
                let aw = engine.sum(&pw, c, r) / n;
                let asig = engine.sum(&ps, c, r) / n;
                aw * asig.powf(p - 1.0)
            })
            .collect();
        out.push(row);
    }
    Ok(out)
}

/// Family estimate of `[w]_{A_p}`: a lower bound for the true characteristic.
pub fn ap_characteristic(w: &Weight, p: f64, fam: &BallFamily) -> Result<f64> {
    let vals = ap_ball_values(w, p, fam)?;
    Ok(vals.iter().flatten().fold(f64::NEG_INFINITY, |m, &v| m.max(v)))
}

/// `1 ≤ [w]_{A_q} ≤ [w]_{A_p}` for `p < q` on one family.
pub fn check_ap_inclusion(w: &Weight, p: f64, q: f64, fam: &BallFamily) -> Result<bool> {
    if p >= q {
        return arg(format!("inclusion needs p < q, got p = {p}, q = {q}"));
    }
    let ap = ap_characteristic(w, p, fam)?;
    let aq = ap_characteristic(w, q, fam)?;
    let tol = 1e-9;
    Ok(aq >= 1.0 - tol && aq <= ap * (1.0 + tol))
}

/// Both sides of `(⨍_B f)^p ≤ ([w]_{A_p}/ω(B)) ∫_B f^p w`.
pub fn holder_ap_bound(w: &Weight, p: f64, f: &GridFunction, ball: &Ball, fam: &BallFamily) -> Result<(f64, f64)> {
    check_p(p)?;
    f.require_same_domain(w.base())?;
    if f.values().iter().any(|&v| v < 0.0) {
        return arg("the Hölder bound needs f ≥ 0");
    }
    let ap = match w.cached_ap_for(p, fam) {
        Some(v) => v,
        None => ap_characteristic(w, p, fam)?,
    };
    let domain = w.domain();
    let engine = BallEngine::with_radii(domain, &[ball.radius]);
    let mut cells = Vec::new();
    engine.cells(ball.center, 0, &mut cells);
    let h = domain.cell_measure();
    let mu = cells.len() as f64 * h;
    let mean_f = cells.iter().map(|&c| f.values()[c]).sum::<f64>() * h / mu;
    let omega = w.measure_of(&cells);
    let integral = cells.iter().map(|&c| f.values()[c].powf(p) * w.values()[c]).sum::<f64>() * h;
    Ok((mean_f.powf(p), ap / omega * integral))
}

/// A subset `E` of a lattice cube `Q`, as flat cell indices.
#[derive(Clone, Debug, PartialEq)]
pub struct SubsetPair {
    pub cube: CubeId,
    pub cells: Vec<usize>,
}

/// Fitted `(β, N)` with `ω(E)/ω(Q) ≤ N (μ(E)/μ(Q))^β` on every pair.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonFit {
    pub p: f64,
    pub beta: f64,
    pub n: f64,
    pub pairs: usize,
    /// Unclamped least-squares slope, when one exists.
    pub slope: Option<f64>,
}

pub const BETA_MIN: f64 = 1e-3;

/// Log measure ratios `(log μ(E)/μ(Q), log ω(E)/ω(Q))` of nonempty pairs.
fn log_ratios(w: &Weight, lat: &DyadicLattice, pairs: &[SubsetPair]) -> Result<Vec<(f64, f64)>> {
    let domain = lat.domain();
    if w.domain() != domain {
        return arg("weight and lattice live on different domains");
    }
    let mut out = Vec::with_capacity(pairs.len());
    for (i, pair) in pairs.iter().enumerate() {
        let level = lat.level(pair.cube.level)?;
        let cube = level
            .cubes
            .get(pair.cube.index)
            .ok_or_else(|| Error::Argument(format!("pair {i}: no cube {:?}", pair.cube)))?;
        let mut seen = std::collections::HashSet::with_capacity(pair.cells.len());
        for &c in &pair.cells {
            if c >= domain.len() || !cube.contains_index(&domain.unravel(c)) {
                return arg(format!("pair {i}: cell {c} lies outside cube {:?}", pair.cube));
            }
            if !seen.insert(c) {
                return arg(format!("pair {i}: cell {c} listed twice"));
            }
        }
        if pair.cells.is_empty() {
            continue;
        }
        let q_cells = cube.cells(domain);
        let x = (pair.cells.len() as f64 / q_cells.len() as f64).ln();
        let y = (w.measure_of(&pair.cells) / w.measure_of(&q_cells)).ln();
        out.push((x, y));
    }
    Ok(out)
}

pub fn measure_comparison_fit(w: &Weight, p: f64, lat: &DyadicLattice, pairs: &[SubsetPair]) -> Result<ComparisonFit> {
    check_p(p)?;
    if pairs.is_empty() {
        return arg("empty subset suite");
    }
    let pts = log_ratios(w, lat, pairs)?;
    let proper: Vec<(f64, f64)> = pts.iter().copied().filter(|&(x, _)| x < -1e-14).collect();
    let slope = least_squares_slope(&proper);
    let beta = slope.map_or(1.0, |s| s.clamp(BETA_MIN, 1.0));
    let n = pts.iter().fold(1.0f64, |m, &(x, y)| m.max((y - beta * x).exp()));
    Ok(ComparisonFit { p, beta, n, pairs: pairs.len(), slope })
}

/// Smallest `N` making the bound hold on `pairs` for a fixed `β`.
pub fn comparison_constant(w: &Weight, lat: &DyadicLattice, pairs: &[SubsetPair], beta: f64) -> Result<f64> {
    let pts = log_ratios(w, lat, pairs)?;
    Ok(pts.iter().fold(1.0f64, |m, &(x, y)| m.max((y - beta * x).exp())))
}

fn least_squares_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 1e-12 * n {
        return None;
    }
    Some(sxy / sxx)
}

/// Seeded `(E, Q)` pairs: half random sub-boxes of `Q`, half random scatterings.
pub fn random_subset_pairs(lat: &DyadicLattice, count: usize, seed: u64) -> Vec<SubsetPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let domain = lat.domain();
    let top = if lat.n_max() > lat.n_min() { lat.n_max() - 1 } else { lat.n_max() };
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let n = rng.gen_range(lat.n_min()..=top);
        let level = lat.level(n).expect("level in range");
        let index = rng.gen_range(0..level.cubes.len());
        let cube = &level.cubes[index];
        let cells = if rng.gen_bool(0.5) {
            let mut sub = cube.clone();
            for k in 0..sub.lo.len() {
                let a = rng.gen_range(cube.lo[k]..cube.hi[k]);
                let b = rng.gen_range(a..cube.hi[k]);
                sub.lo[k] = a;
                sub.hi[k] = b + 1;
            }
            sub.cells(domain)
        } else {
            let q: f64 = rng.gen_range(0.02..0.98);
            cube.cells(domain).into_iter().filter(|_| rng.gen_bool(q)).collect()
        };
        if !cells.is_empty() {
            out.push(SubsetPair { cube: CubeId { level: n, index }, cells });
        }
    }
    out
}

/// `max ω(B_{r_{k+1}}(c)) / ω(B_{r_k}(c))` over the family.
pub fn doubling_constant(w: &Weight, fam: &BallFamily) -> Result<f64> {
    let domain = w.domain();
    let engine = BallEngine::new(domain, fam)?;
    let pw = LinePrefix::new(domain, w.values());
    let mut best = 1.0f64;
    for &c in fam.centers() {
        for r in 1..fam.radii().len() {
            best = best.max(engine.sum(&pw, c, r) / engine.sum(&pw, c, r - 1));
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProductApReport {
    pub p: f64,
    pub full: f64,
    pub w1: f64,
    pub w2: f64,
    /// `(max μ(B′)μ(B″)/μ(B))^p` over family balls, with `B′, B″` the projections.
    pub c_geom: f64,
    pub passed: bool,
}

/// Compares `[w₁⊗w₂]_{A_p}` with `[w₁][w₂]·C_geom` on projected families.
pub fn check_product_ap(w: &Weight, p: f64, fam: &BallFamily) -> Result<ProductApReport> {
    check_p(p)?;
    let WeightStructure::Product { split, w1, w2 } = w.structure() else {
        return arg("weight has no product structure");
    };
    let domain = w.domain();
    let rest = super::weight::complement_axes(domain.ndim(), split);
    let (i1, i2) = split_indices(domain, split, &rest);
    let d1 = w1.domain();
    let d2 = w2.domain();
    let mut c1: Vec<usize> = fam.centers().iter().map(|&c| i1[c]).collect();
    let mut c2: Vec<usize> = fam.centers().iter().map(|&c| i2[c]).collect();
    c1.sort_unstable();
    c1.dedup();
    c2.sort_unstable();
    c2.dedup();
    let f1 = BallFamily::with_radii(c1, fam.radii().to_vec(), Metric::for_domain(d1))?;
    let f2 = BallFamily::with_radii(c2, fam.radii().to_vec(), Metric::for_domain(d2))?;
    let full = ap_characteristic(w, p, fam)?;
    let a1 = ap_characteristic(w1, p, &f1)?;
    let a2 = ap_characteristic(w2, p, &f2)?;
    let e = BallEngine::new(domain, fam)?;
    let e1 = BallEngine::new(d1, &f1)?;
    let e2 = BallEngine::new(d2, &f2)?;
    let mut ratio = 1.0f64;
    for &c in fam.centers() {
        for r in 0..fam.radii().len() {
            let box_cells = (e1.count(i1[c], r) * e2.count(i2[c], r)) as f64;
            ratio = ratio.max(box_cells / e.count(c, r) as f64);
        }
    }
    let c_geom = ratio.powf(p);
    let passed = full <= a1 * a2 * c_geom * (1.0 + 1e-9);
    Ok(ProductApReport { p, full, w1: a1, w2: a2, c_geom, passed })
}
