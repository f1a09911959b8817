//! Dyadic and ball maximal and sharp functions.

use serde::Serialize;

use crate::error::{arg, Result};
use crate::lattice::{AxisRole, CellBox, DyadicLattice, GridFunction};
use crate::report::{ratio_or_flag, RatioReport};
use crate::suite::SuiteMember;
use crate::weights::{center_mask, require_covered, BallEngine, BallFamily, LinePrefix, Weight};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    Ball,
    Dyadic,
}

#[derive(Clone, Debug)]
pub struct MaximalOutput {
    pub values: GridFunction,
    pub flavor: Flavor,
    /// Short description of the lattice or family used.
    pub source: String,
}

fn lattice_source(lat: &DyadicLattice) -> String {
    format!("dyadic levels {}..={}", lat.n_min(), lat.n_max())
}

fn family_source(fam: &BallFamily) -> String {
    format!("{} centers x {} radii", fam.centers().len(), fam.radii().len())
}

/// `max_n |f|_{|n}` over the lattice levels.
pub fn dyadic_maximal_values(values: &[f64], lat: &DyadicLattice) -> Vec<f64> {
    let abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    let mut out = vec![0.0f64; values.len()];
    for level in lat.levels() {
        let avg = lat.cube_averages(level, &abs);
        for (o, &l) in out.iter_mut().zip(&level.labels) {
            *o = o.max(avg[l]);
        }
    }
    out
}

/// Mean oscillation `⨍_Q |f − f_Q|` of every cube of every level, indexed `[level][cube]`.
pub fn dyadic_oscillations(values: &[f64], lat: &DyadicLattice) -> Vec<Vec<f64>> {
    lat.levels()
        .iter()
        .map(|level| {
            let avg = lat.cube_averages(level, values);
            let dev: Vec<f64> = values.iter().zip(&level.labels).map(|(v, &l)| (v - avg[l]).abs()).collect();
            lat.cube_averages(level, &dev)
        })
        .collect()
}

/// `max_n ⨍_{Q_n(x)} |f − f_{|n}(x)|`.
pub fn dyadic_sharp_values(values: &[f64], lat: &DyadicLattice) -> Vec<f64> {
    let osc = dyadic_oscillations(values, lat);
    let mut out = vec![0.0f64; values.len()];
    for (level, o) in lat.levels().iter().zip(&osc) {
        for (x, &l) in out.iter_mut().zip(&level.labels) {
            *x = x.max(o[l]);
        }
    }
    out
}

pub fn dyadic_maximal(f: &GridFunction, lat: &DyadicLattice) -> Result<MaximalOutput> {
    lat.check_function(f)?;
    Ok(MaximalOutput {
        values: f.with_values(dyadic_maximal_values(f.values(), lat)),
        flavor: Flavor::Dyadic,
        source: lattice_source(lat),
    })
}

pub fn dyadic_sharp(f: &GridFunction, lat: &DyadicLattice) -> Result<MaximalOutput> {
    lat.check_function(f)?;
    Ok(MaximalOutput {
        values: f.with_values(dyadic_sharp_values(f.values(), lat)),
        flavor: Flavor::Dyadic,
        source: lattice_source(lat),
    })
}

/// Reusable ball machinery for one family on one domain.
pub struct BallOperator<'a> {
    engine: BallEngine<'a>,
    fam: &'a BallFamily,
    mask: Vec<bool>,
}

impl<'a> BallOperator<'a> {
    pub fn new(domain: &'a crate::lattice::Domain, fam: &'a BallFamily) -> Result<Self> {
        let engine = BallEngine::new(domain, fam)?;
        let mask = center_mask(domain, fam)?;
        Ok(BallOperator { engine, fam, mask })
    }

    pub fn family(&self) -> &BallFamily {
        self.fam
    }

    /// `M f(x) = max_{B ∋ x} ⨍_B |f|`, or `ω(B)^{-1}∫_B |f| w` with a weight.
    pub fn maximal(&self, values: &[f64], w: Option<&[f64]>) -> Result<Vec<f64>> {
        let domain = self.engine.domain();
        let (num, den): (Vec<f64>, Option<LinePrefix>) = match w {
            None => (values.iter().map(|v| v.abs()).collect(), None),
            Some(w) => (values.iter().zip(w).map(|(v, w)| v.abs() * w).collect(), Some(LinePrefix::new(domain, w))),
        };
        let pn = LinePrefix::new(domain, &num);
        let per_ball: Vec<Vec<f64>> = (0..self.fam.radii().len())
            .map(|r| {
                (0..domain.len())
                    .map(|c| {
                        if !self.mask[c] {
                            return f64::NEG_INFINITY;
                        }
                        let s = self.engine.sum(&pn, c, r);
                        let d = match &den {
                            None => self.engine.count(c, r) as f64,
                            Some(pd) => self.engine.sum(pd, c, r),
                        };
                        (s / d).max(0.0)
                    })
                    .collect()
            })
            .collect();
        let mut out = vec![0.0; domain.len()];
        self.engine.dilate_max(&per_ball, &mut out);
        require_covered(domain, &out)?;
        Ok(out)
    }

    /// `f#(x) = max_{B ∋ x} ⨍_B |f − f_B|`.
    pub fn sharp(&self, values: &[f64]) -> Result<Vec<f64>> {
        let domain = self.engine.domain();
        let mut cells = Vec::new();
        let per_ball: Vec<Vec<f64>> = (0..self.fam.radii().len())
            .map(|r| {
                (0..domain.len())
                    .map(|c| {
                        if !self.mask[c] {
                            return f64::NEG_INFINITY;
                        }
                        self.engine.cells(c, r, &mut cells);
                        let n = cells.len() as f64;
                        let mean = cells.iter().map(|&i| values[i]).sum::<f64>() / n;
                        cells.iter().map(|&i| (values[i] - mean).abs()).sum::<f64>() / n
                    })
                    .collect()
            })
            .collect();
        let mut out = vec![0.0; domain.len()];
        self.engine.dilate_max(&per_ball, &mut out);
        require_covered(domain, &out)?;
        Ok(out)
    }

    /// Number of cells of `B_r(c)` lying in `cube`.
    fn count_in_box(&self, center: usize, r: usize, cube: &CellBox) -> usize {
        let domain = self.engine.domain();
        let nd = domain.ndim();
        let shape = domain.shape();
        let n_last = shape[nd - 1];
        let mut total = 0;
        self.engine.for_each_segment(center, r, |line, a, b| {
            let mut rem = line;
            for k in (0..nd - 1).rev() {
                let j = rem % shape[k];
                rem /= shape[k];
                if j < cube.lo[k] || j >= cube.hi[k] {
                    return;
                }
            }
            let lo = a.max(cube.lo[nd - 1]);
            let hi = (b + 1).min(cube.hi[nd - 1]).min(n_last);
            if hi > lo {
                total += hi - lo;
            }
        });
        total
    }

    /// Smallest `μ(B)/μ(Q)` over family balls `B ⊇ Q` centered near `Q`'s middle.
    fn cover_ratio(&self, cube: &CellBox) -> Option<f64> {
        let domain = self.engine.domain();
        let size = cube.cell_count();
        let nd = domain.ndim();
        let mut mids: Vec<Vec<usize>> = Vec::with_capacity(nd);
        for k in 0..nd {
            let s = cube.hi[k] - cube.lo[k];
            mids.push(if s % 2 == 0 { vec![cube.lo[k] + s / 2 - 1, cube.lo[k] + s / 2] } else { vec![cube.lo[k] + s / 2] });
        }
        let mut candidates = Vec::new();
        let mut idx = vec![0usize; nd];
        let total: usize = mids.iter().map(|m| m.len()).product();
        for t in 0..total {
            let mut rem = t;
            for k in (0..nd).rev() {
                idx[k] = mids[k][rem % mids[k].len()];
                rem /= mids[k].len();
            }
            let c = domain.ravel(&idx);
            if self.mask[c] {
                candidates.push(c);
            }
        }
        if candidates.is_empty() {
            candidates = cube.cells(domain).into_iter().filter(|&c| self.mask[c]).collect();
        }
        let mut best: Option<f64> = None;
        for c in candidates {
            for r in 0..self.fam.radii().len() {
                if self.count_in_box(c, r, cube) == size {
                    let ratio = self.engine.count(c, r) as f64 / size as f64;
                    best = Some(best.map_or(ratio, |b: f64| b.min(ratio)));
                    break;
                }
            }
        }
        best
    }

    /// `C_geom = 2·max_Q min_{B ⊇ Q} μ(B)/μ(Q)` over all lattice cubes.
    pub fn geometric_constant(&self, lat: &DyadicLattice) -> Result<f64> {
        let domain = self.engine.domain();
        if lat.domain() != domain {
            return arg("lattice and family live on different domains");
        }
        let finest = lat.levels().last().expect("lattice has levels");
        let lens = lat.cube_lengths(&finest.cubes[0]);
        let two_m = (2 * domain.m()) as f64;
        let mut space = 0.0;
        let mut time = 0.0;
        for (a, l) in domain.axes().iter().zip(&lens) {
            match a.role {
                AxisRole::Space => space += (l / 2.0) * (l / 2.0),
                AxisRole::Time => time = (l / 2.0).powf(1.0 / two_m),
            }
        }
        let circ = space.sqrt() + time;
        if self.fam.radii()[0] < circ * (1.0 - 1e-12) {
            return arg(format!(
                "smallest family radius {} is below the circumscribed radius {circ} of the finest cubes",
                self.fam.radii()[0]
            ));
        }
        let mut c = 1.0f64;
        for level in lat.levels() {
            for (i, cube) in level.cubes.iter().enumerate() {
                match self.cover_ratio(cube) {
                    Some(r) => c = c.max(r),
                    None => {
                        return arg(format!("no family ball contains level-{} cube {i}; enlarge the radii", level.n));
                    }
                }
            }
        }
        Ok(2.0 * c)
    }
}

pub fn ball_maximal(f: &GridFunction, fam: &BallFamily, w: Option<&Weight>) -> Result<MaximalOutput> {
    if let Some(w) = w {
        f.require_same_domain(w.base())?;
    }
    let op = BallOperator::new(f.domain(), fam)?;
    let values = op.maximal(f.values(), w.map(|w| w.values()))?;
    Ok(MaximalOutput { values: f.with_values(values), flavor: Flavor::Ball, source: family_source(fam) })
}

pub fn ball_sharp(f: &GridFunction, fam: &BallFamily) -> Result<MaximalOutput> {
    let op = BallOperator::new(f.domain(), fam)?;
    let values = op.sharp(f.values())?;
    Ok(MaximalOutput { values: f.with_values(values), flavor: Flavor::Ball, source: family_source(fam) })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonReport {
    /// `sup_x M_dy f / M f`.
    pub maximal_ratio: f64,
    /// `sup_x f#_dy / f#`.
    pub sharp_ratio: f64,
    pub c_geom: f64,
    /// Points where a ratio was 0/0 (counted as passing).
    pub zero_over_zero: usize,
    pub passed: bool,
}

fn sup_ratio(num: &[f64], den: &[f64], flagged: &mut usize) -> f64 {
    let mut sup = 0.0f64;
    for (&a, &b) in num.iter().zip(den) {
        match ratio_or_flag(a, b) {
            Some(r) => sup = sup.max(r),
            None => *flagged += 1,
        }
    }
    sup
}

/// Pointwise comparison of dyadic and ball operators against `C_geom`.
pub fn check_comparison(f: &GridFunction, lat: &DyadicLattice, fam: &BallFamily) -> Result<ComparisonReport> {
    lat.check_function(f)?;
    let op = BallOperator::new(f.domain(), fam)?;
    let c_geom = op.geometric_constant(lat)?;
    let md = dyadic_maximal_values(f.values(), lat);
    let sd = dyadic_sharp_values(f.values(), lat);
    let mb = op.maximal(f.values(), None)?;
    let sb = op.sharp(f.values())?;
    let mut flagged = 0;
    let maximal_ratio = sup_ratio(&md, &mb, &mut flagged);
    let sharp_ratio = sup_ratio(&sd, &sb, &mut flagged);
    let bound = c_geom * (1.0 + 1e-12);
    Ok(ComparisonReport {
        maximal_ratio,
        sharp_ratio,
        c_geom,
        zero_over_zero: flagged,
        passed: maximal_ratio <= bound && sharp_ratio <= bound,
    })
}

/// `sup ‖M f‖_{L_p(w)} / ‖f‖_{L_p(w)}` over a suite.
pub fn check_hl_bound(suite: &[SuiteMember], w: &Weight, p: f64, fam: &BallFamily) -> Result<RatioReport> {
    if suite.is_empty() {
        return arg("empty suite");
    }
    if !(p > 1.0 && p.is_finite()) {
        return arg(format!("p must lie in (1, ∞), got {p}"));
    }
    let op = BallOperator::new(w.domain(), fam)?;
    let mut report = RatioReport::new(format!("hl_bound p={p}"), None);
    for m in suite {
        m.f.require_same_domain(w.base())?;
        let mf = m.f.with_values(op.maximal(m.f.values(), None)?);
        report.push(m.seed, ratio_or_flag(mf.weighted_lp_norm(w.values(), p), m.f.weighted_lp_norm(w.values(), p)));
    }
    Ok(report)
}
