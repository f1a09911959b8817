use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};
use crate::lattice::{AxisRole, Domain};

/// Distance used to define balls.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Metric {
    Euclidean,
    /// `|x − y| + |t − s|^{1/2m}`, time on axis 0.
    Parabolic { m: u32 },
}

impl Metric {
    /// The natural metric of a domain.
    pub fn for_domain(domain: &Domain) -> Metric {
        if domain.kind().is_parabolic() {
            Metric::Parabolic { m: domain.m() }
        } else {
            Metric::Euclidean
        }
    }

    pub fn check_domain(&self, domain: &Domain) -> Result<()> {
        if *self == Metric::for_domain(domain) {
            Ok(())
        } else {
            arg(format!("metric {self:?} does not match a {:?} domain with m = {}", domain.kind(), domain.m()))
        }
    }

    /// Distance for per-axis coordinate differences on `domain`.
    pub fn distance(&self, domain: &Domain, delta: &[f64]) -> f64 {
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
}

/// A family of balls `B_r(c)` with centers at grid cells and radii `r₀2^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct BallFamily {
    centers: Vec<usize>,
    radii: Vec<f64>,
    metric: Metric,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ball {
    pub center: usize,
    pub radius: f64,
}

impl BallFamily {
    /// Radii `r0·2^k`, `k = 0..=k_max`.
    pub fn new(centers: Vec<usize>, r0: f64, k_max: u32, metric: Metric) -> Result<Self> {
        if !(r0 > 0.0 && r0.is_finite()) {
            return arg(format!("base radius must be positive, got {r0}"));
        }
        let radii = (0..=k_max).map(|k| r0 * 2f64.powi(k as i32)).collect();
        Self::with_radii(centers, radii, metric)
    }

    pub fn with_radii(mut centers: Vec<usize>, radii: Vec<f64>, metric: Metric) -> Result<Self> {
        if radii.is_empty() {
            return arg("a ball family needs at least one radius");
        }
        if radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) || radii.windows(2).any(|w| w[1] <= w[0]) {
            return arg("radii must be positive and strictly increasing");
        }
        centers.sort_unstable();
        centers.dedup();
        Ok(BallFamily { centers, radii, metric })
    }

    /// Every grid cell as a center, metric taken from the domain.
    pub fn all_centers(domain: &Domain, r0: f64, k_max: u32) -> Result<Self> {
        Self::new((0..domain.len()).collect(), r0, k_max, Metric::for_domain(domain))
    }

    /// Same radii and metric, different centers.
    pub fn with_centers(&self, centers: Vec<usize>) -> Result<Self> {
        Self::with_radii(centers, self.radii.clone(), self.metric)
    }

    pub fn centers(&self) -> &[usize] {
        &self.centers
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn len(&self) -> usize {
        self.centers.len() * self.radii.len()
    }

    pub fn contains_ball(&self, ball: &Ball) -> bool {
        self.centers.binary_search(&ball.center).is_ok() && self.radii.contains(&ball.radius)
    }

    pub(crate) fn fingerprint(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.centers.hash(&mut h);
        for r in &self.radii {
            r.to_bits().hash(&mut h);
        }
        self.metric.hash(&mut h);
        h.finish()
    }
}

/// Offsets whose cells make up a ball, as rows along the last axis.
#[derive(Clone, Debug)]
pub(crate) struct Stencil {
    rows: Vec<Row>,
}

#[derive(Clone, Debug)]
struct Row {
    outer: Vec<isize>,
    lo: isize,
    hi: isize,
}

/// Largest integer `k` with `k < x`, treating near-integers as integers.
fn open_floor(x: f64) -> isize {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r as isize - 1
    } else {
        x.floor() as isize
    }
}

/// Offset window that keeps each residue once on a torus.
fn window(n: usize, periodic: bool) -> (isize, isize) {
    if periodic {
        (-(((n - 1) / 2) as isize), (n / 2) as isize)
    } else {
        (-(n as isize - 1), n as isize - 1)
    }
}

impl Stencil {
    fn build(domain: &Domain, radius: f64) -> Stencil {
        let nd = domain.ndim();
        let periodic = domain.is_periodic();
        let m = domain.m();
        let two_m = (2 * m) as f64;
        let axes = domain.axes();
        // per-axis reach from the radius alone
        let reach: Vec<(isize, isize)> = axes
            .iter()
            .map(|a| {
                let budget = match a.role {
                    AxisRole::Space => radius,
                    AxisRole::Time => radius.powf(two_m),
                };
                let k = open_floor(budget / a.step());
                let (wlo, whi) = window(a.points, periodic);
                (wlo.max(-k), whi.min(k))
            })
            .collect();
        let last = nd - 1;
        let mut rows = Vec::new();
        let mut outer = vec![0isize; last];
        let mut done = last > 0 && (0..last).any(|k| reach[k].0 > reach[k].1);
        if !done {
            for k in 0..last {
                outer[k] = reach[k].0;
            }
        }
        while !done {
            let mut space = 0.0;
            let mut time = 0.0;
            for k in 0..last {
                let d = outer[k] as f64 * axes[k].step();
                match axes[k].role {
                    AxisRole::Space => space += d * d,
                    AxisRole::Time => time = d.abs().powf(1.0 / two_m),
                }
            }
            let half = match axes[last].role {
                AxisRole::Time => radius.powf(two_m),
                AxisRole::Space => {
                    let rem = radius - time;
                    if rem > 0.0 {
                        let h2 = rem * rem - space;
                        if h2 > 0.0 {
                            h2.sqrt()
                        } else {
                            0.0
                        }
                    } else {
                        0.0
                    }
                }
            };
            if half > 0.0 {
                let k = open_floor(half / axes[last].step());
                let (wlo, whi) = reach[last];
                let lo = wlo.max(-k);
                let hi = whi.min(k);
                if k >= 0 && lo <= hi {
                    rows.push(Row { outer: outer.clone(), lo, hi });
                }
            }
            // advance the outer odometer
            let mut k = last;
            loop {
                if k == 0 {
                    done = true;
                    break;
                }
                k -= 1;
                outer[k] += 1;
                if outer[k] <= reach[k].1 {
                    break;
                }
                outer[k] = reach[k].0;
            }
        }
        Stencil { rows }
    }
}

/// Per-line prefix sums along the last axis.
pub(crate) struct LinePrefix {
    n_last: usize,
    data: Vec<f64>,
}

impl LinePrefix {
    pub(crate) fn new(domain: &Domain, values: &[f64]) -> Self {
        let n_last = domain.axis(domain.ndim() - 1).points;
        let lines = values.len() / n_last;
        let mut data = Vec::with_capacity(lines * (n_last + 1));
        for line in values.chunks(n_last) {
            let mut s = 0.0;
            data.push(0.0);
            for v in line {
                s += v;
                data.push(s);
            }
        }
        LinePrefix { n_last, data }
    }

    #[inline]
    fn sum(&self, line: usize, a: usize, b: usize) -> f64 {
        let base = line * (self.n_last + 1);
        self.data[base + b + 1] - self.data[base + a]
    }
}

/// Sparse-table range maximum along each line of the last axis.
pub(crate) struct LineMax {
    n_last: usize,
    tables: Vec<Vec<f64>>,
}

impl LineMax {
    pub(crate) fn new(domain: &Domain, values: &[f64]) -> Self {
        let n_last = domain.axis(domain.ndim() - 1).points;
        let mut tables = vec![values.to_vec()];
        let mut width = 1;
        while 2 * width <= n_last {
            let prev = tables.last().expect("table level");
            let mut next = vec![f64::NEG_INFINITY; values.len()];
            for (line_start, chunk) in (0..values.len()).step_by(n_last).zip(prev.chunks(n_last)) {
                for i in 0..=n_last - 2 * width {
                    next[line_start + i] = chunk[i].max(chunk[i + width]);
                }
            }
            tables.push(next);
            width *= 2;
        }
        LineMax { n_last, tables }
    }

    #[inline]
    fn max(&self, line: usize, a: usize, b: usize) -> f64 {
        let len = b - a + 1;
        let lvl = (usize::BITS - 1 - len.leading_zeros()) as usize;
        let t = &self.tables[lvl];
        let base = line * self.n_last;
        t[base + a].max(t[base + b + 1 - (1 << lvl)])
    }
}

/// Evaluates sums, counts, maxima and cell lists over family balls.
pub(crate) struct BallEngine<'a> {
    domain: &'a Domain,
    stencils: Vec<Stencil>,
    outer_strides: Vec<usize>,
    outer_shape: Vec<usize>,
    n_last: usize,
    periodic: bool,
}

impl<'a> BallEngine<'a> {
    pub(crate) fn new(domain: &'a Domain, fam: &BallFamily) -> Result<Self> {
        fam.metric().check_domain(domain)?;
        Ok(Self::with_radii(domain, fam.radii()))
    }

    pub(crate) fn with_radii(domain: &'a Domain, radii: &[f64]) -> Self {
        let nd = domain.ndim();
        let shape = domain.shape();
        let outer_shape = shape[..nd - 1].to_vec();
        let mut outer_strides = vec![1usize; nd - 1];
        for k in (0..nd.saturating_sub(2)).rev() {
            outer_strides[k] = outer_strides[k + 1] * outer_shape[k + 1];
        }
        BallEngine {
            domain,
            stencils: radii.iter().map(|&r| Stencil::build(domain, r)).collect(),
            outer_strides,
            outer_shape,
            n_last: shape[nd - 1],
            periodic: domain.is_periodic(),
        }
    }

    pub(crate) fn domain(&self) -> &Domain {
        self.domain
    }

    /// Calls `visit(line, a, b)` for every inclusive run of cells of the ball.
    #[inline]
    pub(crate) fn for_each_segment(&self, center: usize, radius: usize, mut visit: impl FnMut(usize, usize, usize)) {
        let nl = self.n_last as isize;
        let c_line = center / self.n_last;
        let c_last = (center % self.n_last) as isize;
        let nd_outer = self.outer_shape.len();
        let mut c_outer = [0isize; 8];
        let mut rem = c_line;
        for k in (0..nd_outer).rev() {
            c_outer[k] = (rem % self.outer_shape[k]) as isize;
            rem /= self.outer_shape[k];
        }
        'rows: for row in &self.stencils[radius].rows {
            let mut line = 0usize;
            for k in 0..nd_outer {
                let n = self.outer_shape[k] as isize;
                let mut j = c_outer[k] + row.outer[k];
                if self.periodic {
                    j = j.rem_euclid(n);
                } else if j < 0 || j >= n {
                    continue 'rows;
                }
                line += j as usize * self.outer_strides[k];
            }
            let a = c_last + row.lo;
            let b = c_last + row.hi;
            if self.periodic {
                let a = a.rem_euclid(nl);
                let b = b.rem_euclid(nl);
                if a <= b {
                    visit(line, a as usize, b as usize);
                } else {
                    visit(line, a as usize, (nl - 1) as usize);
                    visit(line, 0, b as usize);
                }
            } else {
                let a = a.max(0);
                let b = b.min(nl - 1);
                if a <= b {
                    visit(line, a as usize, b as usize);
                }
            }
        }
    }

    pub(crate) fn sum(&self, prefix: &LinePrefix, center: usize, radius: usize) -> f64 {
        let mut s = 0.0;
        self.for_each_segment(center, radius, |line, a, b| s += prefix.sum(line, a, b));
        s
    }

    pub(crate) fn count(&self, center: usize, radius: usize) -> usize {
        let mut c = 0;
        self.for_each_segment(center, radius, |_, a, b| c += b - a + 1);
        c
    }

    pub(crate) fn max(&self, table: &LineMax, center: usize, radius: usize) -> f64 {
        let mut m = f64::NEG_INFINITY;
        self.for_each_segment(center, radius, |line, a, b| m = m.max(table.max(line, a, b)));
        m
    }

    pub(crate) fn cells(&self, center: usize, radius: usize, out: &mut Vec<usize>) {
        out.clear();
        let nl = self.n_last;
        self.for_each_segment(center, radius, |line, a, b| out.extend((a..=b).map(|j| line * nl + j)));
    }

    /// Max over family radii and over family centers `c` with `x ∈ B_r(c)` of
    /// `per_ball[r][c]`; balls are symmetric, so the centers are those in `B_r(x)`.
    pub(crate) fn dilate_max(&self, per_ball: &[Vec<f64>], out: &mut [f64]) {
        for v in out.iter_mut() {
            *v = f64::NEG_INFINITY;
        }
        for (r, vals) in per_ball.iter().enumerate() {
            let table = LineMax::new(self.domain, vals);
            for (x, o) in out.iter_mut().enumerate() {
                let m = self.max(&table, x, r);
                if m > *o {
                    *o = m;
                }
            }
        }
    }
}

/// Center mask of a family on a domain, with range checks.
pub(crate) fn center_mask(domain: &Domain, fam: &BallFamily) -> Result<Vec<bool>> {
    let mut mask = vec![false; domain.len()];
    for &c in fam.centers() {
        if c >= domain.len() {
            return arg(format!("ball center {c} outside a grid of {} cells", domain.len()));
        }
        mask[c] = true;
    }
    Ok(mask)
}

/// Fails with a coverage error naming the first uncovered cell.
pub(crate) fn require_covered(domain: &Domain, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| *v == f64::NEG_INFINITY) {
        None => Ok(()),
        Some(x) => Err(Error::Coverage(format!("cell {:?} lies in no family ball", domain.unravel(x)))),
    }
}
