use std::sync::Arc;

use serde::Serialize;

use crate::error::{arg, Error, Result};

use super::{AxisRole, Domain, GridFunction};

/// Half-open box of cell indices `[lo_k, hi_k)` per axis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellBox {
    pub lo: Vec<usize>,
    pub hi: Vec<usize>,
}

impl CellBox {
    pub fn cell_count(&self) -> usize {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b.saturating_sub(*a)).product()
    }

    pub fn contains_index(&self, idx: &[usize]) -> bool {
        idx.iter().zip(self.lo.iter().zip(&self.hi)).all(|(&i, (&a, &b))| a <= i && i < b)
    }

    pub fn contains_box(&self, other: &CellBox) -> bool {
        (0..self.lo.len()).all(|k| self.lo[k] <= other.lo[k] && other.hi[k] <= self.hi[k])
    }

    /// Flat indices of every cell in the box, row-major.
    pub fn cells(&self, domain: &Domain) -> Vec<usize> {
        let nd = self.lo.len();
        let mut out = Vec::with_capacity(self.cell_count());
        if self.cell_count() == 0 {
            return out;
        }
        let mut idx = self.lo.clone();
        loop {
            out.push(domain.ravel(&idx));
            let mut k = nd;
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < self.hi[k] {
                    break;
                }
                idx[k] = self.lo[k];
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Level {
    pub n: i32,
    pub cubes: Vec<CellBox>,
    /// Cube index of each cell, `usize::MAX` where no cube covers it.
    pub labels: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct CubeId {
    pub level: i32,
    pub index: usize,
}

/// Nested partitions `C_n`, `n_min ≤ n ≤ n_max`, of a grid domain.
#[derive(Clone, Debug)]
pub struct DyadicLattice {
    domain: Arc<Domain>,
    n_min: i32,
    n_max: i32,
    levels: Vec<Level>,
    n1: usize,
}

/// Refinement exponent of each axis: `2m` for time, 1 for space.
pub fn refinement_exponents(domain: &Domain) -> Vec<u32> {
    domain
        .axes()
        .iter()
        .map(|a| if a.role == AxisRole::Time { 2 * domain.m() } else { 1 })
        .collect()
}

/// `N₀`: diameter of the level-0 cube in the domain metric.
pub fn diameter_constant(domain: &Domain) -> f64 {
    let lens: Vec<f64> = domain.axes().iter().map(|a| a.length()).collect();
    metric_extent(domain, &lens)
}

/// `ε₀`: radius of the largest metric ball inside the level-0 cube.
pub fn inscribed_constant(domain: &Domain) -> f64 {
    let lens: Vec<f64> = domain.axes().iter().map(|a| a.length()).collect();
    inscribed_radius(domain, &lens)
}

/// Metric diameter of a box with side lengths `lens`.
fn metric_extent(domain: &Domain, lens: &[f64]) -> f64 {
    let mut space = 0.0;
    let mut time = 0.0;
    for (a, &l) in domain.axes().iter().zip(lens) {
        match a.role {
            AxisRole::Space => space += l * l,
            AxisRole::Time => time = l.powf(1.0 / (2 * domain.m()) as f64),
        }
    }
    space.sqrt() + time
}

fn inscribed_radius(domain: &Domain, lens: &[f64]) -> f64 {
    domain
        .axes()
        .iter()
        .zip(lens)
        .map(|(a, &l)| match a.role {
            AxisRole::Space => l / 2.0,
            AxisRole::Time => (l / 2.0).powf(1.0 / (2 * domain.m()) as f64),
        })
        .fold(f64::INFINITY, f64::min)
}

/// Builds the standard dyadic filtration; level `n` splits axis `k` into
/// `2^{e_k n}` equal pieces of the extent.
pub fn build_lattice(domain: impl Into<Arc<Domain>>, n_min: i32, n_max: i32) -> Result<DyadicLattice> {
    let domain = domain.into();
    if n_max < n_min {
        return arg(format!("n_max = {n_max} is below n_min = {n_min}"));
    }
    if n_min < 0 {
        return arg(format!("levels start at 0 (the whole domain); got n_min = {n_min}"));
    }
    let exps = refinement_exponents(&domain);
    for (k, (a, &e)) in domain.axes().iter().zip(&exps).enumerate() {
        let shift = e as u64 * n_max as u64;
        if shift >= 63 {
            return Err(Error::Alignment { axis: k, detail: format!("level {n_max} is too fine") });
        }
        let cubes = 1usize << shift;
        if a.points % cubes != 0 || !(a.points / cubes).is_power_of_two() {
            return Err(Error::Alignment {
                axis: k,
                detail: format!("{} cells cannot be split into {cubes} cubes of power-of-two size", a.points),
            });
        }
    }
    let nd = domain.ndim();
    let mut levels = Vec::with_capacity((n_max - n_min + 1) as usize);
    let mut idx = vec![0usize; nd];
    for n in n_min..=n_max {
        let counts: Vec<usize> = exps.iter().map(|&e| 1usize << (e as usize * n as usize)).collect();
        let sizes: Vec<usize> = domain.axes().iter().zip(&counts).map(|(a, c)| a.points / c).collect();
        let total: usize = counts.iter().product();
        let mut cubes = Vec::with_capacity(total);
        let mut cidx = vec![0usize; nd];
        for c in 0..total {
            let mut rem = c;
            for k in (0..nd).rev() {
                cidx[k] = rem % counts[k];
                rem /= counts[k];
            }
            cubes.push(CellBox {
                lo: (0..nd).map(|k| cidx[k] * sizes[k]).collect(),
                hi: (0..nd).map(|k| (cidx[k] + 1) * sizes[k]).collect(),
            });
        }
        let labels = (0..domain.len())
            .map(|flat| {
                domain.unravel_into(flat, &mut idx);
                (0..nd).fold(0, |acc, k| acc * counts[k] + idx[k] / sizes[k])
            })
            .collect();
        levels.push(Level { n, cubes, labels });
    }
    let n1 = 1usize << exps.iter().sum::<u32>();
    Ok(DyadicLattice { domain, n_min, n_max, levels, n1 })
}

impl DyadicLattice {
    /// Assembles a lattice from explicit cube lists, one per level starting
    /// at `n_min`. Nothing is validated; see [`validate_lattice`].
    pub fn from_parts(domain: impl Into<Arc<Domain>>, n_min: i32, cubes: Vec<Vec<CellBox>>) -> Result<Self> {
        let domain = domain.into();
        if cubes.is_empty() {
            return arg("a lattice needs at least one level");
        }
        let nd = domain.ndim();
        let shape = domain.shape();
        let mut idx = vec![0usize; nd];
        let mut levels = Vec::with_capacity(cubes.len());
        for (i, list) in cubes.into_iter().enumerate() {
            for b in &list {
                if b.lo.len() != nd || b.hi.len() != nd || (0..nd).any(|k| b.hi[k] > shape[k] || b.lo[k] >= b.hi[k]) {
                    return arg(format!("cube {b:?} is not a nonempty box inside the grid"));
                }
            }
            let labels = (0..domain.len())
                .map(|flat| {
                    domain.unravel_into(flat, &mut idx);
                    list.iter().position(|b| b.contains_index(&idx)).unwrap_or(usize::MAX)
                })
                .collect();
            levels.push(Level { n: n_min + i as i32, cubes: list, labels });
        }
        let n1 = 1usize << refinement_exponents(&domain).iter().sum::<u32>();
        let n_max = n_min + levels.len() as i32 - 1;
        Ok(DyadicLattice { domain, n_min, n_max, levels, n1 })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn domain_arc(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn n_min(&self) -> i32 {
        self.n_min
    }

    pub fn n_max(&self) -> i32 {
        self.n_max
    }

    /// Parent/child measure ratio `N₁`.
    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn level(&self, n: i32) -> Result<&Level> {
        if n < self.n_min || n > self.n_max {
            return arg(format!("level {n} outside [{}, {}]", self.n_min, self.n_max));
        }
        Ok(&self.levels[(n - self.n_min) as usize])
    }

    /// True when every cube of the finest level is a single grid cell.
    pub fn finest_is_cells(&self) -> bool {
        self.levels.last().is_some_and(|l| l.cubes.iter().all(|c| c.cell_count() == 1))
    }

    pub fn check_function(&self, f: &GridFunction) -> Result<()> {
        if f.domain() != &*self.domain {
            return arg("function and lattice live on different domains");
        }
        Ok(())
    }

    /// Average of `values` over each cube of `level`.
    pub fn cube_averages(&self, level: &Level, values: &[f64]) -> Vec<f64> {
        let mut sums = vec![0.0; level.cubes.len()];
        let mut counts = vec![0usize; level.cubes.len()];
        for (&l, &v) in level.labels.iter().zip(values) {
            if l != usize::MAX {
                sums[l] += v;
                counts[l] += 1;
            }
        }
        sums.iter().zip(&counts).map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 }).collect()
    }

    /// Physical side lengths of a cube.
    pub fn cube_lengths(&self, cube: &CellBox) -> Vec<f64> {
        self.domain
            .axes()
            .iter()
            .enumerate()
            .map(|(k, a)| (cube.hi[k] - cube.lo[k]) as f64 * a.step())
            .collect()
    }

    /// Physical half-open extent `[lo, hi)` of a cube per axis.
    pub fn cube_extent(&self, cube: &CellBox) -> Vec<[f64; 2]> {
        self.domain
            .axes()
            .iter()
            .enumerate()
            .map(|(k, a)| [a.lo + cube.lo[k] as f64 * a.step(), a.lo + cube.hi[k] as f64 * a.step()])
            .collect()
    }
}

/// `f_{|n}`: cube averages of `f` at level `n`, broadcast back to the grid.
pub fn conditional_expectation(f: &GridFunction, lat: &DyadicLattice, n: i32) -> Result<GridFunction> {
    lat.check_function(f)?;
    let level = lat.level(n)?;
    let avg = lat.cube_averages(level, f.values());
    let values = level.labels.iter().map(|&l| if l == usize::MAX { 0.0 } else { avg[l] }).collect();
    Ok(f.with_values(values))
}

pub fn cube_containing(lat: &DyadicLattice, point: &[f64], n: i32) -> Result<CubeId> {
    let level = lat.level(n)?;
    let idx = lat.domain().locate(point)?;
    let label = level.labels[lat.domain().ravel(&idx)];
    if label == usize::MAX {
        return Err(Error::Domain(format!("no level-{n} cube covers {point:?}")));
    }
    Ok(CubeId { level: n, index: label })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub disjoint: bool,
    pub covering: bool,
    pub nested: bool,
    pub diameter: bool,
    pub inscribed_ball: bool,
    pub measure_ratio: bool,
    /// Distinct parent/child cell-count ratios that were observed.
    pub observed_ratios: Vec<usize>,
    pub n0: f64,
    pub eps0: f64,
    pub failures: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.disjoint && self.covering && self.nested && self.diameter && self.inscribed_ball && self.measure_ratio
    }
}

pub fn validate_lattice(lat: &DyadicLattice) -> ValidationReport {
    let domain = lat.domain();
    let n0 = diameter_constant(domain);
    let eps0 = inscribed_constant(domain);
    let mut r = ValidationReport {
        disjoint: true,
        covering: true,
        nested: true,
        diameter: true,
        inscribed_ball: true,
        measure_ratio: true,
        observed_ratios: Vec::new(),
        n0,
        eps0,
        failures: Vec::new(),
    };
    let mut parent_hits: Vec<u32> = Vec::new();
    for level in lat.levels() {
        let n = level.n;
        let mut hits = vec![0u32; domain.len()];
        for cube in &level.cubes {
            for c in cube.cells(domain) {
                hits[c] += 1;
            }
        }
        if let Some(c) = hits.iter().position(|&h| h > 1) {
            r.disjoint = false;
            r.failures.push(format!("level {n}: cell {:?} lies in {} cubes", domain.unravel(c), hits[c]));
        }
        if let Some(c) = hits.iter().position(|&h| h == 0) {
            r.covering = false;
            r.failures.push(format!("level {n}: cell {:?} is not covered", domain.unravel(c)));
        }
        let scale = 0.5f64.powi(n);
        for (i, cube) in level.cubes.iter().enumerate() {
            let lens = lat.cube_lengths(cube);
            let diam = metric_extent(domain, &lens);
            if diam > n0 * scale * (1.0 + 1e-12) {
                r.diameter = false;
                r.failures.push(format!("level {n} cube {i}: diameter {diam} exceeds {}", n0 * scale));
            }
            let inner = inscribed_radius(domain, &lens);
            if inner < eps0 * scale * (1.0 - 1e-12) {
                r.inscribed_ball = false;
                r.failures.push(format!("level {n} cube {i}: inscribed radius {inner} below {}", eps0 * scale));
            }
        }
        let prev_hits = std::mem::replace(&mut parent_hits, hits);
        if n == lat.n_min() {
            continue;
        }
        let parent = lat.level(n - 1).expect("parent level exists");
        let parent_disjoint = prev_hits.iter().all(|&h| h <= 1);
        for (i, cube) in level.cubes.iter().enumerate() {
            let owners: Vec<usize> = if parent_disjoint {
                // a cube lies in at most one of a disjoint family; the label
                // of its first cell names the only candidate
                let j = parent.labels[domain.ravel(&cube.lo)];
                if j != usize::MAX && parent.cubes[j].contains_box(cube) { vec![j] } else { vec![] }
            } else {
                (0..parent.cubes.len()).filter(|&j| parent.cubes[j].contains_box(cube)).collect()
            };
            if owners.len() != 1 {
                r.nested = false;
                r.failures.push(format!("level {n} cube {i} is contained in {} parent cubes", owners.len()));
                continue;
            }
            let pc = parent.cubes[owners[0]].cell_count();
            let cc = cube.cell_count();
            if pc % cc != 0 || pc / cc != lat.n1() {
                r.measure_ratio = false;
                r.failures.push(format!("level {n} cube {i}: parent/child measure ratio {pc}/{cc} differs from {}", lat.n1()));
            }
            let ratio = if pc % cc == 0 { pc / cc } else { 0 };
            if !r.observed_ratios.contains(&ratio) {
                r.observed_ratios.push(ratio);
            }
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::DomainKind;

    fn unit(n: usize) -> Domain {
        Domain::interval(DomainKind::EuclideanBox, 0.0, 1.0, n).unwrap()
    }

    #[test]
    fn one_dimensional_levels() {
        let lat = build_lattice(unit(16), 0, 3).unwrap();
        let l1 = lat.level(1).unwrap();
        assert_eq!(lat.cube_extent(&l1.cubes[0]), vec![[0.0, 0.5]]);
        assert_eq!(lat.cube_extent(&l1.cubes[1]), vec![[0.5, 1.0]]);
        assert_eq!(lat.n1(), 2);
        assert!(validate_lattice(&lat).passed());
    }

    #[test]
    fn parabolic_levels() {
        let d = Domain::new(DomainKind::ParabolicBox, 1, 1, &[[0.0, 1.0], [0.0, 1.0]], &[16, 4]).unwrap();
        let lat = build_lattice(d, 0, 2).unwrap();
        let l1 = lat.level(1).unwrap();
        assert_eq!(lat.cube_lengths(&l1.cubes[0]), vec![0.25, 0.5]);
        assert_eq!(lat.n1(), 8);
        assert!(validate_lattice(&lat).passed());
    }

    #[test]
    fn argument_and_alignment_errors() {
        assert!(matches!(build_lattice(unit(16), 3, 1), Err(Error::Argument(_))));
        assert!(matches!(build_lattice(unit(12), 0, 3), Err(Error::Alignment { axis: 0, .. })));
        let d = Domain::new(DomainKind::EuclideanBox, 2, 1, &[[0.0, 1.0]; 2], &[16, 8]).unwrap();
        assert!(matches!(build_lattice(d, 0, 4), Err(Error::Alignment { axis: 1, .. })));
    }

    #[test]
    fn conditional_expectation_examples() {
        let d = Arc::new(unit(16));
        let lat = build_lattice(d.clone(), 0, 3).unwrap();
        let f = GridFunction::from_fn(d.clone(), |x| x[0]);
        let e = conditional_expectation(&f, &lat, 1).unwrap();
        assert!((e.values()[0] - 0.25).abs() < 1e-15);
        assert!((e.values()[15] - 0.75).abs() < 1e-15);
        let ind = GridFunction::from_fn(d, |x| if x[0] < 0.25 { 1.0 } else { 0.0 });
        let e = conditional_expectation(&ind, &lat, 1).unwrap();
        assert_eq!(e.values()[0], 0.5);
        assert_eq!(e.values()[15], 0.0);
        assert!(conditional_expectation(&ind, &lat, 4).is_err());
    }

    #[test]
    fn cube_containing_is_half_open() {
        let lat = build_lattice(unit(16), 0, 3).unwrap();
        assert_eq!(cube_containing(&lat, &[0.5], 1).unwrap().index, 1);
        assert_eq!(cube_containing(&lat, &[0.49], 1).unwrap().index, 0);
        assert!(matches!(cube_containing(&lat, &[1.5], 1), Err(Error::Domain(_))));
    }

    #[test]
    fn overlapping_hand_built_cube_is_flagged() {
        let d = unit(4);
        let root = vec![CellBox { lo: vec![0], hi: vec![4] }];
        let kids = vec![CellBox { lo: vec![0], hi: vec![3] }, CellBox { lo: vec![2], hi: vec![4] }];
        let lat = DyadicLattice::from_parts(d, 0, vec![root, kids]).unwrap();
        let r = validate_lattice(&lat);
        assert!(!r.disjoint);
        assert!(!r.passed());
    }
}
