use serde::Serialize;

use crate::error::{arg, Result};
use crate::lattice::{DyadicLattice, GridFunction};
use crate::report::Regime;

/// `λ₀ = 2N₁‖f‖_{L₁}/μ(X)` on finite-measure regimes, 0 otherwise.
pub fn lambda_floor(f: &GridFunction, lat: &DyadicLattice, regime: Regime) -> f64 {
    if regime.is_infinite() {
        return 0.0;
    }
    2.0 * lat.n1() as f64 * f.lp_norm(1.0) / f.domain().measure()
}

/// First level at which the running average exceeds `αλ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StoppingTimeMap {
    /// `τ(x)` per cell, `None` for `+∞`.
    pub tau: Vec<Option<i32>>,
    pub lambda: f64,
    pub alpha: f64,
    /// `(n, cubes)` with `τ = n` on each listed level-`n` cube.
    pub selected: Vec<(i32, Vec<usize>)>,
}

/// Default fraction `α = 1/(2N₁)`.
pub fn default_alpha(lat: &DyadicLattice) -> f64 {
    1.0 / (2.0 * lat.n1() as f64)
}

pub fn stopping_time(f: &GridFunction, lat: &DyadicLattice, lambda: f64, alpha: f64, regime: Regime) -> Result<StoppingTimeMap> {
    lat.check_function(f)?;
    if f.values().iter().any(|&v| v < 0.0) {
        return arg("stopping times are built from nonnegative functions");
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return arg(format!("alpha must lie in (0, 1), got {alpha}"));
    }
    let floor = lambda_floor(f, lat, regime);
    if !(lambda > floor) || !lambda.is_finite() {
        return arg(format!("lambda = {lambda} must exceed the floor {floor}"));
    }
    let threshold = alpha * lambda;
    let mut tau = vec![None; f.len()];
    let mut selected = Vec::with_capacity(lat.levels().len());
    for level in lat.levels() {
        let avg = lat.cube_averages(level, f.values());
        let mut picked = vec![false; level.cubes.len()];
        for (t, &l) in tau.iter_mut().zip(&level.labels) {
            if t.is_none() && avg[l] > threshold {
                *t = Some(level.n);
                picked[l] = true;
            }
        }
        selected.push((level.n, (0..picked.len()).filter(|&c| picked[c]).collect()));
    }
    Ok(StoppingTimeMap { tau, lambda, alpha, selected })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StoppingChecks {
    /// `f_{|n} > αλ` on each selected cube.
    pub selected_above: bool,
    /// `f_{|n−1} ≤ αλ` on each selected cube with `n > n_min`.
    pub parent_below: bool,
    /// `{τ = n}` is exactly the union of the selected level-`n` cubes.
    pub union_of_cubes: bool,
    /// Selected cubes of different levels do not overlap.
    pub disjoint: bool,
    /// `f_{|τ} ≤ λ/2` where `n_min < τ < ∞`.
    pub tau_bound: bool,
    /// `{τ < ∞} = {M_dy f > αλ}`.
    pub maximal_identity: bool,
}

impl StoppingChecks {
    pub fn passed(&self) -> bool {
        self.selected_above && self.parent_below && self.union_of_cubes && self.disjoint && self.tau_bound && self.maximal_identity
    }
}

pub fn check_stopping_structure(f: &GridFunction, lat: &DyadicLattice, map: &StoppingTimeMap) -> Result<StoppingChecks> {
    lat.check_function(f)?;
    let domain = lat.domain();
    let threshold = map.alpha * map.lambda;
    let averages: Vec<Vec<f64>> = lat.levels().iter().map(|l| lat.cube_averages(l, f.values())).collect();
    let mut c = StoppingChecks {
        selected_above: true,
        parent_below: true,
        union_of_cubes: true,
        disjoint: true,
        tau_bound: true,
        maximal_identity: true,
    };
    let mut owner = vec![None::<i32>; f.len()];
    for (n, cubes) in &map.selected {
        let li = (n - lat.n_min()) as usize;
        let level = &lat.levels()[li];
        let mut in_selected = vec![false; f.len()];
        for &q in cubes {
            if !(averages[li][q] > threshold) {
                c.selected_above = false;
            }
            for cell in level.cubes[q].cells(domain) {
                if li > 0 {
                    let parent = lat.levels()[li - 1].labels[cell];
                    if averages[li - 1][parent] > threshold {
                        c.parent_below = false;
                    }
                }
                if owner[cell].is_some() {
                    c.disjoint = false;
                }
                owner[cell] = Some(*n);
                in_selected[cell] = true;
            }
        }
        for (cell, &inside) in in_selected.iter().enumerate() {
            if inside != (map.tau[cell] == Some(*n)) {
                c.union_of_cubes = false;
            }
        }
    }
    for (cell, t) in map.tau.iter().enumerate() {
        if let Some(n) = *t {
            if n > lat.n_min() {
                let li = (n - lat.n_min()) as usize;
                let v = averages[li][lat.levels()[li].labels[cell]];
                if v > map.lambda / 2.0 * (1.0 + 1e-12) {
                    c.tau_bound = false;
                }
            }
        }
        let mdy = lat
            .levels()
            .iter()
            .zip(&averages)
            .map(|(l, a)| a[l.labels[cell]])
            .fold(f64::NEG_INFINITY, f64::max);
        if t.is_some() != (mdy > threshold) {
            c.maximal_identity = false;
        }
    }
    Ok(c)
}
