use serde::Serialize;

use crate::error::{arg, Error, Result};
use crate::lattice::{DyadicLattice, GridFunction};
use crate::operators::{dyadic_maximal_values, dyadic_sharp_values};
use crate::report::Regime;
use crate::weights::{ComparisonFit, Weight};

use super::stopping::{default_alpha, lambda_floor, stopping_time};

/// Both sides of `ω{|f| ≥ λ} ≤ N 2^β λ^{−β} ∫_{M f > αλ} (f#)^β dω` per `λ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelSetReport {
    pub lambdas: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub passed: Vec<bool>,
    pub beta: f64,
    /// Constant from the subset-pair fit.
    pub n_fit: f64,
    /// Constant actually used: the fit widened to cover the sets `E_Q` met here.
    pub n_cal: f64,
    pub lambda0: f64,
    /// True when `f` takes negative values and `|f|# ≤ 2f#` was used.
    pub signed: bool,
}

impl LevelSetReport {
    pub fn all_passed(&self) -> bool {
        self.passed.iter().all(|&b| b)
    }
}

pub fn level_set_check(
    f: &GridFunction,
    w: &Weight,
    p: f64,
    lat: &DyadicLattice,
    lambdas: &[f64],
    fit: Option<&ComparisonFit>,
    regime: Regime,
) -> Result<LevelSetReport> {
    let fit = fit.ok_or_else(|| Error::Dependency("the level-set bound needs a measure-comparison fit".into()))?;
    if (fit.p - p).abs() > 1e-12 {
        return Err(Error::Dependency(format!("fit was made for p = {}, not {p}", fit.p)));
    }
    lat.check_function(f)?;
    f.require_same_domain(w.base())?;
    if !lat.finest_is_cells() {
        return arg("the finest lattice level must resolve single cells");
    }
    if lambdas.is_empty() {
        return arg("empty lambda grid");
    }
    let abs = f.abs();
    let signed = f.values().iter().any(|&v| v < 0.0);
    let lambda0 = lambda_floor(&abs, lat, regime);
    let alpha = default_alpha(lat);
    let beta = fit.beta;
    let wv = w.values();
    let h = lat.domain().cell_measure();
    let mdy = dyadic_maximal_values(abs.values(), lat);
    let sharp = dyadic_sharp_values(f.values(), lat);

    let mut n_cal = fit.n;
    let mut pieces = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let map = stopping_time(&abs, lat, lambda, alpha, regime)?;
        for (n, cubes) in &map.selected {
            let level = lat.level(*n)?;
            let avg = lat.cube_averages(level, abs.values());
            for &q in cubes {
                let cells = level.cubes[q].cells(lat.domain());
                let e: Vec<usize> = cells.iter().copied().filter(|&c| abs.values()[c] - avg[q] >= lambda / 2.0).collect();
                if e.is_empty() {
                    continue;
                }
                let we: f64 = e.iter().map(|&c| wv[c]).sum();
                let wq: f64 = cells.iter().map(|&c| wv[c]).sum();
                let needed = (we / wq) / (e.len() as f64 / cells.len() as f64).powf(beta);
                n_cal = n_cal.max(needed);
            }
        }
        let lhs: f64 = abs.values().iter().zip(wv).filter(|(v, _)| **v >= lambda).map(|(_, w)| w * h).sum();
        let integral: f64 = mdy
            .iter()
            .zip(&sharp)
            .zip(wv)
            .filter(|((m, _), _)| **m > alpha * lambda)
            .map(|((_, s), w)| s.powf(beta) * w * h)
            .sum();
        pieces.push((lhs, integral));
    }
    let sign = if signed { 2f64.powf(beta) } else { 1.0 };
    let mut report = LevelSetReport {
        lambdas: lambdas.to_vec(),
        lhs: Vec::new(),
        rhs: Vec::new(),
        passed: Vec::new(),
        beta,
        n_fit: fit.n,
        n_cal,
        lambda0,
        signed,
    };
    for (&lambda, (lhs, integral)) in lambdas.iter().zip(pieces) {
        let rhs = n_cal * 2f64.powf(beta) * sign * lambda.powf(-beta) * integral;
        report.lhs.push(lhs);
        report.rhs.push(rhs);
        report.passed.push(lhs <= rhs * (1.0 + 1e-10));
    }
    Ok(report)
}
