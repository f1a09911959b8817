//! Brute-force mean oscillations over parabolic cylinders `Q_r(s,y) = (s − r^{2m}, s] × B_r(y)`.
//!
//! Integrals are replaced by cell averages, so each quantity is a mean over the
//! grid cells a cylinder covers.

use serde::Serialize;

use crate::error::{arg, Result};
use crate::lattice::{Domain, GridFunction};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Oscillations {
    /// Oscillation in `x` at fixed `t`, averaged over `t`.
    pub osc1: f64,
    /// Oscillation in `(t, x̂)` at fixed `x1`, averaged over `x1`.
    pub osc2: f64,
    /// Oscillation in `x̂` at fixed `(t, x1)`, averaged over both.
    pub osc: f64,
}

fn wrapped(domain: &Domain, k: usize, d: f64) -> f64 {
    if domain.is_periodic() {
        let l = domain.axis(k).length();
        d - l * (d / l).round()
    } else {
        d
    }
}

fn mean_abs_dev(vals: &[f64]) -> f64 {
    if vals.is_empty() {
        return 0.0;
    }
    let m = vals.iter().sum::<f64>() / vals.len() as f64;
    vals.iter().map(|v| (v - m).abs()).sum::<f64>() / vals.len() as f64
}

/// Suprema of the three oscillations over all cell-centered cylinders with the given radii.
pub fn oscillations(g: &GridFunction, radii: &[f64]) -> Result<Oscillations> {
    let domain = g.domain();
    if domain.time_axis() != Some(0) {
        return arg("cylinder oscillations need a parabolic domain");
    }
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0)) {
        return arg("radii must be positive");
    }
    let nd = domain.ndim();
    let shape = domain.shape();
    let m2 = 2 * domain.m() as i32;
    let coords: Vec<Vec<f64>> = (0..nd).map(|k| (0..shape[k]).map(|i| domain.axis(k).center(i)).collect()).collect();
    // cells of the x̂ block, as multi-indices over axes 2..nd
    let hat_axes: Vec<usize> = (2..nd).collect();
    let hat_len: usize = hat_axes.iter().map(|&k| shape[k]).product();
    let hat_idx = |flat: usize| -> Vec<usize> {
        let mut out = vec![0; hat_axes.len()];
        let mut r = flat;
        for (j, &k) in hat_axes.iter().enumerate().rev() {
            out[j] = r % shape[k];
            r /= shape[k];
        }
        out
    };
    let hats: Vec<Vec<usize>> = (0..hat_len).map(hat_idx).collect();
    let at = |t: usize, z1: usize, hat: &[usize]| -> f64 {
        let mut idx = vec![t, z1];
        idx.extend_from_slice(hat);
        g.values()[domain.ravel(&idx)]
    };
    let mut best = Oscillations { osc1: 0.0, osc2: 0.0, osc: 0.0 };
    for &r in radii {
        let span = r.powi(m2);
        for center in 0..domain.len() {
            let c = domain.unravel(center);
            let times: Vec<usize> = (0..shape[0])
                .filter(|&t| {
                    let dt = wrapped(domain, 0, coords[0][t] - coords[0][c[0]]);
                    dt > -span && dt <= 0.0
                })
                .collect();
            let z1s: Vec<usize> = (0..shape[1]).filter(|&z| wrapped(domain, 1, coords[1][z] - coords[1][c[1]]).abs() < r).collect();
            let hat_dist = |h: &[usize]| -> f64 {
                h.iter()
                    .zip(&hat_axes)
                    .map(|(&i, &k)| wrapped(domain, k, coords[k][i] - coords[k][c[k]]).powi(2))
                    .sum::<f64>()
            };
            let ball_hat: Vec<&Vec<usize>> = hats.iter().filter(|h| hat_dist(h) < r * r).collect();
            // full spatial ball
            let mut ball: Vec<(usize, &Vec<usize>)> = Vec::new();
            for &z in &z1s {
                let d1 = wrapped(domain, 1, coords[1][z] - coords[1][c[1]]).powi(2);
                for h in &hats {
                    if d1 + hat_dist(h) < r * r {
                        ball.push((z, h));
                    }
                }
            }
            if times.is_empty() || ball.is_empty() {
                continue;
            }
            let osc1 = times
                .iter()
                .map(|&t| mean_abs_dev(&ball.iter().map(|(z, h)| at(t, *z, h)).collect::<Vec<_>>()))
                .sum::<f64>()
                / times.len() as f64;
            let osc2 = z1s
                .iter()
                .map(|&z| {
                    let vals: Vec<f64> = times.iter().flat_map(|&t| ball_hat.iter().map(move |h| (t, h))).map(|(t, h)| at(t, z, h)).collect();
                    mean_abs_dev(&vals)
                })
                .sum::<f64>()
                / z1s.len() as f64;
            let mut osc = 0.0;
            for &t in &times {
                for &z in &z1s {
                    osc += mean_abs_dev(&ball_hat.iter().map(|h| at(t, z, h)).collect::<Vec<_>>());
                }
            }
            osc /= (times.len() * z1s.len()) as f64;
            best.osc1 = best.osc1.max(osc1);
            best.osc2 = best.osc2.max(osc2);
            best.osc = best.osc.max(osc);
        }
    }
    Ok(best)
}
