use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};
use crate::lattice::{Domain, GridFunction};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Spectral,
    Central2,
}

/// `u`, `u_t` and every `D^α u` with `|α| ≤ max_order` over the spatial axes.
#[derive(Clone, Debug)]
pub struct DerivativeStack {
    pub backend: Backend,
    pub u: GridFunction,
    /// Zero when the domain has no time axis.
    pub ut: GridFunction,
    /// `orders[k]` lists `(α, D^α u)` for `|α| = k`; `orders[0]` is `u` itself.
    pub orders: Vec<Vec<(Vec<u32>, GridFunction)>>,
}

impl DerivativeStack {
    pub fn max_order(&self) -> usize {
        self.orders.len() - 1
    }

    pub fn get(&self, alpha: &[u32]) -> Option<&GridFunction> {
        let k = alpha.iter().sum::<u32>() as usize;
        self.orders.get(k)?.iter().find(|(a, _)| a == alpha).map(|e| &e.1)
    }

    /// `|D^k u| = (Σ_{|α|=k} (D^α u)²)^{1/2}` pointwise.
    pub fn order_magnitude(&self, k: usize) -> Result<GridFunction> {
        let list = self.orders.get(k).ok_or_else(|| Error::Argument(format!("stack lacks order {k}")))?;
        let mut acc = vec![0.0; self.u.len()];
        for (_, g) in list {
            for (a, v) in acc.iter_mut().zip(g.values()) {
                *a += v * v;
            }
        }
        Ok(self.u.with_values(acc.into_iter().map(f64::sqrt).collect()))
    }
}

/// Multi-indices of total order `k` in `d` variables, lexicographically descending.
pub fn multi_indices(d: usize, k: u32) -> Vec<Vec<u32>> {
    if d == 0 {
        return if k == 0 { vec![vec![]] } else { vec![] };
    }
    if d == 1 {
        return vec![vec![k]];
    }
    let mut out = Vec::new();
    for first in (0..=k).rev() {
        for mut rest in multi_indices(d - 1, k - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

pub fn differentiate(u: &GridFunction, max_order: usize, backend: Backend) -> Result<DerivativeStack> {
    let domain = u.domain();
    if backend == Backend::Spectral && !domain.is_periodic() {
        return Err(Error::Backend("the spectral backend needs a periodic domain".into()));
    }
    if backend == Backend::Central2 {
        for (k, a) in domain.axes().iter().enumerate() {
            if a.points < 4 {
                return arg(format!("central differences need at least 4 points on axis {k}"));
            }
        }
    }
    let space = domain.spatial_axes();
    let ut = match domain.time_axis() {
        Some(t) => u.with_values(derivative_along(domain, u.values(), t, 1, backend)),
        None => GridFunction::zeros(u.domain_arc().clone()),
    };
    let mut orders = Vec::with_capacity(max_order + 1);
    for k in 0..=max_order as u32 {
        let list = multi_indices(space.len(), k)
            .into_iter()
            .map(|alpha| {
                let mut vals = u.values().to_vec();
                for (&axis, &order) in space.iter().zip(&alpha) {
                    if order > 0 {
                        vals = derivative_along(domain, &vals, axis, order, backend);
                    }
                }
                (alpha, u.with_values(vals))
            })
            .collect();
        orders.push(list);
    }
    Ok(DerivativeStack { backend, u: u.clone(), ut, orders })
}

/// Applies `∂^order` along `axis`.
pub fn derivative_along(domain: &Domain, values: &[f64], axis: usize, order: u32, backend: Backend) -> Vec<f64> {
    match backend {
        Backend::Spectral => spectral_along(domain, values, axis, order),
        Backend::Central2 => {
            let mut v = values.to_vec();
            for _ in 0..order / 2 {
                v = central_along(domain, &v, axis, 2);
            }
            if order % 2 == 1 {
                v = central_along(domain, &v, axis, 1);
            }
            v
        }
    }
}

fn for_each_line(domain: &Domain, axis: usize, mut f: impl FnMut(&[usize])) {
    let n = domain.axis(axis).points;
    let stride = domain.strides()[axis];
    let outer = domain.len() / (n * stride);
    let mut idx = vec![0usize; n];
    for o in 0..outer {
        for s in 0..stride {
            let base = o * n * stride + s;
            for (j, slot) in idx.iter_mut().enumerate() {
                *slot = base + j * stride;
            }
            f(&idx);
        }
    }
}

fn spectral_along(domain: &Domain, values: &[f64], axis: usize, order: u32) -> Vec<f64> {
    let a = domain.axis(axis);
    let n = a.points;
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let factors: Vec<Complex<f64>> = (0..n)
        .map(|j| {
            let kappa = if 2 * j < n { j as f64 } else { j as f64 - n as f64 };
            if 2 * j == n && order % 2 == 1 {
                return Complex::new(0.0, 0.0);
            }
            let ik = Complex::new(0.0, 2.0 * PI * kappa / a.length());
            ik.powu(order) / n as f64
        })
        .collect();
    let mut out = vec![0.0; values.len()];
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    for_each_line(domain, axis, |idx| {
        for (b, &i) in buf.iter_mut().zip(idx) {
            *b = Complex::new(values[i], 0.0);
        }
        fwd.process(&mut buf);
        for (b, f) in buf.iter_mut().zip(&factors) {
            *b *= f;
        }
        inv.process(&mut buf);
        for (b, &i) in buf.iter().zip(idx) {
            out[i] = b.re;
        }
    });
    out
}

fn central_along(domain: &Domain, values: &[f64], axis: usize, order: u32) -> Vec<f64> {
    let a = domain.axis(axis);
    let n = a.points;
    let h = a.step();
    let periodic = domain.is_periodic();
    let mut out = vec![0.0; values.len()];
    for_each_line(domain, axis, |idx| {
        let v = |j: isize| values[idx[j.rem_euclid(n as isize) as usize]];
        for j in 0..n as isize {
            let interior = periodic || (j > 0 && j < n as isize - 1);
            let d = match (order, interior) {
                (1, true) => (v(j + 1) - v(j - 1)) / (2.0 * h),
                (2, true) => (v(j + 1) - 2.0 * v(j) + v(j - 1)) / (h * h),
                (1, false) if j == 0 => (-3.0 * v(0) + 4.0 * v(1) - v(2)) / (2.0 * h),
                (1, false) => (3.0 * v(j) - 4.0 * v(j - 1) + v(j - 2)) / (2.0 * h),
                (_, false) if j == 0 => (2.0 * v(0) - 5.0 * v(1) + 4.0 * v(2) - v(3)) / (h * h),
                _ => (2.0 * v(j) - 5.0 * v(j - 1) + 4.0 * v(j - 2) - v(j - 3)) / (h * h),
            };
            out[idx[j as usize]] = d;
        }
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::DomainKind;

    #[test]
    fn multi_index_counts() {
        assert_eq!(multi_indices(2, 2), vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(multi_indices(3, 2).len(), 6);
        assert_eq!(multi_indices(1, 4), vec![vec![4]]);
    }

    #[test]
    fn spectral_sine() {
        let d = Domain::interval(DomainKind::EuclideanTorus, 0.0, 1.0, 32).unwrap();
        let u = GridFunction::from_fn(d, |x| (2.0 * PI * x[0]).sin());
        let s = differentiate(&u, 2, Backend::Spectral).unwrap();
        let du = s.get(&[1]).unwrap();
        let dd = s.get(&[2]).unwrap();
        for i in 0..32 {
            let x = u.domain().cell_center(i)[0];
            assert!((du.values()[i] - 2.0 * PI * (2.0 * PI * x).cos()).abs() < 1e-10);
            assert!((dd.values()[i] + 4.0 * PI * PI * (2.0 * PI * x).sin()).abs() < 1e-9);
        }
        assert!(s.ut.is_zero());
    }

    #[test]
    fn spectral_rejects_boxes() {
        let d = Domain::interval(DomainKind::EuclideanBox, 0.0, 1.0, 32).unwrap();
        let u = GridFunction::constant(d, 1.0);
        assert!(matches!(differentiate(&u, 1, Backend::Spectral), Err(Error::Backend(_))));
        let s = differentiate(&u, 3, Backend::Central2).unwrap();
        for k in 1..=3 {
            assert!(s.order_magnitude(k).unwrap().sup_abs() < 1e-9);
        }
    }

    #[test]
    fn central_is_second_order() {
        let err = |n: usize| {
            let d = Domain::interval(DomainKind::EuclideanTorus, 0.0, 1.0, n).unwrap();
            let u = GridFunction::from_fn(d, |x| (2.0 * PI * x[0]).sin());
            let s = differentiate(&u, 1, Backend::Central2).unwrap();
            (0..n)
                .map(|i| (s.orders[1][0].1.values()[i] - 2.0 * PI * (2.0 * PI * u.domain().cell_center(i)[0]).cos()).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(32) / err(64);
        assert!((ratio - 4.0).abs() < 0.8, "{ratio}");
    }

    #[test]
    fn time_derivative_on_space_time_torus() {
        let d = Domain::new(DomainKind::ParabolicTorus, 1, 1, &[[0.0, 1.0], [0.0, 1.0]], &[16, 16]).unwrap();
        let u = GridFunction::from_fn(d, |x| (2.0 * PI * (x[0] + x[1])).cos());
        let s = differentiate(&u, 2, Backend::Spectral).unwrap();
        for i in 0..u.len() {
            let c = u.domain().cell_center(i);
            assert!((s.ut.values()[i] + 2.0 * PI * (2.0 * PI * (c[0] + c[1])).sin()).abs() < 1e-10);
        }
    }
}
