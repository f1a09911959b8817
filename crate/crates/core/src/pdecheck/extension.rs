use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};
use crate::lattice::{Domain, DomainKind, GridFunction};

use super::model::{ModelOperator, Profile, ProfileAxis};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Odd,
    Even,
}

impl Parity {
    fn sign(self) -> f64 {
        match self {
            Parity::Odd => -1.0,
            Parity::Even => 1.0,
        }
    }
}

/// Quadratic extrapolation of the cell-centered values `u0, u1, u2` to the wall.
pub fn wall_trace(u0: f64, u1: f64, u2: f64) -> f64 {
    (15.0 * u0 - 10.0 * u1 + 3.0 * u2) / 8.0
}

/// Doubled grid: axis 0 mirrored about the wall, periodic in every axis.
pub fn doubled_domain(domain: &Domain) -> Result<Domain> {
    if domain.kind() != DomainKind::HalfSpaceBox {
        return arg("extension needs a half-space box");
    }
    let a0 = domain.axis(0);
    let mut extents: Vec<[f64; 2]> = domain.axes().iter().map(|a| [a.lo, a.hi]).collect();
    let mut points = domain.shape();
    extents[0] = [2.0 * a0.lo - a0.hi, a0.hi];
    points[0] *= 2;
    Domain::new(DomainKind::EuclideanTorus, domain.ndim(), 1, &extents, &points)
}

/// Reflects `u` across the wall `x1 = lo` with `u(−x1) = ±u(x1)`.
pub fn halfspace_extension(u: &GridFunction, parity: Parity) -> Result<GridFunction> {
    let domain = u.domain();
    let big = Arc::new(doubled_domain(domain)?);
    let n0 = domain.axis(0).points;
    if n0 < 3 {
        return arg("the wall axis needs at least 3 points");
    }
    let stride = domain.strides()[0];
    let vals = u.values();
    if parity == Parity::Odd {
        let scale = u.sup_abs();
        for s in 0..stride {
            let trace = wall_trace(vals[s], vals[s + stride], vals[s + 2 * stride]);
            if trace.abs() > 1e-3 * scale {
                return Err(Error::Precondition(format!(
                    "odd extension needs a vanishing wall trace; found {trace:.3e} on line {s}"
                )));
            }
        }
    }
    let sign = parity.sign();
    let mut out = vec![0.0; big.len()];
    for i in 0..n0 {
        for s in 0..stride {
            let v = vals[i * stride + s];
            out[(n0 + i) * stride + s] = v;
            out[(n0 - 1 - i) * stride + s] = sign * v;
        }
    }
    GridFunction::new(big, out)
}

/// Mirrors an `x1` profile about the wall; `t` profiles are unchanged.
pub fn extend_profile(p: &Profile, parity: Parity) -> Profile {
    if p.axis != ProfileAxis::X1 || (p.is_constant() && (parity == Parity::Even || p.values[0] == 0.0)) {
        return p.clone();
    }
    let s = parity.sign();
    let mut values: Vec<f64> = p.values.iter().rev().map(|v| s * v).collect();
    values.extend_from_slice(&p.values);
    Profile { axis: ProfileAxis::X1, values }
}

/// Coefficients extended with the parities that keep the reflected equation
/// consistent: `a^{11}`, `a^{ij}` (i, j ≥ 2), `b^i` (i ≥ 2) and `c` even;
/// `a^{1j}` (j ≥ 2) and `b^1` odd.
pub fn extend_operator(op: &ModelOperator) -> ModelOperator {
    let mut out = op.clone();
    out.a11 = extend_profile(&op.a11, Parity::Even);
    out.a12 = extend_profile(&op.a12, Parity::Odd);
    out.c = extend_profile(&op.c, Parity::Even);
    out.b = op
        .b
        .iter()
        .enumerate()
        .map(|(i, b)| extend_profile(b, if i == 0 { Parity::Odd } else { Parity::Even }))
        .collect();
    out
}
