use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};
use crate::lattice::{Domain, GridFunction};
use crate::mixednorm::{lambda_scaled_sum, mixed_norm, MixedNormSpec};

use super::diff::{multi_indices, DerivativeStack};

/// Which variable a coefficient profile depends on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileAxis {
    X1,
    T,
}

/// Piecewise-constant function of `x1` or `t`, with equal pieces across the axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub axis: ProfileAxis,
    pub values: Vec<f64>,
}

impl Profile {
    pub fn constant(v: f64) -> Self {
        Profile { axis: ProfileAxis::X1, values: vec![v] }
    }

    pub fn is_constant(&self) -> bool {
        self.values.windows(2).all(|w| w[0] == w[1])
    }

    fn axis_index(&self, domain: &Domain) -> Result<usize> {
        match self.axis {
            ProfileAxis::T => domain.time_axis().ok_or_else(|| Error::Argument("a t-profile needs a time axis".into())),
            ProfileAxis::X1 => domain
                .spatial_axes()
                .first()
                .copied()
                .ok_or_else(|| Error::Argument("an x1-profile needs a spatial axis".into())),
        }
    }

    /// Values at every cell center of `domain`.
    pub fn sample(&self, domain: &Domain) -> Result<Vec<f64>> {
        if self.values.is_empty() {
            return arg("empty coefficient profile");
        }
        if self.is_constant() {
            return Ok(vec![self.values[0]; domain.len()]);
        }
        let k = self.axis_index(domain)?;
        let a = domain.axis(k);
        let pieces = self.values.len();
        let stride = domain.strides()[k];
        Ok((0..domain.len())
            .map(|i| {
                let j = (i / stride) % a.points;
                let frac = (j as f64 + 0.5) / a.points as f64;
                self.values[((frac * pieces as f64) as usize).min(pieces - 1)]
            })
            .collect())
    }
}

/// Piecewise-constant profile with `pieces` values drawn uniformly from `[δ, 1/δ]`.
pub fn rough_coefficient(seed: u64, delta: f64, pieces: usize, axis: ProfileAxis) -> Result<Profile> {
    if pieces == 0 {
        return arg("a profile needs at least one piece");
    }
    if !(delta > 0.0 && delta < 1.0) {
        return arg(format!("delta must lie in (0, 1), got {delta}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..pieces).map(|_| rng.gen_range(delta..=1.0 / delta)).collect();
    Ok(Profile { axis, values })
}

/// Sign convention of the manufactured equation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Form {
    /// `f = −u_t + Σ a^{ij}D_{ij}u + b^iD_iu + cu − λu`, second order.
    NonDivergence,
    /// `f = u_t + (−1)^m a Δ^m u + λu`.
    HigherOrder,
}

/// Scalar model operator with `a^{22} = … = a^{dd} = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelOperator {
    pub form: Form,
    pub m: u32,
    pub delta: f64,
    pub lambda: f64,
    pub a11: Profile,
    /// `a^{12} = a^{21}`; only with two spatial axes.
    pub a12: Profile,
    /// One profile per spatial axis, or empty for `b = 0`.
    pub b: Vec<Profile>,
    pub c: Profile,
}

impl ModelOperator {
    /// Second-order operator with leading coefficient `a11` and nothing else.
    pub fn second_order(a11: Profile, delta: f64, lambda: f64) -> Self {
        ModelOperator {
            form: Form::NonDivergence,
            m: 1,
            delta,
            lambda,
            a11,
            a12: Profile::constant(0.0),
            b: Vec::new(),
            c: Profile::constant(0.0),
        }
    }

    /// `u_t + (−1)^m a Δ^m u + λu`.
    pub fn higher_order(m: u32, a: Profile, delta: f64, lambda: f64) -> Self {
        ModelOperator { form: Form::HigherOrder, m, ..Self::second_order(a, delta, lambda) }
    }

    pub fn validate(&self, domain: &Domain) -> Result<()> {
        if self.m == 0 {
            return arg("m must be positive");
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return arg(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if !(self.lambda >= 1.0 && self.lambda.is_finite()) {
            return arg(format!("lambda must be at least 1, got {}", self.lambda));
        }
        let d = domain.spatial_dim();
        if d == 0 {
            return arg("the operator needs a spatial axis");
        }
        if domain.kind().is_parabolic() && domain.m() != self.m {
            return arg(format!("domain has m = {}, operator m = {}", domain.m(), self.m));
        }
        let rough_x1 = self.a11.axis == ProfileAxis::X1 && !self.a11.is_constant();
        match self.form {
            Form::NonDivergence if self.m != 1 => return arg("the non-divergence form is second order (m = 1)"),
            Form::HigherOrder if rough_x1 && self.m > 1 => {
                return arg("coefficients rough in x1 are only supported with m = 1")
            }
            Form::HigherOrder if !self.b.is_empty() || !self.a12.is_constant() || self.a12.values[0] != 0.0 => {
                return arg("the higher-order form takes no cross or lower-order terms")
            }
            _ => {}
        }
        if !self.b.is_empty() && self.b.len() != d {
            return arg(format!("b needs {d} components, got {}", self.b.len()));
        }
        let a12_zero = self.a12.values.iter().all(|&v| v == 0.0);
        if d < 2 && !a12_zero {
            return arg("a12 needs two spatial axes");
        }
        let (lo, hi) = (self.delta, 1.0 / self.delta);
        let a11 = self.a11.sample(domain)?;
        let a12 = self.a12.sample(domain)?;
        for (&a, &c) in a11.iter().zip(&a12) {
            if a < lo * (1.0 - 1e-12) || a > hi * (1.0 + 1e-12) || c.abs() > hi {
                return arg(format!("coefficient value a11 = {a}, a12 = {c} breaks the δ-bounds"));
            }
            // smallest eigenvalue of [[a, c], [c, 1]]
            let tr = a + 1.0;
            let disc = ((a - 1.0).powi(2) + 4.0 * c * c).sqrt();
            if (tr - disc) / 2.0 < lo * (1.0 - 1e-12) {
                return arg(format!("ellipticity fails at a11 = {a}, a12 = {c}"));
            }
        }
        Ok(())
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// `f` from `u` by the selected form of the equation.
pub fn manufacture_rhs(stack: &DerivativeStack, op: &ModelOperator) -> Result<GridFunction> {
    let domain = stack.u.domain();
    op.validate(domain)?;
    let top = 2 * op.m as usize;
    if stack.max_order() < top {
        return arg(format!("stack holds orders up to {}, operator needs {top}", stack.max_order()));
    }
    let d = domain.spatial_dim();
    let n = domain.len();
    let a11 = op.a11.sample(domain)?;
    let lam = op.lambda;
    let u = stack.u.values();
    let ut = stack.ut.values();
    let get = |alpha: &[u32]| -> Result<&[f64]> {
        stack
            .get(alpha)
            .map(|g| g.values())
            .ok_or_else(|| Error::Argument(format!("stack lacks D^{alpha:?}")))
    };
    let mut f = vec![0.0; n];
    match op.form {
        Form::NonDivergence => {
            let a12 = op.a12.sample(domain)?;
            let c = op.c.sample(domain)?;
            for i in 0..d {
                let mut alpha = vec![0u32; d];
                alpha[i] = 2;
                let dii = get(&alpha)?;
                for x in 0..n {
                    let coef = if i == 0 { a11[x] } else { 1.0 };
                    f[x] += coef * dii[x];
                }
            }
            if d >= 2 && a12.iter().any(|&v| v != 0.0) {
                let mut alpha = vec![0u32; d];
                alpha[0] = 1;
                alpha[1] = 1;
                let d12 = get(&alpha)?;
                for x in 0..n {
                    f[x] += 2.0 * a12[x] * d12[x];
                }
            }
            for (i, bp) in op.b.iter().enumerate() {
                let bi = bp.sample(domain)?;
                let mut alpha = vec![0u32; d];
                alpha[i] = 1;
                let di = get(&alpha)?;
                for x in 0..n {
                    f[x] += bi[x] * di[x];
                }
            }
            for x in 0..n {
                f[x] += -ut[x] + c[x] * u[x] - lam * u[x];
            }
        }
        Form::HigherOrder => {
            // Δ^m = Σ_{|β|=m} (m!/β!) D^{2β}
            let sign = if op.m % 2 == 0 { 1.0 } else { -1.0 };
            for beta in multi_indices(d, op.m) {
                let weight = factorial(op.m) / beta.iter().map(|&b| factorial(b)).product::<f64>();
                let alpha: Vec<u32> = beta.iter().map(|b| 2 * b).collect();
                let da = get(&alpha)?;
                for x in 0..n {
                    f[x] += sign * weight * a11[x] * da[x];
                }
            }
            for x in 0..n {
                f[x] += ut[x] + lam * u[x];
            }
        }
    }
    GridFunction::new(stack.u.domain_arc().clone(), f)
}

/// `(‖u_t‖ + Σ_k λ^{1−k/2m}‖D^k u‖) / ‖f‖`.
pub fn apriori_ratio(stack: &DerivativeStack, f: &GridFunction, op: &ModelOperator, spec: &MixedNormSpec) -> Result<f64> {
    let num = lambda_scaled_sum(stack, op.lambda, op.m, spec)?;
    let den = mixed_norm(f, spec)?;
    if den == 0.0 {
        if num == 0.0 {
            return Ok(0.0);
        }
        return Err(Error::Degenerate("f vanishes for a nonzero u".into()));
    }
    Ok(num / den)
}

/// Ratio for `u = cos(ωt + ξ·x)` with constant coefficients and unit `L₂` weights.
pub fn symbol_ratio(op: &ModelOperator, omega: f64, xi: &[f64]) -> Result<f64> {
    let d = xi.len();
    if d == 0 {
        return arg("empty frequency vector");
    }
    let cst = |p: &Profile| -> Result<f64> {
        if !p.is_constant() {
            return arg("symbol ratios need constant coefficients");
        }
        Ok(p.values[0])
    };
    let a = cst(&op.a11)?;
    let lam = op.lambda;
    let top = 2 * op.m;
    let mut num = omega.abs();
    for k in 0..=top {
        let s: f64 = multi_indices(d, k)
            .iter()
            .map(|alpha| alpha.iter().zip(xi).map(|(&e, x)| x.powi(e as i32)).product::<f64>().powi(2))
            .sum();
        num += lam.powf(1.0 - k as f64 / top as f64) * s.sqrt();
    }
    let (sin_part, cos_part) = match op.form {
        Form::HigherOrder => {
            let r2: f64 = xi.iter().map(|x| x * x).sum();
            (-omega, a * r2.powi(op.m as i32) + lam)
        }
        Form::NonDivergence => {
            let a12 = cst(&op.a12)?;
            let c = cst(&op.c)?;
            let mut quad = a * xi[0] * xi[0] + xi[1..].iter().map(|x| x * x).sum::<f64>();
            if d >= 2 {
                quad += 2.0 * a12 * xi[0] * xi[1];
            }
            let mut bxi = 0.0;
            for (bp, x) in op.b.iter().zip(xi) {
                bxi += cst(bp)? * x;
            }
            (omega - bxi, -quad + c - lam)
        }
    };
    let den = (sin_part * sin_part + cos_part * cos_part).sqrt();
    if den == 0.0 {
        return Err(Error::Degenerate("symbol vanishes at this mode".into()));
    }
    Ok(num / den)
}
