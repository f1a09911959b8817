//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wfs::czfs::{default_alpha, fs_members, lambda_floor, level_set_check, stopping_time, FsNorm};
use wfs::extrapolation::{
    calibrate_n1, calibrate_n2, check_r_dual_properties, check_r_properties, transfer_check, RdfConfig, TransferPair,
};
use wfs::lattice::{DomainSpec, DyadicLattice};
use wfs::mixednorm::MixedNormSpec;
use wfs::pdecheck::{
    differentiate, estimate_suite, extend_operator, halfspace_extension, manufacture_rhs, apriori_ratio, derivative_along,
    Backend, Form, ModelOperator, Parity, PdeSuiteConfig, Profile, ProfileAxis,
};
use wfs::report::stability_factor;
use wfs::suite::SuiteSpec;
use wfs::weights::{
    ap_characteristic, check_ap_inclusion, holder_ap_bound, measure_comparison_fit, power_weight, random_subset_pairs, Ball,
    WeightSpec,
};
use wfs::{build_lattice, conditional_expectation, validate_lattice, BallFamily, Domain, DomainKind, GridFunction, Regime, Weight};

// Tolerances and budgets.
const UNIT_AP_TOL: f64 = 1e-12;
const HOLDER_SLACK: f64 = 1e-12;
const FS_MAX_CHANGE: f64 = 1.25;
const SMALL_EPS: f64 = 1.0 / 64.0;
const SERIES_TOL: f64 = 1e-3;
const TRANSFER_TOL: f64 = 1e-6;
const CLOSED_FORM_TOL: f64 = 1e-6;
const SYMBOL_TOL: f64 = 1e-6;
const MAX_SPREAD: f64 = 3.0;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn within(t0: Instant, budget: Duration) -> Result<(), String> {
    let el = t0.elapsed();
    ensure(el <= budget, || format!("took {:.1}s, budget {:.0}s", el.as_secs_f64(), budget.as_secs_f64()))
}

fn unit_domain(kind: DomainKind, d: usize, m: u32, points: &[usize]) -> Arc<Domain> {
    Arc::new(Domain::new(kind, d, m, &vec![[0.0, 1.0]; points.len()], points).unwrap())
}

/// Each child label maps to a single parent label.
fn nested(child: &[usize], parent: &[usize], n_children: usize) -> bool {
    let mut up = vec![usize::MAX; n_children];
    child.iter().zip(parent).all(|(&c, &p)| {
        if up[c] == usize::MAX {
            up[c] = p;
        }
        up[c] == p
    })
}

/// Every cube of level n has exactly `n1` children, all of equal cell count.
fn children_exact(lat: &DyadicLattice, n1: usize) -> bool {
    lat.levels().windows(2).all(|w| {
        let (a, b) = (&w[0], &w[1]);
        let ca: Vec<usize> = a.cubes.iter().map(|c| c.cell_count()).collect();
        let cb: Vec<usize> = b.cubes.iter().map(|c| c.cell_count()).collect();
        b.cubes.len() == n1 * a.cubes.len()
            && ca.iter().all(|&c| c == ca[0])
            && cb.iter().all(|&c| c * n1 == ca[0])
            && nested(&b.labels, &a.labels, b.cubes.len())
    })
}

fn criterion_1() -> Outcome {
    let t0 = Instant::now();
    let cases: Vec<(DomainKind, usize, u32, Vec<usize>, i32)> = vec![
        (DomainKind::EuclideanBox, 1, 1, vec![64], 6),
        (DomainKind::EuclideanTorus, 2, 1, vec![32, 32], 5),
        (DomainKind::EuclideanBox, 3, 1, vec![16, 16, 16], 4),
        (DomainKind::ParabolicBox, 1, 1, vec![256, 16], 4),
        (DomainKind::ParabolicBox, 1, 2, vec![256, 4], 2),
        (DomainKind::ParabolicBox, 2, 1, vec![64, 8, 8], 3),
        (DomainKind::ParabolicTorus, 2, 2, vec![256, 4, 4], 2),
    ];
    let mut seen = Vec::new();
    for (kind, d, m, pts, n_max) in cases {
        let dom = unit_domain(kind, d, m, &pts);
        let lat = e(build_lattice(dom, 0, n_max))?;
        let expect = if kind.is_parabolic() { 1usize << (d + 2 * m as usize) } else { 1usize << d };
        let rep = validate_lattice(&lat);
        ensure(rep.passed(), || format!("{kind:?} d={d} m={m}: {:?}", rep.failures))?;
        ensure(lat.n1() == expect && rep.observed_ratios == vec![expect], || {
            format!("{kind:?} d={d} m={m}: ratios {:?}, expected {expect}", rep.observed_ratios)
        })?;
        ensure(children_exact(&lat, expect), || format!("{kind:?} d={d} m={m}: children not exact"))?;
        seen.push(expect);
    }
    within(t0, Duration::from_secs(5))?;
    Ok(format!("7 lattices exact, ratios {seen:?}, {:.2}s", t0.elapsed().as_secs_f64()))
}

fn criterion_2() -> Outcome {
    let d1 = Arc::new(Domain::interval(DomainKind::EuclideanTorus, -1.0, 1.0, 256).unwrap());
    let fam = e(BallFamily::all_centers(&d1, 1.0 / 64.0, 5))?;
    let unit = Weight::unit(d1.clone());
    for p in [1.5, 2.0, 3.0] {
        let a = e(ap_characteristic(&unit, p, &fam))?;
        ensure((a - 1.0).abs() <= UNIT_AP_TOL, || format!("[1]_A{p} = {a}"))?;
    }
    let d2 = Arc::new(Domain::new(DomainKind::EuclideanTorus, 2, 1, &[[0.0, 1.0], [0.0, 1.0]], &[16, 16]).unwrap());
    let fam2 = e(BallFamily::all_centers(&d2, 1.0 / 16.0, 3))?;
    let a = e(ap_characteristic(&Weight::unit(d2), 2.0, &fam2))?;
    ensure((a - 1.0).abs() <= UNIT_AP_TOL, || format!("2-D [1]_A2 = {a}"))?;

    let boxd = Arc::new(Domain::interval(DomainKind::EuclideanBox, -1.0, 1.0, 256).unwrap());
    let bfam = e(BallFamily::all_centers(&boxd, 1.0 / 64.0, 5))?;
    for i in 0..10 {
        let a = -0.6 + 0.15 * i as f64;
        let w = e(power_weight(0, a, boxd.clone()))?;
        ensure(e(check_ap_inclusion(&w, 2.0, 3.0, &bfam))?, || format!("inclusion fails for |x|^{a}"))?;
        let (a2, a3) = (e(ap_characteristic(&w, 2.0, &bfam))?, e(ap_characteristic(&w, 3.0, &bfam))?);
        ensure(1.0 <= a3 * (1.0 + 1e-12) && a3 <= a2 * (1.0 + 1e-12), || format!("|x|^{a}: A3 {a3} vs A2 {a2}"))?;
    }

    let w = e(power_weight(0, 0.5, d1.clone()))?;
    let suite = e(SuiteSpec::new(100, 6, 31).members(d1.clone()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut violations = 0;
    let mut worst = 0.0f64;
    for m in &suite {
        let f = m.f.abs();
        let ball = Ball { center: rng.gen_range(0..d1.len()), radius: fam.radii()[rng.gen_range(0..fam.radii().len())] };
        let (lhs, rhs) = e(holder_ap_bound(&w, 2.0, &f, &ball, &fam))?;
        if lhs > rhs * (1.0 + HOLDER_SLACK) {
            violations += 1;
        }
        worst = worst.max(lhs / rhs);
    }
    ensure(violations == 0, || format!("{violations} Hölder violations"))?;
    Ok(format!("unit A_p = 1, inclusion on 10 power weights, 100 Hölder pairs (max lhs/rhs {worst:.4})"))
}

fn fs_sup(spec: &DomainSpec, weight: &WeightSpec, p: f64, q: Option<f64>, n_max: i32, suite: &SuiteSpec, regime: Regime) -> Result<(f64, usize), String> {
    let d = Arc::new(e(Domain::from_spec(spec))?);
    let w = e(weight.build(d.clone()))?;
    let lat = e(build_lattice(d.clone(), 0, n_max))?;
    let norm = e(FsNorm::for_weight(&w, p, q))?;
    let members = e(suite.members(d))?;
    let rows = e(fs_members(&members, &w, &norm, &lat, regime))?;
    let mut sup = 0.0f64;
    for r in &rows {
        let v = r.ratio().unwrap_or(0.0);
        if !v.is_finite() {
            return Err(format!("seed {}: infinite ratio", r.seed));
        }
        sup = sup.max(v);
    }
    Ok((sup, rows.len()))
}

fn criterion_3() -> Outcome {
    let t0 = Instant::now();
    let line = |points: usize| DomainSpec { kind: DomainKind::EuclideanTorus, d: 1, m: 1, extents: vec![[-8.0, 8.0]], points: vec![points] };
    let suite = SuiteSpec::new(200, 6, 7).with_support(vec![0.0], 0.5);
    let power = WeightSpec::Power { axis: 0, exponent: 0.5, offset: 0.0 };
    let mut notes = Vec::new();
    let mut check = |label: String, a: (f64, usize), b: (f64, usize)| -> Result<(), String> {
        let s = stability_factor(a.0, b.0);
        ensure(a.1 == 200 && b.1 == 200, || format!("{label}: suite size {} / {}", a.1, b.1))?;
        ensure(s <= FS_MAX_CHANGE, || format!("{label}: sup {:.4} vs {:.4}, change {s:.4}", a.0, b.0))?;
        notes.push(format!("{label} {s:.3}"));
        Ok(())
    };
    for (wname, w) in [("1", WeightSpec::Unit), ("|x|^1/2", power.clone())] {
        for p in [2.0, 3.0] {
            let a = fs_sup(&line(1 << 10), &w, p, None, 10, &suite, Regime::InfiniteMeasure)?;
            let b = fs_sup(&line(1 << 12), &w, p, None, 12, &suite, Regime::InfiniteMeasure)?;
            check(format!("w={wname} p={p}"), a, b)?;
        }
    }
    let plane = |n: usize| DomainSpec { kind: DomainKind::EuclideanTorus, d: 2, m: 1, extents: vec![[-2.0, 2.0]; 2], points: vec![n, n] };
    let mixed_w = WeightSpec::Product { split: Some(vec![0]), w1: Box::new(power.clone()), w2: Box::new(WeightSpec::Unit) };
    let s2 = SuiteSpec::new(200, 4, 7).with_support(vec![0.0, 0.0], 0.5);
    let a = fs_sup(&plane(32), &mixed_w, 2.0, Some(3.0), 5, &s2, Regime::InfiniteMeasure)?;
    let b = fs_sup(&plane(64), &mixed_w, 2.0, Some(3.0), 6, &s2, Regime::InfiniteMeasure)?;
    check("mixed (2,3)".into(), a, b)?;

    let a = fs_sup(&line(1 << 10), &power, 2.0, None, 10, &suite, Regime::FiniteMeasure)?;
    let b = fs_sup(&line(1 << 12), &power, 2.0, None, 12, &suite, Regime::FiniteMeasure)?;
    check("finite".into(), a, b)?;
    let small = SuiteSpec::new(200, 6, 7).with_support(vec![0.0], 0.1);
    let regime = Regime::SmallSupport { epsilon: SMALL_EPS };
    let a = fs_sup(&line(1 << 10), &power, 2.0, None, 10, &small, regime)?;
    let b = fs_sup(&line(1 << 12), &power, 2.0, None, 12, &small, regime)?;
    check("small support".into(), a, b)?;
    within(t0, Duration::from_secs(180))?;
    Ok(format!("changes: {}; {:.1}s", notes.join(", "), t0.elapsed().as_secs_f64()))
}

fn criterion_4() -> Outcome {
    let t0 = Instant::now();
    // wide torus: the floor 2N1‖f‖₁/μ(X) stays under sup|f|/16
    let d = Arc::new(Domain::interval(DomainKind::EuclideanTorus, -32.0, 32.0, 4096).unwrap());
    let lat = e(build_lattice(d.clone(), 0, 12))?;
    let w = e(power_weight(0, 0.5, d.clone()))?;
    let fit = e(measure_comparison_fit(&w, 2.0, &lat, &random_subset_pairs(&lat, 400, 13)))?;
    let suite = e(SuiteSpec::new(100, 6, 5).with_support(vec![0.0], 0.5).members(d.clone()))?;
    let fractions = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.75, 0.9];
    let alpha = default_alpha(&lat);
    let regime = Regime::FiniteMeasure;
    let mut checked = 0;
    let mut n_cal = fit.n;
    for m in &suite {
        let abs = m.f.abs();
        // maximal function by brute force over levels
        let mut mdy = vec![0.0f64; d.len()];
        let mut cond = Vec::new();
        for n in lat.n_min()..=lat.n_max() {
            let c = e(conditional_expectation(&abs, &lat, n))?;
            for (a, b) in mdy.iter_mut().zip(c.values()) {
                *a = a.max(*b);
            }
            cond.push(c);
        }
        let floor = lambda_floor(&abs, &lat, regime);
        let lambdas: Vec<f64> = fractions.iter().map(|t| t * m.f.sup_abs()).collect();
        ensure(lambdas[0] > floor, || format!("seed {}: lambda below the floor", m.seed))?;
        for &lambda in &lambdas {
            let map = e(stopping_time(&abs, &lat, lambda, alpha, regime))?;
            for x in 0..d.len() {
                let above = mdy[x] > alpha * lambda;
                ensure(map.tau[x].is_some() == above, || format!("seed {}: {{tau<inf}} differs at cell {x}", m.seed))?;
                if let Some(n) = map.tau[x] {
                    let at = cond[(n - lat.n_min()) as usize].values()[x];
                    ensure(at > alpha * lambda, || format!("seed {}: f_|tau not above alpha lambda", m.seed))?;
                    ensure(n > lat.n_min() && at <= lambda / 2.0, || format!("seed {}: f_|tau = {at} > lambda/2", m.seed))?;
                }
            }
            checked += 1;
        }
        let rep = e(level_set_check(&m.f, &w, 2.0, &lat, &lambdas, Some(&fit), regime))?;
        ensure(rep.all_passed(), || format!("seed {}: level-set bound fails at {:?}", m.seed, rep.passed))?;
        n_cal = n_cal.max(rep.n_cal);
    }
    within(t0, Duration::from_secs(60))?;
    Ok(format!(
        "{checked} (seed, lambda) pairs exact; level-set bound with beta = {:.3}, fitted N = {:.3}, used N = {n_cal:.3}; {:.1}s",
        fit.beta,
        fit.n,
        t0.elapsed().as_secs_f64()
    ))
}

fn criterion_5() -> Outcome {
    let t0 = Instant::now();
    let d = Arc::new(Domain::interval(DomainKind::EuclideanTorus, -1.0, 1.0, 128).unwrap());
    let fam = e(BallFamily::all_centers(&d, 1.5 / 64.0, 5))?;
    let lat = e(build_lattice(d.clone(), 0, 7))?;
    let w = e(power_weight(0, 0.5, d.clone()))?;
    let suite = e(SuiteSpec::new(50, 5, 17).members(d.clone()))?;
    let hs: Vec<GridFunction> = suite.iter().map(|m| m.f.clone()).collect();
    let (p0, p, k) = (2.0, 3.0, 40);
    let n1 = e(calibrate_n1(&hs, &w, p, k, &fam))?;
    let n2 = e(calibrate_n2(&hs, &w, p, k, &fam))?;
    let cfg = RdfConfig { p0, p, k_terms: k, n1_hat: n1, n2_hat: n2 };
    for m in &suite {
        let r = e(check_r_properties(&m.f, &w, &cfg, &fam))?;
        let rd = e(check_r_dual_properties(&m.f, &w, &cfg, &fam))?;
        ensure(r.passed(SERIES_TOL) && rd.passed(SERIES_TOL), || format!("seed {}: {r:?} {rd:?}", m.seed))?;
    }
    let pairs: Vec<TransferPair> = suite
        .iter()
        .map(|m| Ok(TransferPair { seed: m.seed, f: e(conditional_expectation(&m.f, &lat, 3))?, g: m.f.clone(), n0: None }))
        .collect::<Result<_, String>>()?;
    let tr = e(transfer_check(&pairs, &w, &RdfConfig { n1_hat: 1.0, n2_hat: 1.0, ..cfg.clone() }, &fam))?;
    let lambda0 = 2f64.powf(p0) * tr.n1_hat.powf(p0 - 1.0) * tr.n2_hat;
    ensure((lambda0 - tr.lambda0).abs() <= 1e-12 * lambda0, || format!("Lambda0 {} vs {lambda0}", tr.lambda0))?;
    let worst = tr.ap_tilde.iter().copied().fold(0.0, f64::max);
    ensure(tr.ap_tilde.len() == 50 && worst <= lambda0, || format!("[w~]_A2 up to {worst} > Lambda0 = {lambda0}"))?;
    ensure(tr.ratios.sup_ratio <= 1.0 + TRANSFER_TOL, || format!("transfer sup {}", tr.ratios.sup_ratio))?;
    within(t0, Duration::from_secs(120))?;
    Ok(format!(
        "N1 = {n1:.3}, N2 = {n2:.3}; max [w~]_A2 = {worst:.3} <= {lambda0:.3}; transfer sup {:.3}; {:.1}s",
        tr.ratios.sup_ratio,
        t0.elapsed().as_secs_f64()
    ))
}

/// `(|ω| + Σ_k λ^{1−k/2m} |ξ|_k) / |symbol|` with `|ξ|_k² = Σ_{|α|=k} ξ^{2α}`, for d ≤ 2.
fn symbol_oracle(m: u32, lambda: f64, omega: f64, xi: &[f64], spatial: f64) -> f64 {
    let top = 2 * m;
    let mut num = omega.abs();
    for k in 0..=top {
        let s: f64 = match xi.len() {
            1 => xi[0].powi(2 * k as i32),
            _ => (0..=k).map(|j| xi[0].powi(2 * j as i32) * xi[1].powi(2 * (k - j) as i32)).sum(),
        };
        num += lambda.powf(1.0 - k as f64 / top as f64) * s.sqrt();
    }
    num / (omega * omega + (spatial + lambda).powi(2)).sqrt()
}

fn criterion_6() -> Outcome {
    let t0 = Instant::now();
    // (a)
    let d = unit_domain(DomainKind::ParabolicTorus, 1, 1, &[8, 64]);
    let u = GridFunction::from_fn(d.clone(), |x| (2.0 * PI * x[1]).sin());
    let s = e(differentiate(&u, 2, Backend::Spectral))?;
    let op = ModelOperator::second_order(Profile::constant(1.0), 0.5, 4.0 * PI * PI);
    let f = e(manufacture_rhs(&s, &op))?;
    let spec = e(MixedNormSpec::unweighted(d, &[1], 2.0, 2.0))?;
    let r = e(apriori_ratio(&s, &f, &op, &spec))?;
    ensure((r - 1.5).abs() <= CLOSED_FORM_TOL, || format!("(a) ratio {r}"))?;

    // (b)
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for m in [1u32, 2] {
        let (dom, a, lambda) = if m == 1 {
            (unit_domain(DomainKind::ParabolicTorus, 2, 1, &[16, 16, 16]), 2.0, 5.0)
        } else {
            (unit_domain(DomainKind::ParabolicTorus, 1, 2, &[16, 16]), 2.0, 5.0)
        };
        let dsp = dom.spatial_dim();
        let spec = e(MixedNormSpec::unweighted(dom.clone(), &[1], 2.0, 2.0))?;
        for _ in 0..32 {
            let j = rng.gen_range(-7i32..=7);
            let ks: Vec<i32> = (0..dsp).map(|_| rng.gen_range(-7i32..=7)).collect();
            if j == 0 && ks.iter().all(|&k| k == 0) {
                continue;
            }
            let omega = 2.0 * PI * j as f64;
            let xi: Vec<f64> = ks.iter().map(|&k| 2.0 * PI * k as f64).collect();
            let u = GridFunction::from_fn(dom.clone(), |x| {
                (omega * x[0] + xi.iter().zip(&x[1..]).map(|(a, b)| a * b).sum::<f64>()).cos()
            });
            let s = e(differentiate(&u, 2 * m as usize, Backend::Spectral))?;
            let op = if m == 1 {
                ModelOperator::second_order(Profile::constant(a), 0.4, lambda)
            } else {
                ModelOperator::higher_order(2, Profile::constant(a), 0.4, lambda)
            };
            let spatial = if m == 1 {
                a * xi[0] * xi[0] + xi[1..].iter().map(|x| x * x).sum::<f64>()
            } else {
                a * xi[0].powi(4)
            };
            let got = e(apriori_ratio(&s, &e(manufacture_rhs(&s, &op))?, &op, &spec))?;
            let want = symbol_oracle(m, lambda, omega, &xi, spatial);
            let rel = (got - want).abs() / want;
            worst = worst.max(rel);
            ensure(rel <= SYMBOL_TOL, || format!("(b) m={m} omega={omega} xi={xi:?}: {got} vs {want}"))?;
        }
    }

    // (c)
    let mut spreads = Vec::new();
    for q in [2.0, 3.0] {
        let cfg = PdeSuiteConfig {
            m: 1,
            d: 1,
            delta: 0.2,
            lambdas: vec![16.0, 64.0, 256.0],
            weight: WeightSpec::Product {
                split: Some(vec![1]),
                w1: Box::new(WeightSpec::Power { axis: 0, exponent: 0.5, offset: 0.0 }),
                w2: Box::new(WeightSpec::Unit),
            },
            p: 2.0,
            q,
            split: vec![1],
            suite: SuiteSpec::new(100, 4, 23),
            backend: Backend::Spectral,
            domain: Some(DomainSpec {
                kind: DomainKind::ParabolicTorus,
                d: 1,
                m: 1,
                extents: vec![[0.0, 1.0], [-1.0, 1.0]],
                points: vec![32, 128],
            }),
            form: Form::NonDivergence,
            pieces: vec![1, 64],
            profile_axis: ProfileAxis::X1,
            coefficient_seed: 2,
            lambda0: 1.0,
            max_spread: MAX_SPREAD,
        };
        let rep = e(estimate_suite(&cfg))?;
        let (ls, rs) = (rep.worst_lambda_spread(), rep.roughness_spread());
        ensure(rep.rows.len() == 100 * 3 * 2, || format!("(c) {} rows", rep.rows.len()))?;
        ensure(ls <= MAX_SPREAD && rs <= MAX_SPREAD, || format!("(c) q={q}: lambda spread {ls:.3}, roughness spread {rs:.3}"))?;
        spreads.push(format!("q={q}: {ls:.2}/{rs:.2}"));
    }

    // (d)
    let half = Arc::new(Domain::new(DomainKind::HalfSpaceBox, 2, 1, &[[0.0, 1.0], [0.0, 1.0]], &[32, 16]).unwrap());
    let even_u = GridFunction::from_fn(half.clone(), |x| (PI * x[0]).cos() * (2.0 * PI * x[1]).sin());
    let odd_u = GridFunction::from_fn(half.clone(), |x| (PI * x[0]).sin() * (2.0 * PI * x[1]).cos());
    let ee = e(halfspace_extension(&even_u, Parity::Even))?;
    let oe = e(halfspace_extension(&odd_u, Parity::Odd))?;
    let (n0, stride) = (32, 16);
    for i in 0..n0 {
        for s in 0..stride {
            let (k, mk) = ((n0 + i) * stride + s, (n0 - 1 - i) * stride + s);
            ensure(ee.values()[mk] == ee.values()[k] && oe.values()[mk] == -oe.values()[k], || "(d) reflection not exact".into())?;
        }
    }
    let dee = derivative_along(ee.domain(), ee.values(), 0, 1, Backend::Spectral);
    let du = GridFunction::from_fn(half.clone(), |x| -PI * (PI * x[0]).sin() * (2.0 * PI * x[1]).sin());
    let odd_du = e(halfspace_extension(&du, Parity::Odd))?;
    let parity_err = dee.iter().zip(odd_du.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ensure(parity_err < 1e-9, || format!("(d) derivative parity error {parity_err:e}"))?;
    let a = Profile { axis: ProfileAxis::X1, values: vec![0.5, 2.0, 1.0, 3.0] };
    let mut op = ModelOperator::second_order(a, 0.25, 3.0);
    op.b = vec![Profile::constant(0.7), Profile::constant(-0.4)];
    let fe = e(manufacture_rhs(&e(differentiate(&oe, 2, Backend::Spectral))?, &extend_operator(&op)))?;
    let odd_err = (0..n0 * stride)
        .map(|j| {
            let (i, s) = (j / stride, j % stride);
            (fe.values()[(n0 - 1 - i) * stride + s] + fe.values()[(n0 + i) * stride + s]).abs()
        })
        .fold(0.0, f64::max);
    ensure(odd_err < 1e-8, || format!("(d) extended rhs not odd: {odd_err:e}"))?;
    within(t0, Duration::from_secs(300))?;
    Ok(format!(
        "closed form {r:.9}; symbol rel err {worst:.1e}; spreads lambda/rough {}; extension err {parity_err:.1e}; {:.1}s",
        spreads.join(", "),
        t0.elapsed().as_secs_f64()
    ))
}

fn criterion_7() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_wfs");
    let configs = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let cmds = ["lattice-validate", "ap-constant", "maximal-bound", "fs-check", "gfs-check", "levelset", "extrapolate", "pde-ratio"];
    let dirs = [e(tempfile::tempdir())?, e(tempfile::tempdir())?];
    for cmd in cmds {
        let mut outputs = Vec::new();
        for dir in &dirs {
            let status = e(Command::new(bin)
                .args([cmd, "--config"])
                .arg(configs.join(format!("{cmd}.json")))
                .arg("--out")
                .arg(dir.path())
                .output())?;
            ensure(status.status.code() == Some(0), || format!("{cmd} exited {:?}: {}", status.status.code(), String::from_utf8_lossy(&status.stderr)))?;
            outputs.push(e(std::fs::read(dir.path().join(format!("{cmd}.csv"))))?);
        }
        ensure(outputs[0] == outputs[1] && !outputs[0].is_empty(), || format!("{cmd}: CSVs differ"))?;
    }
    Ok(format!("{} subcommands byte-identical across two runs", cmds.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("lattice exactness", criterion_1),
        ("weight sanity", criterion_2),
        ("Fefferman-Stein", criterion_3),
        ("stopping time / level set", criterion_4),
        ("extrapolation", criterion_5),
        ("PDE ratio harness", criterion_6),
        ("determinism", criterion_7),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let result = std::panic::catch_unwind(run).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match result {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
