use std::sync::Arc;

use crate::czfs::{
    check_stopping_structure, default_alpha, fs_members, generalized_fs_check, lambda_floor, level_set_check, stopping_time,
    AbsMajorant, FsNorm, GfsMember, MajorantProvider, PaddedMajorant,
};
use crate::error::{arg, Error, Result};
use crate::extrapolation::{
    calibrate_n1, calibrate_n2, check_r_dual_properties, check_r_properties, transfer_check, RdfConfig, TransferPair,
};
use crate::lattice::{conditional_expectation, validate_lattice, Domain, DomainSpec, GridFunction};
use crate::operators::{check_comparison, check_hl_bound, dyadic_maximal_values};
use crate::pdecheck::estimate_suite;
use crate::report::RatioReport;
use crate::weights::{ap_ball_values, ap_characteristic, check_ap_inclusion, check_product_ap, measure_comparison_fit};
use crate::weights::{random_subset_pairs, ComparisonFit, Weight, WeightStructure};

use super::config::*;
use super::output::{Cell, Outcome, Plot};

fn domain(spec: &DomainSpec) -> Result<Arc<Domain>> {
    Ok(Arc::new(Domain::from_spec(spec)?))
}

fn ratio_rows(out: &mut Outcome, r: &RatioReport) {
    for m in &r.members {
        out.row(vec![m.seed.into(), m.ratio.into(), m.flagged.into()]);
    }
    out.set_f("sup_ratio", r.sup_ratio);
    out.set("flagged", r.flagged_count());
}

fn seed_plot(r: &RatioReport) -> Plot {
    Plot {
        x_label: "seed".into(),
        y_label: "ratio".into(),
        log_x: false,
        series: vec![("ratio".into(), r.members.iter().map(|m| (m.seed as f64, m.ratio)).collect())],
    }
}

pub fn lattice_validate(cfg: &LatticeValidateConfig) -> Result<Outcome> {
    let d = domain(&cfg.domain)?;
    let lat = cfg.lattice.build(&d)?;
    let rep = validate_lattice(&lat);
    let mut out = Outcome::new(vec!["level", "cubes", "min_cells", "max_cells"]);
    for level in lat.levels() {
        let sizes = level.cubes.iter().map(|c| c.cell_count());
        let (lo, hi) = sizes.fold((usize::MAX, 0), |(a, b), n| (a.min(n), b.max(n)));
        out.row(vec![level.n.into(), level.cubes.len().into(), lo.into(), hi.into()]);
    }
    out.set("n1", lat.n1());
    out.set("observed_ratios", rep.observed_ratios.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(" "));
    out.set_f("n0", rep.n0);
    out.set_f("eps0", rep.eps0);
    out.set("failures", rep.failures.len());
    for (k, v) in [
        ("disjoint", rep.disjoint),
        ("covering", rep.covering),
        ("nested", rep.nested),
        ("diameter", rep.diameter),
        ("inscribed_ball", rep.inscribed_ball),
        ("measure_ratio", rep.measure_ratio),
    ] {
        out.contract(k, v);
    }
    Ok(out)
}

pub fn ap_constant(cfg: &ApConstantConfig) -> Result<Outcome> {
    let d = domain(&cfg.domain)?;
    let w = cfg.weight.build(d.clone())?;
    let fam = cfg.family.build(&d)?;
    let vals = ap_ball_values(&w, cfg.p, &fam)?;
    let mut out = Outcome::new(vec!["radius", "max_ap", "min_ap"]);
    for (r, row) in fam.radii().iter().zip(&vals) {
        let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
        out.row(vec![(*r).into(), hi.into(), lo.into()]);
    }
    let ap = ap_characteristic(&w, cfg.p, &fam)?;
    out.set_f("ap", ap);
    out.set_f("p", cfg.p);
    out.contract("ap_at_least_one", ap >= 1.0 - 1e-12);
    if let Some(q) = cfg.inclusion_q {
        out.set_f("ap_q", ap_characteristic(&w, q, &fam)?);
        out.contract("inclusion", check_ap_inclusion(&w, cfg.p, q, &fam)?);
    }
    if matches!(w.structure(), WeightStructure::Product { .. }) {
        let pr = check_product_ap(&w, cfg.p, &fam)?;
        out.set_f("ap_w1", pr.w1);
        out.set_f("ap_w2", pr.w2);
        out.set_f("c_geom", pr.c_geom);
        out.contract("product_bound", pr.passed);
    }
    out.plot = Some(Plot {
        x_label: "radius".into(),
        y_label: "max A_p over centers".into(),
        log_x: true,
        series: vec![("ap".into(), fam.radii().iter().zip(&vals).map(|(r, v)| (*r, v.iter().copied().fold(0.0, f64::max))).collect())],
    });
    Ok(out)
}

pub fn maximal_bound(cfg: &MaximalBoundConfig) -> Result<Outcome> {
    let d = domain(&cfg.domain)?;
    let w = cfg.weight.build(d.clone())?;
    let fam = cfg.family.build(&d)?;
    let suite = cfg.suite.members(d.clone())?;
    let rep = check_hl_bound(&suite, &w, cfg.p, &fam)?;
    let lat = cfg.lattice.as_ref().map(|l| l.build(&d)).transpose()?;
    let header = if lat.is_some() {
        vec!["seed", "ratio", "flagged", "maximal_ratio", "sharp_ratio", "c_geom"]
    } else {
        vec!["seed", "ratio", "flagged"]
    };
    let mut out = Outcome::new(header);
    let mut compared = true;
    for (m, s) in rep.members.iter().zip(&suite) {
        let mut row: Vec<Cell> = vec![m.seed.into(), m.ratio.into(), m.flagged.into()];
        if let Some(lat) = &lat {
            let c = check_comparison(&s.f, lat, &fam)?;
            compared &= c.passed;
            row.extend([c.maximal_ratio.into(), c.sharp_ratio.into(), c.c_geom.into()]);
        }
        out.row(row);
    }
    out.set_f("sup_ratio", rep.sup_ratio);
    out.set("flagged", rep.flagged_count());
    out.contract("finite", rep.is_finite());
    if lat.is_some() {
        out.contract("comparison", compared);
    }
    out.plot = Some(seed_plot(&rep));
    Ok(out)
}

fn fs_report(cfg: &FsCheckConfig, spec: &DomainSpec, n_max: i32) -> Result<(RatioReport, Vec<crate::czfs::FsMember>)> {
    let d = domain(spec)?;
    let w = cfg.weight.build(d.clone())?;
    let lat = LatticeSpec { n_min: cfg.lattice.n_min, n_max }.build(&d)?;
    let norm = FsNorm::for_weight(&w, cfg.p, cfg.q)?;
    let suite = cfg.suite.members(d)?;
    let members = fs_members(&suite, &w, &norm, &lat, cfg.regime)?;
    let mut rep = RatioReport::new("fefferman_stein", Some(cfg.regime));
    for m in &members {
        rep.push(m.seed, m.ratio());
    }
    Ok((rep, members))
}

pub fn fs_check(cfg: &FsCheckConfig) -> Result<Outcome> {
    let (mut rep, members) = fs_report(cfg, &cfg.domain, cfg.lattice.n_max)?;
    let mut out = Outcome::new(vec!["seed", "norm_f", "norm_sharp", "residual", "ratio", "flagged"]);
    for (m, r) in members.iter().zip(&rep.members) {
        out.row(vec![m.seed.into(), m.norm_f.into(), m.norm_sharp.into(), m.residual.into(), r.ratio.into(), r.flagged.into()]);
    }
    out.set("regime", rep.regime.map(|r| r.name()).unwrap_or_default());
    out.set_f("sup_ratio", rep.sup_ratio);
    out.set("flagged", rep.flagged_count());
    out.contract("finite", rep.is_finite());
    let cells = cfg.domain.points.iter().product::<usize>() as f64;
    let mut series = vec![(cells, rep.sup_ratio)];
    if let Some(c) = &cfg.compare {
        let spec = DomainSpec { points: c.points.clone(), ..cfg.domain.clone() };
        let (other, _) = fs_report(cfg, &spec, c.n_max)?;
        let s = rep.compare(&other);
        out.set_f("sup_ratio_compare", other.sup_ratio);
        out.set_f("stability", s);
        out.contract("stable", s <= cfg.max_stability);
        series.push((c.points.iter().product::<usize>() as f64, other.sup_ratio));
        series.sort_by(|a, b| a.0.total_cmp(&b.0));
        out.plot = Some(Plot {
            x_label: "cells".into(),
            y_label: "sup ratio".into(),
            log_x: true,
            series: vec![("sup ratio".into(), series)],
        });
    } else {
        out.plot = Some(seed_plot(&rep));
    }
    Ok(out)
}

fn fit(w: &Weight, p: f64, lat: &crate::lattice::DyadicLattice, pairs: &PairSpec) -> Result<ComparisonFit> {
    measure_comparison_fit(w, p, lat, &random_subset_pairs(lat, pairs.count, pairs.seed))
}

pub fn gfs_check(cfg: &GfsCheckConfig) -> Result<Outcome> {
    let d = domain(&cfg.domain)?;
    let w = cfg.weight.build(d.clone())?;
    let lat = cfg.lattice.build(&d)?;
    let norm = FsNorm::for_weight(&w, cfg.p, cfg.q)?;
    let beta = match (cfg.beta, &cfg.pairs) {
        (Some(b), _) => b,
        (None, Some(pairs)) => fit(&w, cfg.p, &lat, pairs)?.beta,
        (None, None) => return Err(Error::Dependency("give beta or pairs to fit it".into())),
    };
    let suite = cfg.suite.members(d)?;
    let members: Vec<GfsMember> = suite
        .iter()
        .map(|m| match cfg.provider {
            ProviderKind::Abs => GfsMember::plain(m.seed, &m.f, &lat),
            ProviderKind::Padded => GfsMember::padded(m.seed, &m.f, &lat),
        })
        .collect();
    let provider: &dyn MajorantProvider = match cfg.provider {
        ProviderKind::Abs => &AbsMajorant,
        ProviderKind::Padded => &PaddedMajorant,
    };
    let rep = generalized_fs_check(&members, provider, &w, &norm, beta, &lat, cfg.regime)?;
    let mut out = Outcome::new(vec!["seed", "ratio", "flagged"]);
    ratio_rows(&mut out, &rep);
    out.set("regime", cfg.regime.name());
    out.set_f("beta", beta);
    out.contract("finite", rep.is_finite());
    out.plot = Some(seed_plot(&rep));
    Ok(out)
}

pub fn levelset(cfg: &LevelsetConfig) -> Result<Outcome> {
    if cfg.lambdas.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return arg("lambda fractions must be positive");
    }
    let d = domain(&cfg.domain)?;
    let w = cfg.weight.build(d.clone())?;
    let lat = cfg.lattice.build(&d)?;
    let fit = fit(&w, cfg.p, &lat, &cfg.pairs)?;
    let suite = cfg.suite.members(d)?;
    let alpha = default_alpha(&lat);
    let mut out = Outcome::new(vec!["seed", "fraction", "lambda", "lhs", "rhs", "passed", "structure"]);
    let (mut skipped, mut structure_ok, mut bound_ok, mut n_cal) = (0usize, true, true, fit.n);
    let mut worst = vec![0.0f64; cfg.lambdas.len()];
    for m in &suite {
        let abs = m.f.abs();
        let floor = lambda_floor(&abs, &lat, cfg.regime);
        let sup = m.f.sup_abs();
        let kept: Vec<(usize, f64)> =
            cfg.lambdas.iter().enumerate().map(|(i, &t)| (i, t * sup)).filter(|&(_, l)| l > floor).collect();
        skipped += cfg.lambdas.len() - kept.len();
        if kept.is_empty() {
            continue;
        }
        let lams: Vec<f64> = kept.iter().map(|&(_, l)| l).collect();
        let rep = level_set_check(&m.f, &w, cfg.p, &lat, &lams, Some(&fit), cfg.regime)?;
        n_cal = n_cal.max(rep.n_cal);
        for (j, &(i, lambda)) in kept.iter().enumerate() {
            let map = stopping_time(&abs, &lat, lambda, alpha, cfg.regime)?;
            let s = check_stopping_structure(&abs, &lat, &map)?.passed();
            structure_ok &= s;
            bound_ok &= rep.passed[j];
            if rep.rhs[j] > 0.0 {
                worst[i] = worst[i].max(rep.lhs[j] / rep.rhs[j]);
            }
            out.row(vec![
                m.seed.into(),
                cfg.lambdas[i].into(),
                lambda.into(),
                rep.lhs[j].into(),
                rep.rhs[j].into(),
                rep.passed[j].into(),
                s.into(),
            ]);
        }
    }
    out.set_f("beta", fit.beta);
    out.set_f("n_fit", fit.n);
    out.set_f("n_cal", n_cal);
    out.set_f("alpha", alpha);
    out.set("rows", out.rows.len());
    out.set("skipped", skipped);
    out.contract("structure", structure_ok);
    out.contract("level_set", bound_ok);
    out.plot = Some(Plot {
        x_label: "lambda / sup|f|".into(),
        y_label: "max lhs/rhs".into(),
        log_x: true,
        series: vec![("lhs/rhs".into(), cfg.lambdas.iter().copied().zip(worst).collect())],
    });
    Ok(out)
}

pub fn extrapolate(cfg: &ExtrapolateConfig) -> Result<Outcome> {
    let d = domain(&cfg.domain)?;
    let w = cfg.weight.build(d.clone())?;
    let fam = cfg.family.build(&d)?;
    let lat = cfg.lattice.build(&d)?;
    let suite = cfg.suite.members(d)?;
    let hs: Vec<GridFunction> = suite.iter().map(|m| m.f.clone()).collect();
    let base = RdfConfig {
        p0: cfg.p0,
        p: cfg.p,
        k_terms: cfg.k_terms,
        n1_hat: cfg.n1_hat.unwrap_or(1.0),
        n2_hat: cfg.n2_hat.unwrap_or(1.0),
    };
    base.validate()?;
    let rdf = RdfConfig {
        n1_hat: base.n1_hat.max(calibrate_n1(&hs, &w, cfg.p, cfg.k_terms, &fam)?),
        n2_hat: base.n2_hat.max(calibrate_n2(&hs, &w, cfg.p, cfg.k_terms, &fam)?),
        ..base.clone()
    };
    let pairs: Vec<TransferPair> = suite
        .iter()
        .map(|m| {
            let f = match cfg.transfer {
                TransferKind::ConditionalExpectation { level } => conditional_expectation(&m.f, &lat, level)?,
                TransferKind::DyadicMaximal => m.f.with_values(dyadic_maximal_values(m.f.values(), &lat)),
            };
            Ok(TransferPair { seed: m.seed, f, g: m.f.clone(), n0: None })
        })
        .collect::<Result<_>>()?;
    let tr = transfer_check(&pairs, &w, &base, &fam)?;
    let mut out = Outcome::new(vec![
        "seed",
        "r_dominates",
        "r_norm_ratio",
        "r_a1_ratio",
        "rd_dominates",
        "rd_norm_ratio",
        "rd_a1_ratio",
        "ap_tilde",
        "n0",
        "transfer_ratio",
    ]);
    let tol = cfg.tolerance;
    let mut props_ok = true;
    for (i, m) in suite.iter().enumerate() {
        let r = check_r_properties(&m.f, &w, &rdf, &fam)?;
        let rd = check_r_dual_properties(&m.f, &w, &rdf, &fam)?;
        props_ok &= r.passed(tol) && rd.passed(tol);
        out.row(vec![
            m.seed.into(),
            r.dominates.into(),
            r.norm_ratio.into(),
            r.a1_ratio.into(),
            rd.dominates.into(),
            rd.norm_ratio.into(),
            rd.a1_ratio.into(),
            tr.ap_tilde[i].into(),
            tr.n0[i].into(),
            tr.ratios.members[i].ratio.into(),
        ]);
    }
    out.set_f("n1_hat", rdf.n1_hat);
    out.set_f("n2_hat", rdf.n2_hat);
    out.set_f("transfer_n1_hat", tr.n1_hat);
    out.set_f("transfer_n2_hat", tr.n2_hat);
    out.set_f("lambda0", tr.lambda0);
    out.set_f("max_ap_tilde", tr.ap_tilde.iter().copied().fold(0.0, f64::max));
    out.set_f("sup_transfer_ratio", tr.ratios.sup_ratio);
    out.contract("properties", props_ok);
    out.contract("ap_within_lambda0", tr.ap_within_lambda0(tol));
    out.contract("transfer", tr.ratios.sup_ratio <= 1.0 + 1e-6);
    out.plot = Some(seed_plot(&tr.ratios));
    Ok(out)
}

pub fn pde_ratio(cfg: &PdeRatioConfig) -> Result<Outcome> {
    let rep = estimate_suite(cfg)?;
    let mut out = Outcome::new(vec!["seed", "lambda", "pieces", "ratio"]);
    for r in &rep.rows {
        out.row(vec![r.seed.into(), r.lambda.into(), r.pieces.into(), r.ratio.into()]);
    }
    let sups = rep.sups.iter().map(|s| s.sup_ratio);
    out.set_f("max_sup_ratio", sups.clone().fold(0.0, f64::max));
    out.set_f("min_sup_ratio", sups.fold(f64::INFINITY, f64::min));
    let ls = rep.worst_lambda_spread();
    let rs = rep.roughness_spread();
    out.set_f("lambda_spread", ls);
    out.set_f("roughness_spread", rs);
    for dgn in &rep.diagnostics {
        let o = &dgn.oscillations;
        out.set_f(&format!("osc1_pieces_{}", dgn.pieces), o.osc1);
        out.set_f(&format!("osc2_pieces_{}", dgn.pieces), o.osc2);
        out.set_f(&format!("osc_pieces_{}", dgn.pieces), o.osc);
    }
    out.contract("lambda_spread_ok", ls <= cfg.max_spread);
    out.contract("roughness_spread_ok", rs <= cfg.max_spread);
    let mut pieces: Vec<usize> = rep.sups.iter().map(|s| s.pieces).collect();
    pieces.sort_unstable();
    pieces.dedup();
    out.plot = Some(Plot {
        x_label: "lambda".into(),
        y_label: "sup ratio".into(),
        log_x: true,
        series: pieces
            .iter()
            .map(|&n| {
                let pts = rep.sups.iter().filter(|s| s.pieces == n).map(|s| (s.lambda, s.sup_ratio)).collect();
                (format!("{n} pieces"), pts)
            })
            .collect(),
    });
    Ok(out)
}
