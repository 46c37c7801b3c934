//! The experiment suite.

use std::collections::BTreeMap;

use rand::Rng;
use serde_json::json;

use crate::dyadic::lerner::AUDIT_SLACK;
use crate::dyadic::{carleson_constant, enumerate_cubes, lerner_hytonen, random_sparse_family, sharp_maximal, verify_sparse};
use crate::dyadic::{DyadicCube, GridSet, ShiftedDyadicGrid, SparseFamily};
use crate::error::{LabError, Result};
use crate::gridfn::{lp_norm, weak_lp_norm, AxisBox, DomainSpec, GridFunction};
use crate::lab::config::ExperimentConfig;
use crate::lab::corpus::{case_rng, generate_corpus, half_window, Corpus};
use crate::lab::fit::{transform, Model};
use crate::lab::report::{Case, ExperimentReport, NamedFit, Rule};
use crate::orlicz::YoungFunction;
use crate::sqfn::{maximal, sparse_operator, BumpProfile, ConeEnergy, ConeQuadrature, MultilinearKernel, Profile};
use crate::weights::{ap_constant, bump_hypotheses, bump_norm, conjugate, entropy_bump, hl_maximal, nu_weight, EntropyGauge, EntropyVariant, ExponentVector};

/// Stability factor for observed constants across a corpus.
pub const STABILITY_FACTOR: f64 = 10.0;

struct Setup {
    domain: DomainSpec,
    kernel: MultilinearKernel,
    quad: ConeQuadrature,
    pv: ExponentVector,
    grids: GridSet,
    m: usize,
    mn: f64,
}

fn setup(cfg: &ExperimentConfig) -> Result<Setup> {
    let kernel = cfg.kernel()?;
    let pv = cfg.exponent_vector()?;
    let domain = cfg.domain;
    if cfg.cases == 0 {
        return Err(LabError::Config("at least one case is required".into()));
    }
    Ok(Setup { grids: GridSet::standard(&domain), quad: cfg.quadrature()?, m: kernel.m, mn: (kernel.m * kernel.n) as f64, domain, kernel, pv })
}

fn refs(v: &[GridFunction]) -> Vec<&GridFunction> {
    v.iter().collect()
}

fn corpus(cfg: &ExperimentConfig, s: &Setup, window: &AxisBox, weights: usize, case: usize) -> Result<Corpus> {
    generate_corpus(&s.domain, s.m, window, &cfg.weights[..weights], cfg.seed, case as u64)
}

fn require_exponents(s: &Setup) -> Result<()> {
    if s.pv.m() != s.m {
        return Err(LabError::Config(format!("{} exponents for a {}-linear kernel", s.pv.m(), s.m)));
    }
    Ok(())
}

fn require_decay(lambda: f64, m: usize) -> Result<()> {
    if !(lambda > 2.0 * m as f64) {
        return Err(LabError::HypothesisViolation(format!("g* needs λ > 2m = {}, got {lambda}", 2 * m)));
    }
    Ok(())
}

fn strict_exponents(pv: &ExponentVector) -> Result<()> {
    if pv.as_slice().iter().any(|&p| p <= 1.0) {
        return Err(LabError::HypothesisViolation(format!("exponents {:?} must exceed 1", pv.as_slice())));
    }
    Ok(())
}

fn mask(domain: &DomainSpec, window: &AxisBox) -> GridFunction {
    GridFunction::box_indicator(*domain, window)
}

fn norms_product(fs: &[GridFunction], pv: &ExponentVector, ws: &[&GridFunction]) -> Result<f64> {
    fs.iter().enumerate().map(|(i, f)| lp_norm(f, pv.get(i), Some(ws[i]))).product()
}

fn spread_rules(groups: &[&str], cfg: &ExperimentConfig) -> Vec<Rule> {
    let factor = cfg.tolerance("stability_factor", STABILITY_FACTOR);
    groups.iter().map(|g| Rule::Spread { group: g.to_string(), factor }).collect()
}

fn tails(e: &ConeEnergy, prefix: &str, out: &mut BTreeMap<String, f64>) {
    for (k, v) in [("outside_domain", e.tails.outside_domain), ("above_t_max", e.tails.above_t_max), ("below_t_min_estimate", e.tails.below_t_min)] {
        let key = format!("{prefix}{k}");
        let slot = out.entry(key).or_insert(0.0);
        *slot = slot.max(v);
    }
}

fn g_factor(n: usize, lambda: f64, m: usize) -> f64 {
    2f64.powf(n as f64 * (lambda - 2.0 * m as f64)) - 1.0
}

/// Cubes of the unshifted grid with side about `L` covering the domain.
fn roots(domain: &DomainSpec) -> Result<Vec<DyadicCube>> {
    let k = domain.coarsest_level() + 2;
    let grid = ShiftedDyadicGrid { shift: [0, 0], k_min: k, k_max: k };
    Ok(enumerate_cubes(domain, &grid, k, k)?.into_iter().filter(|q| q.measure(domain) > 0.0).collect())
}

fn sparse_family<R: Rng>(domain: &DomainSpec, depth: u32, rng: &mut R) -> Result<SparseFamily> {
    let mut cubes = Vec::new();
    for root in roots(domain)? {
        let depth = depth.min((domain.finest_level() - root.level).max(0) as u32);
        cubes.extend(random_sparse_family(*domain, root, depth, rng)?.cubes);
    }
    SparseFamily::new(*domain, cubes, 0.5)
}

/// Aperture growth: the log-log slope of `‖S_α f⃗‖_{L^p(ν_w)}` over `α`.
pub fn e1(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let s = setup(cfg)?;
    require_exponents(&s)?;
    cfg.require_weights(s.m)?;
    let alphas = cfg.param_list("alphas", &[1.0, 2.0, 4.0, 8.0])?;
    if alphas.len() < 3 || alphas.iter().any(|a| *a < 1.0) {
        return Err(LabError::Config("need at least three apertures ≥ 1".into()));
    }
    let margin = cfg.tolerance("slope_margin", 0.3);
    let p = s.pv.p();
    let window = half_window(&s.domain);
    let mut cases = Vec::new();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    let mut tb = BTreeMap::new();
    for c in 0..cfg.cases {
        let cp = corpus(cfg, &s, &window, s.m, c)?;
        let nu = nu_weight(&refs(&cp.weights), &s.pv)?;
        let e = ConeEnergy::new(&s.kernel, &refs(&cp.functions), &s.quad)?;
        tails(&e, "", &mut tb);
        let norms = alphas.iter().map(|&a| lp_norm(&e.s_alpha(a)?, p, Some(&nu))).collect::<Result<Vec<f64>>>()?;
        let pts: Vec<(f64, f64)> = alphas.iter().zip(&norms).map(|(&a, &v)| transform(Model::LoglogLine, a, v / norms[0])).collect();
        let fit = crate::lab::fit::fit_line(&pts.iter().map(|p| p.0).collect::<Vec<_>>(), &pts.iter().map(|p| p.1).collect::<Vec<_>>())?;
        for (&a, &v) in alphas.iter().zip(&norms) {
            cases.push(Case::new("norm", json!({ "case": c, "alpha": a }), v, norms[0]));
        }
        xs.extend(pts.iter().map(|p| p.0));
        ys.extend(pts.iter().map(|p| p.1));
        cases.push(Case::new("slope", json!({ "case": c, "r2": fit.r2 }), fit.slope, s.mn + margin));
    }
    let fits = vec![NamedFit::new("slope", xs, ys)?];
    let rules = vec![Rule::RatioAtMost { group: "slope".into(), bound: 1.0 }, Rule::Count { group: "slope".into(), count: cfg.cases }];
    let notes = vec![
        "only the upper-bound slope is certified; the matching lower bound is not observable at finite scale".into(),
        format!("slope cases compare the fitted exponent with mn + {margin}"),
    ];
    Ok(ExperimentReport::assemble(cfg.clone(), "slope", cases, fits, rules, tb, notes))
}

fn bump_inputs(domain: &DomainSpec, m: usize) -> Result<Vec<GridFunction>> {
    let n = domain.dim();
    let f = GridFunction::from_fn(*domain, |x| (0..n).map(|k| Profile::Bump.eval(x[k])).product())?;
    Ok(vec![f; m])
}

/// Truncated `g*_λ` norms over successive domain doublings with fixed `h`.
pub fn e1b(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let s = setup(cfg)?;
    require_exponents(&s)?;
    let lambda = cfg.param("lambda", 1.0)?;
    let doublings = cfg.param("doublings", 3.0)? as u32;
    let per = cfg.param("nodes_per_doubling", 8.0)?;
    let p = s.pv.p();
    if !(lambda < 2.0 / p && lambda < 2.0 * s.m as f64) {
        return Err(LabError::HypothesisViolation(format!("divergence regime needs λ < min(2/p, 2m), got λ = {lambda}, p = {p}")));
    }
    let n = s.domain.dim();
    let h = s.domain.h();
    let growth = cfg.tolerance("min_growth", 1.05);
    let tail_factor = cfg.tolerance("tail_factor", 3.0);
    let mut cases = Vec::new();
    let mut tb = BTreeMap::new();
    let mut prev: Option<f64> = None;
    let mut last: Option<(DomainSpec, GridFunction)> = None;
    for j in 0..=doublings {
        let scale = 2usize.pow(j);
        let d = DomainSpec::new(n, s.domain.half_extent() * scale as f64, s.domain.cells_per_axis() * scale)?;
        let octaves = (4.0 * d.half_extent() / h).log2();
        let nodes = (octaves * per).round() as usize;
        let quad = ConeQuadrature::new(h, h * 2f64.powf(nodes as f64 / per), nodes)?;
        let fs = bump_inputs(&d, s.m)?;
        let e = ConeEnergy::new(&s.kernel, &refs(&fs), &quad)?;
        tails(&e, &format!("L{}_", d.half_extent()), &mut tb);
        let g = e.g_star(lambda)?;
        let l = d.half_extent();
        let ball = GridFunction::from_fn(d, |x| if (0..n).map(|k| x[k] * x[k]).sum::<f64>().sqrt() < l { 1.0 } else { 0.0 })?.as_weight()?;
        let v = lp_norm(&g, p, Some(&ball))?;
        if let Some(pv) = prev {
            cases.push(Case::new("doubling", json!({ "half_extent": l, "cells": d.cells_per_axis(), "nodes": nodes }), v, pv));
        }
        prev = Some(v);
        last = Some((d, g));
    }
    let (d, g) = last.expect("at least one domain");
    let l = d.half_extent();
    for c in 0..d.cell_count() {
        let x = d.center(c);
        let r = (0..n).map(|k| x[k] * x[k]).sum::<f64>().sqrt();
        if r >= l / 10.0 && r < l {
            let v = g.value(c) * r.powf(n as f64 * lambda / 2.0);
            cases.push(Case::new("tail", json!({ "x": &x[..n] }), v, 1.0));
        }
    }
    let rules = vec![
        Rule::RatioAtLeast { group: "doubling".into(), bound: growth },
        Rule::Count { group: "doubling".into(), count: doublings as usize },
        Rule::Spread { group: "tail".into(), factor: tail_factor },
    ];
    let notes = vec![format!("λ = {lambda} below 2/p = {}; inputs are the registry bump in every slot; h fixed at {h}", 2.0 / p)];
    Ok(ExperimentReport::assemble(cfg.clone(), "doubling", cases, vec![], rules, tb, notes))
}

/// Two-weight bump bounds.
pub fn e2(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let s = setup(cfg)?;
    require_exponents(&s)?;
    strict_exponents(&s.pv)?;
    cfg.require_weights(s.m)?;
    let alpha = cfg.param("alpha", 1.0)?;
    let lambda = cfg.param("lambda", 5.0)?;
    require_decay(lambda, s.m)?;
    let b_ids = cfg.param_strs("B")?.unwrap_or_else(|| vec![format!("logbump:{}:1", conjugate(s.pv.get(0))); s.m]);
    if b_ids.len() != s.m {
        return Err(LabError::Config("one Young function B_j per slot".into()));
    }
    let bs = b_ids.iter().map(|id| YoungFunction::from_id(id)).collect::<Result<Vec<_>>>()?;
    let a = YoungFunction::from_id(&cfg.param_str("A", "logbump:2:1")?)?;
    let p = s.pv.p();
    let hyp = bump_hypotheses(&a, &bs, &s.pv)?;
    let window = half_window(&s.domain);
    let base = corpus(cfg, &s, &window, s.m, 0)?;
    let vs = refs(&base.weights);
    let u = nu_weight(&vs, &s.pv)?;
    let bn = bump_norm(&u, &vs, &a, &bs, &s.pv, &s.grids)?;
    let mut n_p = bn.value;
    for (j, b) in hyp.b_bar.iter().enumerate() {
        n_p *= b.powf(1.0 / s.pv.get(j));
    }
    if let Some(ab) = hyp.a_bar {
        n_p *= ab.powf(0.5 - 1.0 / p);
    }
    let gf = g_factor(s.domain.dim(), lambda, s.m);
    let mut cases = Vec::new();
    let mut tb = BTreeMap::new();
    for c in 0..cfg.cases {
        let cp = corpus(cfg, &s, &window, s.m, c)?;
        let fs = refs(&cp.functions);
        let e = ConeEnergy::new(&s.kernel, &fs, &s.quad)?;
        tails(&e, "", &mut tb);
        let prod = norms_product(&cp.functions, &s.pv, &vs)?;
        let ls = lp_norm(&e.s_alpha(alpha)?, p, Some(&u))?;
        let lg = lp_norm(&e.g_star(lambda)?, p, Some(&u))?;
        cases.push(Case::new("S", json!({ "case": c }), ls, alpha.powf(s.mn) * n_p * prod));
        cases.push(Case::new("g", json!({ "case": c }), lg, n_p / gf * prod));
    }
    let notes = vec![format!(
        "bump norm {:.6e} over {} cubes; B_p constants of the complements {:?}{}",
        bn.value,
        bn.cubes,
        hyp.b_bar,
        hyp.a_bar.map(|v| format!(", of the complement of A {v:.6e}")).unwrap_or_default()
    )];
    Ok(ExperimentReport::assemble(cfg.clone(), "S", cases, vec![], spread_rules(&["S", "g"], cfg), tb, notes))
}

/// Fefferman–Stein bounds with arbitrary weights.
pub fn e3(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let s = setup(cfg)?;
    require_exponents(&s)?;
    strict_exponents(&s.pv)?;
    cfg.require_weights(s.m)?;
    let alpha = cfg.param("alpha", 1.0)?;
    let lambda = cfg.param("lambda", 5.0)?;
    require_decay(lambda, s.m)?;
    let p = s.pv.p();
    if p > 2.0 {
        return Err(LabError::HypothesisViolation(format!("Fefferman–Stein bound needs p ≤ 2, got {p}")));
    }
    let window = half_window(&s.domain);
    let base = corpus(cfg, &s, &window, s.m, 0)?;
    let nu = nu_weight(&refs(&base.weights), &s.pv)?;
    let mw: Vec<GridFunction> = base.weights.iter().map(|w| hl_maximal(w, &s.grids)).collect();
    let gf = g_factor(s.domain.dim(), lambda, s.m);
    let mut cases = Vec::new();
    let mut tb = BTreeMap::new();
    for c in 0..cfg.cases {
        let cp = corpus(cfg, &s, &window, s.m, c)?;
        let e = ConeEnergy::new(&s.kernel, &refs(&cp.functions), &s.quad)?;
        tails(&e, "", &mut tb);
        let prod = norms_product(&cp.functions, &s.pv, &refs(&mw))?;
        let ls = lp_norm(&e.s_alpha(alpha)?, p, Some(&nu))?;
        let lg = lp_norm(&e.g_star(lambda)?, p, Some(&nu))?;
        cases.push(Case::new("S", json!({ "case": c }), ls, alpha.powf(s.mn) * prod));
        cases.push(Case::new("g", json!({ "case": c }), lg, prod / gf));
    }
    Ok(ExperimentReport::assemble(cfg.clone(), "S", cases, vec![], spread_rules(&["S", "g"], cfg), tb, vec![]))
}

fn entropy_constant(
    sig: &[&GridFunction],
    nu: &GridFunction,
    pv: &ExponentVector,
    gauge: &EntropyGauge,
    r: f64,
    grids: &GridSet,
) -> Result<(f64, &'static str)> {
    let p = pv.p();
    if p > r {
        let v = entropy_bump(sig, nu, pv, gauge, &EntropyVariant::Convex { r }, grids)?;
        Ok((v.value.powf(1.0 / p), "convex"))
    } else {
        let v = entropy_bump(sig, nu, pv, gauge, &EntropyVariant::concave(pv, r), grids)?;
        Ok((v.value.powf(1.0 / r), "concave"))
    }
}

/// Entropy-bump bounds.
pub fn e4(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let s = setup(cfg)?;
    require_exponents(&s)?;
    strict_exponents(&s.pv)?;
    cfg.require_weights(s.m + 1)?;
    let alpha = cfg.param("alpha", 1.0)?;
    let gauge = EntropyGauge::new(cfg.param("eta", 0.5)?)?;
    let cert = gauge.certificate();
    if !cert.convergent {
        return Err(LabError::HypothesisViolation("entropy gauge is not integrable".into()));
    }
    let rs = cfg.param_list("rs", &[1.0, 2.0, 3.0])?;
    let depth = cfg.param("sparse_depth", 6.0)? as u32;
    let p = s.pv.p();
    let window = half_window(&s.domain);
    let base = corpus(cfg, &s, &window, s.m + 1, 0)?;
    let sig: Vec<&GridFunction> = base.weights[..s.m].iter().collect();
    let nu = &base.weights[s.m];
    let (n_pred, kind_pred) = entropy_constant(&sig, nu, &s.pv, &gauge, 2.0, &s.grids)?;
    let mut sparse_consts = Vec::new();
    for &r in &rs {
        if r < 1.0 {
            return Err(LabError::Config(format!("sparse exponent r = {r} must be ≥ 1")));
        }
        sparse_consts.push((r, entropy_constant(&sig, nu, &s.pv, &gauge, r, &s.grids)?));
    }
    let mut cases = Vec::new();
    let mut tb = BTreeMap::new();
    let mut groups = vec!["entropy_S".to_string()];
    for c in 0..cfg.cases {
        let cp = corpus(cfg, &s, &window, s.m + 1, c)?;
        let fsig: Vec<GridFunction> = cp.functions.iter().zip(&sig).map(|(f, w)| f.zip_with(w, |a, b| a * b)).collect::<Result<_>>()?;
        let prod = norms_product(&cp.functions, &s.pv, &sig)?;
        let e = ConeEnergy::new(&s.kernel, &refs(&fsig), &s.quad)?;
        tails(&e, "", &mut tb);
        let ls = lp_norm(&e.s_alpha(alpha)?, p, Some(nu))?;
        cases.push(Case::new("entropy_S", json!({ "case": c, "functional": kind_pred }), ls, alpha.powf(s.mn) * n_pred * prod));
        let mut rng = case_rng(cfg.seed ^ 0x5eed, c as u64);
        let fam = sparse_family(&s.domain, depth, &mut rng)?;
        for (r, (nr, kind)) in &sparse_consts {
            let a = sparse_operator(&fam, *r, &refs(&fsig))?;
            let g = format!("sparse_r{r}");
            cases.push(Case::new(&g, json!({ "case": c, "cubes": fam.len(), "functional": kind }), lp_norm(&a, p, Some(nu))?, nr * prod));
            if c == 0 {
                groups.push(g);
            }
        }
    }
    let gref: Vec<&str> = groups.iter().map(String::as_str).collect();
    let notes = vec![format!(
        "gauge (1 + ln t)^(1+{}) with integral {:.6} (tail {:.3e}); predicted constant {n_pred:.6e} ({kind_pred}); sparse constants {:?}",
        gauge.eta,
        cert.integral,
        cert.tail,
        sparse_consts.iter().map(|(r, (v, k))| format!("r={r}: {v:.6e} ({k})")).collect::<Vec<_>>()
    )];
    Ok(ExperimentReport::assemble(cfg.clone(), "entropy_S", cases, vec![], spread_rules(&gref, cfg), tb, notes))
}

/// Mixed weak-type bounds.
pub fn e5(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let s = setup(cfg)?;
    cfg.require_weights(s.m + 1)?;
    let alpha = cfg.param("alpha", 1.0)?;
    let lambda = cfg.param("lambda", 5.0)?;
    require_decay(lambda, s.m)?;
    let cap = cfg.param("admission_cap", 100.0)?;
    let mf = s.m as f64;
    let window = half_window(&s.domain);
    let gf = g_factor(s.domain.dim(), lambda, s.m);
    let mut cases = Vec::new();
    let mut tb = BTreeMap::new();
    let base = corpus(cfg, &s, &window, s.m + 1, 0)?;
    let ws = &base.weights[..s.m];
    let v = &base.weights[s.m];
    let a1: Vec<f64> = ws.iter().map(|w| ap_constant(w, 1.0, &s.grids).map(|f| f.value)).collect::<Result<_>>()?;
    let ainf = ap_constant(v, f64::INFINITY, &s.grids)?.value;
    if a1.iter().any(|a| !(*a <= cap)) || !(ainf <= cap) {
        return Err(LabError::HypothesisViolation(format!("A_1 constants {a1:?} or A_inf constant {ainf} exceed {cap}")));
    }
    let u = nu_weight(&refs(ws), &ExponentVector::new(vec![mf; s.m])?)?;
    let mu = u.zip_with(v, |a, b| a * b.powf(1.0 / mf))?.as_weight()?;
    for c in 0..cfg.cases {
        let cp = corpus(cfg, &s, &window, 0, c)?;
        let e = ConeEnergy::new(&s.kernel, &refs(&cp.functions), &s.quad)?;
        tails(&e, "", &mut tb);
        let prod: f64 = cp.functions.iter().zip(ws).map(|(f, w)| lp_norm(f, 1.0, Some(w))).product::<Result<f64>>()?;
        for (group, op) in [("S", e.s_alpha(alpha)?), ("g", e.g_star(lambda)?)] {
            let q = op.zip_with(v, |a, b| if b > 0.0 { a / b } else { 0.0 })?;
            let lhs = weak_lp_norm(&q, 1.0 / mf, Some(&mu))?;
            let rhs = if group == "S" { prod } else { prod / gf };
            cases.push(Case::new(group, json!({ "case": c }), lhs, rhs));
        }
    }
    let notes = vec![
        format!("weights admitted when every computed A_1 constant of w_i and the A_inf constant of v are at most {cap}"),
        format!("A_1 constants {a1:?}; A_inf constant {ainf:.6e}"),
    ];
    Ok(ExperimentReport::assemble(cfg.clone(), "S", cases, vec![], spread_rules(&["S", "g"], cfg), tb, notes))
}

/// Local decay of `|{x ∈ Q : T f⃗ > t M f⃗}| / |Q|`.
pub fn e6(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let s = setup(cfg)?;
    let alpha = cfg.param("alpha", 1.0)?;
    let lambda = cfg.param("lambda", 5.0)?;
    require_decay(lambda, s.m)?;
    let (t0, t1, dt) = (cfg.param("t_min", 2.0)?, cfg.param("t_max", 6.0)?, cfg.param("t_step", 0.1)?);
    if !(t0 > 0.0 && t1 > t0 && dt > 0.0) {
        return Err(LabError::Config("need 0 < t_min < t_max and a positive step".into()));
    }
    let ts: Vec<f64> = (0..).map(|i| t0 + i as f64 * dt).take_while(|t| *t <= t1 + 1e-9).collect();
    let min_r2 = cfg.tolerance("min_r2", 0.9);
    let min_points = cfg.tolerance("min_points", 5.0) as usize;
    let window = half_window(&s.domain);
    let inside: Vec<(usize, f64)> = s.domain.overlaps(&window).into_iter().filter(|(c, _)| window.contains_point(s.domain.center(*c))).collect();
    let q_meas: f64 = inside.iter().map(|c| c.1).sum();
    let mut cases = Vec::new();
    let mut tb = BTreeMap::new();
    let mut pooled = vec![vec![0.0; ts.len()]; 2];
    for c in 0..cfg.cases {
        let cp = corpus(cfg, &s, &window, 0, c)?;
        let fs = refs(&cp.functions);
        let e = ConeEnergy::new(&s.kernel, &fs, &s.quad)?;
        tails(&e, "", &mut tb);
        let mx = maximal(&fs, &vec![1.0; s.m], None, &s.grids)?;
        for (k, (group, op)) in [("S", e.s_alpha(alpha)?), ("g", e.g_star(lambda)?)].into_iter().enumerate() {
            for (i, &t) in ts.iter().enumerate() {
                let meas: f64 = inside.iter().filter(|(cell, _)| op.value(*cell) > t * mx.value(*cell)).map(|x| x.1).sum();
                pooled[k][i] += meas / q_meas / cfg.cases as f64;
                cases.push(Case::new(&format!("{group}_fraction"), json!({ "case": c, "t": t }), meas, q_meas));
            }
        }
    }
    let mut fits = Vec::new();
    let mut notes = Vec::new();
    for (k, group) in ["S", "g"].iter().enumerate() {
        let pts: Vec<(f64, f64)> = ts.iter().zip(&pooled[k]).filter(|(_, f)| **f > 0.0).map(|(&t, &f)| transform(Model::GaussDecay, t, f)).collect();
        let vanish = ts.iter().zip(&pooled[k]).find(|(_, f)| **f == 0.0).map(|(t, _)| *t);
        let fit = NamedFit::new(group, pts.iter().map(|p| p.0).collect(), pts.iter().map(|p| p.1).collect())?;
        notes.push(format!(
            "{group}: c1 ≈ {:.4e}, decay rate ≈ {:.4e} in t², {} points{}",
            fit.fit.intercept.exp(),
            fit.fit.rate(),
            pts.len(),
            vanish.map(|t| format!("; pooled fraction is zero from t = {t:.2}")).unwrap_or_default()
        ));
        fits.push(fit);
    }
    let rules = ["S", "g"].iter().map(|g| Rule::Fit { group: g.to_string(), max_slope: 0.0, min_r2, min_points }).collect();
    Ok(ExperimentReport::assemble(cfg.clone(), "S_fraction", cases, fits, rules, tb, notes))
}

/// Coifman–Fefferman bounds.
pub fn e7(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let s = setup(cfg)?;
    cfg.require_weights(1)?;
    let alpha = cfg.param("alpha", 1.0)?;
    let ps = cfg.param_list("ps", &[1.0, 2.0])?;
    let local_p = cfg.param("local_p", 2.0)?;
    let window = half_window(&s.domain);
    let qmask = mask(&s.domain, &window);
    let weights: Vec<GridFunction> = cfg.weights.iter().map(|e| crate::weights::generate_weight(&e.to_kind()?, &s.domain)).collect::<Result<_>>()?;
    let ainf: Vec<f64> = weights.iter().map(|w| ap_constant(w, f64::INFINITY, &s.grids).map(|f| f.value)).collect::<Result<_>>()?;
    let ap: Vec<f64> = weights.iter().map(|w| ap_constant(w, local_p, &s.grids).map(|f| f.value)).collect::<Result<_>>()?;
    let mut cases = Vec::new();
    let mut tb = BTreeMap::new();
    let mut groups: Vec<String> = ps.iter().map(|p| format!("global_p{p}")).collect();
    groups.push("local".into());
    for c in 0..cfg.cases {
        let k = c % weights.len();
        let w = &weights[k];
        let cp = corpus(cfg, &s, &window, 0, c)?;
        let fs = refs(&cp.functions);
        let e = ConeEnergy::new(&s.kernel, &fs, &s.quad)?;
        tails(&e, "", &mut tb);
        let sa = e.s_alpha(alpha)?;
        let mx = maximal(&fs, &vec![1.0; s.m], None, &s.grids)?;
        for &p in &ps {
            let lhs = lp_norm(&sa, p, Some(w))?;
            let rhs = alpha.powf(s.mn) * (p + 1.0) * ainf[k].sqrt() * lp_norm(&mx, p, Some(w))?;
            cases.push(Case::new(&format!("global_p{p}"), json!({ "case": c, "weight": k, "a_inf": ainf[k] }), lhs, rhs));
        }
        let wq = w.zip_with(&qmask, |a, b| a * b)?.as_weight()?;
        let lhs = lp_norm(&sa, 2.0, Some(&wq))?;
        let rhs = alpha.powf(s.mn) * ap[k].sqrt() * lp_norm(&mx, 2.0, Some(&wq))?;
        cases.push(Case::new("local", json!({ "case": c, "weight": k, "a_p": ap[k] }), lhs, rhs));
    }
    let gref: Vec<&str> = groups.iter().map(String::as_str).collect();
    let notes = vec![format!("A_inf constants {ainf:?}; A_{local_p} constants {ap:?}")];
    Ok(ExperimentReport::assemble(cfg.clone(), &groups[0], cases, vec![], spread_rules(&gref, cfg), tb, notes))
}

/// Sparse pointwise decomposition, sharp maximal bound and endpoint ratio.
pub fn e8(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let s = setup(cfg)?;
    let alphas = cfg.param_list("alphas", &[1.0, 2.0])?;
    let gamma = cfg.param("gamma", 0.2)?;
    if !(gamma > 0.0 && gamma < 0.5 / s.m as f64) {
        return Err(LabError::HypothesisViolation(format!("sharp maximal exponent must lie in (0, 1/(2m)), got {gamma}")));
    }
    let osc_cases = (cfg.param("oscillation_cases", 20.0)? as usize).min(cfg.cases);
    let d = s.domain;
    let n = d.dim();
    let q0 = DyadicCube::new(n, [0, 0], 0, [0, 0]);
    let full = d.domain_box();
    let mut cases = Vec::new();
    let mut tb = BTreeMap::new();
    let mut groups = vec!["mf".to_string(), "sparsity".to_string()];
    for c in 0..cfg.cases {
        let mut rng = case_rng(cfg.seed, c as u64);
        let f = crate::lab::corpus::TrigPolynomial::random(full, &mut rng).sample(&d)?;
        match lerner_hytonen(&f, &q0) {
            Ok(dec) => {
                let slack = AUDIT_SLACK * f.values_on(&q0.clipped(&d)).iter().fold(0.0f64, |m, p| m.max(p.0.abs())).max(f64::MIN_POSITIVE);
                let sp = verify_sparse(&dec.family)?;
                cases.push(Case::new(
                    "mf",
                    json!({ "case": c, "cubes": dec.family.len(), "max_ratio": dec.audit.max_ratio, "cells": dec.audit.cells_checked }),
                    dec.audit.max_excess.max(0.0),
                    slack,
                ));
                cases.push(Case::new("factor", json!({ "case": c }), dec.audit.max_ratio, 1.0));
                cases.push(Case::new("sparsity", json!({ "case": c }), sp.min_ratio, dec.family.eta));
            }
            Err(LabError::SelfVerificationFailed { cell, lhs, rhs }) => {
                cases.push(Case::new("mf", json!({ "case": c, "failed_cell": cell }), lhs - rhs, 0.0));
            }
            Err(e) => return Err(e),
        }
    }
    let window = half_window(&d);
    for c in 0..osc_cases {
        let cp = corpus(cfg, &s, &window, 0, c)?;
        let fs = refs(&cp.functions);
        let e = ConeEnergy::new(&s.kernel, &fs, &s.quad)?;
        tails(&e, "", &mut tb);
        let mx = maximal(&fs, &vec![1.0; s.m], None, &s.grids)?;
        let l1: f64 = cp.functions.iter().map(|f| lp_norm(f, 1.0, None)).product::<Result<f64>>()?;
        for &a in &alphas {
            let st = e.s_tilde(a, BumpProfile::Smooth)?;
            let sq = st.map(|v| v * v)?;
            let sharp = sharp_maximal(&sq, gamma, &s.grids)?;
            let mut worst: f64 = 0.0;
            for cell in 0..d.cell_count() {
                let mv = mx.value(cell);
                if mv > 0.0 {
                    worst = worst.max(sharp.value(cell) / (mv * mv));
                }
            }
            let g_sharp = format!("sharp_a{a}");
            let gend = format!("endpoint_a{a}");
            cases.push(Case::new(&g_sharp, json!({ "case": c, "alpha": a }), worst, a.powf(2.0 * s.mn)));
            let weak = weak_lp_norm(&st, 1.0 / s.m as f64, None)?;
            cases.push(Case::new(&gend, json!({ "case": c, "alpha": a }), weak, a.powf(s.mn) * l1));
            if c == 0 {
                groups.push(g_sharp);
                groups.push(gend);
            }
        }
    }
    let mut rules = vec![
        Rule::RatioAtMost { group: "mf".into(), bound: 1.0 },
        Rule::Count { group: "mf".into(), count: cfg.cases },
        Rule::RatioAtLeast { group: "sparsity".into(), bound: 1.0 - 1e-12 },
        Rule::Count { group: "sparsity".into(), count: cfg.cases },
    ];
    let gref: Vec<&str> = groups[2..].iter().map(String::as_str).collect();
    rules.extend(spread_rules(&gref, cfg));
    let notes = vec![
        "mf cases compare the largest excess of |f - m| over 2 Σ ω 1_Q with the audit slack".into(),
        "factor cases report max |f - m| / (2 Σ ω 1_Q); sparsity cases compare min |E_Q|/|Q| with 1/2".into(),
    ];
    Ok(ExperimentReport::assemble(cfg.clone(), "factor", cases, vec![], rules, tb, notes))
}

/// Linear and multilinear Carleson embeddings.
pub fn e9(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let s = setup(cfg)?;
    require_exponents(&s)?;
    strict_exponents(&s.pv)?;
    cfg.require_weights(s.m + 1)?;
    let p_lin = cfg.param("p_linear", 2.0)?;
    if !(p_lin > 1.0) {
        return Err(LabError::Config("linear embedding exponent must exceed 1".into()));
    }
    let depth = cfg.param("sparse_depth", 6.0)? as u32;
    let p = s.pv.p();
    if !(p > 1.0) {
        return Err(LabError::HypothesisViolation(format!("multilinear embedding needs p > 1, got {p}")));
    }
    let d = s.domain;
    let full = d.domain_box();
    let base = corpus(cfg, &s, &full, s.m + 1, 0)?;
    let sig: Vec<&GridFunction> = base.weights[..s.m].iter().collect();
    let w = &base.weights[s.m];
    let nu = nu_weight(&sig, &s.pv)?;
    let cell = d.cell_measure();
    let mut cases = Vec::new();
    for c in 0..cfg.cases {
        let mut rng = case_rng(cfg.seed ^ 0xca71, c as u64);
        let fam = sparse_family(&d, depth, &mut rng)?;
        let cp = corpus(cfg, &s, &full, s.m + 1, c)?;
        let fs: Vec<GridFunction> = cp.functions.iter().map(|f| f.abs()).collect();
        let boxes: Vec<AxisBox> = fam.cubes.iter().map(|q| q.clipped(&d)).collect();
        let a_lin: Vec<(DyadicCube, f64)> = fam.cubes.iter().zip(&boxes).map(|(q, b)| (*q, w.integral_over(b) * rng.gen_range(0.0..1.0))).collect();
        let a_const = carleson_constant(&a_lin, w)?.constant;
        let fw = fs[0].zip_with(w, |x, y| x * y)?;
        let mut sum = 0.0;
        for ((_, a), b) in a_lin.iter().zip(&boxes) {
            let wq = w.integral_over(b);
            if wq > 0.0 {
                sum += a * (fw.integral_over(b) / wq).powf(p_lin);
            }
        }
        let lhs = sum.powf(1.0 / p_lin);
        let rhs = a_const.powf(1.0 / p_lin) * conjugate(p_lin) * lp_norm(&fs[0], p_lin, Some(w))?;
        cases.push(Case::new("packing", json!({ "case": c, "cubes": fam.len(), "packing": a_const }), lhs, rhs));

        let kids = fam.maximal_descendants();
        let a_multi: Vec<(DyadicCube, f64)> =
            (0..fam.len()).map(|i| (fam.cubes[i], fam.major_set_cells(i, &kids).iter().map(|&cl| nu.value(cl) * cell).sum::<f64>())).collect();
        let a_m = carleson_constant(&a_multi, &nu)?.constant;
        let fsig: Vec<GridFunction> = fs.iter().zip(&sig).map(|(f, sg)| f.zip_with(sg, |x, y| x * y)).collect::<Result<_>>()?;
        let mut sum = 0.0;
        for ((_, a), b) in a_multi.iter().zip(&boxes) {
            let mut prod = 1.0;
            for (fsg, sg) in fsig.iter().zip(&sig) {
                let sq = sg.integral_over(b);
                prod *= if sq > 0.0 { fsg.integral_over(b) / sq } else { 0.0 };
            }
            sum += a * prod.powf(p);
        }
        let lhs = sum.powf(1.0 / p);
        let mut base_rhs = 1.0;
        for (i, f) in fs.iter().enumerate() {
            base_rhs *= s.pv.conj(i) * lp_norm(f, s.pv.get(i), Some(sig[i]))?;
        }
        cases.push(Case::new("embedding", json!({ "case": c, "cubes": fam.len(), "packing": a_m }), lhs, a_m * base_rhs));
        cases.push(Case::new("embedding_root", json!({ "case": c, "packing": a_m }), lhs, a_m.powf(1.0 / p) * base_rhs));
    }
    let mut rules = Vec::new();
    for g in ["packing", "embedding", "embedding_root"] {
        rules.push(Rule::RatioAtMost { group: g.into(), bound: 1.0 });
        rules.push(Rule::Count { group: g.into(), count: cfg.cases });
    }
    let notes = vec![
        "linear sequences: a_Q = U(0,1) w(Q) on random 1/2-sparse families".into(),
        "multilinear sequences: a_Q = ν(E_Q) with ν = ∏ σ_i^(p/p_i); embedding uses the packing constant to the first power, embedding_root to the power 1/p"
            .into(),
    ];
    Ok(ExperimentReport::assemble(cfg.clone(), "packing", cases, vec![], rules, BTreeMap::new(), notes))
}

/// Overlap decay of the sparse families produced by the decomposition.
pub fn e10(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let s = setup(cfg)?;
    let d = s.domain;
    let q0 = DyadicCube::new(d.dim(), [0, 0], 0, [0, 0]);
    let full = d.domain_box();
    let min_r2 = cfg.tolerance("min_r2", cfg.param("min_r2", 0.8)?);
    let mut pooled: Vec<f64> = Vec::new();
    let mut cases = Vec::new();
    for c in 0..cfg.cases {
        let mut rng = case_rng(cfg.seed, c as u64);
        let f = crate::lab::corpus::TrigPolynomial::random(full, &mut rng).sample(&d)?;
        let dec = lerner_hytonen(&f, &q0)?;
        let tail = crate::dyadic::sparse::overlap_tail(&dec.family, &q0);
        for &(k, frac) in &tail {
            if pooled.len() <= k as usize {
                pooled.resize(k as usize + 1, 0.0);
            }
            pooled[k as usize] += frac / cfg.cases as f64;
            cases.push(Case::new("tail", json!({ "case": c, "k": k }), frac, 1.0));
        }
    }
    let pts: Vec<(f64, f64)> = pooled.iter().enumerate().filter(|(_, f)| **f > 0.0).map(|(k, &f)| transform(Model::ExpDecay, k as f64, f)).collect();
    let fit = NamedFit::new("overlap", pts.iter().map(|p| p.0).collect(), pts.iter().map(|p| p.1).collect())?;
    let note = format!("pooled log-fraction slope {:.4} per unit overlap (c ≈ {:.4e})", fit.fit.slope, fit.fit.intercept.exp());
    let rules = vec![Rule::Fit { group: "overlap".into(), max_slope: 0.0, min_r2, min_points: 3 }];
    Ok(ExperimentReport::assemble(cfg.clone(), "tail", cases, vec![fit], rules, BTreeMap::new(), vec![note]))
}
