//! Weight functionals over enumerated dyadic cubes, bump and entropy-bump
//! constants, `T_u`, the Rubio de Francia iteration and weight generators.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dyadic::{cube_sup, product_maximal, GridSet, LevelLattice, RestrictedMaximal};
use crate::error::{LabError, Result};
use crate::gridfn::{lp_norm, AxisBox, DomainSpec, GridFunction};
use crate::numerics::adaptive_simpson;
use crate::orlicz::{bp_constant, luxemburg_pairs, YoungFunction};

/// Exponents `p_1, …, p_m ≥ 1` with `1/p = Σ 1/p_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ExponentVector {
    ps: Vec<f64>,
}

impl TryFrom<Vec<f64>> for ExponentVector {
    type Error = LabError;
    fn try_from(ps: Vec<f64>) -> Result<Self> {
        ExponentVector::new(ps)
    }
}

impl From<ExponentVector> for Vec<f64> {
    fn from(e: ExponentVector) -> Vec<f64> {
        e.ps
    }
}

impl ExponentVector {
    pub fn new(ps: Vec<f64>) -> Result<Self> {
        if ps.is_empty() || ps.iter().any(|&p| !(p >= 1.0 && p.is_finite())) {
            return Err(LabError::InvalidArgument(format!("exponents {ps:?} must be finite and ≥ 1")));
        }
        Ok(ExponentVector { ps })
    }

    pub fn m(&self) -> usize {
        self.ps.len()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.ps[i]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.ps
    }

    /// `p` with `1/p = Σ 1/p_i`.
    pub fn p(&self) -> f64 {
        1.0 / self.ps.iter().map(|p| 1.0 / p).sum::<f64>()
    }

    /// `p_i'`, infinite when `p_i = 1`.
    pub fn conj(&self, i: usize) -> f64 {
        conjugate(self.ps[i])
    }
}

/// Hölder conjugate `p/(p-1)`.
pub fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

/// `ε(t) = (1 + ln t)^{1+η}` on `[1, ∞)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyGauge {
    pub eta: f64,
}

/// Numerical evidence that `∫_1^∞ dt/(ε(t) t)` converges.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GaugeCertificate {
    pub integral: f64,
    pub tail: f64,
    pub monotone: bool,
    pub convergent: bool,
}

impl EntropyGauge {
    pub fn new(eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(LabError::InvalidArgument(format!("gauge exponent {eta} must be positive")));
        }
        Ok(EntropyGauge { eta })
    }

    pub fn eval(&self, t: f64) -> f64 {
        (1.0 + t.max(1.0).ln()).powf(1.0 + self.eta)
    }

    /// Integrates in `u = ln t` to `t = e^{200}` and adds the closed-form tail.
    pub fn certificate(&self) -> GaugeCertificate {
        let upper = 200.0;
        let g = |u: f64| 1.0 / self.eval(u.exp());
        let mut body = 0.0;
        let pieces = 200;
        for i in 0..pieces {
            let a = upper * i as f64 / pieces as f64;
            let b = upper * (i + 1) as f64 / pieces as f64;
            body += adaptive_simpson(&g, a, b, 1e-14, 30);
        }
        let tail = (1.0 + upper).powf(-self.eta) / self.eta;
        let grid: Vec<f64> = (0..200).map(|k| 10f64.powf(k as f64 / 10.0)).collect();
        let monotone = grid.windows(2).all(|w| self.eval(w[1]) > self.eval(w[0]));
        GaugeCertificate { integral: body + tail, tail, monotone, convergent: monotone && tail.is_finite() && body.is_finite() }
    }
}

/// A supremum functional with the number of cubes it ranged over.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Functional {
    pub value: f64,
    pub cubes: usize,
}

fn require_weight(w: &GridFunction) -> Result<()> {
    if !w.is_weight() {
        return Err(LabError::NotAWeight);
    }
    Ok(())
}

fn same_domain(ws: &[&GridFunction]) -> Result<DomainSpec> {
    let d = *ws[0].domain();
    if ws.iter().any(|w| *w.domain() != d) {
        return Err(LabError::DomainMismatch);
    }
    Ok(d)
}

/// `min` of the samples over cells meeting cube `i`.
fn cube_min(lat: &LevelLattice, s: &[f64], i: usize) -> f64 {
    let mut m = f64::INFINITY;
    lat.for_each_cell(i, |c, _| m = m.min(s[c]));
    m
}

fn pow_avg(lat: &LevelLattice, s: &[f64], i: usize, e: f64) -> f64 {
    let mut acc = 0.0;
    lat.for_each_cell(i, |c, m| acc += s[c].powf(e) * m);
    acc / lat.measure(i)
}

/// `[w]_{A_p}` over enumerated cubes; `p = 1` uses `⟨w⟩_Q / ess inf_Q w` and
/// `p = ∞` is `sup_Q w(Q)^{-1} ∫_Q M(w 1_Q)`.
pub fn ap_constant(w: &GridFunction, p: f64, grids: &GridSet) -> Result<Functional> {
    require_weight(w)?;
    if !(p >= 1.0) {
        return Err(LabError::InvalidArgument(format!("A_p needs p ≥ 1, got {p}")));
    }
    let d = *w.domain();
    let s = w.samples();
    if p.is_infinite() {
        return a_infinity(w, grids);
    }
    let (value, cubes) = if p == 1.0 {
        cube_sup(&d, grids, |lat, i| {
            let avg = lat.average(s, i);
            if avg == 0.0 {
                return 0.0;
            }
            avg / cube_min(lat, s, i)
        })
    } else {
        let e = 1.0 - conjugate(p);
        cube_sup(&d, grids, |lat, i| lat.average(s, i) * pow_avg(lat, s, i, e).powf(p - 1.0))
    };
    Ok(Functional { value, cubes })
}

fn a_infinity(w: &GridFunction, grids: &GridSet) -> Result<Functional> {
    let d = *w.domain();
    let rm = RestrictedMaximal::new(&[w], &[1.0], grids);
    let mut boxes = Vec::new();
    for lat in grids.lattices(&d) {
        for i in 0..lat.len() {
            boxes.push(lat.cube(i).clipped(&d));
        }
    }
    let vals = crate::par::map_slice(&boxes, |b| {
        let wq = w.integral_over(b);
        if wq <= 0.0 {
            0.0
        } else {
            rm.integral_over(b) / wq
        }
    });
    Ok(Functional { value: vals.iter().copied().fold(f64::NEG_INFINITY, f64::max), cubes: boxes.len() })
}

/// `ν_w = ∏ w_i^{p/p_i}`.
pub fn nu_weight(ws: &[&GridFunction], pv: &ExponentVector) -> Result<GridFunction> {
    if ws.len() != pv.m() {
        return Err(LabError::InvalidArgument("one weight per exponent".into()));
    }
    let d = same_domain(ws)?;
    let p = pv.p();
    let samples = (0..d.cell_count()).map(|c| ws.iter().enumerate().map(|(i, w)| w.value(c).powf(p / pv.get(i))).product()).collect();
    GridFunction::weight(d, samples)
}

/// `[w]_{A_p⃗} = sup_Q ⟨ν_w⟩_Q^{1/p} ∏ ⟨w_i^{1-p_i'}⟩_Q^{1/p_i'}`, with
/// `(inf_Q w_i)^{-1}` for `p_i = 1`.
pub fn multi_ap_constant(ws: &[&GridFunction], pv: &ExponentVector, grids: &GridSet) -> Result<Functional> {
    for w in ws {
        require_weight(w)?;
    }
    let d = same_domain(ws)?;
    let nu = nu_weight(ws, pv)?;
    let p = pv.p();
    let (value, cubes) = cube_sup(&d, grids, |lat, i| {
        let mut v = lat.average(nu.samples(), i).powf(1.0 / p);
        for (k, w) in ws.iter().enumerate() {
            let s = w.samples();
            if pv.get(k) == 1.0 {
                v /= cube_min(lat, s, i);
            } else {
                let q = pv.conj(k);
                v *= pow_avg(lat, s, i, 1.0 - q).powf(1.0 / q);
            }
        }
        v
    });
    Ok(Functional { value, cubes })
}

fn lux(lat: &LevelLattice, s: &[f64], i: usize, phi: &YoungFunction) -> f64 {
    luxemburg_pairs(&lat.values(s, i), lat.measure(i), phi)
}

fn powered(w: &GridFunction, e: f64) -> Vec<f64> {
    w.samples().iter().map(|v| v.powf(e)).collect()
}

/// `‖(u, v⃗)‖_{A,B⃗,p⃗}` after checking `B̄_j ∈ B_{p_j}` and, for `p > 2`,
/// `Ā ∈ B_{(p/2)'}`.
pub fn bump_norm(u: &GridFunction, vs: &[&GridFunction], a: &YoungFunction, bs: &[YoungFunction], pv: &ExponentVector, grids: &GridSet) -> Result<Functional> {
    if vs.len() != pv.m() || bs.len() != pv.m() {
        return Err(LabError::InvalidArgument("one weight and one Young function per exponent".into()));
    }
    let mut all = vec![u];
    all.extend_from_slice(vs);
    for w in &all {
        require_weight(w)?;
    }
    let d = same_domain(&all)?;
    bump_hypotheses(a, bs, pv)?;
    let p = pv.p();
    let v_neg: Vec<Vec<f64>> = vs.iter().enumerate().map(|(j, v)| powered(v, -1.0 / pv.get(j))).collect();
    let high = p > 2.0;
    let u_pow = if high { powered(u, 2.0 / p) } else { u.samples().to_vec() };
    let (value, cubes) = cube_sup(&d, grids, |lat, i| {
        let head = if high { lux(lat, &u_pow, i, a).sqrt() } else { lat.average(&u_pow, i).powf(1.0 / p) };
        head * v_neg.iter().zip(bs).map(|(s, b)| lux(lat, s, i, b)).product::<f64>()
    });
    Ok(Functional { value, cubes })
}

/// `B_p` constants entering the bump hypotheses.
#[derive(Clone, Debug, Serialize)]
pub struct BumpHypotheses {
    pub b_bar: Vec<f64>,
    pub a_bar: Option<f64>,
}

/// Validates `B̄_j ∈ B_{p_j}` (and `Ā ∈ B_{(p/2)'}` when `p > 2`), returning the constants.
pub fn bump_hypotheses(a: &YoungFunction, bs: &[YoungFunction], pv: &ExponentVector) -> Result<BumpHypotheses> {
    let mut b_bar = Vec::new();
    for (j, b) in bs.iter().enumerate() {
        let bbar = b.complementary()?;
        match bp_constant(&bbar, pv.get(j))?.value() {
            Some(v) => b_bar.push(v),
            None => return Err(LabError::HypothesisViolation(format!("complement of {} is not in B_{}", b.id(), pv.get(j)))),
        }
    }
    let p = pv.p();
    let a_bar = if p > 2.0 {
        let q = conjugate(p / 2.0);
        match bp_constant(&a.complementary()?, q)?.value() {
            Some(v) => Some(v),
            None => return Err(LabError::HypothesisViolation(format!("complement of {} is not in B_{q}", a.id()))),
        }
    } else {
        None
    };
    Ok(BumpHypotheses { b_bar, a_bar })
}

/// The four two-weight suprema of a pair `(u, v)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TwoWeight {
    pub double: f64,
    pub sep_a: f64,
    pub sep_b: f64,
    pub ap: f64,
    pub cubes: usize,
}

/// `[u,v]_{A,B,p}`, `[u,v]_{A,p'}`, `[u,v]_{p,B}` and `[u,v]_{A_p}`.
pub fn two_weight_functionals(u: &GridFunction, v: &GridFunction, a: &YoungFunction, b: &YoungFunction, p: f64, grids: &GridSet) -> Result<TwoWeight> {
    require_weight(u)?;
    require_weight(v)?;
    let d = same_domain(&[u, v])?;
    if !(p > 1.0) {
        return Err(LabError::InvalidArgument(format!("two-weight functionals need p > 1, got {p}")));
    }
    let up = powered(u, 1.0 / p);
    let vp = powered(v, -1.0 / p);
    let pp = conjugate(p);
    let p_gauge = YoungFunction::power(p);
    let pp_gauge = YoungFunction::power(pp);
    let mut out = TwoWeight { double: 0.0, sep_a: 0.0, sep_b: 0.0, ap: 0.0, cubes: 0 };
    for lat in grids.lattices(&d) {
        let rows = crate::par::map_range(lat.len(), |i| {
            let ua = lux(&lat, &up, i, a);
            let up_p = lux(&lat, &up, i, &p_gauge);
            let vb = lux(&lat, &vp, i, b);
            let vp_pp = lux(&lat, &vp, i, &pp_gauge);
            (ua * vb, ua * vp_pp, up_p * vb, up_p * vp_pp)
        });
        for r in rows {
            out.double = out.double.max(r.0);
            out.sep_a = out.sep_a.max(r.1);
            out.sep_b = out.sep_b.max(r.2);
            out.ap = out.ap.max(r.3);
        }
        out.cubes += lat.len();
    }
    Ok(out)
}

/// Which entropy-bump functional to evaluate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum EntropyVariant {
    /// `⌊σ⃗, ν⌋_{p⃗, r, ε}`.
    Convex { r: f64 },
    /// `⌊σ⃗⌋_{q⃗, p⃗, ρ, θ, j}` over `m + 1` weights `(σ_1, …, σ_m, ν)`; `j` is zero-based.
    General { q: Vec<f64>, p: Vec<f64>, theta: f64, j: usize },
}

impl EntropyVariant {
    /// The general functional with `q = r/p⃗'` (last entry `r/p`), exponents
    /// `(p_1, …, p_m, p')`, `θ = r/p` and `j` the slot of `ν`.
    pub fn concave(pv: &ExponentVector, r: f64) -> Self {
        let p = pv.p();
        let mut q: Vec<f64> = (0..pv.m()).map(|i| r / pv.conj(i)).collect();
        q.push(r / p);
        let mut ps = pv.as_slice().to_vec();
        ps.push(conjugate(p));
        EntropyVariant::General { q, p: ps, theta: r / p, j: pv.m() }
    }
}

/// Entropy-bump constant, with the maximal factors restricted to each cube.
pub fn entropy_bump(
    sigmas: &[&GridFunction],
    nu: &GridFunction,
    pv: &ExponentVector,
    gauge: &EntropyGauge,
    variant: &EntropyVariant,
    grids: &GridSet,
) -> Result<Functional> {
    let mut all: Vec<&GridFunction> = sigmas.to_vec();
    all.push(nu);
    for w in &all {
        require_weight(w)?;
    }
    let d = same_domain(&all)?;
    if sigmas.len() != pv.m() {
        return Err(LabError::InvalidArgument("one σ per exponent".into()));
    }
    if !gauge.certificate().convergent {
        return Err(LabError::HypothesisViolation("entropy gauge is not integrable".into()));
    }
    let lattices = grids.lattices(&d);
    let mut cubes = Vec::new();
    for lat in &lattices {
        for i in 0..lat.len() {
            cubes.push((lat.cube(i).clipped(&d), lat.measure(i)));
        }
    }
    let avg = |w: &GridFunction, b: &AxisBox, meas: f64| w.integral_over(b) / meas;
    let values: Vec<f64> = match variant {
        EntropyVariant::Convex { r } => {
            let p = pv.p();
            let exps: Vec<f64> = (0..pv.m()).map(|i| p / pv.get(i)).collect();
            let rm_sigma = RestrictedMaximal::new(sigmas, &exps, grids);
            let rm_nu = RestrictedMaximal::new(&[nu], &[1.0], grids);
            let nu_sigma = nu_weight(sigmas, pv)?;
            crate::par::map_slice(&cubes, |(b, meas)| {
                let den = nu_sigma.integral_over(b);
                let nu_q = nu.integral_over(b);
                if den <= 0.0 || nu_q <= 0.0 {
                    return 0.0;
                }
                let rho_s = rm_sigma.integral_over(b) / den;
                let rho_n = rm_nu.integral_over(b) / nu_q;
                let head: f64 = sigmas.iter().enumerate().map(|(i, s)| avg(s, b, *meas).powf(p / pv.conj(i))).product();
                head * avg(nu, b, *meas) * rho_s * gauge.eval(rho_s) * (rho_n * gauge.eval(rho_n)).powf(p / r - 1.0)
            })
        }
        EntropyVariant::General { q, p, theta, j } => {
            if q.len() != all.len() || p.len() != all.len() || *j >= all.len() {
                return Err(LabError::InvalidArgument("general entropy bump needs m+1 exponents and a valid slot".into()));
            }
            let others: Vec<&GridFunction> = all.iter().enumerate().filter(|(i, _)| i != j).map(|(_, w)| *w).collect();
            let exps: Vec<f64> = (0..all.len()).filter(|i| i != j).map(|i| 1.0 / (theta * p[i])).collect();
            let rm = RestrictedMaximal::new(&others, &exps, grids);
            let prod: Vec<f64> = (0..d.cell_count()).map(|c| others.iter().zip(&exps).map(|(w, e)| w.value(c).powf(*e)).product()).collect();
            let prod = GridFunction::weight(d, prod)?;
            crate::par::map_slice(&cubes, |(b, meas)| {
                let den = prod.integral_over(b);
                if den <= 0.0 {
                    return 0.0;
                }
                let x = (rm.integral_over(b) / den).powf(*theta);
                let head: f64 = all.iter().zip(q).map(|(w, qi)| avg(w, b, *meas).powf(*qi)).product();
                head * x * gauge.eval(x)
            })
        }
    };
    Ok(Functional { value: values.iter().copied().fold(f64::NEG_INFINITY, f64::max), cubes: cubes.len() })
}

/// Hardy–Littlewood maximal function over enumerated cubes.
pub fn hl_maximal(f: &GridFunction, grids: &GridSet) -> GridFunction {
    let out = product_maximal(&[f], &[1.0], grids);
    GridFunction::weight(*f.domain(), out).expect("maximal values are finite")
}

/// `T_u f = M(f u)/u` where `u ≠ 0`, and `0` elsewhere.
pub fn t_u(f: &GridFunction, u: &GridFunction, grids: &GridSet) -> Result<GridFunction> {
    f.check_same_domain(u)?;
    let fu = f.zip_with(u, |a, b| a * b)?;
    let m = hl_maximal(&fu, grids);
    m.zip_with(u, |mv, uv| if uv != 0.0 { mv / uv.abs() } else { 0.0 })?.as_weight()
}

/// Operator driving the Rubio de Francia series.
#[derive(Clone, Debug)]
pub enum RdfMode {
    /// `M`, with growth measured in `L^{r'}`.
    Maximal { r_prime: f64 },
    /// `T_u`, with a fixed `K0` or one measured in `L^{r'}(u)`.
    Tu { u: GridFunction, k0: Option<f64>, r_prime: f64 },
}

/// Truncated Rubio de Francia output.
#[derive(Clone, Debug)]
pub struct RdfResult {
    pub rh: GridFunction,
    /// `‖M‖` estimate (or `K0`) used in the denominators `2^k N^k`.
    pub normalizer: f64,
    /// Measured `‖T^{k+1}h‖ / ‖T^k h‖`.
    pub growth: Vec<f64>,
    /// `2^{-K+1} ‖h‖`.
    pub tail_bound: f64,
    /// `sup_x T^K h(x) / ((2N)^{K-1} Rh(x))`, the slack in `T(Rh) ≤ 2N Rh`.
    pub operator_tail: f64,
    pub terms: usize,
}

/// `R h = Σ_{k<K} T^k h / (2N)^k` for `T = M` or `T_u`.
pub fn rubio_de_francia(h: &GridFunction, mode: &RdfMode, terms: usize, grids: &GridSet) -> Result<RdfResult> {
    if h.samples().iter().any(|&v| v < 0.0) {
        return Err(LabError::InvalidArgument("Rubio de Francia input must be nonnegative".into()));
    }
    if terms == 0 {
        return Err(LabError::InvalidArgument("need at least one term".into()));
    }
    let d = *h.domain();
    let (apply, r_prime, norm_weight): (Box<dyn Fn(&GridFunction) -> Result<GridFunction>>, f64, Option<GridFunction>) = match mode {
        RdfMode::Maximal { r_prime } => (Box::new(|g: &GridFunction| Ok(hl_maximal(g, grids))), *r_prime, None),
        RdfMode::Tu { u, r_prime, .. } => {
            let u = u.clone();
            let uw = u.as_weight()?;
            (Box::new(move |g: &GridFunction| t_u(g, &u, grids)), *r_prime, Some(uw))
        }
    };
    let norm = |g: &GridFunction| lp_norm(g, r_prime, norm_weight.as_ref());
    let mut iterates = vec![h.abs()];
    for _ in 0..terms {
        let next = apply(iterates.last().unwrap())?;
        iterates.push(next);
    }
    let norms: Vec<f64> = iterates.iter().map(norm).collect::<Result<_>>()?;
    let growth: Vec<f64> = norms.windows(2).map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 }).collect();
    let measured = growth.iter().copied().fold(0.0, f64::max);
    let normalizer = match mode {
        RdfMode::Tu { k0: Some(k0), .. } => *k0,
        _ => 2.0 * measured,
    };
    let h_norm = norms[0];
    if h_norm == 0.0 {
        return Ok(RdfResult { rh: GridFunction::zeros(d).as_weight()?, normalizer, growth, tail_bound: 0.0, operator_tail: 0.0, terms });
    }
    if !(normalizer > measured) {
        return Err(LabError::NonSummable(format!("normalizer {normalizer} does not exceed measured growth {measured}")));
    }
    let mut rh = vec![0.0; d.cell_count()];
    let mut scale = 1.0;
    for g in &iterates[..terms] {
        for (r, v) in rh.iter_mut().zip(g.samples()) {
            *r += v * scale;
        }
        scale /= 2.0 * normalizer;
    }
    let last = &iterates[terms];
    let denom = (2.0 * normalizer).powi(terms as i32 - 1);
    let operator_tail = (0..d.cell_count()).filter(|&c| rh[c] > 0.0).map(|c| last.value(c) / denom / rh[c]).fold(0.0, f64::max);
    Ok(RdfResult { rh: GridFunction::weight(d, rh)?, normalizer, growth, tail_bound: 2f64.powi(1 - terms as i32) * h_norm, operator_tail, terms })
}

/// Weight families for corpora.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightKind {
    /// `|x - center|^a`; with `p` given, `a` must lie inside the `A_p` range.
    Power { a: f64, center: Vec<f64>, p: Option<f64> },
    /// Rubio de Francia majorant of a seeded bump.
    A1FromRdf { seed: u64 },
    /// `a` and `b` on alternating half-domain blocks.
    Checker { a: f64, b: f64 },
}

/// Manifest row `{kind, params, seed}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub kind: String,
    #[serde(default)]
    pub params: serde_json::Value,
    #[serde(default)]
    pub seed: u64,
}

impl ManifestEntry {
    pub fn to_kind(&self) -> Result<WeightKind> {
        let num = |k: &str| -> Result<f64> {
            self.params.get(k).and_then(|v| v.as_f64()).ok_or_else(|| LabError::Config(format!("{}: missing numeric `{k}`", self.kind)))
        };
        match self.kind.as_str() {
            "power" => {
                let center = match self.params.get("center") {
                    Some(v) => serde_json::from_value(v.clone())?,
                    None => Vec::new(),
                };
                let p = self.params.get("p").and_then(|v| v.as_f64());
                Ok(WeightKind::Power { a: num("a")?, center, p })
            }
            "a1_from_rdf" => Ok(WeightKind::A1FromRdf { seed: self.seed }),
            "checker" => Ok(WeightKind::Checker { a: num("a")?, b: num("b")? }),
            other => Err(LabError::UnknownRegistryId(other.to_string())),
        }
    }
}

/// Power-weight exponent margin inside the admissible range.
pub const POWER_MARGIN: f64 = 0.1;

/// Builds a weight on `domain`.
pub fn generate_weight(kind: &WeightKind, domain: &DomainSpec) -> Result<GridFunction> {
    let n = domain.dim() as f64;
    match kind {
        WeightKind::Power { a, center, p } => {
            if !(*a > -n + POWER_MARGIN) {
                return Err(LabError::HypothesisViolation(format!("power exponent {a} not above {}", -n + POWER_MARGIN)));
            }
            if let Some(p) = p {
                if !(*a < n * (p - 1.0) - POWER_MARGIN) {
                    return Err(LabError::HypothesisViolation(format!("power exponent {a} too large for A_{p}")));
                }
            }
            let mut c = [0.0; 2];
            for (k, v) in center.iter().take(domain.dim()).enumerate() {
                c[k] = *v;
            }
            let w = GridFunction::from_fn(*domain, |x| {
                let r2: f64 = (0..domain.dim()).map(|k| (x[k] - c[k]).powi(2)).sum();
                r2.sqrt().powf(*a)
            })?;
            w.as_weight()
        }
        WeightKind::Checker { a, b } => {
            if !(*a > 0.0 && *b > 0.0) {
                return Err(LabError::InvalidArgument("checker values must be positive".into()));
            }
            let l = domain.half_extent();
            let w = GridFunction::from_fn(*domain, |x| {
                let s: i64 = (0..domain.dim()).map(|k| (2.0 * x[k] / l).floor() as i64).sum();
                if s.rem_euclid(2) == 0 {
                    *a
                } else {
                    *b
                }
            })?;
            w.as_weight()
        }
        WeightKind::A1FromRdf { seed } => Ok(a1_from_rdf(*seed, domain)?.rh),
    }
}

/// Rubio de Francia majorant of a seeded parabolic bump, the construction
/// behind [`WeightKind::A1FromRdf`].
pub fn a1_from_rdf(seed: u64, domain: &DomainSpec) -> Result<RdfResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = domain.half_extent();
    let mut c = [0.0; 2];
    for v in c.iter_mut().take(domain.dim()) {
        *v = rng.gen_range(-0.5 * l..0.5 * l);
    }
    let radius = rng.gen_range(0.125 * l..0.5 * l);
    let h = GridFunction::from_fn(*domain, |x| {
        let r2: f64 = (0..domain.dim()).map(|k| (x[k] - c[k]).powi(2)).sum();
        (1.0 - r2 / (radius * radius)).max(0.0)
    })?;
    let grids = GridSet::standard(domain);
    rubio_de_francia(&h, &RdfMode::Maximal { r_prime: 2.0 }, 20, &grids)
}

/// One CSV row of a functional evaluation.
#[derive(Clone, Debug, Serialize)]
pub struct FunctionalRow {
    pub functional: String,
    pub params: String,
    pub value: f64,
    pub cubes_enumerated: usize,
}

/// Appends rows to a CSV file, writing the header when the file is new.
pub fn append_functional_csv(path: &Path, rows: &[FunctionalRow]) -> Result<()> {
    let fresh = !path.exists() || std::fs::metadata(path)?.len() == 0;
    let file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
