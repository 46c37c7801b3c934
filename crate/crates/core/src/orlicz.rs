//! Young functions, complementary functions, Luxemburg norms, `B_p`
//! constants and the Orlicz maximal operator.

use std::f64::consts::E;
use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::dyadic::{touching_sup, GridSet};
use crate::error::{LabError, Result};
use crate::gridfn::{AxisBox, GridFunction};
use crate::numerics::{adaptive_simpson, golden_max, solve_increasing};

/// Shape of a Young function.
#[derive(Clone, Debug, PartialEq)]
pub enum YoungKind {
    /// `t^p`.
    Power(f64),
    /// `t^p ln(e+t)^{p-1+δ}`.
    LogBump { p: f64, delta: f64 },
    /// `t^p ln(e+t)^{p-1} (ln ln(e^e+t))^{p-1+δ}`.
    LogLogBump { p: f64, delta: f64 },
    /// `sup_s (st - Φ(s))`.
    ComplementaryOf(Box<YoungFunction>),
    /// Increasing samples `(t, Φ(t))`, interpolated linearly in log-log.
    Table(Vec<(f64, f64)>),
}

/// A Young function with lazily tabulated complementary values.
#[derive(Clone, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct YoungFunction {
    kind: YoungKind,
    cache: Arc<OnceLock<ComplementTable>>,
}

impl PartialEq for YoungFunction {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl fmt::Debug for YoungFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "YoungFunction({})", self.id())
    }
}

impl TryFrom<String> for YoungFunction {
    type Error = LabError;
    fn try_from(s: String) -> Result<Self> {
        YoungFunction::from_id(&s)
    }
}

impl From<YoungFunction> for String {
    fn from(y: YoungFunction) -> String {
        y.id()
    }
}

/// Range and density of complementary-function tables.
const TABLE_LO: f64 = 1e-12;
const TABLE_HI: f64 = 1e12;
const TABLE_PER_DECADE: usize = 200;

#[derive(Debug)]
struct ComplementTable {
    ln_t: Vec<f64>,
    ln_v: Vec<f64>,
    slope: Vec<f64>,
}

impl YoungFunction {
    pub fn new(kind: YoungKind) -> Self {
        YoungFunction { kind, cache: Arc::new(OnceLock::new()) }
    }

    pub fn power(p: f64) -> Self {
        Self::new(YoungKind::Power(p))
    }

    pub fn log_bump(p: f64, delta: f64) -> Self {
        Self::new(YoungKind::LogBump { p, delta })
    }

    pub fn loglog_bump(p: f64, delta: f64) -> Self {
        Self::new(YoungKind::LogLogBump { p, delta })
    }

    pub fn table(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.len() < 2 || samples.windows(2).any(|w| !(w[0].0 < w[1].0 && w[0].1 < w[1].1)) || samples[0].0 <= 0.0 || samples[0].1 <= 0.0 {
            return Err(LabError::InvalidArgument("table samples must be positive and strictly increasing".into()));
        }
        Ok(Self::new(YoungKind::Table(samples)))
    }

    pub fn kind(&self) -> &YoungKind {
        &self.kind
    }

    /// Registry id: `power:p`, `logbump:p:delta`, `loglogbump:p:delta`, `dual:<id>`.
    pub fn from_id(id: &str) -> Result<Self> {
        let bad = || LabError::UnknownRegistryId(id.to_string());
        if let Some(rest) = id.strip_prefix("dual:") {
            return YoungFunction::from_id(rest)?.complementary();
        }
        let parts: Vec<&str> = id.split(':').collect();
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
        let y = match parts.as_slice() {
            ["power", p] => Self::power(num(p)?),
            ["logbump", p, d] => Self::log_bump(num(p)?, num(d)?),
            ["loglogbump", p, d] => Self::loglog_bump(num(p)?, num(d)?),
            _ => return Err(bad()),
        };
        match &y.kind {
            YoungKind::Power(p) if *p >= 1.0 => Ok(y),
            YoungKind::LogBump { p, delta } | YoungKind::LogLogBump { p, delta } if *p >= 1.0 && *delta > 0.0 => Ok(y),
            _ => Err(LabError::InvalidArgument(format!("parameters out of range in {id}"))),
        }
    }

    pub fn id(&self) -> String {
        match &self.kind {
            YoungKind::Power(p) => format!("power:{p}"),
            YoungKind::LogBump { p, delta } => format!("logbump:{p}:{delta}"),
            YoungKind::LogLogBump { p, delta } => format!("loglogbump:{p}:{delta}"),
            YoungKind::ComplementaryOf(inner) => format!("dual:{}", inner.id()),
            YoungKind::Table(s) => format!("table:{}", s.len()),
        }
    }

    /// `Φ(t)` for `t ≥ 0`.
    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match &self.kind {
            YoungKind::Power(p) => t.powf(*p),
            YoungKind::LogBump { p, delta } => t.powf(*p) * (E + t).ln().powf(p - 1.0 + delta),
            YoungKind::LogLogBump { p, delta } => t.powf(*p) * (E + t).ln().powf(p - 1.0) * (E.powf(E) + t).ln().ln().powf(p - 1.0 + delta),
            YoungKind::ComplementaryOf(inner) => match inner.kind {
                YoungKind::Power(p) => power_dual_coefficient(p) * t.powf(p / (p - 1.0)),
                _ => self.dual_eval(inner, t),
            },
            YoungKind::Table(s) => table_eval(s, t),
        }
    }

    /// `Φ^{-1}(s)`.
    pub fn inverse(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        match &self.kind {
            YoungKind::Power(p) => s.powf(1.0 / p),
            YoungKind::ComplementaryOf(inner) if matches!(inner.kind, YoungKind::Power(_)) => {
                let YoungKind::Power(p) = inner.kind else { unreachable!() };
                (s / power_dual_coefficient(p)).powf((p - 1.0) / p)
            }
            _ => solve_increasing(|x| self.eval(x), s, 1.0),
        }
    }

    /// The complementary function `Φ̄`; complementing twice returns the original.
    pub fn complementary(&self) -> Result<YoungFunction> {
        if let YoungKind::ComplementaryOf(inner) = &self.kind {
            return Ok((**inner).clone());
        }
        let ratio = |t: f64| self.eval(t) / t;
        let superlinear = match &self.kind {
            YoungKind::Power(p) => *p > 1.0,
            YoungKind::Table(_) => false,
            _ => ratio(1e8) > 1e3 * ratio(1.0) || ratio(1e12) > ratio(1e8) * 1.5,
        };
        if !superlinear {
            return Err(LabError::DivergentSupremum(format!("sup_s (st - Φ(s)) is infinite for {}", self.id())));
        }
        Ok(Self::new(YoungKind::ComplementaryOf(Box::new(self.clone()))))
    }

    /// Direct evaluation of `sup_s (st - Φ(s))`, with the maximiser.
    pub fn legendre(phi: &YoungFunction, t: f64) -> (f64, f64) {
        let g = |u: f64| {
            let s = u.exp();
            s * t - phi.eval(s)
        };
        let mut best_k = -120;
        let mut best = f64::NEG_INFINITY;
        for k in -120..=160 {
            let v = g(k as f64 * 0.25 * std::f64::consts::LN_10);
            if v > best {
                best = v;
                best_k = k;
            }
        }
        let step = 0.25 * std::f64::consts::LN_10;
        let centre = best_k as f64 * step;
        let (u, v) = golden_max(g, centre - step, centre + step, 200);
        (v.max(0.0), u.exp())
    }

    fn dual_eval(&self, inner: &YoungFunction, t: f64) -> f64 {
        if !(TABLE_LO..=TABLE_HI).contains(&t) {
            return Self::legendre(inner, t).0;
        }
        let table = self.cache.get_or_init(|| build_table(inner));
        hermite(table, t.ln()).exp()
    }

    /// Checks the Young-function contract on geometric grids.
    pub fn validate(&self) -> Result<()> {
        let ratio = |t: f64| self.eval(t) / t;
        if !(ratio(1e-6) < ratio(1.0) && ratio(1.0) < ratio(1e6)) {
            return Err(LabError::InvalidArgument(format!("{}: Φ(t)/t is not increasing across scales", self.id())));
        }
        let grid: Vec<f64> = (0..=96).map(|k| 10f64.powf(-6.0 + k as f64 / 8.0)).collect();
        for w in grid.windows(2) {
            let (a, b) = (w[0], w[1]);
            if self.eval(b) <= self.eval(a) {
                return Err(LabError::InvalidArgument(format!("{}: not strictly increasing near {a}", self.id())));
            }
            let mid = self.eval(0.5 * (a + b));
            if mid > 0.5 * (self.eval(a) + self.eval(b)) * (1.0 + 1e-10) {
                return Err(LabError::InvalidArgument(format!("{}: midpoint convexity fails near {a}", self.id())));
            }
        }
        Ok(())
    }
}

/// `(p-1) p^{-p'}` so that the dual of `t^p` is this times `t^{p'}`.
fn power_dual_coefficient(p: f64) -> f64 {
    let q = p / (p - 1.0);
    (p - 1.0) * p.powf(-q)
}

fn table_eval(s: &[(f64, f64)], t: f64) -> f64 {
    let x = t.ln();
    let seg = |i: usize| {
        let (x0, y0) = (s[i].0.ln(), s[i].1.ln());
        let (x1, y1) = (s[i + 1].0.ln(), s[i + 1].1.ln());
        (y0 + (x - x0) * (y1 - y0) / (x1 - x0)).exp()
    };
    let k = s.partition_point(|p| p.0 <= t);
    if k == 0 {
        seg(0)
    } else if k >= s.len() {
        seg(s.len() - 2)
    } else {
        seg(k - 1)
    }
}

fn build_table(inner: &YoungFunction) -> ComplementTable {
    let decades = (TABLE_HI / TABLE_LO).log10().round() as usize;
    let n = decades * TABLE_PER_DECADE + 1;
    let ln_lo = TABLE_LO.ln();
    let dx = (TABLE_HI.ln() - ln_lo) / (n - 1) as f64;
    let rows: Vec<(f64, f64, f64)> = crate::par::map_range(n, |i| {
        let x = ln_lo + i as f64 * dx;
        let t = x.exp();
        let (v, s) = YoungFunction::legendre(inner, t);
        (x, v.ln(), t * s / v)
    });
    ComplementTable { ln_t: rows.iter().map(|r| r.0).collect(), ln_v: rows.iter().map(|r| r.1).collect(), slope: rows.iter().map(|r| r.2).collect() }
}

fn hermite(tab: &ComplementTable, x: f64) -> f64 {
    let n = tab.ln_t.len();
    let i = tab.ln_t.partition_point(|&v| v <= x).clamp(1, n - 1) - 1;
    let (x0, x1) = (tab.ln_t[i], tab.ln_t[i + 1]);
    let hh = x1 - x0;
    let u = (x - x0) / hh;
    let h00 = (1.0 + 2.0 * u) * (1.0 - u) * (1.0 - u);
    let h10 = u * (1.0 - u) * (1.0 - u);
    let h01 = u * u * (3.0 - 2.0 * u);
    let h11 = u * u * (u - 1.0);
    h00 * tab.ln_v[i] + h10 * hh * tab.slope[i] + h01 * tab.ln_v[i + 1] + h11 * hh * tab.slope[i + 1]
}

/// Luxemburg norm of `(|value|, measure)` pairs normalised by `total`.
pub fn luxemburg_pairs(pairs: &[(f64, f64)], total: f64, phi: &YoungFunction) -> f64 {
    let vals: Vec<(f64, f64)> = pairs.iter().map(|&(v, m)| (v.abs(), m)).filter(|p| p.0 > 0.0 && p.1 > 0.0).collect();
    if vals.is_empty() || total <= 0.0 {
        return 0.0;
    }
    let unit = phi.inverse(1.0);
    let mean = vals.iter().map(|p| p.0 * p.1).sum::<f64>() / total;
    let max = vals.iter().fold(0.0f64, |m, p| m.max(p.0));
    let avg = |lambda: f64| vals.iter().map(|&(v, m)| phi.eval(v / lambda) * m).sum::<f64>() / total;
    let mut lo = mean / unit;
    let mut hi = max / unit;
    if avg(lo) <= 1.0 {
        return lo;
    }
    while avg(hi) > 1.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if avg(mid) <= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi / lo - 1.0 < 1e-14 {
            break;
        }
    }
    hi
}

/// `‖f‖_{Φ,B} = inf{λ > 0 : ⟨Φ(|f|/λ)⟩_B ≤ 1}`.
pub fn luxemburg_norm(f: &GridFunction, b: &AxisBox, phi: &YoungFunction) -> Result<f64> {
    let meas = b.measure();
    if meas <= 0.0 {
        return Err(LabError::ZeroMeasureBox);
    }
    Ok(luxemburg_pairs(&f.values_on(b), meas, phi))
}

/// Result of [`bp_constant`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "status", content = "value", rename_all = "snake_case")]
pub enum BpValue {
    Finite(f64),
    Divergent,
}

impl BpValue {
    pub fn is_finite(&self) -> bool {
        matches!(self, BpValue::Finite(_))
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            BpValue::Finite(v) => Some(*v),
            BpValue::Divergent => None,
        }
    }
}

/// `∫_1^∞ Φ(t) t^{-p} dt/t`, integrated in `u = ln t` up to `t = 10^12` with an
/// extrapolated tail; declared divergent when the integrand decays neither
/// exponentially in `u` nor faster than `u^{-1.01}`.
pub fn bp_constant(phi: &YoungFunction, p: f64) -> Result<BpValue> {
    if !(p > 1.0) {
        return Err(LabError::InvalidArgument(format!("B_p needs p > 1, got {p}")));
    }
    let h = |u: f64| phi.eval(u.exp()) * (-p * u).exp();
    let upper = 1e12f64.ln();
    let pieces = 64;
    let du = upper / pieces as f64;
    let mut body = 0.0;
    for i in 0..pieces {
        let a = i as f64 * du;
        let b = a + du;
        let scale = h(a).abs().max(h(b).abs()).max(f64::MIN_POSITIVE);
        body += adaptive_simpson(&h, a, b, 1e-13 * scale * du, 30);
    }
    if !body.is_finite() {
        return Ok(BpValue::Divergent);
    }
    let step = std::f64::consts::LN_10;
    let (h0, h1, h2) = (h(upper - 2.0 * step), h(upper - step), h(upper));
    if !(h2 > 0.0 && h1 > 0.0 && h0 > 0.0) {
        return Ok(if h2 == 0.0 { BpValue::Finite(body) } else { BpValue::Divergent });
    }
    let r_near = (h1 / h2).ln() / step;
    let r_far = (h0 / h1).ln() / step;
    if r_near > 1e-4 && r_far > 1e-4 && (r_near - r_far).abs() <= 0.02 * r_near.max(r_far) {
        return Ok(BpValue::Finite(body + h2 / r_near));
    }
    let beta = (h1 / h2).ln() / (upper / (upper - step)).ln();
    if beta > 1.01 {
        return Ok(BpValue::Finite(body + h2 * upper / (beta - 1.0)));
    }
    Ok(BpValue::Divergent)
}

/// `M_Φ f`: per cell, the sup of `‖f‖_{Φ,Q}` over enumerated cubes meeting it.
pub fn orlicz_maximal(f: &GridFunction, phi: &YoungFunction, grids: &GridSet) -> Result<GridFunction> {
    let s = f.samples();
    let (out, _) = touching_sup(f.domain(), grids, |lat, i| luxemburg_pairs(&lat.values(s, i), lat.measure(i), phi));
    GridFunction::weight(*f.domain(), out.into_iter().map(|v| v.max(0.0)).collect())
}

/// Smallest `c` with `Φ(t) ≤ Ψ(ct)` on the given grid.
pub fn domination_constant(phi: &YoungFunction, psi: &YoungFunction, grid: &[f64]) -> f64 {
    grid.iter().map(|&t| psi.inverse(phi.eval(t)) / t).fold(0.0, f64::max)
}

/// Registry pairs `(A, Ā)` used by the Hölder checks.
pub fn holder_registry() -> Vec<(YoungFunction, YoungFunction)> {
    ["power:2", "power:3", "logbump:2:0.5", "loglogbump:2:0.5", "logbump:1.5:1"]
        .iter()
        .map(|id| {
            let a = YoungFunction::from_id(id).expect("registry id");
            let b = a.complementary().expect("registry complement");
            (a, b)
        })
        .collect()
}

/// Every registry Young function, including the complements of [`holder_registry`].
pub fn registry() -> Vec<YoungFunction> {
    holder_registry().into_iter().flat_map(|(a, b)| [a, b]).collect()
}
