//! Piecewise-constant functions on a truncated box domain `[-L, L)^n`.
//!
//! Cells are indexed row-major with axis 0 fastest: `idx = i0 + N * i1`.
//! Functions are extended by zero outside the domain box.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Overlaps thinner than this fraction of a cell width count as empty.
pub(crate) const TOUCH_TOL: f64 = 1e-9;

/// Geometry of the sampling grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDomain", into = "RawDomain")]
pub struct DomainSpec {
    n: usize,
    half_extent: f64,
    cells: usize,
}

#[derive(Clone, Copy, Serialize, Deserialize)]
struct RawDomain {
    n: usize,
    #[serde(rename = "L")]
    half_extent: f64,
    #[serde(rename = "N")]
    cells: usize,
}

impl TryFrom<RawDomain> for DomainSpec {
    type Error = LabError;
    fn try_from(raw: RawDomain) -> Result<Self> {
        DomainSpec::new(raw.n, raw.half_extent, raw.cells)
    }
}

impl From<DomainSpec> for RawDomain {
    fn from(d: DomainSpec) -> Self {
        RawDomain { n: d.n, half_extent: d.half_extent, cells: d.cells }
    }
}

impl DomainSpec {
    /// Validates `n ∈ {1,2}`, `L > 0` and `N` a power of two within the desk-scale cap.
    pub fn new(n: usize, half_extent: f64, cells: usize) -> Result<Self> {
        if n != 1 && n != 2 {
            return Err(LabError::InvalidDomain(format!("dimension {n} not in {{1,2}}")));
        }
        if !(half_extent > 0.0 && half_extent.is_finite()) {
            return Err(LabError::InvalidDomain(format!("half extent {half_extent} must be positive")));
        }
        if cells < 2 || !cells.is_power_of_two() {
            return Err(LabError::InvalidDomain(format!("cells per axis {cells} must be a power of two ≥ 2")));
        }
        let cap = if n == 1 { 4096 } else { 256 };
        if cells > cap {
            return Err(LabError::InvalidDomain(format!("cells per axis {cells} exceeds {cap}")));
        }
        Ok(DomainSpec { n, half_extent, cells })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn half_extent(&self) -> f64 {
        self.half_extent
    }

    pub fn cells_per_axis(&self) -> usize {
        self.cells
    }

    /// Cell width `h = 2L/N`.
    pub fn h(&self) -> f64 {
        2.0 * self.half_extent / self.cells as f64
    }

    pub fn cell_count(&self) -> usize {
        self.cells.pow(self.n as u32)
    }

    pub fn cell_measure(&self) -> f64 {
        self.h().powi(self.n as i32)
    }

    pub fn measure(&self) -> f64 {
        (2.0 * self.half_extent).powi(self.n as i32)
    }

    /// Left edge of cell `i` along an axis.
    pub fn edge(&self, i: usize) -> f64 {
        -self.half_extent + i as f64 * self.h()
    }

    pub fn axis_center(&self, i: usize) -> f64 {
        -self.half_extent + (i as f64 + 0.5) * self.h()
    }

    /// Per-axis indices of a flat cell index.
    pub fn unflatten(&self, idx: usize) -> [usize; 2] {
        if self.n == 1 {
            [idx, 0]
        } else {
            [idx % self.cells, idx / self.cells]
        }
    }

    pub fn flatten(&self, ij: [usize; 2]) -> usize {
        if self.n == 1 {
            ij[0]
        } else {
            ij[0] + self.cells * ij[1]
        }
    }

    /// Centre of a cell (unused coordinates are zero).
    pub fn center(&self, idx: usize) -> [f64; 2] {
        let ij = self.unflatten(idx);
        let mut c = [0.0; 2];
        for d in 0..self.n {
            c[d] = self.axis_center(ij[d]);
        }
        c
    }

    /// Box of a single cell.
    pub fn cell_box(&self, idx: usize) -> AxisBox {
        let ij = self.unflatten(idx);
        let mut b = AxisBox { n: self.n, lo: [0.0; 2], hi: [0.0; 2] };
        for d in 0..self.n {
            b.lo[d] = self.edge(ij[d]);
            b.hi[d] = self.edge(ij[d] + 1);
        }
        b
    }

    /// The whole domain `[-L, L)^n`.
    pub fn domain_box(&self) -> AxisBox {
        let l = self.half_extent;
        AxisBox::new(self.n, [-l, -l], [l, l])
    }

    /// Finest dyadic level whose side `2^-k` is still at least `h`.
    pub fn finest_level(&self) -> i32 {
        level_with_side_at_least(self.h(), true)
    }

    /// Coarsest default level: side at least `4L`.
    pub fn coarsest_level(&self) -> i32 {
        level_with_side_at_least(4.0 * self.half_extent, false)
    }

    /// Cells along one axis meeting `[lo, hi)` in positive length, with the overlap length.
    pub fn axis_overlaps(&self, lo: f64, hi: f64, out: &mut Vec<(usize, f64)>) {
        out.clear();
        let h = self.h();
        let l = self.half_extent;
        let lo_c = lo.max(-l);
        let hi_c = hi.min(l);
        if hi_c - lo_c <= TOUCH_TOL * h {
            return;
        }
        let first = (((lo_c + l) / h).floor() as i64 - 1).max(0) as usize;
        let last = ((((hi_c + l) / h).ceil() as i64) + 1).min(self.cells as i64 - 1).max(0) as usize;
        for i in first..=last {
            let a = self.edge(i).max(lo_c);
            let b = self.edge(i + 1).min(hi_c);
            let len = b - a;
            if len > TOUCH_TOL * h {
                out.push((i, len));
            }
        }
    }

    /// Calls `visit(cell, overlap_measure)` for every cell meeting `b` in positive measure.
    pub fn for_each_overlap<F: FnMut(usize, f64)>(&self, b: &AxisBox, mut visit: F) {
        let mut xs = Vec::new();
        self.axis_overlaps(b.lo[0], b.hi[0], &mut xs);
        if self.n == 1 {
            for (i, len) in xs {
                visit(i, len);
            }
            return;
        }
        let mut ys = Vec::new();
        self.axis_overlaps(b.lo[1], b.hi[1], &mut ys);
        for &(j, ly) in &ys {
            for &(i, lx) in &xs {
                visit(i + self.cells * j, lx * ly);
            }
        }
    }

    /// `(cell, overlap measure)` pairs for `b`.
    pub fn overlaps(&self, b: &AxisBox) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        self.for_each_overlap(b, |i, m| out.push((i, m)));
        out
    }
}

fn level_with_side_at_least(len: f64, finest: bool) -> i32 {
    let mut k = (-len.log2()).floor() as i32;
    while side(k) < len {
        k -= 1;
    }
    if finest {
        while side(k + 1) >= len {
            k += 1;
        }
    }
    k
}

/// Side length `2^-k` of a level-`k` dyadic cube.
pub fn side(level: i32) -> f64 {
    2f64.powi(-level)
}

/// Axis-aligned half-open box in one or two dimensions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisBox {
    pub n: usize,
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

impl AxisBox {
    pub fn new(n: usize, lo: [f64; 2], hi: [f64; 2]) -> Self {
        let mut b = AxisBox { n, lo, hi };
        if n == 1 {
            b.lo[1] = 0.0;
            b.hi[1] = 0.0;
        }
        b
    }

    /// One-dimensional interval `[a, b)`.
    pub fn interval(a: f64, b: f64) -> Self {
        AxisBox::new(1, [a, 0.0], [b, 0.0])
    }

    pub fn measure(&self) -> f64 {
        (0..self.n).map(|d| (self.hi[d] - self.lo[d]).max(0.0)).product()
    }

    pub fn intersect(&self, other: &AxisBox) -> AxisBox {
        let mut b = *self;
        for d in 0..self.n {
            b.lo[d] = self.lo[d].max(other.lo[d]);
            b.hi[d] = self.hi[d].min(other.hi[d]).max(b.lo[d]);
        }
        b
    }

    pub fn contains_point(&self, p: [f64; 2]) -> bool {
        (0..self.n).all(|d| p[d] >= self.lo[d] && p[d] < self.hi[d])
    }

    pub fn contains_box(&self, other: &AxisBox) -> bool {
        (0..self.n).all(|d| other.lo[d] >= self.lo[d] && other.hi[d] <= self.hi[d])
    }
}

/// A real piecewise-constant function, one sample per cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid", into = "RawGrid")]
pub struct GridFunction {
    domain: DomainSpec,
    samples: Vec<f64>,
    nonneg: bool,
}

#[derive(Clone, Serialize, Deserialize)]
struct RawGrid {
    domain: DomainSpec,
    samples: Vec<f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    nonneg: bool,
}

impl TryFrom<RawGrid> for GridFunction {
    type Error = LabError;
    fn try_from(raw: RawGrid) -> Result<Self> {
        if raw.nonneg {
            GridFunction::weight(raw.domain, raw.samples)
        } else {
            GridFunction::new(raw.domain, raw.samples)
        }
    }
}

impl From<GridFunction> for RawGrid {
    fn from(g: GridFunction) -> Self {
        RawGrid { domain: g.domain, samples: g.samples, nonneg: g.nonneg }
    }
}

impl GridFunction {
    /// A function from explicit samples; all samples must be finite.
    pub fn new(domain: DomainSpec, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != domain.cell_count() {
            return Err(LabError::InvalidArgument(format!("expected {} samples, got {}", domain.cell_count(), samples.len())));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(LabError::InvalidArgument(format!("sample {i} is not finite")));
        }
        Ok(GridFunction { domain, samples, nonneg: false })
    }

    /// A weight: finite, nonnegative samples.
    pub fn weight(domain: DomainSpec, samples: Vec<f64>) -> Result<Self> {
        let mut g = GridFunction::new(domain, samples)?;
        if let Some(i) = g.samples.iter().position(|v| *v < 0.0) {
            return Err(LabError::InvalidArgument(format!("weight sample {i} is negative")));
        }
        g.nonneg = true;
        Ok(g)
    }

    /// Samples `f` at cell centres.
    pub fn from_fn<F: Fn([f64; 2]) -> f64>(domain: DomainSpec, f: F) -> Result<Self> {
        let samples = (0..domain.cell_count()).map(|i| f(domain.center(i))).collect();
        GridFunction::new(domain, samples)
    }

    pub fn constant(domain: DomainSpec, c: f64) -> Self {
        GridFunction { domain, samples: vec![c; domain.cell_count()], nonneg: c >= 0.0 }
    }

    pub fn zeros(domain: DomainSpec) -> Self {
        GridFunction::constant(domain, 0.0)
    }

    /// Cell averages of the indicator of `b` (0/1 on cells aligned with `b`).
    pub fn box_indicator(domain: DomainSpec, b: &AxisBox) -> Self {
        let mut samples = vec![0.0; domain.cell_count()];
        let cm = domain.cell_measure();
        domain.for_each_overlap(b, |i, m| samples[i] = (m / cm).min(1.0));
        GridFunction { domain, samples, nonneg: true }
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn is_weight(&self) -> bool {
        self.nonneg
    }

    /// Same samples, flagged as a weight when they are all nonnegative.
    pub fn as_weight(&self) -> Result<Self> {
        GridFunction::weight(self.domain, self.samples.clone())
    }

    pub fn value(&self, idx: usize) -> f64 {
        self.samples[idx]
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Result<Self> {
        let samples: Vec<f64> = self.samples.iter().map(|&v| f(v)).collect();
        GridFunction::new(self.domain, samples)
    }

    /// Pointwise combination with another function on the same domain.
    pub fn zip_with<F: Fn(f64, f64) -> f64>(&self, other: &GridFunction, f: F) -> Result<Self> {
        self.check_same_domain(other)?;
        let samples = self.samples.iter().zip(&other.samples).map(|(&a, &b)| f(a, b)).collect();
        GridFunction::new(self.domain, samples)
    }

    pub fn scale(&self, c: f64) -> Self {
        GridFunction { domain: self.domain, samples: self.samples.iter().map(|v| c * v).collect(), nonneg: self.nonneg && c >= 0.0 }
    }

    pub fn abs(&self) -> Self {
        GridFunction { domain: self.domain, samples: self.samples.iter().map(|v| v.abs()).collect(), nonneg: true }
    }

    /// `|f|^q` cellwise, as a weight-flagged function.
    pub fn abs_pow(&self, q: f64) -> Result<Self> {
        let samples = self.samples.iter().map(|v| v.abs().powf(q)).collect();
        GridFunction::weight(self.domain, samples)
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn check_same_domain(&self, other: &GridFunction) -> Result<()> {
        if self.domain != other.domain {
            return Err(LabError::DomainMismatch);
        }
        Ok(())
    }

    /// `(value, overlap measure)` pairs of the cells meeting `b`.
    pub fn values_on(&self, b: &AxisBox) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        self.domain.for_each_overlap(b, |i, m| out.push((self.samples[i], m)));
        out
    }

    /// `∫_b f` with exact partial-cell overlaps.
    pub fn integral_over(&self, b: &AxisBox) -> f64 {
        let mut s = 0.0;
        self.domain.for_each_overlap(b, |i, m| s += self.samples[i] * m);
        s
    }
}

/// `∫ f = Σ samples · h^n`.
pub fn integral(f: &GridFunction) -> f64 {
    f.samples.iter().sum::<f64>() * f.domain.cell_measure()
}

/// `(1/|B|) ∫_B f`, with `f` extended by zero outside the domain.
pub fn box_average(f: &GridFunction, b: &AxisBox) -> Result<f64> {
    let meas = b.measure();
    if meas <= 0.0 {
        return Err(LabError::ZeroMeasureBox);
    }
    Ok(f.integral_over(b) / meas)
}

fn check_weight(f: &GridFunction, w: Option<&GridFunction>) -> Result<()> {
    if let Some(w) = w {
        f.check_same_domain(w)?;
        if !w.nonneg {
            return Err(LabError::NotAWeight);
        }
    }
    Ok(())
}

/// `‖f‖_{L^p(w)}` for `p ∈ (0, ∞]`; `p = ∞` is the essential sup over cells
/// (over cells where `w > 0` when a weight is given).
pub fn lp_norm(f: &GridFunction, p: f64, w: Option<&GridFunction>) -> Result<f64> {
    if p.is_nan() || p <= 0.0 {
        return Err(LabError::InvalidArgument(format!("exponent {p} must be positive")));
    }
    check_weight(f, w)?;
    let weight = |i: usize| w.map_or(1.0, |w| w.samples[i]);
    if p.is_infinite() {
        let m = (0..f.samples.len()).filter(|&i| weight(i) > 0.0).fold(0.0f64, |m, i| m.max(f.samples[i].abs()));
        return Ok(m);
    }
    let cm = f.domain.cell_measure();
    let s: f64 = (0..f.samples.len()).map(|i| f.samples[i].abs().powf(p) * weight(i)).sum();
    Ok((s * cm).powf(1.0 / p))
}

/// `‖f‖_{L^{p,∞}(w)} = sup_t t · w({|f| ≥ t})^{1/p}` over the sample magnitudes.
///
/// The supremum over all `t > 0` of `t · w({|f| > t})^{1/p}` is approached from
/// below each level, which is what the closed level set expresses.
pub fn weak_lp_norm(f: &GridFunction, p: f64, w: Option<&GridFunction>) -> Result<f64> {
    if p.is_nan() || p <= 0.0 {
        return Err(LabError::InvalidArgument(format!("exponent {p} must be positive")));
    }
    check_weight(f, w)?;
    let cm = f.domain.cell_measure();
    let mut levels: Vec<(f64, f64)> =
        (0..f.samples.len()).map(|i| (f.samples[i].abs(), w.map_or(1.0, |w| w.samples[i]) * cm)).filter(|&(v, m)| v > 0.0 && m > 0.0).collect();
    levels.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = 0.0f64;
    let mut mass = 0.0;
    let mut k = 0;
    while k < levels.len() {
        let t = levels[k].0;
        while k < levels.len() && levels[k].0 == t {
            mass += levels[k].1;
            k += 1;
        }
        best = best.max(t * mass.powf(1.0 / p));
    }
    Ok(best)
}

/// Prefix integrals giving `∫_B f` in constant time for any box.
#[derive(Clone, Debug)]
pub struct PrefixIntegral {
    domain: DomainSpec,
    table: Vec<f64>,
}

impl PrefixIntegral {
    pub fn new(f: &GridFunction) -> Self {
        let d = f.domain;
        let n = d.cells_per_axis();
        let cm = d.cell_measure();
        if d.dim() == 1 {
            let mut table = vec![0.0; n + 1];
            for i in 0..n {
                table[i + 1] = table[i] + f.samples[i] * cm;
            }
            PrefixIntegral { domain: d, table }
        } else {
            let w = n + 1;
            let mut table = vec![0.0; w * w];
            for j in 0..n {
                let mut row = 0.0;
                for i in 0..n {
                    row += f.samples[i + n * j] * cm;
                    table[(i + 1) + w * (j + 1)] = table[(i + 1) + w * j] + row;
                }
            }
            PrefixIntegral { domain: d, table }
        }
    }

    /// Fractional lattice coordinate of `x`, clamped to the domain.
    fn coord(&self, x: f64) -> (usize, f64) {
        let d = &self.domain;
        let n = d.cells_per_axis();
        let u = ((x + d.half_extent()) / d.h()).clamp(0.0, n as f64);
        let i = (u.floor() as usize).min(n - 1);
        (i, u - i as f64)
    }

    fn cumulative(&self, x: f64, y: f64) -> f64 {
        let (i, fx) = self.coord(x);
        if self.domain.dim() == 1 {
            return self.table[i] + fx * (self.table[i + 1] - self.table[i]);
        }
        let w = self.domain.cells_per_axis() + 1;
        let (j, fy) = self.coord(y);
        let t = |a: usize, b: usize| self.table[a + w * b];
        let v00 = t(i, j);
        let v10 = t(i + 1, j);
        let v01 = t(i, j + 1);
        let v11 = t(i + 1, j + 1);
        v00 * (1.0 - fx) * (1.0 - fy) + v10 * fx * (1.0 - fy) + v01 * (1.0 - fx) * fy + v11 * fx * fy
    }

    /// `∫_B f` (zero outside the domain).
    pub fn integral(&self, b: &AxisBox) -> f64 {
        if self.domain.dim() == 1 {
            return self.cumulative(b.hi[0], 0.0) - self.cumulative(b.lo[0], 0.0);
        }
        self.cumulative(b.hi[0], b.hi[1]) - self.cumulative(b.lo[0], b.hi[1]) - self.cumulative(b.hi[0], b.lo[1]) + self.cumulative(b.lo[0], b.lo[1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n_cells: usize) -> DomainSpec {
        DomainSpec::new(1, 1.0, n_cells).unwrap()
    }

    #[test]
    fn domain_validation() {
        assert!(DomainSpec::new(3, 1.0, 8).is_err());
        assert!(DomainSpec::new(1, 0.0, 8).is_err());
        assert!(DomainSpec::new(1, 1.0, 12).is_err());
        assert!(DomainSpec::new(2, 1.0, 512).is_err());
        let d = line(8);
        assert_eq!(d.h(), 0.25);
        assert_eq!(d.finest_level(), 2);
        assert_eq!(d.coarsest_level(), -2);
    }

    #[test]
    fn constant_integrates_to_measure() {
        let d = line(64);
        assert_eq!(integral(&GridFunction::constant(d, 1.0)), 2.0);
        let ind = GridFunction::box_indicator(d, &AxisBox::interval(0.0, 1.0));
        assert_eq!(integral(&ind), 1.0);
        assert_eq!(box_average(&ind, &AxisBox::interval(-1.0, 1.0)).unwrap(), 0.5);
    }

    #[test]
    fn zero_box_is_rejected() {
        let f = GridFunction::constant(line(8), 1.0);
        assert!(matches!(box_average(&f, &AxisBox::interval(0.3, 0.3)), Err(LabError::ZeroMeasureBox)));
    }

    #[test]
    fn norms_of_indicator() {
        let d = line(64);
        let ind = GridFunction::box_indicator(d, &AxisBox::interval(0.0, 1.0));
        for p in [0.5, 1.0, 1.5, 3.0, f64::INFINITY] {
            assert!((lp_norm(&ind, p, None).unwrap() - 1.0).abs() < 1e-14);
        }
        let w = GridFunction::constant(d, 2.0);
        assert!((lp_norm(&ind, 3.0, Some(&w)).unwrap() - 2f64.powf(1.0 / 3.0)).abs() < 1e-14);
        assert!((weak_lp_norm(&ind, 2.0, Some(&w)).unwrap() - 2f64.sqrt()).abs() < 1e-14);
        assert!(lp_norm(&ind, 0.0, None).is_err());
        assert!(lp_norm(&ind, 1.0, Some(&GridFunction::new(d, vec![1.0; 64]).unwrap())).is_err());
    }

    #[test]
    fn prefix_integral_matches_direct_overlap() {
        let d = DomainSpec::new(2, 1.0, 8).unwrap();
        let f = GridFunction::from_fn(d, |p| (3.0 * p[0]).sin() + p[1] * p[1]).unwrap();
        let pi = PrefixIntegral::new(&f);
        let b = AxisBox::new(2, [-0.33, 0.1], [0.71, 1.4]);
        assert!((pi.integral(&b) - f.integral_over(&b)).abs() < 1e-13);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let d = DomainSpec::new(1, 1.5, 16).unwrap();
        let f = GridFunction::from_fn(d, |p| (p[0] * 7.1).cos() / 3.0).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert!(s.contains("\"L\":1.5"));
        assert!(!s.contains("nonneg"));
        let g: GridFunction = serde_json::from_str(&s).unwrap();
        assert_eq!(f, g);
        let w = GridFunction::constant(d, 2.0);
        let back: GridFunction = serde_json::from_str(&serde_json::to_string(&w).unwrap()).unwrap();
        assert!(back.is_weight());
        assert!(serde_json::from_str::<GridFunction>(r#"{"domain":{"n":1,"L":1,"N":4},"samples":[1,2]}"#).is_err());
    }
}
