//! Products of cube averages maximised over enumerated cubes.

use std::ops::Range;

use crate::dyadic::grid::{touching_sup, AxisSpan, GridSet, LevelLattice};
use crate::gridfn::{AxisBox, DomainSpec, GridFunction, PrefixIntegral, TOUCH_TOL};
use crate::par;

/// Per cell, `sup_Q ∏ ⟨|f_i|⟩_Q^{e_i}` over enumerated cubes meeting the cell.
pub fn product_maximal(fs: &[&GridFunction], exps: &[f64], grids: &GridSet) -> Vec<f64> {
    let domain = *fs[0].domain();
    let abs: Vec<Vec<f64>> = fs.iter().map(|f| f.samples().iter().map(|v| v.abs()).collect()).collect();
    let (out, _) = touching_sup(&domain, grids, |lat, i| {
        let meas = lat.measure(i);
        abs.iter().zip(exps).map(|(g, &e)| if e == 0.0 { 1.0 } else { (lat.integral(g, i) / meas).powf(e) }).product()
    });
    out.into_iter().map(|v| v.max(0.0)).collect()
}

fn span_range(spans: &[AxisSpan], lo: f64, hi: f64, tol: f64) -> Range<usize> {
    let a = spans.partition_point(|s| s.hi <= lo + tol);
    let b = spans.partition_point(|s| s.lo < hi - tol);
    a..b.max(a)
}

fn clip_cells(cells: &[(usize, f64)], lo: usize, hi: usize) -> &[(usize, f64)] {
    let a = cells.partition_point(|c| c.0 < lo);
    let b = cells.partition_point(|c| c.0 <= hi);
    &cells[a..b.max(a)]
}

/// `∫_B sup_{Q'} ∏ (∫_{Q'∩B} |σ_i| / |Q'|)^{e_i} dx`: the integral over `B` of the
/// maximal function of the functions truncated to `B`.
pub struct RestrictedMaximal {
    domain: DomainSpec,
    lattices: Vec<LevelLattice>,
    prefixes: Vec<PrefixIntegral>,
    exps: Vec<f64>,
}

impl RestrictedMaximal {
    pub fn new(fs: &[&GridFunction], exps: &[f64], grids: &GridSet) -> Self {
        let domain = *fs[0].domain();
        RestrictedMaximal {
            domain,
            lattices: grids.lattices(&domain),
            prefixes: fs.iter().map(|f| PrefixIntegral::new(&f.abs())).collect(),
            exps: exps.to_vec(),
        }
    }

    /// Maximal values at the cells meeting `b`, paired with the overlap measure.
    pub fn values_on(&self, b: &AxisBox) -> Vec<(usize, f64, f64)> {
        let d = &self.domain;
        let n = d.dim();
        let tol = TOUCH_TOL * d.h();
        let cells = d.overlaps(b);
        if cells.is_empty() {
            return Vec::new();
        }
        let (mut lo_ij, mut hi_ij) = ([usize::MAX; 2], [0usize; 2]);
        for &(c, _) in &cells {
            let ij = d.unflatten(c);
            for a in 0..2 {
                lo_ij[a] = lo_ij[a].min(ij[a]);
                hi_ij[a] = hi_ij[a].max(ij[a]);
            }
        }
        let width = hi_ij[0] - lo_ij[0] + 1;
        let local = |c: usize| {
            let ij = d.unflatten(c);
            (ij[0] - lo_ij[0]) + width * (ij[1] - lo_ij[1])
        };
        let mut best = vec![0.0f64; width * (hi_ij[1] - lo_ij[1] + 1)];
        for lat in &self.lattices {
            let rx = span_range(lat.spans(0), b.lo[0], b.hi[0], tol);
            let ry = if n == 2 { span_range(lat.spans(1), b.lo[1], b.hi[1], tol) } else { 0..1 };
            for iy in ry.clone() {
                for ix in rx.clone() {
                    let i = lat.index(ix, iy);
                    let sx = &lat.spans(0)[ix];
                    let mut q = AxisBox::new(n, [sx.lo, 0.0], [sx.hi, 0.0]);
                    if n == 2 {
                        let sy = &lat.spans(1)[iy];
                        q.lo[1] = sy.lo;
                        q.hi[1] = sy.hi;
                    }
                    let inter = q.intersect(b);
                    let meas = lat.measure(i);
                    let v: f64 = self
                        .prefixes
                        .iter()
                        .zip(&self.exps)
                        .map(|(pi, &e)| if e == 0.0 { 1.0 } else { (pi.integral(&inter).max(0.0) / meas).powf(e) })
                        .product();
                    let cx = clip_cells(&sx.cells, lo_ij[0], hi_ij[0]);
                    let cy = clip_cells(&lat.spans(1)[iy].cells, lo_ij[1], hi_ij[1]);
                    for &(j, _) in cy {
                        for &(i0, _) in cx {
                            let k = (i0 - lo_ij[0]) + width * (j - lo_ij[1]);
                            if v > best[k] {
                                best[k] = v;
                            }
                        }
                    }
                }
            }
        }
        cells.into_iter().map(|(c, m)| (c, m, best[local(c)])).collect()
    }

    pub fn integral_over(&self, b: &AxisBox) -> f64 {
        self.values_on(b).into_iter().map(|(_, m, v)| m * v).sum()
    }

    /// [`Self::integral_over`] for many boxes.
    pub fn integrals(&self, boxes: &[AxisBox]) -> Vec<f64> {
        par::map_slice(boxes, |b| self.integral_over(b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn restricted_maximal_of_constant_is_constant_on_box() {
        let d = DomainSpec::new(1, 1.0, 32).unwrap();
        let one = GridFunction::constant(d, 1.0);
        let rm = RestrictedMaximal::new(&[&one], &[1.0], &GridSet::standard(&d));
        let b = AxisBox::interval(0.0, 0.5);
        assert!((rm.integral_over(&b) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn product_maximal_of_constants() {
        let d = DomainSpec::new(1, 1.0, 16).unwrap();
        let a = GridFunction::constant(d, 2.0);
        let b = GridFunction::constant(d, 3.0);
        let m = product_maximal(&[&a, &b], &[1.0, 1.0], &GridSet::standard(&d));
        assert!(m.iter().all(|&v| (v - 6.0).abs() < 1e-12));
    }
}
