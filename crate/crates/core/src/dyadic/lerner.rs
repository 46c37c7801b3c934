//! Pointwise sparse decomposition `|f - m_f(Q0)| ≤ 2 Σ ω_λ(f;Q) 1_Q` on a cube.

use serde::Serialize;

use crate::dyadic::distribution::{lower_median, oscillation_window};
use crate::dyadic::grid::DyadicCube;
use crate::dyadic::sparse::SparseFamily;
use crate::error::{LabError, Result};
use crate::gridfn::GridFunction;

/// Output of [`lerner_hytonen`].
#[derive(Clone, Debug)]
pub struct LernerDecomposition {
    pub median: f64,
    pub family: SparseFamily,
    /// `ω_λ(f;Q)` for each cube of `family`, in the same order.
    pub coefficients: Vec<f64>,
    pub audit: PointwiseAudit,
}

/// Worst cell of the pointwise bound.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PointwiseAudit {
    pub cells_checked: usize,
    /// `max (|f - m| - 2 Σ ω 1_Q)` over cells of `Q0`.
    pub max_excess: f64,
    /// `max |f - m| / (2 Σ ω 1_Q)` over cells where the right side is positive.
    pub max_ratio: f64,
}

/// Oscillation level `2^{-n-2}`.
pub fn lambda_for(n: usize) -> f64 {
    2f64.powi(-(n as i32) - 2)
}

struct Ctx<'a> {
    f: &'a GridFunction,
    lambda: f64,
    threshold: f64,
    finest: i32,
    out: Vec<(DyadicCube, f64)>,
}

impl Ctx<'_> {
    fn cells(&self, q: &DyadicCube) -> Vec<(usize, f64)> {
        let d = self.f.domain();
        d.overlaps(&q.clipped(d))
    }

    fn visit(&mut self, q: DyadicCube) {
        let cells = self.cells(&q);
        let pairs: Vec<(f64, f64)> = cells.iter().map(|&(c, m)| (self.f.value(c), m)).collect();
        let (omega, centre) = oscillation_window(&pairs, self.lambda);
        if omega > 0.0 {
            self.out.push((q, omega));
        }
        if q.level >= self.finest {
            return;
        }
        let exceptional: Vec<bool> = {
            let mut v = vec![false; self.f.domain().cell_count()];
            for &(c, _) in &cells {
                v[c] = (self.f.value(c) - centre).abs() > omega;
            }
            v
        };
        let mut selected = Vec::new();
        let mut stack: Vec<DyadicCube> = q.children();
        while let Some(p) = stack.pop() {
            let pc = self.cells(&p);
            let total: f64 = pc.iter().map(|x| x.1).sum();
            let bad: f64 = pc.iter().filter(|x| exceptional[x.0]).map(|x| x.1).sum();
            if bad > self.threshold * total {
                selected.push(p);
            } else if bad > 0.0 && p.level < self.finest {
                stack.extend(p.children());
            }
        }
        selected.sort();
        for p in selected {
            self.visit(p);
        }
    }
}

/// Builds a `1/2`-sparse family in `D(Q0)` with coefficients `ω_{2^{-n-2}}(f;Q)`
/// and audits the pointwise bound at every cell centre of `Q0`.
///
/// `Q0` must be a union of cells: cubes of the unshifted grid with side at
/// least `h`, and `h` itself a power of two.
pub fn lerner_hytonen(f: &GridFunction, q0: &DyadicCube) -> Result<LernerDecomposition> {
    let d = *f.domain();
    let finest = d.finest_level();
    let aligned = q0.shift[..q0.n].iter().all(|&s| s == 0)
        && (crate::gridfn::side(finest) - d.h()).abs() == 0.0
        && (d.half_extent() / d.h()).fract() == 0.0
        && q0.level <= finest
        && q0.n == d.dim();
    if !aligned {
        return Err(LabError::InvalidArgument("cube must be an unshifted union of dyadic cells".into()));
    }
    if q0.measure(&d) <= 0.0 {
        return Err(LabError::ZeroMeasureBox);
    }
    let lambda = lambda_for(d.dim());
    let mut threshold = 2f64.powi(-(d.dim() as i32) - 1);
    let mut failure = None;
    for _ in 0..4 {
        let mut ctx = Ctx { f, lambda, threshold, finest, out: Vec::new() };
        ctx.visit(*q0);
        let cells = ctx.cells(q0);
        let pairs: Vec<(f64, f64)> = cells.iter().map(|&(c, m)| (f.value(c), m)).collect();
        let median = lower_median(&pairs);
        let mut found = ctx.out;
        found.sort_by(|a, b| a.0.cmp(&b.0));
        let (cubes, coefficients): (Vec<_>, Vec<_>) = found.into_iter().unzip();
        let (audit, worst) = audit_pointwise(f, q0, median, &cubes, &coefficients);
        let scale = pairs.iter().fold(0.0f64, |m, p| m.max(p.0.abs()));
        if audit.max_excess <= AUDIT_SLACK * scale.max(f64::MIN_POSITIVE) {
            let family = SparseFamily::new(d, cubes, 0.5)?;
            return Ok(LernerDecomposition { median, family, coefficients, audit });
        }
        failure = Some(worst);
        threshold *= 0.5;
    }
    let (cell, lhs, rhs) = failure.unwrap_or((0, f64::NAN, f64::NAN));
    Err(LabError::SelfVerificationFailed { cell, lhs, rhs })
}

/// Relative slack for the audit, covering rounding in the window arithmetic.
pub const AUDIT_SLACK: f64 = 1e-12;

/// Evaluates `|f - m|` against `2 Σ c_Q 1_Q` at the centres of the cells of `q0`.
pub fn audit_pointwise(f: &GridFunction, q0: &DyadicCube, median: f64, cubes: &[DyadicCube], coefficients: &[f64]) -> (PointwiseAudit, (usize, f64, f64)) {
    let d = f.domain();
    let boxes: Vec<_> = cubes.iter().map(|q| q.bounds()).collect();
    let mut audit = PointwiseAudit { cells_checked: 0, max_excess: f64::NEG_INFINITY, max_ratio: 0.0 };
    let mut worst = (0, f64::NAN, f64::NAN);
    for (c, _) in d.overlaps(&q0.clipped(d)) {
        let x = d.center(c);
        let rhs: f64 = 2.0 * boxes.iter().zip(coefficients).filter(|(b, _)| b.contains_point(x)).map(|(_, w)| w).sum::<f64>();
        let lhs = (f.value(c) - median).abs();
        audit.cells_checked += 1;
        if lhs - rhs > audit.max_excess {
            audit.max_excess = lhs - rhs;
            worst = (c, lhs, rhs);
        }
        if rhs > 0.0 {
            audit.max_ratio = audit.max_ratio.max(lhs / rhs);
        }
    }
    (audit, worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::sparse::verify_sparse;
    use crate::gridfn::{AxisBox, DomainSpec};

    #[test]
    fn constant_gives_empty_family() {
        let d = DomainSpec::new(1, 1.0, 64).unwrap();
        let f = GridFunction::constant(d, 2.5);
        let q0 = DyadicCube::new(1, [0, 0], 0, [0, 0]);
        let dec = lerner_hytonen(&f, &q0).unwrap();
        assert!(dec.family.is_empty());
        assert_eq!(dec.median, 2.5);
    }

    #[test]
    fn half_indicator_passes_audit() {
        let d = DomainSpec::new(2, 1.0, 32).unwrap();
        let f = GridFunction::box_indicator(d, &AxisBox::new(2, [0.0, 0.0], [0.5, 1.0]));
        let q0 = DyadicCube::new(2, [0, 0], 0, [0, 0]);
        let dec = lerner_hytonen(&f, &q0).unwrap();
        assert!(dec.audit.max_excess <= 0.0);
        assert!(verify_sparse(&dec.family).unwrap().pass);
    }

    #[test]
    fn shifted_cube_rejected() {
        let d = DomainSpec::new(1, 1.0, 64).unwrap();
        let f = GridFunction::constant(d, 1.0);
        assert!(lerner_hytonen(&f, &DyadicCube::new(1, [1, 0], 1, [0, 0])).is_err());
    }
}
