//! Carleson packing constants of cube-indexed sequences.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::dyadic::grid::DyadicCube;
use crate::error::{LabError, Result};
use crate::gridfn::GridFunction;

#[derive(Clone, Debug, Serialize)]
pub struct CarlesonReport {
    /// `max_{Q0} Σ_{Q ⊆ Q0} a_Q / w(Q0)` over the candidate cubes.
    pub constant: f64,
    pub witness: Option<DyadicCube>,
    pub candidates: usize,
}

/// Packing constant of `a` against the weight `w`.
///
/// Candidates `Q0` are the support cubes and all their ancestors down to the
/// domain's coarsest level; other cubes either carry no mass or are dominated.
pub fn carleson_constant(a: &[(DyadicCube, f64)], w: &GridFunction) -> Result<CarlesonReport> {
    let domain = *w.domain();
    if let Some((first, _)) = a.first() {
        if a.iter().any(|(q, _)| !q.same_grid(first)) {
            return Err(LabError::MixedGrids);
        }
    }
    if let Some((q, v)) = a.iter().find(|(_, v)| !(*v >= 0.0 && v.is_finite())) {
        return Err(LabError::InvalidArgument(format!("coefficient {v} on {q:?} must be finite and nonnegative")));
    }
    let k_min = a.iter().map(|(q, _)| q.level).min().unwrap_or(0).min(domain.coarsest_level());
    let mut mass: BTreeMap<DyadicCube, f64> = BTreeMap::new();
    for &(q, v) in a {
        let mut c = q;
        loop {
            *mass.entry(c).or_insert(0.0) += v;
            if c.level <= k_min {
                break;
            }
            c = c.parent();
        }
    }
    let mut best = CarlesonReport { constant: 0.0, witness: None, candidates: mass.len() };
    for (q, m) in &mass {
        if *m <= 0.0 {
            continue;
        }
        let wq = w.integral_over(&q.clipped(&domain));
        if wq <= 0.0 {
            return Err(LabError::VanishingWeight);
        }
        let r = m / wq;
        if r > best.constant {
            best.constant = r;
            best.witness = Some(*q);
        }
    }
    Ok(best)
}
