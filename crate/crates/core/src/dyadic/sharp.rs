//! Sharp maximal function `M^♯_δ`.

use crate::dyadic::distribution::lower_median;
use crate::dyadic::grid::{touching_sup, GridSet};
use crate::error::{LabError, Result};
use crate::gridfn::GridFunction;

/// `inf_c ⟨| g - c |⟩` for `(value, measure)` pairs, attained at a median.
pub fn mean_deviation(pairs: &[(f64, f64)]) -> f64 {
    let c = lower_median(pairs);
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    pairs.iter().map(|&(v, m)| (v - c).abs() * m).sum::<f64>() / total
}

/// Per cell, the sup over enumerated cubes meeting the cell of
/// `(inf_c ⟨| |f|^δ - c |⟩_Q)^{1/δ}`.
pub fn sharp_maximal(f: &GridFunction, delta: f64, grids: &GridSet) -> Result<GridFunction> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(LabError::InvalidArgument(format!("sharp exponent {delta} must lie in (0,1]")));
    }
    let g: Vec<f64> = f.samples().iter().map(|v| v.abs().powf(delta)).collect();
    let (out, _) = touching_sup(f.domain(), grids, |lat, i| mean_deviation(&lat.values(&g, i)).powf(1.0 / delta));
    GridFunction::weight(*f.domain(), out.into_iter().map(|v| v.max(0.0)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridfn::DomainSpec;

    #[test]
    fn constant_has_zero_sharp_function() {
        let d = DomainSpec::new(1, 1.0, 16).unwrap();
        let f = GridFunction::constant(d, 4.0);
        let m = sharp_maximal(&f, 0.5, &GridSet::standard(&d)).unwrap();
        assert!(m.samples().iter().all(|&v| v == 0.0));
    }
}
