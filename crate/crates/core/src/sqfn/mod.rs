//! Multilinear square functions on a grid, maximal operators and sparse operators.

pub mod cone;
pub mod kernel;

pub use cone::{psi_t_apply, BumpProfile, ConeEnergy, ConeQuadrature, TailBounds};
pub use kernel::{kernel_validate, KernelBounds, KernelReport, MultilinearKernel, Profile};

use crate::dyadic::{product_maximal, GridSet, SparseFamily};
use crate::error::{LabError, Result};
use crate::gridfn::GridFunction;

fn check_aperture(alpha: f64) -> Result<()> {
    if !(alpha >= 1.0 && alpha.is_finite()) {
        return Err(LabError::InvalidArgument(format!("aperture {alpha} must be ≥ 1")));
    }
    Ok(())
}

impl ConeEnergy {
    /// `S_α`: cone membership `|x − y| < α t`.
    pub fn s_alpha(&self, alpha: f64) -> Result<GridFunction> {
        check_aperture(alpha)?;
        let radii: Vec<f64> = self.nodes.iter().map(|t| alpha * t).collect();
        Ok(self.cone_sum(|i, _, dist| if dist < radii[i] { 1.0 } else { 0.0 }, |i| radii[i]))
    }

    /// `S̃_α` with cutoff `Φ((x − y)/(α t))`.
    pub fn s_tilde(&self, alpha: f64, profile: BumpProfile) -> Result<GridFunction> {
        check_aperture(alpha)?;
        let radii: Vec<f64> = self.nodes.iter().map(|t| alpha * t).collect();
        Ok(self.cone_sum(|i, _, dist| profile.eval(dist, radii[i]), |i| 2.0 * radii[i]))
    }

    /// `g*_λ` over every `y` in the domain.
    pub fn g_star(&self, lambda: f64) -> Result<GridFunction> {
        let table = self.decay_table(lambda, 0.0)?;
        Ok(self.cone_sum(|i, off, _| table[i][off], |_| f64::INFINITY))
    }

    /// `(t_i / (t_i + |x − y|))^{nλ}` per node and offset, zero below `far · t_i`.
    fn decay_table(&self, lambda: f64, far: f64) -> Result<Vec<Vec<f64>>> {
        let e = self.g_exponent(lambda)?;
        Ok(self.nodes.iter().map(|&t| self.offsets.iter().map(|&d| if d >= far * t { (t / (t + d)).powf(e) } else { 0.0 }).collect()).collect())
    }

    fn g_exponent(&self, lambda: f64) -> Result<f64> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(LabError::InvalidArgument(format!("decay λ = {lambda} must be positive")));
        }
        Ok(self.domain.dim() as f64 * lambda)
    }

    /// Ring majorant `S_1 + Σ_{k<K} 2^{-kλn/2} S_{2^{k+1}} + R^{1/2}` of `g*_λ`,
    /// where `R` is the weighted energy at `|x − y| ≥ 2^K t`.
    pub fn g_star_ring_bound(&self, lambda: f64, terms: u32) -> Result<GridFunction> {
        let e = self.g_exponent(lambda)?;
        let mut acc = self.s_alpha(1.0)?.into_samples();
        for k in 0..terms {
            let s = self.s_alpha(2f64.powi(k as i32 + 1))?;
            let c = 2f64.powf(-(k as f64) * e / 2.0);
            for (a, v) in acc.iter_mut().zip(s.samples()) {
                *a += c * v;
            }
        }
        let table = self.decay_table(lambda, 2f64.powi(terms as i32))?;
        let rest = self.cone_sum(|i, off, _| table[i][off], |_| f64::INFINITY);
        for (a, v) in acc.iter_mut().zip(rest.samples()) {
            *a += v;
        }
        GridFunction::weight(self.domain, acc)
    }

    /// Weighted energy `∬ |ψ_t(f⃗)(y)|² dy dt / t^{n+1}` over the nodes and cells.
    pub fn total(&self) -> f64 {
        self.energy.iter().map(|e| e.iter().sum::<f64>()).sum()
    }
}

/// `S_α(f⃗)` for a fixed quadrature.
pub fn s_alpha(kernel: &MultilinearKernel, fs: &[&GridFunction], alpha: f64, quad: &ConeQuadrature) -> Result<GridFunction> {
    ConeEnergy::new(kernel, fs, quad)?.s_alpha(alpha)
}

/// `S̃_α(f⃗)` for a fixed quadrature.
pub fn s_tilde(kernel: &MultilinearKernel, fs: &[&GridFunction], alpha: f64, profile: BumpProfile, quad: &ConeQuadrature) -> Result<GridFunction> {
    ConeEnergy::new(kernel, fs, quad)?.s_tilde(alpha, profile)
}

/// `g*_λ(f⃗)` for a fixed quadrature.
pub fn g_star(kernel: &MultilinearKernel, fs: &[&GridFunction], lambda: f64, quad: &ConeQuadrature) -> Result<GridFunction> {
    ConeEnergy::new(kernel, fs, quad)?.g_star(lambda)
}

/// Per cell, `sup_Q ∏_{i ≠ skip} ⟨|f_i|⟩_Q^{e_i}` over enumerated cubes meeting it.
pub fn maximal(fs: &[&GridFunction], exponents: &[f64], skip: Option<usize>, grids: &GridSet) -> Result<GridFunction> {
    if fs.is_empty() || fs.len() != exponents.len() {
        return Err(LabError::InvalidArgument("one exponent per input".into()));
    }
    if exponents.iter().any(|e| !(*e >= 0.0 && e.is_finite())) {
        return Err(LabError::InvalidArgument(format!("exponents {exponents:?} must be finite and ≥ 0")));
    }
    let d = *fs[0].domain();
    if fs.iter().any(|f| *f.domain() != d) {
        return Err(LabError::DomainMismatch);
    }
    let mut e = exponents.to_vec();
    if let Some(j) = skip {
        if j >= e.len() {
            return Err(LabError::InvalidArgument(format!("skip slot {j} out of range")));
        }
        e[j] = 0.0;
    }
    GridFunction::weight(d, product_maximal(fs, &e, grids))
}

/// `A_S^r(f⃗) = (Σ_{Q∈S} ∏⟨|f_i|⟩_Q^r 1_Q)^{1/r}`; membership by cell centre.
pub fn sparse_operator(family: &SparseFamily, r: f64, fs: &[&GridFunction]) -> Result<GridFunction> {
    if !(r >= 1.0 && r.is_finite()) {
        return Err(LabError::InvalidArgument(format!("sparse exponent r = {r} must be ≥ 1")));
    }
    let d = family.domain;
    if fs.iter().any(|f| *f.domain() != d) {
        return Err(LabError::DomainMismatch);
    }
    let mut acc = vec![0.0; d.cell_count()];
    for q in &family.cubes {
        let b = q.clipped(&d);
        let meas = b.measure();
        if meas <= 0.0 {
            continue;
        }
        let prod: f64 = fs.iter().map(|f| (f.abs().integral_over(&b) / meas).powf(r)).product();
        let bounds = q.bounds();
        d.for_each_overlap(&b, |c, _| {
            if bounds.contains_point(d.center(c)) {
                acc[c] += prod;
            }
        });
    }
    GridFunction::weight(d, acc.into_iter().map(|v| v.powf(1.0 / r)).collect())
}
