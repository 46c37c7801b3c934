//! Log-midpoint quadrature in `t`, discrete cone energies and the cutoff profile.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::gridfn::{DomainSpec, GridFunction};
use crate::par;
use crate::sqfn::kernel::MultilinearKernel;

/// Geometric `t`-nodes: midpoints of `T` equal steps in `ln t` over `[t_min, t_max]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeQuadrature {
    pub t_min: f64,
    pub t_max: f64,
    #[serde(rename = "T")]
    pub nodes: usize,
}

impl ConeQuadrature {
    pub fn new(t_min: f64, t_max: f64, nodes: usize) -> Result<Self> {
        if !(t_min > 0.0 && t_max > t_min && t_max.is_finite() && nodes > 0) {
            return Err(LabError::InvalidArgument(format!("quadrature needs 0 < t_min < t_max and T > 0, got [{t_min}, {t_max}], T = {nodes}")));
        }
        Ok(ConeQuadrature { t_min, t_max, nodes })
    }

    /// `[h, 4L]` with `T` nodes.
    pub fn for_domain(domain: &DomainSpec, nodes: usize) -> Self {
        ConeQuadrature { t_min: domain.h(), t_max: 4.0 * domain.half_extent(), nodes }
    }

    /// Step in `ln t`.
    pub fn log_step(&self) -> f64 {
        (self.t_max / self.t_min).ln() / self.nodes as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        (self.t_min.ln() + (i as f64 + 0.5) * self.log_step()).exp()
    }

    pub fn node_values(&self) -> Vec<f64> {
        (0..self.nodes).map(|i| self.node(i)).collect()
    }
}

/// Radial cutoff `Φ` between `1_{B(0,1)}` and `1_{B(0,2)}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BumpProfile {
    /// `C^∞` transition on `1 ≤ |z| < 2`.
    Smooth,
    /// `1_{B(0,2)}`.
    UpperIndicator,
    /// `1_{B(0,1)}`.
    LowerIndicator,
}

fn flat(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

impl BumpProfile {
    /// `Φ(z)` with `|z| = dist / radius`; both indicator tests compare `dist`
    /// against `radius` and `2·radius` directly so every aperture shares them.
    pub fn eval(self, dist: f64, radius: f64) -> f64 {
        if dist < radius {
            return 1.0;
        }
        if dist >= 2.0 * radius {
            return 0.0;
        }
        match self {
            BumpProfile::UpperIndicator => 1.0,
            BumpProfile::LowerIndicator => 0.0,
            BumpProfile::Smooth => {
                let z = dist / radius;
                let a = flat(2.0 - z);
                let b = flat(z - 1.0);
                (a / (a + b)).clamp(0.0, 1.0)
            }
        }
    }
}

/// Truncation terms of the discrete cone integrals, in squared units.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TailBounds {
    /// Bound on the energy at `y` outside the domain box.
    pub outside_domain: f64,
    /// Bound on the energy at `t > t_max`.
    pub above_t_max: f64,
    /// Estimate (not a bound) of the energy at `t < t_min`, extrapolating the
    /// smallest node's density over one unit of `ln t`.
    pub below_t_min: f64,
}

/// Node energies `e_i[c] = |ψ_{t_i}(f⃗)(y_c)|² Δ hⁿ / t_iⁿ`.
#[derive(Clone, Debug)]
pub struct ConeEnergy {
    pub domain: DomainSpec,
    pub quad: ConeQuadrature,
    pub nodes: Vec<f64>,
    pub energy: Vec<Vec<f64>>,
    pub tails: TailBounds,
    /// `|x − y|` for each cell offset `(|a|, |b|)` at flat index `a + N b`.
    pub offsets: Vec<f64>,
}

fn convolve_axis(domain: &DomainSpec, input: &[f64], weights: &[f64], axis: usize) -> Vec<f64> {
    let nc = domain.cells_per_axis();
    let centre = nc - 1;
    let first = weights.iter().position(|w| *w != 0.0);
    let Some(first) = first else {
        return vec![0.0; input.len()];
    };
    let last = weights.iter().rposition(|w| *w != 0.0).unwrap();
    let (dlo, dhi) = (first as i64 - centre as i64, last as i64 - centre as i64);
    let mut out = vec![0.0; input.len()];
    let lines = input.len() / nc;
    for line in 0..lines {
        let idx = |i: usize| if axis == 0 { line * nc + i } else { i * nc + line };
        for i in 0..nc {
            let j_lo = (i as i64 - dhi).max(0) as usize;
            let j_hi = (i as i64 - dlo).min(nc as i64 - 1);
            if j_hi < j_lo as i64 {
                continue;
            }
            let mut acc = 0.0;
            for j in j_lo..=j_hi as usize {
                acc += input[idx(j)] * weights[i + centre - j];
            }
            out[idx(i)] = acc;
        }
    }
    out
}

fn check_inputs(kernel: &MultilinearKernel, fs: &[&GridFunction]) -> Result<DomainSpec> {
    if fs.len() != kernel.m {
        return Err(LabError::InvalidArgument(format!("kernel is {}-linear, got {} inputs", kernel.m, fs.len())));
    }
    let d = *fs[0].domain();
    if fs.iter().any(|f| *f.domain() != d) {
        return Err(LabError::DomainMismatch);
    }
    if d.dim() != kernel.n {
        return Err(LabError::DomainMismatch);
    }
    Ok(d)
}

/// Per-slot smoothed inputs `f_j * ψ^{(j)}_t` at every cell centre.
fn slot_convolutions(kernel: &MultilinearKernel, fs: &[&GridFunction], t: f64) -> Vec<Vec<f64>> {
    let d = *fs[0].domain();
    fs.iter()
        .enumerate()
        .map(|(j, f)| {
            let mut cur = f.samples().to_vec();
            for axis in 0..d.dim() {
                let w = kernel.cell_weights(j, axis, t, d.h(), d.cells_per_axis());
                cur = convolve_axis(&d, &cur, &w, axis);
            }
            cur
        })
        .collect()
}

/// `ψ_t(f⃗)` at every cell centre, exact for piecewise-constant inputs.
pub fn psi_t_apply(kernel: &MultilinearKernel, fs: &[&GridFunction], t: f64) -> Result<GridFunction> {
    let d = check_inputs(kernel, fs)?;
    if !(t > 0.0) {
        return Err(LabError::InvalidArgument(format!("scale t = {t} must be positive")));
    }
    let convs = slot_convolutions(kernel, fs, t);
    let out = (0..d.cell_count()).map(|c| convs.iter().map(|v| v[c]).product()).collect();
    GridFunction::new(d, out)
}

fn sup_bound(kernel: &MultilinearKernel, fs: &[&GridFunction], t: f64) -> f64 {
    let d = *fs[0].domain();
    fs.iter()
        .enumerate()
        .map(|(j, f)| {
            let l1: f64 = (0..d.dim()).map(|k| kernel.cell_weights(j, k, t, d.h(), d.cells_per_axis()).iter().map(|w| w.abs()).sum::<f64>()).product();
            f.max_abs() * l1
        })
        .product()
}

fn kernel_sup(kernel: &MultilinearKernel) -> f64 {
    let mut v = kernel.amplitude.abs();
    for j in 0..kernel.m {
        for (k, (p, c)) in kernel.axis_profiles(j).iter().enumerate() {
            let peak = match p {
                crate::sqfn::kernel::Profile::Wave => 8.0,
                crate::sqfn::kernel::Profile::Bell => 1.0,
                crate::sqfn::kernel::Profile::Bump => 35.0 / 32.0,
            };
            let step = if j == 0 && k == 0 { kernel.jump.abs() } else { 0.0 };
            v *= c * peak + step;
        }
    }
    v
}

impl ConeEnergy {
    pub fn new(kernel: &MultilinearKernel, fs: &[&GridFunction], quad: &ConeQuadrature) -> Result<Self> {
        let d = check_inputs(kernel, fs)?;
        let nodes = quad.node_values();
        let delta = quad.log_step();
        let n = d.dim() as i32;
        let h = d.h();
        let hn = d.cell_measure();
        let energy: Vec<Vec<f64>> = par::map_slice(&nodes, |&t| {
            let convs = slot_convolutions(kernel, fs, t);
            let scale = delta * hn / t.powi(n);
            (0..d.cell_count())
                .map(|c| {
                    let v: f64 = convs.iter().map(|s| s[c]).product();
                    v * v * scale
                })
                .collect()
        });
        let l = d.half_extent();
        let s = kernel.scale();
        let outside_domain: f64 = nodes
            .iter()
            .map(|&t| {
                let b = sup_bound(kernel, fs, t);
                let meas = (2.0 * l + 2.0 * t / s).powi(n) - (2.0 * l).powi(n);
                b * b * meas * delta / t.powi(n)
            })
            .sum();
        let mn = (kernel.m * kernel.n) as i32;
        let l1: f64 = fs.iter().map(|f| f.samples().iter().map(|v| v.abs()).sum::<f64>() * hn).product();
        let k = kernel_sup(kernel) * l1;
        let c = 2.0 * l / quad.t_max + 2.0 / s;
        let above_t_max = k * k * c.powi(n) / (2.0 * mn as f64 * quad.t_max.powi(2 * mn));
        let below_t_min = energy.first().map(|e| e.iter().sum::<f64>() / delta).unwrap_or(0.0);
        let nc = d.cells_per_axis();
        let offsets = (0..d.cell_count())
            .map(|idx| {
                let (a, b) = ((idx % nc) as f64, (idx / nc) as f64);
                h * (a * a + b * b).sqrt()
            })
            .collect();
        Ok(ConeEnergy { domain: d, quad: *quad, nodes, energy, tails: TailBounds { outside_domain, above_t_max, below_t_min }, offsets })
    }

    /// `(Σ_i Σ_c weight(i, offset, |x − y_c|) e_i[c])^{1/2}` per cell `x`, summed
    /// in a fixed order; `offset` indexes [`ConeEnergy::offsets`] and `reach(i)`
    /// bounds the distances with nonzero weight.
    pub fn cone_sum<W, R>(&self, weight: W, reach: R) -> GridFunction
    where
        W: Fn(usize, usize, f64) -> f64 + Sync + Send,
        R: Fn(usize) -> f64 + Sync + Send,
    {
        let d = self.domain;
        let nc = d.cells_per_axis();
        let reaches: Vec<usize> = (0..self.nodes.len()).map(|i| (reach(i) / d.h()).ceil().min((nc - 1) as f64) as usize + 1).collect();
        let out = par::map_range(d.cell_count(), |x| {
            let [x0, x1] = d.unflatten(x);
            let mut acc = 0.0;
            for (i, e) in self.energy.iter().enumerate() {
                let r = reaches[i].min(nc - 1);
                let (a_lo, a_hi) = (x0.saturating_sub(r), (x0 + r).min(nc - 1));
                let (b_lo, b_hi) = if d.dim() == 2 { (x1.saturating_sub(r), (x1 + r).min(nc - 1)) } else { (0, 0) };
                for b in b_lo..=b_hi {
                    let db = b.abs_diff(x1);
                    for a in a_lo..=a_hi {
                        let off = a.abs_diff(x0) + nc * db;
                        let w = weight(i, off, self.offsets[off]);
                        if w != 0.0 {
                            acc += w * e[a + nc * b];
                        }
                    }
                }
            }
            acc.sqrt()
        });
        GridFunction::weight(d, out).expect("cone sums are finite")
    }
}
