//! Factorized multilinear kernels `ψ(x, y⃗) = ψ₀(x − y₁) ∏_{j≥2} φ(x − y_j)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::numerics::gauss_legendre5;

/// One-dimensional profiles supported in `[-1, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Profile {
    /// `b(u) = (1 − u²)⁴`.
    Bell,
    /// `b''(u) = 8(1 − u²)²(7u² − 1)`, mean zero.
    Wave,
    /// `(35/32)(1 − u²)³`, unit mass.
    Bump,
}

impl Profile {
    pub fn eval(self, u: f64) -> f64 {
        if u.abs() >= 1.0 {
            return 0.0;
        }
        let s = 1.0 - u * u;
        match self {
            Profile::Bell => s.powi(4),
            Profile::Wave => 8.0 * s * s * (7.0 * u * u - 1.0),
            Profile::Bump => 35.0 / 32.0 * s * s * s,
        }
    }

    /// Antiderivative vanishing at `-1`, constant outside `[-1, 1]`.
    pub fn primitive(self, u: f64) -> f64 {
        let v = u.clamp(-1.0, 1.0);
        let odd = match self {
            Profile::Bell => {
                let v2 = v * v;
                v * (1.0 + v2 * (-4.0 / 3.0 + v2 * (6.0 / 5.0 + v2 * (-4.0 / 7.0 + v2 / 9.0))))
            }
            Profile::Wave => -8.0 * v * (1.0 - v * v).powi(3),
            Profile::Bump => {
                let v2 = v * v;
                35.0 / 32.0 * v * (1.0 + v2 * (-1.0 + v2 * (3.0 / 5.0 - v2 / 7.0)))
            }
        };
        match self {
            Profile::Bell => odd + 128.0 / 315.0,
            Profile::Wave => odd,
            Profile::Bump => odd + 0.5,
        }
    }

    /// Breakpoints where the profile loses smoothness.
    pub fn breakpoints(self) -> [f64; 2] {
        [-1.0, 1.0]
    }
}

/// Certified size and smoothness parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelBounds {
    pub a: f64,
    pub delta: f64,
    pub gamma: f64,
}

/// Support radius of every registry kernel factor.
pub const SUPPORT_RADIUS: f64 = 1.0;

/// Factorized kernel with an optional jump in the first factor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultilinearKernel {
    pub m: usize,
    pub n: usize,
    pub cancel: bool,
    pub amplitude: f64,
    /// Height of a step `1_{0 ≤ u < 1/2}` added to the first axis profile of the first factor.
    pub jump: f64,
    pub bounds: KernelBounds,
}

/// Certified bounds of the registry kernels, indexed by `(cancel, m, n)`.
/// Each value is about twice the worst sampled ratio over several seeds.
fn certified(cancel: bool, m: usize, n: usize) -> Option<KernelBounds> {
    let a = match (cancel, m, n) {
        (true, 1, 1) => 320.0,
        (true, 2, 1) => 1400.0,
        (true, 3, 1) => 12000.0,
        (true, 1, 2) => 500.0,
        (true, 2, 2) => 10000.0,
        (false, 1, 1) => 20.0,
        (false, 2, 1) => 100.0,
        (false, 3, 1) => 800.0,
        (false, 1, 2) => 60.0,
        (false, 2, 2) => 1500.0,
        _ => return None,
    };
    Some(KernelBounds { a, delta: 1.0, gamma: 1.0 })
}

impl MultilinearKernel {
    /// Registry ids `cancel:m:n` and `nocancel:m:n`.
    pub fn from_id(id: &str) -> Result<Self> {
        let parts: Vec<&str> = id.split(':').collect();
        let bad = || LabError::UnknownRegistryId(id.to_string());
        if parts.len() != 3 {
            return Err(bad());
        }
        let cancel = match parts[0] {
            "cancel" => true,
            "nocancel" => false,
            _ => return Err(bad()),
        };
        let m: usize = parts[1].parse().map_err(|_| bad())?;
        let n: usize = parts[2].parse().map_err(|_| bad())?;
        let bounds = certified(cancel, m, n).ok_or_else(bad)?;
        Ok(MultilinearKernel { m, n, cancel, amplitude: 1.0, jump: 0.0, bounds })
    }

    pub fn id(&self) -> String {
        format!("{}:{}:{}", if self.cancel { "cancel" } else { "nocancel" }, self.m, self.n)
    }

    pub fn zero(m: usize, n: usize) -> Self {
        MultilinearKernel { m, n, cancel: true, amplitude: 0.0, jump: 0.0, bounds: KernelBounds { a: 0.0, delta: 1.0, gamma: 1.0 } }
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.bounds.a *= amplitude.abs();
        self.amplitude = amplitude;
        self
    }

    pub fn with_jump(mut self, jump: f64) -> Self {
        self.jump = jump;
        self
    }

    /// Per-axis coordinate scale keeping the support in the unit ball.
    pub fn scale(&self) -> f64 {
        (self.n as f64).sqrt()
    }

    /// Profiles of slot `j` along each axis, with the per-axis coefficient.
    pub fn axis_profiles(&self, j: usize) -> Vec<(Profile, f64)> {
        let s = self.scale();
        (0..self.n).map(|k| if j == 0 && self.cancel { (if k == 0 { Profile::Wave } else { Profile::Bell }, 1.0) } else { (Profile::Bump, s) }).collect()
    }

    fn factor(&self, j: usize, z: &[f64]) -> f64 {
        let s = self.scale();
        self.axis_profiles(j)
            .iter()
            .zip(z)
            .enumerate()
            .map(|(k, ((p, c), zk))| {
                let u = s * zk;
                let step = if j == 0 && k == 0 && (0.0..0.5).contains(&u) { self.jump } else { 0.0 };
                c * p.eval(u) + step
            })
            .product()
    }

    /// `ψ(x, y⃗)`; `ys[j]` holds the `n` coordinates of `y_j`.
    pub fn eval(&self, x: &[f64], ys: &[Vec<f64>]) -> f64 {
        let mut v = self.amplitude;
        for (j, y) in ys.iter().enumerate() {
            let z: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
            v *= self.factor(j, &z);
            if v == 0.0 {
                return 0.0;
            }
        }
        v
    }

    /// `∫ ψ₀` in dimension one along the first axis, by Gauss–Legendre.
    pub fn first_factor_mass(&self) -> f64 {
        let s = self.scale();
        self.axis_profiles(0)
            .iter()
            .map(|(p, c)| {
                let g = |u: f64| c * p.eval(u);
                let pts = [-1.0, -0.5, 0.0, 0.5, 1.0];
                pts.windows(2).map(|w| gauss_legendre5(g, w[0], w[1])).sum::<f64>() / s
            })
            .product()
    }

    /// Exact cell weights of slot `j`, axis `k`, at scale `t`: entry `d + (N − 1)`
    /// is `∫_{cell offset d} t^{-1} c p(s(x − y)/t) dy` with `x − y` in `[(d−½)h, (d+½)h]`.
    pub fn cell_weights(&self, j: usize, k: usize, t: f64, h: f64, cells: usize) -> Vec<f64> {
        let s = self.scale();
        let (p, c) = self.axis_profiles(j)[k];
        let amp = if j == 0 && k == 0 { self.amplitude } else { 1.0 };
        let len = 2 * cells - 1;
        let mut w = Vec::with_capacity(len);
        for i in 0..len {
            let d = i as f64 - (cells as f64 - 1.0);
            let hi = s * (d + 0.5) * h / t;
            let lo = s * (d - 0.5) * h / t;
            w.push(amp * c / s * (p.primitive(hi) - p.primitive(lo)));
        }
        if j == 0 && k == 0 && self.jump != 0.0 {
            for (i, wi) in w.iter_mut().enumerate() {
                let d = i as f64 - (cells as f64 - 1.0);
                let hi = (s * (d + 0.5) * h / t).clamp(0.0, 0.5);
                let lo = (s * (d - 0.5) * h / t).clamp(0.0, 0.5);
                *wi += self.amplitude * self.jump / s * (hi - lo);
            }
        }
        w
    }
}

/// Worst sampled ratios of the size and smoothness conditions.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct KernelReport {
    pub a_obs: f64,
    pub size_ratio: f64,
    pub smooth_x_ratio: f64,
    pub smooth_y_ratio: f64,
    pub delta_ok: bool,
    pub gamma_ok: bool,
    pub pass: bool,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

struct Ratios<'a> {
    k: &'a MultilinearKernel,
    size: f64,
    sx: f64,
    sy: f64,
}

impl Ratios<'_> {
    fn denom(&self, x: &[f64], ys: &[Vec<f64>]) -> f64 {
        1.0 + ys.iter().map(|y| dist(x, y)).sum::<f64>()
    }

    fn max_dist(x: &[f64], ys: &[Vec<f64>]) -> f64 {
        ys.iter().map(|y| dist(x, y)).fold(0.0, f64::max)
    }

    fn size_at(&mut self, x: &[f64], ys: &[Vec<f64>]) {
        let b = self.k.bounds;
        let mn = (self.k.m * self.k.n) as f64;
        let r = self.k.eval(x, ys).abs() * self.denom(x, ys).powf(mn + b.delta);
        self.size = self.size.max(r);
    }

    fn smooth_x(&mut self, x: &[f64], x2: &[f64], ys: &[Vec<f64>]) {
        let step = dist(x, x2);
        if step == 0.0 || step >= 0.5 * Self::max_dist(x, ys) {
            return;
        }
        let b = self.k.bounds;
        let mn = (self.k.m * self.k.n) as f64;
        let diff = (self.k.eval(x, ys) - self.k.eval(x2, ys)).abs();
        let r = diff * self.denom(x, ys).powf(mn + b.delta + b.gamma) / step.powf(b.gamma);
        self.sx = self.sx.max(r);
    }

    fn smooth_y(&mut self, x: &[f64], ys: &[Vec<f64>], i: usize, yi: &[f64]) {
        let step = dist(&ys[i], yi);
        if step == 0.0 || step >= 0.5 * Self::max_dist(x, ys) {
            return;
        }
        let b = self.k.bounds;
        let mn = (self.k.m * self.k.n) as f64;
        let mut moved = ys.to_vec();
        moved[i] = yi.to_vec();
        let diff = (self.k.eval(x, ys) - self.k.eval(x, &moved)).abs();
        let r = diff * self.denom(x, ys).powf(mn + b.delta + b.gamma) / step.powf(b.gamma);
        self.sy = self.sy.max(r);
    }
}

/// Samples the size and smoothness ratios against the kernel's certified
/// bounds: `samples` random configurations plus line scans through the
/// first factor's singular set.
pub fn kernel_validate(kernel: &MultilinearKernel, samples: usize, seed: u64) -> KernelReport {
    let n = kernel.n;
    let m = kernel.m;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = Ratios { k: kernel, size: 0.0, sx: 0.0, sy: 0.0 };
    let point = |rng: &mut ChaCha8Rng, c: &[f64], rad: f64| -> Vec<f64> { c.iter().map(|v| v + rng.gen_range(-rad..rad)).collect() };
    let zero = vec![0.0; n];
    for _ in 0..samples {
        let x = point(&mut rng, &zero, 1.5);
        let ys: Vec<Vec<f64>> = (0..m).map(|_| point(&mut rng, &x, 1.2)).collect();
        r.size_at(&x, &ys);
        let step = 10f64.powf(rng.gen_range(-6.0..0.0));
        let dir: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let len = norm(&dir).max(1e-12);
        let x2: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + step * d / len).collect();
        r.smooth_x(&x, &x2, &ys);
        let i = rng.gen_range(0..m);
        let yi: Vec<f64> = ys[i].iter().zip(&dir).map(|(a, d)| a + step * d / len).collect();
        r.smooth_y(&x, &ys, i, &yi);
    }
    let steps = 100_000;
    let lo = -1.5;
    let dx = 3.0 / steps as f64;
    let mut ys: Vec<Vec<f64>> = vec![vec![0.0; n]; m];
    for y in ys.iter_mut().skip(1) {
        y[0] = 0.05;
    }
    for s in 0..steps {
        let mut x = vec![0.0; n];
        x[0] = lo + s as f64 * dx;
        let mut x2 = x.clone();
        x2[0] += dx;
        r.size_at(&x, &ys);
        r.smooth_x(&x, &x2, &ys);
        let mut y0 = ys[0].clone();
        y0[0] -= dx;
        r.smooth_y(&x, &ys, 0, &y0);
    }
    let a_obs = r.size.max(r.sx).max(r.sy);
    let a = kernel.bounds.a;
    KernelReport {
        a_obs,
        size_ratio: r.size,
        smooth_x_ratio: r.sx,
        smooth_y_ratio: r.sy,
        delta_ok: r.size <= a,
        gamma_ok: r.sx <= a && r.sy <= a,
        pass: a_obs <= a,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primitives_match_quadrature() {
        for p in [Profile::Bell, Profile::Wave, Profile::Bump] {
            for &u in &[-1.0f64, -0.3, 0.0, 0.42, 1.0] {
                let q = gauss_legendre5(|v| p.eval(v), -1.0, u.min(0.0)) + if u > 0.0 { gauss_legendre5(|v| p.eval(v), 0.0, u) } else { 0.0 };
                assert!((p.primitive(u) - q).abs() < 1e-12, "{p:?} {u}");
            }
        }
        assert!((Profile::Bump.primitive(1.0) - 1.0).abs() < 1e-15);
        assert!(Profile::Wave.primitive(1.0).abs() < 1e-15);
    }

    #[test]
    fn cancellation_factor_has_zero_mass() {
        for id in ["cancel:2:1", "cancel:1:2"] {
            assert!(MultilinearKernel::from_id(id).unwrap().first_factor_mass().abs() < 1e-10);
        }
        assert!((MultilinearKernel::from_id("nocancel:2:1").unwrap().first_factor_mass() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn zero_kernel_validates_trivially() {
        let r = kernel_validate(&MultilinearKernel::zero(2, 1), 1000, 1);
        assert_eq!(r.a_obs, 0.0);
        assert!(r.pass);
    }

    #[test]
    fn unknown_ids_are_rejected() {
        assert!(MultilinearKernel::from_id("cancel:9:9").is_err());
        assert!(MultilinearKernel::from_id("gauss:2:1").is_err());
    }
}
