//! Independent brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use lplab::dyadic::DyadicCube;
use lplab::orlicz::YoungFunction;
use lplab::sqfn::MultilinearKernel;
use lplab::{AxisBox, DomainSpec, GridFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Largest grid the exhaustive oracles run on.
pub const ORACLE_MAX_CELLS: usize = 64;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

pub fn random_function<R: Rng>(d: &DomainSpec, rng: &mut R) -> GridFunction {
    GridFunction::new(*d, (0..d.cell_count()).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap()
}

pub fn random_weight<R: Rng>(d: &DomainSpec, rng: &mut R) -> GridFunction {
    GridFunction::weight(*d, (0..d.cell_count()).map(|_| rng.gen_range(0.1..3.0)).collect()).unwrap()
}

/// Cell `c` as a box, from the domain parameters alone.
pub fn cell_box(d: &DomainSpec, c: usize) -> AxisBox {
    let n = d.dim();
    let nc = d.cells_per_axis();
    let h = 2.0 * d.half_extent() / nc as f64;
    let ij = [c % nc, c / nc];
    let mut lo = [0.0; 2];
    let mut hi = [0.0; 2];
    for k in 0..n {
        lo[k] = -d.half_extent() + ij[k] as f64 * h;
        hi[k] = lo[k] + h;
    }
    AxisBox::new(n, lo, hi)
}

/// Exact overlap measure of cell `c` with `b`.
pub fn overlap(d: &DomainSpec, c: usize, b: &AxisBox) -> f64 {
    let cb = cell_box(d, c);
    (0..d.dim()).map(|k| (cb.hi[k].min(b.hi[k]) - cb.lo[k].max(b.lo[k])).max(0.0)).product()
}

/// Whether cell `c` meets `b` in positive measure (relative to the cell size).
pub fn touches(d: &DomainSpec, c: usize, b: &AxisBox) -> bool {
    let cb = cell_box(d, c);
    let h = 2.0 * d.half_extent() / d.cells_per_axis() as f64;
    (0..d.dim()).all(|k| cb.hi[k].min(b.hi[k]) - cb.lo[k].max(b.lo[k]) > 1e-9 * h)
}

pub fn integral_over(f: &GridFunction, b: &AxisBox) -> f64 {
    let d = f.domain();
    (0..d.cell_count()).map(|c| f.value(c) * overlap(d, c, b)).sum()
}

/// `(value, overlap measure)` pairs of `f` on `b`.
pub fn pairs_on(f: &GridFunction, b: &AxisBox) -> Vec<(f64, f64)> {
    let d = f.domain();
    (0..d.cell_count()).filter(|&c| touches(d, c, b)).map(|c| (f.value(c), overlap(d, c, b))).collect()
}

/// A clipped dyadic cube from the closed-form lattice `2^{-k}(l + (-1)^k j / 3)`.
#[derive(Clone, Debug)]
pub struct OracleCube {
    pub cube: DyadicCube,
    pub bx: AxisBox,
    pub meas: f64,
}

fn edge(k: i32, j: u8, l: i64) -> f64 {
    let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    2f64.powi(-k) * (l as f64 + sign * j as f64 / 3.0)
}

/// Unclipped box of a cube from the closed-form lattice.
pub fn cube_box(q: &DyadicCube) -> AxisBox {
    let mut lo = [0.0; 2];
    let mut hi = [0.0; 2];
    for a in 0..q.n {
        lo[a] = edge(q.level, q.shift[a], q.position[a]);
        hi[a] = edge(q.level, q.shift[a], q.position[a] + 1);
    }
    AxisBox::new(q.n, lo, hi)
}

/// Every cube of every shifted grid at levels `k_lo..=k_hi` meeting the domain.
pub fn all_cubes(d: &DomainSpec, k_lo: i32, k_hi: i32) -> Vec<OracleCube> {
    let n = d.dim();
    let l = d.half_extent();
    let h = 2.0 * l / d.cells_per_axis() as f64;
    let dom = AxisBox::new(n, [-l, -l], [l, l]);
    let shifts: Vec<[u8; 2]> = if n == 1 { (0..3).map(|j| [j, 0]).collect() } else { (0..9).map(|j| [j % 3, j / 3]).collect() };
    let mut out = Vec::new();
    for shift in shifts {
        for k in k_lo..=k_hi {
            let side = 2f64.powi(-k);
            let range = |_: usize| ((-l / side).floor() as i64 - 2)..=((l / side).ceil() as i64 + 2);
            let ys: Vec<i64> = if n == 2 { range(1).collect() } else { vec![0] };
            for ly in ys {
                for lx in range(0) {
                    let mut lo = [0.0; 2];
                    let mut hi = [0.0; 2];
                    for (a, pos) in [lx, ly].iter().enumerate().take(n) {
                        lo[a] = edge(k, shift[a], *pos);
                        hi[a] = edge(k, shift[a], pos + 1);
                    }
                    let bx = AxisBox::new(n, lo, hi).intersect(&dom);
                    if (0..n).all(|a| bx.hi[a] - bx.lo[a] > 1e-9 * h) {
                        let meas = (0..n).map(|a| bx.hi[a] - bx.lo[a]).product();
                        out.push(OracleCube { cube: DyadicCube::new(n, shift, k, [lx, ly]), bx, meas });
                    }
                }
            }
        }
    }
    out
}

pub fn standard_cubes(d: &DomainSpec) -> Vec<OracleCube> {
    all_cubes(d, d.coarsest_level(), d.finest_level())
}

/// Per cell, `sup` of `value(cube)` over cubes meeting the cell in positive measure.
pub fn touching_sup_oracle<F: Fn(&OracleCube) -> f64>(d: &DomainSpec, cubes: &[OracleCube], value: F) -> Vec<f64> {
    let mut out = vec![f64::NEG_INFINITY; d.cell_count()];
    for q in cubes {
        let v = value(q);
        for (c, o) in out.iter_mut().enumerate() {
            if touches(d, c, &q.bx) && v > *o {
                *o = v;
            }
        }
    }
    out
}

/// `sup_Q ∏ ⟨|f_i|⟩_Q^{e_i}` by an exhaustive cube loop.
pub fn maximal_oracle(fs: &[&GridFunction], exps: &[f64]) -> Vec<f64> {
    let d = *fs[0].domain();
    let cubes = standard_cubes(&d);
    let abs: Vec<GridFunction> = fs.iter().map(|f| f.abs()).collect();
    touching_sup_oracle(&d, &cubes, |q| abs.iter().zip(exps).map(|(f, &e)| if e == 0.0 { 1.0 } else { (integral_over(f, &q.bx) / q.meas).powf(e) }).product())
}

/// Luxemburg norm by plain bisection on `⟨Φ(|f|/λ)⟩ ≤ 1`.
pub fn luxemburg_oracle(pairs: &[(f64, f64)], total: f64, phi: &YoungFunction) -> f64 {
    let avg = |lam: f64| pairs.iter().map(|&(v, m)| phi.eval(v.abs() / lam) * m).sum::<f64>() / total;
    if pairs.iter().all(|p| p.0 == 0.0) {
        return 0.0;
    }
    let mut hi = 1.0f64;
    while avg(hi) > 1.0 {
        hi *= 2.0;
    }
    let mut lo = hi;
    while avg(lo) <= 1.0 {
        lo /= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if avg(mid) <= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// `|{x : |f| > α}|` over `(value, measure)` pairs.
pub fn level_measure(pairs: &[(f64, f64)], alpha: f64) -> f64 {
    pairs.iter().filter(|p| p.0.abs() > alpha).map(|p| p.1).sum()
}

/// `f*(t)` by scanning the candidate levels `{0} ∪ {|values|}`; measures within `1e-12` of the total tie.
pub fn rearrangement_oracle(pairs: &[(f64, f64)], t: f64) -> f64 {
    let mut cands: Vec<f64> = pairs.iter().map(|p| p.0.abs()).collect();
    cands.push(0.0);
    cands.sort_by(f64::total_cmp);
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    cands.into_iter().find(|&a| level_measure(pairs, a) < t - 1e-12 * total).unwrap_or(f64::INFINITY)
}

/// `ω_λ = inf_c ((f − c))^*(λ|Q|)`, scanning `c` over all values and pairwise midpoints.
pub fn oscillation_oracle(pairs: &[(f64, f64)], lambda: f64) -> f64 {
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    let vals: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mut best = f64::INFINITY;
    for (i, a) in vals.iter().enumerate() {
        for b in &vals[i..] {
            let c = 0.5 * (a + b);
            let shifted: Vec<(f64, f64)> = pairs.iter().map(|&(v, m)| (v - c, m)).collect();
            best = best.min(rearrangement_oracle(&shifted, lambda * total));
        }
    }
    best
}

/// `inf_c ⟨|g − c|⟩` over `c` in the sample values.
pub fn mean_deviation_oracle(pairs: &[(f64, f64)]) -> f64 {
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    pairs.iter().map(|&(c, _)| pairs.iter().map(|&(v, m)| (v - c).abs() * m).sum::<f64>() / total).fold(f64::INFINITY, f64::min)
}

const GL5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// Gauss–Legendre nodes over `[a, b]` split at `breaks`.
fn gl_nodes(a: f64, b: f64, breaks: &[f64]) -> Vec<(f64, f64)> {
    let mut cuts = vec![a];
    cuts.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    let mut out = Vec::new();
    for w in cuts.windows(2) {
        let (mid, half) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
        for (x, wt) in GL5 {
            out.push((mid + half * x, half * wt));
        }
    }
    out
}

/// `ψ_t(f⃗)(x)` at every cell centre by direct cell-pair summation of
/// `∫ t^{-mn} ψ(x/t, y⃗/t) ∏ f_j(y_j) dy⃗`, with Gauss–Legendre quadrature
/// split at every kink of the kernel profiles.
pub fn psi_oracle(kernel: &MultilinearKernel, fs: &[&GridFunction], t: f64) -> Vec<f64> {
    let d = *fs[0].domain();
    let n = d.dim();
    let m = fs.len();
    let s = kernel.scale();
    let cells = d.cell_count();
    let mn = (m * n) as i32;
    (0..cells)
        .map(|x| {
            let xc = d.center(x);
            let xs: Vec<f64> = xc[..n].iter().map(|v| v / t).collect();
            let mut total = 0.0;
            let mut idx = vec![0usize; m];
            loop {
                let mut prod_f = 1.0;
                for (j, &c) in idx.iter().enumerate() {
                    prod_f *= fs[j].value(c);
                }
                if prod_f != 0.0 {
                    let boxes: Vec<AxisBox> = idx.iter().map(|&c| cell_box(&d, c)).collect();
                    let mut axes: Vec<Vec<(f64, f64)>> = Vec::new();
                    for (j, b) in boxes.iter().enumerate() {
                        for k in 0..n {
                            let mut breaks: Vec<f64> = [-1.0, 1.0].iter().map(|u| xc[k] - u * t / s).collect();
                            if j == 0 && k == 0 {
                                breaks.extend([0.0, 0.5].iter().map(|u| xc[k] - u * t / s));
                            }
                            axes.push(gl_nodes(b.lo[k], b.hi[k], &breaks));
                        }
                    }
                    let mut pos = vec![0usize; axes.len()];
                    let mut acc = 0.0;
                    loop {
                        let mut wt = 1.0;
                        let ys: Vec<Vec<f64>> = (0..m)
                            .map(|j| {
                                (0..n)
                                    .map(|k| {
                                        let (y, w) = axes[j * n + k][pos[j * n + k]];
                                        wt *= w;
                                        y / t
                                    })
                                    .collect()
                            })
                            .collect();
                        acc += wt * kernel.eval(&xs, &ys);
                        let mut a = 0;
                        while a < pos.len() {
                            pos[a] += 1;
                            if pos[a] < axes[a].len() {
                                break;
                            }
                            pos[a] = 0;
                            a += 1;
                        }
                        if a == pos.len() {
                            break;
                        }
                    }
                    total += prod_f * acc;
                }
                let mut a = 0;
                while a < m {
                    idx[a] += 1;
                    if idx[a] < cells {
                        break;
                    }
                    idx[a] = 0;
                    a += 1;
                }
                if a == m {
                    break;
                }
            }
            total * t.powi(-mn)
        })
        .collect()
}
