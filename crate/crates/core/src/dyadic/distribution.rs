//! Order statistics of piecewise-constant data given as `(value, measure)` pairs.

use crate::dyadic::grid::DyadicCube;
use crate::gridfn::GridFunction;

/// Relative slack under which two measures count as equal.
const TIE: f64 = 1e-12;

fn sorted(pairs: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut v: Vec<(f64, f64)> = pairs.iter().copied().filter(|p| p.1 > 0.0).collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    v
}

/// Smallest value whose cumulative measure reaches half the total.
pub fn lower_median(pairs: &[(f64, f64)]) -> f64 {
    let v = sorted(pairs);
    let total: f64 = v.iter().map(|p| p.1).sum();
    let mut cum = 0.0;
    for &(x, m) in &v {
        cum += m;
        if cum >= (0.5 - TIE) * total {
            return x;
        }
    }
    v.last().map_or(0.0, |p| p.0)
}

/// Decreasing rearrangement `inf{α > 0 : |{|f| > α}| < t}` of the pairs.
pub fn rearrangement_of(pairs: &[(f64, f64)], t: f64) -> f64 {
    let mags: Vec<(f64, f64)> = pairs.iter().map(|&(v, m)| (v.abs(), m)).collect();
    let v = sorted(&mags);
    let total: f64 = v.iter().map(|p| p.1).sum();
    let t = t - TIE * total;
    if total < t {
        return 0.0;
    }
    let mut below = 0.0;
    let mut k = 0;
    while k < v.len() {
        let a = v[k].0;
        while k < v.len() && v[k].0 == a {
            below += v[k].1;
            k += 1;
        }
        if total - below < t {
            return a;
        }
    }
    v.last().map_or(0.0, |p| p.0)
}

/// Local mean oscillation `ω_λ` with an optimal centre `c`.
///
/// Finds the shortest closed value window whose complement carries less than
/// `λ` of the total measure; `ω` is its half-length and `c` its midpoint.
pub fn oscillation_window(pairs: &[(f64, f64)], lambda: f64) -> (f64, f64) {
    let v = sorted(pairs);
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let mut vals: Vec<f64> = Vec::new();
    let mut mass: Vec<f64> = Vec::new();
    for &(x, m) in &v {
        if vals.last() == Some(&x) {
            *mass.last_mut().unwrap() += m;
        } else {
            vals.push(x);
            mass.push(m);
        }
    }
    let k = vals.len();
    let mut prefix = vec![0.0; k + 1];
    for i in 0..k {
        prefix[i + 1] = prefix[i] + mass[i];
    }
    let total = prefix[k];
    let budget = (lambda - TIE) * total;
    let mut best = (f64::INFINITY, 0.0);
    let mut j = 0;
    for i in 0..k {
        j = j.max(i);
        while j < k && prefix[i] + (total - prefix[j + 1]) >= budget {
            j += 1;
        }
        if j == k {
            break;
        }
        let half = 0.5 * (vals[j] - vals[i]);
        if half < best.0 {
            best = (half, 0.5 * (vals[i] + vals[j]));
        }
    }
    if best.0.is_infinite() {
        let half = 0.5 * (vals[k - 1] - vals[0]);
        return (half, 0.5 * (vals[k - 1] + vals[0]));
    }
    best
}

/// Values of `f` on the clipped cube `q`.
pub fn cube_values(f: &GridFunction, q: &DyadicCube) -> Vec<(f64, f64)> {
    f.values_on(&q.clipped(f.domain()))
}

/// Lower weighted median of `f` on `q`.
pub fn median(f: &GridFunction, q: &DyadicCube) -> f64 {
    lower_median(&cube_values(f, q))
}

/// Decreasing rearrangement `f*(t)` over the whole domain.
pub fn rearrangement(f: &GridFunction, t: f64) -> f64 {
    let cm = f.domain().cell_measure();
    let pairs: Vec<(f64, f64)> = f.samples().iter().map(|&v| (v, cm)).collect();
    rearrangement_of(&pairs, t)
}

/// `ω_λ(f; Q)`.
pub fn local_mean_oscillation(f: &GridFunction, q: &DyadicCube, lambda: f64) -> f64 {
    oscillation_window(&cube_values(f, q), lambda).0
}
