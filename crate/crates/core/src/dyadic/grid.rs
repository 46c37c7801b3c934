//! Shifted dyadic grids `D^j`, cubes, and per-level lattices clipped to the domain.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::gridfn::{side, AxisBox, DomainSpec, TOUCH_TOL};
use crate::par;

/// A cube `2^-k ([0,1)^n + l + (-1)^k j/3)` of the grid with shift `j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "CubeRecord", into = "CubeRecord")]
pub struct DyadicCube {
    pub n: usize,
    pub shift: [u8; 2],
    pub level: i32,
    pub position: [i64; 2],
}

#[derive(Serialize, Deserialize)]
struct CubeRecord {
    grid_shift: Vec<u8>,
    level: i32,
    position: Vec<i64>,
}

impl TryFrom<CubeRecord> for DyadicCube {
    type Error = LabError;
    fn try_from(r: CubeRecord) -> Result<Self> {
        let n = r.grid_shift.len();
        if !(n == 1 || n == 2) || r.position.len() != n {
            return Err(LabError::InvalidArgument("cube record needs matching 1- or 2-entry shift and position".into()));
        }
        if r.grid_shift.iter().any(|&j| j > 2) {
            return Err(LabError::InvalidArgument("grid shift entries must lie in {0,1,2}".into()));
        }
        let mut shift = [0u8; 2];
        let mut position = [0i64; 2];
        shift[..n].copy_from_slice(&r.grid_shift);
        position[..n].copy_from_slice(&r.position);
        Ok(DyadicCube { n, shift, level: r.level, position })
    }
}

impl From<DyadicCube> for CubeRecord {
    fn from(q: DyadicCube) -> Self {
        CubeRecord { grid_shift: q.shift[..q.n].to_vec(), level: q.level, position: q.position[..q.n].to_vec() }
    }
}

impl Ord for DyadicCube {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.n, self.shift, self.level, self.position[1], self.position[0]).cmp(&(other.n, other.shift, other.level, other.position[1], other.position[0]))
    }
}

impl PartialOrd for DyadicCube {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn sign(level: i32) -> i64 {
    if level.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

/// Left edge of lattice interval `l` at `level` for shift `j`.
///
/// Written as an integer times `2^-k/3` so that a parent and its children
/// share bit-identical edges.
pub fn lattice_edge(level: i32, shift: u8, l: i64) -> f64 {
    if shift == 0 {
        l as f64 * side(level)
    } else {
        (3 * l + sign(level) * shift as i64) as f64 * (side(level) / 3.0)
    }
}

impl DyadicCube {
    pub fn new(n: usize, shift: [u8; 2], level: i32, position: [i64; 2]) -> Self {
        DyadicCube { n, shift, level, position }
    }

    pub fn side(&self) -> f64 {
        side(self.level)
    }

    /// Unclipped box.
    pub fn bounds(&self) -> AxisBox {
        let mut lo = [0.0; 2];
        let mut hi = [0.0; 2];
        for d in 0..self.n {
            lo[d] = lattice_edge(self.level, self.shift[d], self.position[d]);
            hi[d] = lattice_edge(self.level, self.shift[d], self.position[d] + 1);
        }
        AxisBox::new(self.n, lo, hi)
    }

    /// Box intersected with the domain.
    pub fn clipped(&self, domain: &DomainSpec) -> AxisBox {
        self.bounds().intersect(&domain.domain_box())
    }

    /// Clipped measure.
    pub fn measure(&self, domain: &DomainSpec) -> f64 {
        self.clipped(domain).measure()
    }

    pub fn parent(&self) -> DyadicCube {
        let s = sign(self.level - 1);
        let mut p = *self;
        p.level -= 1;
        for d in 0..self.n {
            p.position[d] = (self.position[d] - s * self.shift[d] as i64).div_euclid(2);
        }
        p
    }

    /// Ancestor at a coarser (or equal) level.
    pub fn ancestor(&self, level: i32) -> DyadicCube {
        let mut q = *self;
        while q.level > level {
            q = q.parent();
        }
        q
    }

    pub fn children(&self) -> Vec<DyadicCube> {
        let s = sign(self.level);
        let base: Vec<i64> = (0..self.n).map(|d| 2 * self.position[d] + s * self.shift[d] as i64).collect();
        let mut out = Vec::with_capacity(1 << self.n);
        for b in 0..(1usize << self.n) {
            let mut c = *self;
            c.level += 1;
            for d in 0..self.n {
                c.position[d] = base[d] + ((b >> d) & 1) as i64;
            }
            out.push(c);
        }
        out
    }

    /// True when `other` lies inside `self` in the same grid.
    pub fn contains(&self, other: &DyadicCube) -> bool {
        self.n == other.n && self.shift == other.shift && other.level >= self.level && other.ancestor(self.level) == *self
    }

    pub fn same_grid(&self, other: &DyadicCube) -> bool {
        self.n == other.n && self.shift == other.shift
    }
}

/// One of the `3^n` shifted dyadic grids with a level window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShiftedDyadicGrid {
    pub shift: [u8; 2],
    pub k_min: i32,
    pub k_max: i32,
}

/// The grids an operator enumerates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSet {
    pub grids: Vec<ShiftedDyadicGrid>,
}

impl GridSet {
    /// All `3^n` shifts, levels from side `≥ 4L` down to side `≥ h`.
    pub fn standard(domain: &DomainSpec) -> Self {
        Self::with_levels(domain, domain.coarsest_level(), domain.finest_level())
    }

    /// All `3^n` shifts over an explicit level window.
    pub fn with_levels(domain: &DomainSpec, k_min: i32, k_max: i32) -> Self {
        let shifts: Vec<[u8; 2]> = if domain.dim() == 1 { (0..3).map(|j| [j, 0]).collect() } else { (0..9).map(|j| [j % 3, j / 3]).collect() };
        GridSet { grids: shifts.into_iter().map(|shift| ShiftedDyadicGrid { shift, k_min, k_max }).collect() }
    }

    /// A single grid.
    pub fn single(shift: [u8; 2], k_min: i32, k_max: i32) -> Self {
        GridSet { grids: vec![ShiftedDyadicGrid { shift, k_min, k_max }] }
    }

    /// Every `(shift, level)` lattice, in deterministic order.
    pub fn lattices(&self, domain: &DomainSpec) -> Vec<LevelLattice> {
        let mut out = Vec::new();
        for g in &self.grids {
            for k in g.k_min..=g.k_max {
                out.push(LevelLattice::new(domain, g.shift, k));
            }
        }
        out
    }
}

/// Clipped interval of one axis position together with the cells it meets.
#[derive(Clone, Debug)]
pub struct AxisSpan {
    pub l: i64,
    pub lo: f64,
    pub hi: f64,
    pub cells: Vec<(usize, f64)>,
}

/// All cubes of one grid at one level that meet the domain in positive measure.
#[derive(Clone, Debug)]
pub struct LevelLattice {
    pub domain: DomainSpec,
    pub shift: [u8; 2],
    pub level: i32,
    axes: [Vec<AxisSpan>; 2],
}

impl LevelLattice {
    pub fn new(domain: &DomainSpec, shift: [u8; 2], level: i32) -> Self {
        let axis = |j: u8| -> Vec<AxisSpan> {
            let l_half = domain.half_extent();
            let tol = TOUCH_TOL * domain.h();
            let mut l = (-l_half / side(level)).floor() as i64 - 2;
            let mut spans = Vec::new();
            let mut cells = Vec::new();
            loop {
                let a = lattice_edge(level, j, l);
                if a >= l_half {
                    break;
                }
                let b = lattice_edge(level, j, l + 1);
                let lo = a.max(-l_half);
                let hi = b.min(l_half);
                if hi - lo > tol {
                    domain.axis_overlaps(a, b, &mut cells);
                    if !cells.is_empty() {
                        spans.push(AxisSpan { l, lo, hi, cells: cells.clone() });
                    }
                }
                l += 1;
            }
            spans
        };
        let first = axis(shift[0]);
        let second = if domain.dim() == 2 { axis(shift[1]) } else { vec![AxisSpan { l: 0, lo: 0.0, hi: 0.0, cells: vec![(0, 1.0)] }] };
        LevelLattice { domain: *domain, shift, level, axes: [first, second] }
    }

    pub fn len(&self) -> usize {
        self.axes[0].len() * self.axes[1].len()
    }

    /// Spans along axis `d` (a single dummy span for the unused axis when `n = 1`).
    pub fn spans(&self, d: usize) -> &[AxisSpan] {
        &self.axes[d]
    }

    /// Flat cube index from per-axis span indices.
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        ix + self.axes[0].len() * iy
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn split(&self, i: usize) -> (&AxisSpan, &AxisSpan) {
        let nx = self.axes[0].len();
        (&self.axes[0][i % nx], &self.axes[1][i / nx])
    }

    pub fn cube(&self, i: usize) -> DyadicCube {
        let (x, y) = self.split(i);
        let n = self.domain.dim();
        DyadicCube::new(n, self.shift, self.level, [x.l, if n == 2 { y.l } else { 0 }])
    }

    /// Clipped measure of cube `i`.
    pub fn measure(&self, i: usize) -> f64 {
        let (x, y) = self.split(i);
        if self.domain.dim() == 1 {
            x.hi - x.lo
        } else {
            (x.hi - x.lo) * (y.hi - y.lo)
        }
    }

    /// Visits `(cell, overlap measure)` for cube `i`.
    pub fn for_each_cell<F: FnMut(usize, f64)>(&self, i: usize, mut visit: F) {
        let (x, y) = self.split(i);
        if self.domain.dim() == 1 {
            for &(c, m) in &x.cells {
                visit(c, m);
            }
        } else {
            let n = self.domain.cells_per_axis();
            for &(cy, my) in &y.cells {
                for &(cx, mx) in &x.cells {
                    visit(cx + n * cy, mx * my);
                }
            }
        }
    }

    pub fn cells(&self, i: usize) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        self.for_each_cell(i, |c, m| out.push((c, m)));
        out
    }

    /// `(value, measure)` pairs of `f` on cube `i`.
    pub fn values(&self, samples: &[f64], i: usize) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        self.for_each_cell(i, |c, m| out.push((samples[c], m)));
        out
    }

    /// `∫_Q f` over the clipped cube.
    pub fn integral(&self, samples: &[f64], i: usize) -> f64 {
        let mut s = 0.0;
        self.for_each_cell(i, |c, m| s += samples[c] * m);
        s
    }

    /// `⟨f⟩_Q` over the clipped cube.
    pub fn average(&self, samples: &[f64], i: usize) -> f64 {
        self.integral(samples, i) / self.measure(i)
    }
}

/// All cubes of `grid` meeting the domain at levels in `[k_lo, k_hi]`,
/// ordered by level, then row-major position.
pub fn enumerate_cubes(domain: &DomainSpec, grid: &ShiftedDyadicGrid, k_lo: i32, k_hi: i32) -> Result<Vec<DyadicCube>> {
    if k_lo > k_hi || k_lo < grid.k_min || k_hi > grid.k_max {
        return Err(LabError::InvalidArgument(format!("level range [{k_lo}, {k_hi}] outside grid window [{}, {}]", grid.k_min, grid.k_max)));
    }
    let mut out = Vec::new();
    for k in k_lo..=k_hi {
        let lat = LevelLattice::new(domain, grid.shift, k);
        out.extend((0..lat.len()).map(|i| lat.cube(i)));
    }
    Ok(out)
}

/// Per-cell supremum of `value(lattice, cube)` over cubes meeting the cell in
/// positive measure, together with the number of cubes visited.
pub fn touching_sup<F>(domain: &DomainSpec, grids: &GridSet, value: F) -> (Vec<f64>, usize)
where
    F: Fn(&LevelLattice, usize) -> f64 + Sync + Send,
{
    let mut out = vec![f64::NEG_INFINITY; domain.cell_count()];
    let mut count = 0;
    for lat in grids.lattices(domain) {
        let vals = par::map_range(lat.len(), |i| value(&lat, i));
        count += vals.len();
        for (i, v) in vals.into_iter().enumerate() {
            lat.for_each_cell(i, |c, _| {
                if v > out[c] {
                    out[c] = v;
                }
            });
        }
    }
    (out, count)
}

/// Supremum of `value` over every enumerated cube, with the cube count.
pub fn cube_sup<F>(domain: &DomainSpec, grids: &GridSet, value: F) -> (f64, usize)
where
    F: Fn(&LevelLattice, usize) -> f64 + Sync + Send,
{
    let mut best = f64::NEG_INFINITY;
    let mut count = 0;
    for lat in grids.lattices(domain) {
        count += lat.len();
        best = best.max(par::max_range(lat.len(), |i| value(&lat, i)));
    }
    (best, count)
}
