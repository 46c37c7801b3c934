//! Sparse families and their disjoint major subsets `E_Q`.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::dyadic::grid::DyadicCube;
use crate::error::{LabError, Result};
use crate::gridfn::DomainSpec;

/// A finite family of cubes from one grid with a sparsity target `η`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseFamily {
    pub domain: DomainSpec,
    pub cubes: Vec<DyadicCube>,
    pub eta: f64,
}

/// Outcome of [`verify_sparse`].
#[derive(Clone, Debug, Serialize)]
pub struct SparsityReport {
    pub pass: bool,
    pub min_ratio: f64,
    pub worst: Option<DyadicCube>,
}

impl SparseFamily {
    /// Deduplicated, sorted family.
    pub fn new(domain: DomainSpec, cubes: Vec<DyadicCube>, eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta < 1.0) {
            return Err(LabError::InvalidArgument(format!("sparsity {eta} must lie in (0,1)")));
        }
        if let Some(first) = cubes.first() {
            if cubes.iter().any(|q| !q.same_grid(first)) {
                return Err(LabError::MixedGrids);
            }
            if first.n != domain.dim() {
                return Err(LabError::DomainMismatch);
            }
        }
        let set: BTreeSet<DyadicCube> = cubes.into_iter().collect();
        Ok(SparseFamily { domain, cubes: set.into_iter().collect(), eta })
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    /// JSON list of cube records.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.cubes)?)
    }

    pub fn from_json(domain: DomainSpec, json: &str, eta: f64) -> Result<Self> {
        let cubes: Vec<DyadicCube> = serde_json::from_str(json)?;
        SparseFamily::new(domain, cubes, eta)
    }

    /// For each cube, the indices of its maximal proper descendants in the family.
    pub fn maximal_descendants(&self) -> Vec<Vec<usize>> {
        let index: BTreeMap<DyadicCube, usize> = self.cubes.iter().enumerate().map(|(i, q)| (*q, i)).collect();
        let k_min = self.cubes.iter().map(|q| q.level).min().unwrap_or(0);
        let mut kids = vec![Vec::new(); self.cubes.len()];
        for (i, q) in self.cubes.iter().enumerate() {
            let mut a = *q;
            while a.level > k_min {
                a = a.parent();
                if let Some(&p) = index.get(&a) {
                    kids[p].push(i);
                    break;
                }
            }
        }
        kids
    }

    /// Clipped `|E_Q|` for every cube.
    pub fn major_measures(&self) -> Vec<f64> {
        let kids = self.maximal_descendants();
        self.cubes
            .iter()
            .enumerate()
            .map(|(i, q)| {
                let lost: f64 = kids[i].iter().map(|&c| self.cubes[c].measure(&self.domain)).sum();
                (q.measure(&self.domain) - lost).max(0.0)
            })
            .collect()
    }

    /// Per-cell indicator of `E_Q` (cell-centre membership) for cube `i`.
    pub fn major_set_cells(&self, i: usize, kids: &[Vec<usize>]) -> Vec<usize> {
        let d = &self.domain;
        let qb = self.cubes[i].bounds();
        let child_boxes: Vec<_> = kids[i].iter().map(|&c| self.cubes[c].bounds()).collect();
        d.overlaps(&self.cubes[i].clipped(d))
            .into_iter()
            .map(|(c, _)| c)
            .filter(|&c| {
                let x = d.center(c);
                qb.contains_point(x) && !child_boxes.iter().any(|b| b.contains_point(x))
            })
            .collect()
    }
}

/// Checks `|E_Q| ≥ η|Q|` for every cube, with `E_Q` the part of `Q` not
/// covered by maximal proper descendants in the family.
pub fn verify_sparse(family: &SparseFamily) -> Result<SparsityReport> {
    if let Some(first) = family.cubes.first() {
        if family.cubes.iter().any(|q| !q.same_grid(first)) {
            return Err(LabError::MixedGrids);
        }
    }
    let major = family.major_measures();
    let mut min_ratio = 1.0f64;
    let mut worst = None;
    for (q, e) in family.cubes.iter().zip(&major) {
        let r = e / q.measure(&family.domain);
        if r < min_ratio {
            min_ratio = r;
            worst = Some(*q);
        }
    }
    let tol = 1e-12;
    Ok(SparsityReport { pass: min_ratio >= family.eta - tol, min_ratio, worst })
}

/// A random `1/2`-sparse family under `root`: every chosen cube keeps a random
/// set of at most half of its grandchildren, down to `depth` generations.
pub fn random_sparse_family<R: Rng>(domain: DomainSpec, root: DyadicCube, depth: u32, rng: &mut R) -> Result<SparseFamily> {
    let mut chosen = vec![root];
    let mut frontier = vec![root];
    let mut generation = 0;
    while generation + 2 <= depth && !frontier.is_empty() {
        let mut next = Vec::new();
        for q in &frontier {
            let mut grand: Vec<DyadicCube> = q.children().iter().flat_map(|c| c.children()).collect();
            grand.shuffle(rng);
            let take = rng.gen_range(0..=grand.len() / 2);
            next.extend(grand.into_iter().take(take));
        }
        chosen.extend(next.iter().copied());
        frontier = next;
        generation += 2;
    }
    SparseFamily::new(domain, chosen, 0.5)
}

/// Per-cell count of family cubes contained in `top` whose box holds the cell centre.
pub fn overlap_counts(family: &SparseFamily, top: &DyadicCube) -> Vec<(usize, u32)> {
    let d = &family.domain;
    let inner: Vec<_> = family.cubes.iter().filter(|q| top.contains(q)).map(|q| q.bounds()).collect();
    d.overlaps(&top.clipped(d))
        .into_iter()
        .map(|(c, _)| {
            let x = d.center(c);
            (c, inner.iter().filter(|b| b.contains_point(x)).count() as u32)
        })
        .collect()
}

/// `|{x ∈ top : count(x) > t}| / |top|` for `t = 0, 1, …` until it vanishes.
pub fn overlap_tail(family: &SparseFamily, top: &DyadicCube) -> Vec<(u32, f64)> {
    let counts = overlap_counts(family, top);
    let total = counts.len() as f64;
    let max = counts.iter().map(|c| c.1).max().unwrap_or(0);
    (0..max).map(|t| (t, counts.iter().filter(|c| c.1 > t).count() as f64 / total)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dom() -> DomainSpec {
        DomainSpec::new(1, 1.0, 64).unwrap()
    }

    #[test]
    fn single_cube_is_fully_sparse() {
        let q = DyadicCube::new(1, [0, 0], 0, [0, 0]);
        let r = verify_sparse(&SparseFamily::new(dom(), vec![q], 0.5).unwrap()).unwrap();
        assert!(r.pass);
        assert_eq!(r.min_ratio, 1.0);
    }

    #[test]
    fn cube_with_all_children_fails() {
        let q = DyadicCube::new(1, [0, 0], 0, [0, 0]);
        let mut cubes = vec![q];
        cubes.extend(q.children());
        let r = verify_sparse(&SparseFamily::new(dom(), cubes, 0.75).unwrap()).unwrap();
        assert!(!r.pass);
        assert_eq!(r.min_ratio, 0.0);
        assert_eq!(r.worst, Some(q));
    }

    #[test]
    fn mixed_grids_rejected() {
        let a = DyadicCube::new(1, [0, 0], 0, [0, 0]);
        let b = DyadicCube::new(1, [1, 0], 0, [0, 0]);
        assert!(matches!(SparseFamily::new(dom(), vec![a, b], 0.5), Err(LabError::MixedGrids)));
    }

    #[test]
    fn random_families_are_half_sparse() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let root = DyadicCube::new(1, [0, 0], 0, [0, 0]);
        for _ in 0..20 {
            let fam = random_sparse_family(dom(), root, 6, &mut rng).unwrap();
            assert!(verify_sparse(&fam).unwrap().pass);
        }
    }

    #[test]
    fn json_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let root = DyadicCube::new(1, [0, 0], 0, [-1, 0]);
        let fam = random_sparse_family(dom(), root, 4, &mut rng).unwrap();
        let back = SparseFamily::from_json(dom(), &fam.to_json().unwrap(), 0.5).unwrap();
        assert_eq!(fam, back);
    }
}
