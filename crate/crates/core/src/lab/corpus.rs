//! Seeded input functions and weights.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::gridfn::{AxisBox, DomainSpec, GridFunction};
use crate::weights::{generate_weight, ManifestEntry};

/// Generator for stream `stream` of a seed; streams never overlap.
pub fn case_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A trigonometric polynomial restricted to a window box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigPolynomial {
    /// `(amplitude, phase, frequency per axis)`.
    pub terms: Vec<(f64, f64, [f64; 2])>,
    pub offset: f64,
    pub window: AxisBox,
}

/// Number of modes in corpus polynomials.
pub const CORPUS_TERMS: usize = 6;

impl TrigPolynomial {
    /// Random modes with integer frequencies up to `CORPUS_TERMS` per window side.
    pub fn random<R: Rng>(window: AxisBox, rng: &mut R) -> Self {
        let n = window.n;
        let terms = (0..CORPUS_TERMS)
            .map(|_| {
                let mut freq = [0.0; 2];
                for (d, f) in freq.iter_mut().enumerate().take(n) {
                    let k = rng.gen_range(1..=CORPUS_TERMS) as f64;
                    *f = k * std::f64::consts::PI / (window.hi[d] - window.lo[d]);
                }
                (rng.gen_range(-1.0..1.0), rng.gen_range(0.0..std::f64::consts::TAU), freq)
            })
            .collect();
        TrigPolynomial { terms, offset: rng.gen_range(-0.5..0.5), window }
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        if !self.window.contains_point(x) {
            return 0.0;
        }
        let n = self.window.n;
        self.offset + self.terms.iter().map(|(a, ph, fr)| a * ((0..n).map(|d| fr[d] * (x[d] - self.window.lo[d])).sum::<f64>() + ph).cos()).sum::<f64>()
    }

    pub fn sample(&self, domain: &DomainSpec) -> Result<GridFunction> {
        GridFunction::from_fn(*domain, |x| self.eval(x))
    }
}

/// The centred cube `[-L/2, L/2)^n`.
pub fn half_window(domain: &DomainSpec) -> AxisBox {
    let l = domain.half_extent() / 2.0;
    AxisBox::new(domain.dim(), [-l, -l], [l, l])
}

/// One case of a corpus: `m` inputs and the weights of the manifest.
#[derive(Clone, Debug)]
pub struct Corpus {
    pub functions: Vec<GridFunction>,
    pub weights: Vec<GridFunction>,
}

/// Per-case inputs windowed to `window` and weights from `manifest`; case `c`
/// draws from stream `c` of `seed` and offsets random weight seeds by `c`.
pub fn generate_corpus(domain: &DomainSpec, m: usize, window: &AxisBox, manifest: &[ManifestEntry], seed: u64, case: u64) -> Result<Corpus> {
    let mut rng = case_rng(seed, case);
    let functions = (0..m).map(|_| TrigPolynomial::random(*window, &mut rng).sample(domain)).collect::<Result<Vec<_>>>()?;
    let weights = manifest
        .iter()
        .map(|e| {
            let mut e = e.clone();
            e.seed = e.seed.wrapping_add(case);
            generate_weight(&e.to_kind()?, domain)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Corpus { functions, weights })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_is_reproducible_and_windowed() {
        let d = DomainSpec::new(1, 1.0, 64).unwrap();
        let w = half_window(&d);
        let a = generate_corpus(&d, 2, &w, &[], 7, 3).unwrap();
        let b = generate_corpus(&d, 2, &w, &[], 7, 3).unwrap();
        assert_eq!(a.functions, b.functions);
        for c in 0..64 {
            if !w.contains_point(d.center(c)) {
                assert_eq!(a.functions[0].value(c), 0.0);
            }
        }
        let c = generate_corpus(&d, 2, &w, &[], 7, 4).unwrap();
        assert_ne!(a.functions, c.functions);
    }
}
