//! Experiment configuration and per-experiment defaults.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{LabError, Result};
use crate::gridfn::DomainSpec;
use crate::sqfn::{ConeQuadrature, MultilinearKernel};
use crate::weights::{ExponentVector, ManifestEntry};

/// Quadrature block; a missing block means `[h, 4L]` with 64 nodes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureBlock {
    pub t_min: f64,
    pub t_max: f64,
    #[serde(rename = "T")]
    pub nodes: usize,
}

/// Default number of `t`-nodes.
pub const DEFAULT_NODES: usize = 64;

/// Everything an experiment run depends on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub domain: DomainSpec,
    pub kernel: String,
    pub exponents: Vec<f64>,
    #[serde(default)]
    pub weights: Vec<ManifestEntry>,
    #[serde(default)]
    pub quadrature: Option<QuadratureBlock>,
    #[serde(default)]
    pub seed: u64,
    pub cases: usize,
    /// Experiment-specific parameters.
    #[serde(default)]
    pub params: serde_json::Value,
    /// Overrides of the experiment's pass thresholds, by name.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    /// Records wall time in the report, which makes its bytes run-dependent.
    #[serde(default)]
    pub record_timing: bool,
}

fn power(a: f64, p: Option<f64>) -> ManifestEntry {
    let mut params = json!({ "a": a, "center": [0.0, 0.0] });
    if let Some(p) = p {
        params["p"] = json!(p);
    }
    ManifestEntry { kind: "power".into(), params, seed: 0 }
}

fn checker(a: f64, b: f64) -> ManifestEntry {
    ManifestEntry { kind: "checker".into(), params: json!({ "a": a, "b": b }), seed: 0 }
}

fn a1(seed: u64) -> ManifestEntry {
    ManifestEntry { kind: "a1_from_rdf".into(), params: json!({}), seed }
}

/// Registered experiment ids with one-line descriptions.
pub const EXPERIMENTS: &[(&str, &str)] = &[
    ("E1", "aperture growth of the weighted S_alpha norm (upper-bound slope)"),
    ("E1b", "growth of truncated g*_lambda norms below the critical decay"),
    ("E2", "two-weight bump bounds for S_alpha and g*_lambda"),
    ("E3", "Fefferman-Stein bounds with arbitrary weights"),
    ("E4", "entropy-bump bounds for square functions and sparse operators"),
    ("E5", "mixed weak-type bounds"),
    ("E6", "local exponential-square decay of S_alpha/M and g*_lambda/M"),
    ("E7", "Coifman-Fefferman bounds, global and local"),
    ("E8", "pointwise sparse decomposition, sharp maximal bound and endpoint ratio"),
    ("E9", "Carleson embeddings, linear and multilinear"),
    ("E10", "overlap decay of sparse families"),
];

impl ExperimentConfig {
    /// The desk-scale default for `id`.
    pub fn default_for(id: &str) -> Result<Self> {
        let d256 = DomainSpec::new(1, 1.0, 256)?;
        let base = |exponents: Vec<f64>, weights: Vec<ManifestEntry>, cases: usize, params: serde_json::Value| ExperimentConfig {
            experiment: id.to_string(),
            domain: d256,
            kernel: "cancel:2:1".into(),
            exponents,
            weights,
            quadrature: None,
            seed: 0,
            cases,
            params,
            tolerances: BTreeMap::new(),
            record_timing: false,
        };
        let cfg = match id {
            "E1" => base(vec![2.0, 2.0], vec![power(0.3, Some(2.0)), power(-0.3, Some(2.0))], 20, json!({ "alphas": [1.0, 2.0, 4.0, 8.0] })),
            "E1b" => {
                let mut c = base(vec![2.0, 2.0], vec![], 1, json!({ "lambda": 1.0, "doublings": 3, "nodes_per_doubling": 8 }));
                c.domain = DomainSpec::new(1, 2.0, 256)?;
                c
            }
            "E2" => base(
                vec![3.0, 3.0],
                vec![power(0.4, Some(3.0)), power(-0.3, Some(3.0))],
                20,
                json!({ "alpha": 1.0, "lambda": 5.0, "B": ["logbump:1.5:1", "logbump:1.5:1"], "A": "logbump:2:1" }),
            ),
            "E3" => base(vec![3.0, 3.0], vec![checker(1.0, 20.0), power(2.5, None)], 20, json!({ "alpha": 1.0, "lambda": 5.0 })),
            "E4" => base(
                vec![3.0, 3.0],
                vec![power(0.3, Some(3.0)), checker(1.0, 4.0), power(-0.2, None)],
                20,
                json!({ "alpha": 1.0, "eta": 0.5, "rs": [1.0, 2.0, 3.0], "sparse_depth": 6 }),
            ),
            "E5" => base(vec![1.0, 1.0], vec![a1(11), a1(23), power(0.5, None)], 20, json!({ "alpha": 1.0, "lambda": 5.0, "admission_cap": 100.0 })),
            "E6" => base(vec![2.0, 2.0], vec![], 20, json!({ "alpha": 1.0, "lambda": 5.0, "t_min": 2.0, "t_max": 6.0, "t_step": 0.1 })),
            "E7" => base(
                vec![2.0],
                vec![power(-0.5, Some(2.0)), power(-0.25, Some(2.0)), power(0.0, Some(2.0)), power(0.25, Some(2.0)), power(0.5, Some(2.0))],
                20,
                json!({ "alpha": 1.0, "ps": [1.0, 2.0], "local_p": 2.0 }),
            ),
            "E8" => base(vec![1.0, 1.0], vec![], 50, json!({ "alphas": [1.0, 2.0], "gamma": 0.2, "oscillation_cases": 20 })),
            "E9" => base(
                vec![3.0, 3.0],
                vec![power(0.3, Some(3.0)), power(-0.3, Some(3.0)), power(0.4, Some(2.0))],
                20,
                json!({ "p_linear": 2.0, "sparse_depth": 6 }),
            ),
            "E10" => {
                let mut c = base(vec![1.0], vec![], 20, json!({ "min_r2": 0.8 }));
                c.domain = DomainSpec::new(1, 1.0, 1024)?;
                c
            }
            other => return Err(LabError::UnknownExperiment(other.to_string())),
        };
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))
    }

    pub fn kernel(&self) -> Result<MultilinearKernel> {
        let k = MultilinearKernel::from_id(&self.kernel)?;
        if k.n != self.domain.dim() {
            return Err(LabError::Config(format!("kernel {} does not match dimension {}", self.kernel, self.domain.dim())));
        }
        Ok(k)
    }

    pub fn exponent_vector(&self) -> Result<ExponentVector> {
        ExponentVector::new(self.exponents.clone())
    }

    pub fn quadrature(&self) -> Result<ConeQuadrature> {
        match self.quadrature {
            Some(q) => ConeQuadrature::new(q.t_min, q.t_max, q.nodes),
            None => Ok(ConeQuadrature::for_domain(&self.domain, DEFAULT_NODES)),
        }
    }

    /// Numeric parameter `key`, or `default` when absent.
    pub fn param(&self, key: &str, default: f64) -> Result<f64> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => v.as_f64().ok_or_else(|| LabError::Config(format!("parameter `{key}` must be a number"))),
        }
    }

    pub fn param_list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.params.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => serde_json::from_value(v.clone()).map_err(|_| LabError::Config(format!("parameter `{key}` must be a list of numbers"))),
        }
    }

    pub fn param_str(&self, key: &str, default: &str) -> Result<String> {
        match self.params.get(key) {
            None => Ok(default.to_string()),
            Some(v) => v.as_str().map(str::to_string).ok_or_else(|| LabError::Config(format!("parameter `{key}` must be a string"))),
        }
    }

    pub fn param_strs(&self, key: &str) -> Result<Option<Vec<String>>> {
        match self.params.get(key) {
            None => Ok(None),
            Some(v) => serde_json::from_value(v.clone()).map(Some).map_err(|_| LabError::Config(format!("parameter `{key}` must be a list of strings"))),
        }
    }

    /// Threshold `name`, overridable through `tolerances`.
    pub fn tolerance(&self, name: &str, default: f64) -> f64 {
        self.tolerances.get(name).copied().unwrap_or(default)
    }

    /// Requires at least `k` manifest weights.
    pub fn require_weights(&self, k: usize) -> Result<()> {
        if self.weights.len() < k {
            return Err(LabError::Config(format!("{} needs {k} manifest weights, got {}", self.experiment, self.weights.len())));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_default_round_trips() {
        for (id, _) in EXPERIMENTS {
            let c = ExperimentConfig::default_for(id).unwrap();
            let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
            assert_eq!(c, back);
            c.kernel().unwrap();
            c.exponent_vector().unwrap();
        }
        assert!(matches!(ExperimentConfig::default_for("E99"), Err(LabError::UnknownExperiment(_))));
    }
}
