//! Experiment harness: configs, corpora, fits, reports and the registry.

pub mod config;
pub mod corpus;
pub mod experiments;
pub mod fit;
pub mod report;

use std::time::Instant;

use crate::error::{LabError, Result};
use config::{ExperimentConfig, EXPERIMENTS};
use report::ExperimentReport;

type Runner = fn(&ExperimentConfig) -> Result<ExperimentReport>;

fn runner(id: &str) -> Result<Runner> {
    Ok(match id {
        "E1" => experiments::e1,
        "E1b" => experiments::e1b,
        "E2" => experiments::e2,
        "E3" => experiments::e3,
        "E4" => experiments::e4,
        "E5" => experiments::e5,
        "E6" => experiments::e6,
        "E7" => experiments::e7,
        "E8" => experiments::e8,
        "E9" => experiments::e9,
        "E10" => experiments::e10,
        other => return Err(LabError::UnknownExperiment(other.to_string())),
    })
}

/// Runs experiment `id` with `config` (or its default) and an optional seed override.
pub fn run_experiment(id: &str, config: Option<ExperimentConfig>, seed: Option<u64>) -> Result<ExperimentReport> {
    let run = runner(id)?;
    let mut cfg = match config {
        Some(c) => c,
        None => ExperimentConfig::default_for(id)?,
    };
    if cfg.experiment != id {
        return Err(LabError::Config(format!("config is for `{}`, not `{id}`", cfg.experiment)));
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let start = Instant::now();
    let mut report = run(&cfg)?;
    if cfg.record_timing {
        report.wall_ms = Some(start.elapsed().as_millis() as u64);
    }
    Ok(report)
}

/// Identifiers and descriptions of every registered experiment.
pub fn list() -> &'static [(&'static str, &'static str)] {
    EXPERIMENTS
}

/// One line of the invariant suite.
#[derive(Clone, Debug)]
pub struct CheckOutcome {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        CheckOutcome { name: name.into(), pass, detail: detail.into() }
    }
}

/// Registry Young functions: structural validation and `t ≤ Φ⁻¹(t) Φ̄⁻¹(t) ≤ 2t`.
pub fn check_young() -> Vec<CheckOutcome> {
    crate::orlicz::holder_registry()
        .into_iter()
        .flat_map(|(a, b)| [(a.clone(), b.clone()), (b, a)])
        .map(|(phi, dual)| {
            let valid = phi.validate();
            let mut worst: f64 = 0.0;
            for i in 0..60 {
                let t = 10f64.powf(-6.0 + 12.0 * i as f64 / 59.0);
                let prod = phi.inverse(t) * dual.inverse(t);
                let lo = (t - prod) / t;
                let hi = (prod - 2.0 * t) / t;
                worst = worst.max(lo).max(hi);
            }
            let pass = valid.is_ok() && worst <= 1e-6;
            CheckOutcome::new(format!("young {}", phi.id()), pass, format!("{valid:?}, worst relative excess {worst:.3e}"))
        })
        .collect()
}

/// Certified bounds of every registry kernel against sampled ratios.
pub fn check_kernels() -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    for cancel in ["cancel", "nocancel"] {
        for (m, n) in [(1, 1), (2, 1), (3, 1), (1, 2), (2, 2)] {
            let id = format!("{cancel}:{m}:{n}");
            match crate::sqfn::MultilinearKernel::from_id(&id) {
                Ok(k) => {
                    let r = crate::sqfn::kernel_validate(&k, 20_000, 7);
                    out.push(CheckOutcome::new(format!("kernel {id}"), r.pass, format!("observed A {:.3e} against {:.3e}", r.a_obs, k.bounds.a)));
                }
                Err(e) => out.push(CheckOutcome::new(format!("kernel {id}"), false, e.to_string())),
            }
        }
    }
    out
}

/// The full invariant suite: registries plus every default experiment.
pub fn check() -> Vec<CheckOutcome> {
    let mut out = check_young();
    out.extend(check_kernels());
    for (id, _) in EXPERIMENTS {
        out.push(match run_experiment(id, None, None) {
            Ok(r) => {
                let failed: Vec<&str> = r.verdicts.iter().filter(|v| !v.pass).map(|v| v.detail.as_str()).collect();
                CheckOutcome::new(format!("experiment {id}"), r.pass, if failed.is_empty() { "all rules hold".to_string() } else { failed.join("; ") })
            }
            Err(e) => CheckOutcome::new(format!("experiment {id}"), false, e.to_string()),
        });
    }
    out
}
