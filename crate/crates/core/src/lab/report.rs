//! Experiment reports and their offline-checkable pass rules.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lab::config::ExperimentConfig;
use crate::lab::fit::{fit_line, FitResult};

/// Floats serialized as numbers when finite and as `"NaN"`, `"inf"` or `"-inf"` otherwise.
pub mod lenient {
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    fn decode<E: serde::de::Error>(r: Repr) -> Result<f64, E> {
        match r {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "NaN" => Ok(f64::NAN),
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(E::custom(format!("not a number: {other}"))),
            },
        }
    }

    fn text(v: f64) -> &'static str {
        if v.is_nan() {
            "NaN"
        } else if v > 0.0 {
            "inf"
        } else {
            "-inf"
        }
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(text(*v))
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        decode(Repr::deserialize(d)?)
    }

    pub mod map {
        use std::collections::BTreeMap;

        use serde::ser::SerializeMap;
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(m: &BTreeMap<String, f64>, s: S) -> Result<S::Ok, S::Error> {
            let mut out = s.serialize_map(Some(m.len()))?;
            for (k, v) in m {
                if v.is_finite() {
                    out.serialize_entry(k, v)?;
                } else {
                    out.serialize_entry(k, super::text(*v))?;
                }
            }
            out.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, f64>, D::Error> {
            let raw = BTreeMap::<String, super::Repr>::deserialize(d)?;
            raw.into_iter().map(|(k, v)| super::decode(v).map(|v| (k, v))).collect()
        }
    }
}

/// One evaluated case.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Case {
    pub group: String,
    pub inputs: serde_json::Value,
    #[serde(with = "lenient")]
    pub lhs: f64,
    #[serde(with = "lenient")]
    pub rhs: f64,
    #[serde(with = "lenient")]
    pub ratio: f64,
}

impl Case {
    pub fn new(group: &str, inputs: serde_json::Value, lhs: f64, rhs: f64) -> Self {
        Case { group: group.to_string(), inputs, lhs, rhs, ratio: lhs / rhs }
    }
}

/// A fit stored with the transformed points it was computed from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedFit {
    pub group: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub fit: FitResult,
}

impl NamedFit {
    pub fn new(group: &str, xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let fit = fit_line(&xs, &ys)?;
        Ok(NamedFit { group: group.to_string(), xs, ys, fit })
    }
}

/// A pass predicate over the report payload.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Rule {
    /// Every ratio in the group is finite and at most `bound`.
    RatioAtMost { group: String, bound: f64 },
    /// Every ratio in the group is finite and at least `bound`.
    RatioAtLeast { group: String, bound: f64 },
    /// Every ratio is finite and positive and `max / min < factor`.
    Spread { group: String, factor: f64 },
    /// The group's fit, recomputed from its points, has slope below
    /// `max_slope`, `R² ≥ min_r2` and at least `min_points` points.
    Fit { group: String, max_slope: f64, min_r2: f64, min_points: usize },
    /// The group has at least `count` cases.
    Count { group: String, count: usize },
}

/// Outcome of one rule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub rule: Rule,
    pub pass: bool,
    pub detail: String,
}

fn ratios<'a>(cases: &'a [Case], group: &'a str) -> impl Iterator<Item = f64> + 'a {
    cases.iter().filter(move |c| c.group == group).map(|c| c.ratio)
}

impl Rule {
    pub fn group(&self) -> &str {
        match self {
            Rule::RatioAtMost { group, .. }
            | Rule::RatioAtLeast { group, .. }
            | Rule::Spread { group, .. }
            | Rule::Fit { group, .. }
            | Rule::Count { group, .. } => group,
        }
    }

    pub fn evaluate(&self, cases: &[Case], fits: &[NamedFit]) -> Verdict {
        let (pass, detail) = match self {
            Rule::RatioAtMost { group, bound } => {
                let r: Vec<f64> = ratios(cases, group).collect();
                let worst = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (!r.is_empty() && r.iter().all(|v| v.is_finite() && *v <= *bound), format!("max ratio {worst:.6e} vs {bound}"))
            }
            Rule::RatioAtLeast { group, bound } => {
                let r: Vec<f64> = ratios(cases, group).collect();
                let worst = r.iter().copied().fold(f64::INFINITY, f64::min);
                (!r.is_empty() && r.iter().all(|v| v.is_finite() && *v >= *bound), format!("min ratio {worst:.6e} vs {bound}"))
            }
            Rule::Spread { group, factor } => {
                let r: Vec<f64> = ratios(cases, group).collect();
                let lo = r.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let ok = !r.is_empty() && r.iter().all(|v| v.is_finite() && *v > 0.0) && hi / lo < *factor;
                (ok, format!("ratios in [{lo:.6e}, {hi:.6e}], spread {:.4} vs {factor}", hi / lo))
            }
            Rule::Fit { group, max_slope, min_r2, min_points } => match fits.iter().find(|f| &f.group == group) {
                None => (false, "no fit recorded".to_string()),
                Some(f) => match fit_line(&f.xs, &f.ys) {
                    Err(e) => (false, e.to_string()),
                    Ok(re) => {
                        let ok = f.xs.len() >= *min_points && re.slope < *max_slope && re.r2 >= *min_r2;
                        (ok, format!("slope {:.6} (< {max_slope}), R² {:.6} (≥ {min_r2}), {} points", re.slope, re.r2, f.xs.len()))
                    }
                },
            },
            Rule::Count { group, count } => {
                let k = ratios(cases, group).count();
                (k >= *count, format!("{k} cases (≥ {count})"))
            }
        };
        Verdict { rule: self.clone(), pass, detail }
    }
}

/// Report of one experiment run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config: ExperimentConfig,
    pub cases: Vec<Case>,
    /// Largest ratio of the primary group.
    #[serde(with = "lenient")]
    pub observed_constant: f64,
    /// Largest ratio of every group.
    #[serde(with = "lenient::map")]
    pub observed_constants: BTreeMap<String, f64>,
    /// Primary fit, when the experiment has one.
    pub fit: Option<FitResult>,
    pub fits: Vec<NamedFit>,
    pub rules: Vec<Rule>,
    pub verdicts: Vec<Verdict>,
    pub pass: bool,
    #[serde(with = "lenient::map")]
    pub tail_bounds: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    /// Milliseconds, recorded only when the config asks for it.
    pub wall_ms: Option<u64>,
}

impl ExperimentReport {
    /// Assembles a report and evaluates its rules.
    pub fn assemble(
        config: ExperimentConfig,
        primary: &str,
        cases: Vec<Case>,
        fits: Vec<NamedFit>,
        rules: Vec<Rule>,
        tail_bounds: BTreeMap<String, f64>,
        notes: Vec<String>,
    ) -> Self {
        let mut observed_constants = BTreeMap::new();
        for c in &cases {
            let e = observed_constants.entry(c.group.clone()).or_insert(f64::NEG_INFINITY);
            if c.ratio > *e || c.ratio.is_nan() {
                *e = c.ratio;
            }
        }
        let observed_constant = observed_constants.get(primary).copied().unwrap_or(f64::NAN);
        let fit = fits.iter().find(|f| f.group == primary).or(fits.first()).map(|f| f.fit);
        let verdicts: Vec<Verdict> = rules.iter().map(|r| r.evaluate(&cases, &fits)).collect();
        let pass = verdicts.iter().all(|v| v.pass);
        ExperimentReport {
            experiment: config.experiment.clone(),
            config,
            cases,
            observed_constant,
            observed_constants,
            fit,
            fits,
            rules,
            verdicts,
            pass,
            tail_bounds,
            notes,
            wall_ms: None,
        }
    }

    /// Re-evaluates every rule from the payload alone.
    pub fn recheck(&self) -> bool {
        !self.rules.is_empty() && self.rules.iter().all(|r| r.evaluate(&self.cases, &self.fits).pass)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    /// One row per case: `case_id, lhs, rhs, ratio`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["case_id", "lhs", "rhs", "ratio"])?;
        let mut counters: BTreeMap<&str, usize> = BTreeMap::new();
        for c in &self.cases {
            let k = counters.entry(&c.group).or_insert(0);
            w.write_record([format!("{}/{}", c.group, k), c.lhs.to_string(), c.rhs.to_string(), c.ratio.to_string()])?;
            *k += 1;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cases() -> Vec<Case> {
        vec![Case::new("a", serde_json::json!({}), 1.0, 2.0), Case::new("a", serde_json::json!({}), 3.0, 2.0)]
    }

    #[test]
    fn rules_read_only_the_payload() {
        let c = cases();
        assert!(Rule::RatioAtMost { group: "a".into(), bound: 1.5 }.evaluate(&c, &[]).pass);
        assert!(!Rule::RatioAtMost { group: "a".into(), bound: 1.0 }.evaluate(&c, &[]).pass);
        assert!(Rule::Spread { group: "a".into(), factor: 3.01 }.evaluate(&c, &[]).pass);
        assert!(!Rule::Spread { group: "a".into(), factor: 3.0 }.evaluate(&c, &[]).pass);
        assert!(!Rule::RatioAtMost { group: "missing".into(), bound: 1.0 }.evaluate(&c, &[]).pass);
        let f = NamedFit::new("f", vec![1.0, 2.0, 3.0], vec![-1.0, -2.0, -3.0]).unwrap();
        assert!(Rule::Fit { group: "f".into(), max_slope: 0.0, min_r2: 0.99, min_points: 3 }.evaluate(&c, &[f]).pass);
    }
}
