//! Least-squares shape fits in transformed coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::numerics::least_squares;

/// Coordinates a fit is taken in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// `ln y` against `ln x`.
    LoglogLine,
    /// `ln y` against `x²`; the decay rate is minus the slope.
    GaussDecay,
    /// `ln y` against `x`.
    ExpDecay,
}

/// Fitted line in the model's coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

impl FitResult {
    /// `−slope`, the rate of a decay model.
    pub fn rate(&self) -> f64 {
        -self.slope
    }
}

/// Transformed abscissa and ordinate of a raw point.
pub fn transform(model: Model, x: f64, y: f64) -> (f64, f64) {
    match model {
        Model::LoglogLine => (x.ln(), y.ln()),
        Model::GaussDecay => (x * x, y.ln()),
        Model::ExpDecay => (x, y.ln()),
    }
}

/// Fits `points` (raw `(x, y)` pairs, `y > 0`) in the model's coordinates.
pub fn fit_model(points: &[(f64, f64)], model: Model) -> Result<FitResult> {
    if points.len() < 3 {
        return Err(LabError::DegenerateFit(format!("{} points, need at least 3", points.len())));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().map(|&(x, y)| transform(model, x, y)).unzip();
    if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
        return Err(LabError::DegenerateFit("non-finite transformed coordinates".into()));
    }
    fit_line(&xs, &ys)
}

/// Ordinary least squares on already transformed coordinates.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    if xs.len() < 3 {
        return Err(LabError::DegenerateFit(format!("{} points, need at least 3", xs.len())));
    }
    let f = least_squares(xs, ys).ok_or_else(|| LabError::DegenerateFit("abscissae do not vary".into()))?;
    Ok(FitResult { slope: f.slope, intercept: f.intercept, r2: f.r2 })
}
