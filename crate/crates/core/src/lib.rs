//! Numerical laboratory for multilinear Littlewood–Paley square functions.
//!
//! Functions live on a truncated box domain as piecewise-constant samples
//! ([`gridfn`]). Dyadic machinery over the `3^n` shifted grids lives in
//! [`dyadic`], Orlicz gauges in [`orlicz`], weight functionals in
//! [`weights`], the square-function operators in [`sqfn`], and the
//! experiment harness behind the `lplab` binary in [`lab`].
//!
//! Per-cell and per-cube work runs on rayon when the `parallel` feature is
//! enabled (the default) and sequentially otherwise.

pub mod dyadic;
pub mod error;
pub mod gridfn;
pub mod lab;
pub mod numerics;
pub mod orlicz;
pub mod par;
pub mod sqfn;
pub mod weights;

pub use error::{LabError, Result};
pub use gridfn::{AxisBox, DomainSpec, GridFunction};
