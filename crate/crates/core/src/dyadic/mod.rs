//! Dyadic machinery over the `3^n` shifted grids.

pub mod carleson;
pub mod distribution;
pub mod grid;
pub mod hybrid;
pub mod lerner;
pub mod sharp;
pub mod sparse;

pub use carleson::{carleson_constant, CarlesonReport};
pub use distribution::{local_mean_oscillation, lower_median, median, oscillation_window, rearrangement, rearrangement_of};
pub use grid::{cube_sup, enumerate_cubes, touching_sup, DyadicCube, GridSet, LevelLattice, ShiftedDyadicGrid};
pub use hybrid::{product_maximal, RestrictedMaximal};
pub use lerner::{lerner_hytonen, LernerDecomposition, PointwiseAudit};
pub use sharp::sharp_maximal;
pub use sparse::{random_sparse_family, verify_sparse, SparseFamily, SparsityReport};
