//! fll-core: self-similar sets, explicit Hölder-continuous functions on them,
//! and numerical box-counting of their level sets.
//!
//! The crate has four layers:
//!
//! * [`ifs`] / [`grid`] — similarity systems, their Moran (similarity)
//!   dimension, and certified sparse cell covers of the attractor;
//! * [`holder`] — the zig-zag functions φ_{n,m}, affine and piecewise-affine
//!   functions, McShane extensions, exponent-window search, and sampled
//!   Hölder certificates;
//! * [`boxdim`] — level-set and slice cell counting with log–log slope fits
//!   and the closed-form covering bound;
//! * [`experiments`] — seeded end-to-end runs comparing fitted level-set
//!   dimensions against the predicted value s − α.

pub mod boxdim;
pub mod descriptor;
pub mod experiments;
pub mod field;
pub mod grid;
pub mod holder;
pub mod ifs;
pub(crate) mod linalg;

pub use field::{ClosureField, ScalarField};
pub use grid::{CellSet, GridRange, GridSpec};
pub use ifs::{attractor_cells, moran_dimension, refine_cells, SimilarityMap, SimilaritySystem};
