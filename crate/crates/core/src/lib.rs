//! Discrete filling engine for integral cellular cycles in model CAT(0) cube complexes.
//!
//! The crate builds grid, tree-product and custom cube complexes with exact
//! rational volumes, manipulates integral chains on them, computes minimal and
//! constructive fillings, and runs the multi-scale filling algorithm together
//! with the experiment harness used by the `isofill` command line tool.

pub mod chains;
pub mod complex;
pub mod cover;
pub mod deform;
pub mod driver;
pub mod error;
pub mod fill;
pub mod numeric;

pub use chains::Chain;
pub use complex::{CellId, CellSet, MetricComplex, MetricKind, Point};
pub use error::{Error, Result};
pub use numeric::Q;
