//! Localized John-Nirenberg-Campanato norms on dyadic grids.
//!
//! Functions are piecewise constant on the cells of a dyadic domain
//! `[0, 2^m)^n`. The crate computes cube oscillations against degree-`s`
//! polynomial projections, the jn / JN / Campanato / Lebesgue functionals over
//! dyadic packings, Calderon-Zygmund decompositions with verified conclusions,
//! and atomic decompositions together with their duality pairings.

pub mod atoms;
pub mod cz;
pub mod error;
pub mod experiments;
pub mod gen;
pub mod grid;
pub mod io;
pub mod norms;
pub mod poly;
pub mod report;
pub mod verify;

pub use error::{Error, Result};
pub use grid::{CellCube, CubeField, DomainSpec, DyadicCube, GridFunction, MultiIndex};
pub use norms::{NormParams, Packing, Variant};
pub use poly::{CellModel, SpacePolynomial};
pub use report::{Assertion, Report, Tally};
pub use verify::{run_suite, Suite, SuiteOutcome};
