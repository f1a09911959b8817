//! Weighted Fefferman–Stein machinery on uniform Euclidean and parabolic grids.
//!
//! The crate builds dyadic filtrations on discretized boxes and tori, evaluates
//! dyadic and ball maximal/sharp functions, estimates Muckenhoupt characteristics,
//! runs stopping-time and level-set checks, implements the Rubio de Francia
//! iteration, and measures weighted mixed-norm a priori estimate ratios for
//! model parabolic operators through manufactured right-hand sides.

pub mod cli;
pub mod czfs;
pub mod error;
pub mod extrapolation;
pub mod lattice;
pub mod mixednorm;
pub mod operators;
pub mod pdecheck;
pub mod report;
pub mod suite;
pub mod weights;

pub use error::{Error, Result};
pub use lattice::{build_lattice, conditional_expectation, cube_containing, validate_lattice};
pub use lattice::{CubeId, Domain, DomainKind, DyadicLattice, GridFunction};
pub use report::{RatioReport, Regime};
pub use weights::{BallFamily, Metric, Weight};
