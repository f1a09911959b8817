//! Grids, grid functions and dyadic filtrations.

mod domain;
mod dyadic;
mod function;

pub use domain::{Axis, AxisRole, Domain, DomainKind, DomainSpec};
pub use dyadic::{
    build_lattice, conditional_expectation, cube_containing, diameter_constant, inscribed_constant, validate_lattice,
    CellBox, CubeId, DyadicLattice, Level, ValidationReport,
};
pub use function::GridFunction;
