//! Manufactured right-hand sides and λ-scaled a priori ratios for scalar
//! parabolic model operators.

mod diff;
mod extension;
mod model;
mod oscillation;
mod suite;

pub use diff::{derivative_along, differentiate, multi_indices, Backend, DerivativeStack};
pub use extension::{doubled_domain, extend_operator, extend_profile, halfspace_extension, wall_trace, Parity};
pub use model::{apriori_ratio, manufacture_rhs, rough_coefficient, symbol_ratio, Form, ModelOperator, Profile, ProfileAxis};
pub use oscillation::{oscillations, Oscillations};
pub use suite::{estimate_suite, PdeRow, PdeSup, PdeSuiteConfig, PdeSuiteReport, ProfileDiagnostics};
