//! Single-population comparators sharing the repair and fitness stack.

pub mod ga;
pub mod pso;

pub use ga::{ga_run, GaParams};
pub use pso::{pso_run, PsoParams};
