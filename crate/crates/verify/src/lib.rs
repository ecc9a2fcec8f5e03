//! Independent oracles and the acceptance checks for `weylstar`.

pub mod criteria;
pub mod oracles;

pub use criteria::{run_all, CriterionResult, Report, Tolerances};
