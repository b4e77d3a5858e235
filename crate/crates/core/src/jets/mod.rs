//! Truncated multivariate Taylor series in Wirtinger variables.

mod jet;
mod linalg;
mod space;

pub use jet::{jet_compose, Jet, JetOp, MultiIndex, DEFAULT_SINGULAR_EPS};
pub use linalg::{
    jet_determinant, jet_inverse, jet_linear_solve, jet_solve_many, solve_residual,
    DEFAULT_CONDITION_LIMIT,
};
pub use space::JetSpace;
