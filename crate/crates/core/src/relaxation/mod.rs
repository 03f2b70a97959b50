//! The scalar relaxation function `s(t, μ)`, the solution of
//! `s + μ (m∗s) = 1`, whose Laplace transform is
//! `ŝ(λ, μ) = 1/(λ(1 + μ m̂(λ)))`.
//!
//! [`RelaxationEvaluator`] inverts `ŝ` on a hyperbolic Bromwich contour;
//! [`s_volterra_oracle`] solves the Volterra equation directly in time by
//! product integration and serves as an independent check.

mod contour;
mod oracle;

pub use contour::{ContourParams, RelaxationEvaluator};
pub use oracle::{
    graded_grid_for, s_volterra_oracle, s_volterra_oracle_many, s_volterra_reference, TimeGrid,
};
