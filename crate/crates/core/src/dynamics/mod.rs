//! Generalized mild solutions `u(t) = φ(t) + ∫₀ᵗ S(t−s) f(u(s)) ds`, the
//! history-space semigroup `T_t`, and the norms and metrics on histories.

mod duhamel;
mod history;
mod nonlinearity;
mod norms;
mod picard;
mod semigroup;
mod trajectory;

pub use duhamel::{duhamel_quad, DuhamelTable};
pub use history::HistoryFunction;
pub use nonlinearity::{truncate_f, DissipationParams, Nonlinearity};
pub use norms::{bielecki_norm, metric_rho, weighted_alpha_norm, SeriesValue};
pub(crate) use picard::intervals;
pub use picard::{march_solve, picard_solve, IterationRecord, MarchOptions, PicardOptions, PicardRun};
pub use semigroup::{semigroup_apply, solve_on, SemigroupOptions, Solver};
pub use trajectory::Trajectory;
