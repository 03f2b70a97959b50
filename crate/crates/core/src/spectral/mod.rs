//! Periodic grids, real fields with Fourier coefficients, the resolvent
//! family `S(t)` acting diagonally on modes, Lᵖ quadratures and symbol-level
//! diagnostics.

mod decay;
mod diagnostics;
mod field;
mod grid;
mod norms;
mod resolvent;

pub use decay::{decay_check, decay_fit, DecayFit, DecayPoint};
pub use diagnostics::{
    resolvent_diagnostics, resolvent_diagnostics_with, sup_over_mu, ConstantFit, DiagnosticsOptions,
    DiagnosticsReport, HolderFit, HolderPoint,
};
pub use field::Field;
pub use grid::{ModeTable, TorusGrid};
pub use norms::{dissipation_pairing, lp_norm, tail_mass};
pub use resolvent::{apply_s, apply_symbol, symbol_values};
