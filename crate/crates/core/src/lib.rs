//! Numerical laboratory for semilinear diffusion equations with a completely
//! monotone memory term,
//!
//! ```text
//!     ∂ₜu − (1 + ∂ₜ^{*k}) Δu = f(u),      u(0) = u₀,
//! ```
//!
//! posed on a periodic box. The crate is organised bottom-up:
//!
//! * [`kernel`] memory kernels `k`, the combined kernel `m = 1 + k`, their
//!   Laplace transforms and sum-of-exponentials surrogates.
//! * [`relaxation`] the scalar relaxation function `s(t, μ)` solving
//!   `s + μ m∗s = 1`, by contour inversion and by an independent
//!   product-integration oracle.
//! * [`spectral`] torus grids, fields, Fourier diagonalisation of `−Δ`, the
//!   resolvent family `S(t)` and symbol-level diagnostics.
//! * [`dynamics`] generalized mild solutions
//!   `u(t) = φ(t) + ∫₀ᵗ S(t−s) f(u(s)) ds`, Picard iteration in the Bielecki
//!   norm, the history-space semigroup `T_t` and its metrics.
//! * [`longtime`] dissipativity certificates, truncation, absorbing balls,
//!   memory-variable integration, kernel stability and omega-limit ensembles.
//!
//! Inner loops are data-parallel through rayon when the `parallel` feature is
//! enabled (the default); every parallel map writes into index-ordered output
//! and inner reductions stay sequential, so results are bitwise identical for
//! any thread count.

pub mod dynamics;
mod error;
pub mod kernel;
pub mod longtime;
pub mod nnls;
pub mod par;
pub mod quad;
pub mod relaxation;
pub mod spectral;

pub use error::{Error, Result};

pub use dynamics::{
    bielecki_norm, duhamel_quad, march_solve, metric_rho, picard_solve, semigroup_apply,
    truncate_f, weighted_alpha_norm, HistoryFunction, Nonlinearity, PicardOptions, PicardRun,
    Trajectory,
};
pub use kernel::{soe_fit, validate_cm, CombinedKernel, KernelSpec};
pub use relaxation::{s_volterra_oracle, ContourParams, RelaxationEvaluator, TimeGrid};
pub use spectral::{Field, TorusGrid};
pub use longtime::{
    absorbing_radius, absorption_run, dissipativity_check, kernel_stability_experiment,
    memory_augmented_integrate, omega_limit_approx, DissipativityCertificate,
};
