//! Dissipativity certificates, absorbing balls, memory-variable integration,
//! kernel sensitivity and approximate ω-limit sets.

mod absorption;
mod certificate;
mod memory;
mod omega;
mod stability;

pub use absorption::{absorption_run, AbsorptionReport, MemberAbsorption};
pub use certificate::{absorbing_radius, dissipativity_check, DissipativityCertificate};
pub use memory::{memory_augmented_integrate, AugmentedRun, AugmentedState};
pub use omega::{omega_limit_approx, OmegaOptions, OmegaReport};
pub use stability::{kernel_stability_experiment, StabilityPoint, StabilityReport};
