//! Modulo sampling and recovery of finite-rate-of-innovation signals with a
//! sum-of-sincs kernel.
//!
//! The pipeline is `acquire` (filter, sample, fold, add noise), then
//! `itoh_unwrap`, `solve_fourier`, `spectral_divide` and one of the
//! annihilating-filter variants. `recovery::recover` runs it end to end.

pub mod error;
pub mod identifiability;
pub mod kernel;
pub mod precision;
pub mod recovery;
pub mod sampler;
pub mod signal;
pub mod unwrap;

pub use error::{Error, Result};
pub use kernel::{SamplingDesign, SosKernel};
pub use precision::{Extended, Precision, Real};
pub use recovery::{recover, AfVariant, AnnihilatorOutput, Recovery, SpectralSeq};
pub use sampler::{acquire, modulo_fold, SampleRecord};
pub use signal::{FriParams, Pulse, PulseKind};
pub use unwrap::itoh_unwrap;
