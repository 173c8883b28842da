//! Leakage-minimal channel design under a pre-image size cap.
//!
//! Given a prior `p` over `n` secrets and a cap `k`, [`design::design`] builds
//! a channel in which every output is produced by at most `k` inputs and every
//! realized output induces the same posterior `π`. That single channel
//! minimizes leakage for every entropy in the `(η, F)` family of
//! [`entropy`], including Shannon, min-entropy, guesswork and the Rényi and
//! Sharma-Mittal families.
//!
//! [`gain`] extends the construction to diagonal gain functions, and
//! [`oracle`] holds independent checkers used by the test suites.

pub mod design;
pub mod entropy;
pub mod error;
pub mod gain;
pub mod majorization;
pub mod oracle;
pub mod prob;
pub mod sampling;

pub use design::{design, DesignResult};
pub use entropy::{conditional_entropy, entropy, leakage, EntropyMeasure};
pub use error::{Error, Result};
pub use gain::GainSpec;
pub use prob::{Channel, Prior, SubsetLabel};
