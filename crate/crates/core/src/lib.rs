//! Uncertainty-principle certified quantum random number generation.
//!
//! A d-level source is measured mostly in a generation basis (Z) and, at a
//! seed-selected set of ⌈√m⌉ slots, in a mutually unbiased control basis (X).
//! The Rényi-½ entropy of the control outcomes bounds the conditional
//! min-entropy of the generation outcomes against any quantum adversary:
//!
//! ```text
//! H_min(Z|E) ≥ q − H_{1/2}(X),    q = log2(1/c)
//! ```
//!
//! The crate covers the whole pipeline:
//!
//! - [`quantum`]: density matrices, POVMs, mutually unbiased bases, overlap `c`.
//! - [`entropy`]: Rényi entropies and the Bayesian / frequentist estimators.
//! - [`protocol`]: scheduling, seed accounting, certificates, expected rates.
//! - [`simulate`]: stochastic source simulator and the run container format.
//! - [`extract`]: Toeplitz two-universal hashing.
//! - [`tomo`]: the tomographic (full Bloch vector) comparator.
//! - [`stattests`]: a small statistical battery for extracted output.

#![forbid(unsafe_code)]

pub mod bits;
pub mod combinatorics;
pub mod entropy;
pub mod extract;
pub mod protocol;
pub mod quantum;
pub mod simulate;
pub mod special;
pub mod stattests;
pub mod tomo;

mod error;

pub use bits::BitString;
pub use entropy::{CountsVector, ProbVector};
pub use error::{Error, Result};
pub use protocol::{Certificate, Schedule};
pub use quantum::{BlochVector, CqState, DensityMatrix, Povm};
pub use simulate::{RunRecord, SourceModel};
