//! Phase-space quantum mechanics on a two-dimensional phase space: sampled
//! differential forms, Čech covers with U(1) gerbe cocycles, classical flow,
//! configuration-space eigenproblems, gauged phase-space operators and
//! gauge transformations with exact polynomial certificates.

pub mod classical;
pub mod cover;
pub mod error;
pub mod forms;
pub mod gauge;
pub mod gerbe;
pub mod phase_space;
pub mod poly;
pub mod quad;
pub mod quantum;
pub mod stencil;
pub mod tridiag;

pub use error::{Error, ErrorClass, Result};
