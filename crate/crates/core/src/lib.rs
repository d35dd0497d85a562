//! Exact state-vector simulation of conditional teleportation of a
//! zero/one-photon entangled state between two bimodal cavities, driven by
//! two resonant two-level atoms and direct atomic detection in place of a
//! Bell-state measurement.
//!
//! Modules, bottom up:
//!
//! - [`fock`]: truncated Fock/atom Hilbert spaces and dense state vectors
//! - [`dynamics`]: closed-form Jaynes–Cummings pulses and a matrix-exponential oracle
//! - [`measurement`]: projective atom detection, deterministic and sampled
//! - [`protocol`]: the teleportation sequence and its closed-form intermediate states
//! - [`analysis`]: sweeps, optimisation of the second pulse, Monte Carlo, timing
//! - [`report`]: serializable reports and the self-check suite
//! - [`cli`]: argument parsing and dispatch for the `cavity-teleport` binary

// `!(x > tol)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod fock;
pub mod measurement;
pub mod protocol;
pub mod report;

pub use error::{Error, Result};
pub use num_complex::Complex64;
