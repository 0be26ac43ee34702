//! Entanglement witnesses for two-mode continuous-variable states built from
//! values and derivatives of σ-parametrized phase-space distributions at
//! single phase-space points.
//!
//! The crate is organised bottom-up:
//!
//! - [`fock`]: truncated two-mode Fock space, displacement and beamsplitter
//!   unitaries, loss channels, partial transposition.
//! - [`families`]: NOON, lossy NOON, dephased cat, coherent, thermal and
//!   Haar-random states.
//! - [`phase_space`]: distribution values, moment matrices, the second-order
//!   minor and its Husimi and Wigner variants.
//! - [`ppt`]: partial-transpose and moment-limit baselines.
//! - [`measurement`]: simulated photon-counting readout of the minor.
//! - [`scan`]: grid scans, simplex refinement, width sweeps, ensemble rates.
//! - [`cli`]: the `phasewit` command line.

// Domain checks are written `!(x > 0.0)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod families;
pub mod fock;
pub mod phase_space;
pub mod measurement;
pub mod ppt;
pub mod scan;
pub mod cli;

pub use error::{Error, Result};
pub use fock::{FockCutoff, TwoModeState, C64};
pub use phase_space::{PhasePoint, WidthAssignment, WidthParam};
