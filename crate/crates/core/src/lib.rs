//! Numerical core for programmable autonomous stabilization of two coupled
//! qubit–resonator pairs.
//!
//! The crate is `no_std` and only needs an allocator. It covers the operator
//! algebra on |Q1 Q2 R1 R2⟩, rotating-frame Hamiltonians for every supported
//! drive combination, Lindblad evolution and steady states, the classical
//! four-state rate model, device-calibration formulas, and simulated
//! two-qubit tomography. File formats, sweeps and the command line live in
//! the `autostab` crate.
#![no_std]

extern crate alloc;

mod error;

pub mod calibration;
pub mod dynamics;
pub mod hilbert;
pub mod linalg;
pub mod model;
pub mod rates;
pub mod targets;
pub mod tomography;
pub mod units;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
