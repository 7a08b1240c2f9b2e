//! Simulation and optimization core for a relay-satellite-assisted LEO
//! constellation serving ground NOMA users.
//!
//! The crate is `no_std` (it needs `alloc`) and performs no IO. Everything
//! that touches files, the environment or threads lives in the companion
//! `relay-noma` crate.
//!
//! Module map:
//!
//! * [`scenario`]: configuration, unit conversions, cell grid, users.
//! * [`constellation`]: circular orbits, relay Doppler, slant geometry.
//! * [`channel`]: per-user channel vectors and gain ordering.
//! * [`assignment`]: Doppler-threshold matching and the ant-colony planner.
//! * [`beamform`]: matched-filter beams, the shared spot beam, color reuse.
//! * [`power`]: SINR/rate evaluation and the two NOMA power solvers.
//! * [`engine`]: end-to-end strategies and metrics.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod assignment;
pub mod beamform;
pub mod channel;
pub mod constellation;
pub mod engine;
pub mod math;
pub mod power;
pub mod rng;
pub mod scenario;

pub use num_complex::Complex64;
