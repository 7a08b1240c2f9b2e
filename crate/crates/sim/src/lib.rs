//! File formats, experiment harness and command-line front end for the
//! relay-assisted LEO NOMA simulator. The numerics live in
//! [`relay_noma_core`].

pub mod config;
pub mod formats;
pub mod harness;

pub use relay_noma_core as core;
