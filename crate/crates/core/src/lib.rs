//! Solid-combustion laboratory: finite-activation-energy SHS solver, the
//! hysteresis limit problem, traveling and pulsating waves, the linear
//! dispersion relation and the diagnostics that tie them together.

pub mod cli_io;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod hysteresis;
pub mod initial;
pub mod kinetics;
pub mod shs_sim;
pub mod stability;
pub mod waves;

pub use error::{Error, Result};
