//! Time-of-arrival detection densities for relativistic particles on a ring.

pub mod amplitudes;
pub mod cli;
pub mod clock;
pub mod detector;
pub mod error;
pub mod modes;
pub mod multitime;
pub mod probability;
pub mod quad;
pub mod rotation;
pub mod specfun;
pub mod states;

pub use error::{Error, Result};
