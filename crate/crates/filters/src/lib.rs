//! Synthesis and simulation of multi-stage bandpass Purcell filters.

pub mod dynamics;
pub mod error;
pub mod ldos;
mod linalg;
pub mod network;
pub mod prototype;
pub mod purcell;
pub mod scattering;
pub mod spectrum;
pub mod tline;

pub use error::{Error, Result};
