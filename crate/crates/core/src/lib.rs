//! Low-energy resolvent machinery for `H = -Δ + V` on R^4 with radial `V`.
//!
//! The crate discretizes the Birman-Schwinger operator channel by channel,
//! classifies the zero-energy threshold, evaluates cutoff propagators through
//! the Stone formula and fits the resulting decay rates.

pub mod cli;
pub mod config;
pub mod decayfit;
pub mod discretize;
pub mod error;
pub mod evolution;
pub mod kernels;
pub mod oscint;
pub mod potentials;
pub mod spectral;
pub mod specfun;

pub use error::{Error, Result};

/// Side of the limiting absorption principle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn s(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}
