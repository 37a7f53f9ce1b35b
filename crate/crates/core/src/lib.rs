//! Derivative-free optimization of noisy objectives by Gaussian smoothing
//! with a dynamically shaped sampling window, plus baselines, benchmark
//! objectives, continuous-time Ising/SAT heuristics to tune, and tools for
//! studying gradient-estimation error.

pub mod analysis;
pub mod cosolvers;
pub mod error;
pub mod experiment;
pub mod numeric;
pub mod objectives;
pub mod optimizers;
pub mod smoothing;

pub use error::{Error, Result};
