//! Bootstrap percolation on Chung-Lu random graphs.
//!
//! The crate samples rank-1 inhomogeneous random graphs from vertex weight
//! sequences, runs threshold-`r` bootstrap percolation on them, and compares
//! the outcome with the limiting theory: the fixed-point equation for the
//! final infected fraction, the fluid-limit ODE of the sequential exposure
//! process, and the discretised sequences that sandwich a general weight law.

pub mod discretise;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod graphgen;
pub mod num;
pub mod odeflow;
pub mod percolation;
pub mod quad;
pub mod rng;
pub mod theory;
pub mod weights;

pub use error::{Error, Result};
