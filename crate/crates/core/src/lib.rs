//! History matching with Bayes linear emulators.
//!
//! The crate bundles a hormonal crosstalk ODE model and a one-dimensional
//! toy function as simulators, and provides emulation, space-filling
//! design, implausibility-based refocusing and post-match analytics.

pub mod analysis;
pub mod design;
pub mod emulation;
pub mod error;
pub mod matching;
pub mod model;
pub mod simulator;

pub use error::{Error, Result};
