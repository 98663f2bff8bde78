//! Robust directional variogram estimation on regular grids.

pub mod app;
pub mod breakdown;
pub mod contamination;
pub mod error;
pub mod estimators;
pub mod grid;
pub mod mcd;
pub mod numerics;
pub mod scale;
pub mod simfield;
pub mod study;
pub mod variomodel;

pub use error::{Error, Result};
