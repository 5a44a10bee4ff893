//! Preliminary orbits linking two short observed arcs through the two-body first integrals.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attributable;
pub mod config;
pub mod covariance;
pub mod curves;
pub mod degeneracy;
pub mod ephemeris;
pub mod error;
pub mod frames;
pub mod io;
pub mod kepler;
pub mod optical;
pub mod poly;
pub mod radar;
pub mod selection;
pub mod solution;
pub mod synth;
pub mod units;

pub use error::{LinkError, Result};
