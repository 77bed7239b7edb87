//! Pressure Index engine for T20 run chases.
//!
//! The crate computes the Pressure Index (PI) of the side batting second,
//! turns ball-by-ball match files into over-by-over PI sequences, learns
//! higher-order Markov transition tables over discretised PI, fits
//! phase-wise distributions used as a prediction fallback, evaluates the
//! resulting forecasts and maps predictions to strategy zones.

pub mod distfit;
pub mod evaluate;
pub mod ingest;
pub mod interval;
pub mod markov;
pub mod models;
pub mod phase;
pub mod pi;
pub mod strategy;
