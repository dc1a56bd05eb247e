//! Benchmarking toolkit for traffic-rate privacy in smart homes: motif
//! extraction, traffic reshaping defenses, time-series image encodings,
//! inference attacks, and a uniform evaluation harness.

pub mod attack;
pub mod defense;
pub mod error;
pub mod eval;
pub mod imaging;
pub mod ingest;
pub mod matrix;
pub mod motif;
pub mod seed;

pub use error::{Error, Result};
pub use matrix::Matrix;
