//! Data plumbing around `mlfpp-core`: peaks-over-threshold ingestion, CSV
//! and JSON formats, the Monte Carlo study harness, parallel seasonal
//! analysis and the `mlfpp` command-line tool.
//!
//! Thread count for all parallel work is taken from the `MLFPP_THREADS`
//! environment variable by the CLI (rayon's default otherwise).

pub mod cli;
pub mod error;
pub mod io;
pub mod pot;
pub mod seasonal;
pub mod simlab;

pub use error::{Error, Result};
