//! Mittag-Leffler return-time modelling for the (seasonal) fractional Poisson
//! process.
//!
//! The crate is `no_std` compatible (it needs `alloc`). With the default `std`
//! feature, estimators additionally record their wall-clock time.
//!
//! Layout:
//! - [`special`]: Mittag-Leffler functions, gamma and digamma.
//! - [`dist`]: the Mittag-Leffler distribution, its derivatives and sampler.
//! - [`optim`]: the bound-constrained quasi-Newton minimizer.
//! - [`estimators`]: LM, ML, CM, QLS and QB estimators (weighted and unweighted).
//! - [`seasonal`]: calendar kernel weighting, daily fits, derived metrics and the
//!   seasonal-stability permutation test.
//! - [`rng`]: seeded random streams.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod dist;
pub mod error;
pub mod estimators;
pub mod optim;
pub mod rng;
pub mod seasonal;
pub mod special;

mod prelude;

pub use dist::{Admissibility, MlfParams, QuantileSet};
pub use error::{Error, Result};
pub use estimators::{EstimateResult, Method, WeightedSample};
pub use optim::OptimizerConfig;
pub use special::MlfEvalConfig;
