//! Benchmarking toolkit for cold-start recommendation.
//!
//! The crate bundles a small autodiff engine ([`tensor`]), the modular user
//! and item representation blocks ([`nn`]), dataset handling and the
//! four-scenario split protocol ([`data`]), standard and MAML-style training
//! ([`train`]), metrics and reporting ([`eval`]), random hyperparameter
//! search ([`search`]), and the command-line pipeline ([`cli`]).

pub mod cli;
pub mod config;
pub mod data;
pub mod error;
pub mod eval;
pub mod nn;
mod rng;
pub mod search;
pub mod tensor;
pub mod train;

pub use rng::{derive_seed, stream_rng};

pub use error::{Error, Result};
