//! Toolkit for comparing concept-decomposed ("cognitive") and end-to-end
//! ("naive") learning on synthetic goal-directed scene prediction tasks.
//!
//! The crate is organised bottom-up:
//!
//! - [`scene`]: entities, slots, frames and the behavioural rules that label them.
//! - [`datagen`]: seeded generators for the four paradigms plus dataset audits.
//! - [`encoding`]: token and bit-vector encodings, with and without concept annotations.
//! - [`net`]: a small transformer encoder with hand-written backpropagation and Adam.
//! - [`trainer`]: training, evaluation, fine-tuning and multi-seed aggregation.
//! - [`experiments`]: end-to-end protocols for the four experiments.
//! - [`probestats`]: one-sample t-tests over categorised probe-response logs.
//!
//! Data-parallel loops (batch gradients, evaluation, repeated runs, audits) go
//! through [`exec::Exec`], which uses rayon when the `parallel` feature is on
//! and runs sequentially otherwise.

pub mod datagen;
pub mod encoding;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod fsio;
pub mod net;
pub mod probestats;
pub mod rng;
pub mod scene;
pub mod trainer;

pub use error::{Error, Result};
pub use exec::Exec;
