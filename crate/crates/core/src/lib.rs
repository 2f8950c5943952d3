//! Dynamic and cooperative success tracking for crowdfunding campaigns.
//!
//! A campaign is described by a fixed set of static attributes plus one
//! record per day (funds received, reviews written). The model encodes the
//! static attributes once, runs an LSTM over the daily feature vectors,
//! pools the per-day states with additive attention and predicts the
//! probability of success. Re-running the model on every day prefix gives
//! a tracking curve.
//!
//! - [`sentiment`]: bag-of-words logistic regression review tagger
//! - [`features`]: static/daily encoders, funds bucketing, review statistics
//! - [`nn`]: dense layers, LSTM cell, attention, losses, backprop helpers, gradient checking
//! - [`tracker`]: the full model, training, prefix tracking, evaluation, checkpoints
//! - [`datagen`]: seeded synthetic campaign corpora
//! - [`par`]: ordered parallel map (rayon behind the `parallel` feature)

pub mod datagen;
pub mod error;
pub mod features;
pub mod io;
pub mod nn;
pub mod par;
pub mod sentiment;
pub mod tracker;

pub use error::{DctError, Result};
pub use par::Execution;
