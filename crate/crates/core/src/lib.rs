//! Graph-convolutional autoencoders for learning compact, discriminative
//! representations of graph signals, plus the linear and autoencoder
//! baselines they are compared against.

pub mod baselines;
pub mod classify;
pub mod cli;
pub mod connectivity;
pub mod error;
pub mod experiment;
pub mod filter;
pub mod graph;
pub mod model;
pub mod nn;
pub mod synth;

pub use error::{Error, Result};
