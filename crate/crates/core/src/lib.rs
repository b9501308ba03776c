//! Batch harness that emulates automotive microphone frequency-response
//! variants over simulated in-car recordings and evaluates their effect on
//! objective speech metrics.
//!
//! The render chain convolves a speech stimulus with a car impulse
//! response, adds driving noise, and passes the sum through a cascade of
//! second-order filters modelling a microphone's bandwidth and resonance.
//! Per-sentence A-weighted SNR, word error rates from externally produced
//! ASR transcripts, and externally computed MOS-style scores feed one-way
//! ANOVA tables and boxplot figures.

pub mod audio;
pub mod cli;
pub mod dataset;
pub mod dsp;
pub mod error;
pub mod fixtures;
pub mod metrics;
pub mod pipeline;
pub mod report;
pub(crate) mod rng;
pub mod stats;

#[cfg(test)]
pub(crate) mod test_support;

pub use audio::{AudioBuffer, ImpulseResponse, SampleFormat};
pub use error::{Error, Result};
