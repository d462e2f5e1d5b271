//! ECG noise-robustness pipeline.
//!
//! The crate covers the full experiment loop: ingest or synthesize ECG records,
//! clean them with a zero-phase filter chain, inject physiological noise at a
//! controlled SNR, render SPAR attractor and Morse-wavelet scalogram images,
//! and evaluate a baseline classifier across all clean/noisy train-test
//! combinations with macro-averaged F1.
//!
//! Start with the runnable examples (`cargo run --example full_pipeline`) or
//! the `ecg-robustness` binary, which exposes each stage as a subcommand.

pub mod cli;
pub mod error;
pub mod eval;
pub mod noise;
pub mod preprocess;
pub mod rng;
pub mod scalogram;
pub mod spar;
pub mod store;
pub mod synth;
pub mod types;

pub use error::{Error, Result};
