//! Auditory perception model with a template-based optimal-detector back end.
//!
//! The signal path is the classic five-stage peripheral chain (outer/middle ear
//! FIR, gammatone filterbank, inner-hair-cell envelope extraction, adaptation
//! loops, modulation filterbank) producing internal representations in model
//! units. On top of that sit an ICRA-style noise generator, a cross-correlation
//! decision stage with additive internal noise, and an adaptive 3-AFC staircase
//! harness for instrument-in-noise discrimination experiments.

pub mod afc;
pub mod central;
pub mod dsp;
pub mod erb;
pub mod error;
pub mod fir;
pub mod icra;
pub mod manifest;
pub mod model;
pub mod modulation;
pub mod par;
pub mod periphery;
pub mod repr_io;
pub mod rng;
pub mod signal;
pub mod spectrum;
pub mod stats;
pub mod synth;
pub mod wav;

pub use error::{Error, Result};
pub use model::{Model, ModelConfig};
pub use signal::AudioSignal;
