//! Lightweight denoising of impulsive acoustic events (muzzle blasts) buried in
//! vehicle noise.
//!
//! The pipeline is split into small, independently testable pieces:
//!
//! * [`signals`] produces and stores waveforms: Friedlander muzzle blasts,
//!   synthetic vehicle noise, mono WAV files with key/value sidecars.
//! * [`dsp`] holds the deterministic primitives: FIR realisation of a
//!   Butterworth magnitude law, ×8 decimation / interpolation, the
//!   convolution-as-matrix construction and peak-over-RMS SNR mixing.
//! * [`net`] is the 256 → hidden → 256 autoencoder followed by a trainable
//!   filter-matrix layer, with exact backpropagation and Adam.
//! * [`curriculum`] splits shots and noises into disjoint subsets, builds
//!   noisy/clean example pairs and trains phase by phase on decreasing SNR
//!   thresholds, freezing and then releasing the filter layer.
//! * [`detect`] is an STA/LTA impulse detector with tolerance matching and
//!   binomial margins on detection rates.
//! * [`pipeline`] wires everything into the jobs the `mbdenoise` binary runs.

pub mod config;
pub mod curriculum;
pub mod detect;
pub mod dsp;
mod error;
mod fsutil;
pub mod net;
pub mod pipeline;
pub mod signals;

pub use error::{Error, Result};
