//! Simulation toolkit for depth-camera respiration estimation.
//!
//! The pipeline renders a breathing procedural torso into depth videos,
//! corrupts them with six physically motivated sensor noise models,
//! extracts the respiratory signal from a chest region of interest and
//! quantifies the spectral signal-to-noise ratio per noise model, noise
//! level and image scale.
//!
//! Modules follow the pipeline stages:
//!
//! * [`signals`] — synthetic and recorded respiratory waveforms plus
//!   conditioning (resampling, zero-phase Butterworth low-pass,
//!   normalization);
//! * [`scene`] / [`raster`] — parametric torso, chest-weight field, pinhole
//!   z-buffer depth rendering;
//! * [`noise`] — the six noise models behind one deterministic
//!   frame-transform interface;
//! * [`extract`] — RoI crop, nearest-neighbour rescale, mean reduction;
//! * [`analysis`] — band-energy SNR, f0 detection, noise-std measurement,
//!   parameter sweeps;
//! * [`cli`] / [`io`] / [`plot`] — configuration, orchestration and file
//!   formats.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod extract;
pub mod io;
pub mod noise;
pub mod plot;
pub mod raster;
pub mod rng;
pub mod scene;
pub mod signals;

pub use error::{Error, Result};
