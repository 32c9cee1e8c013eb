//! Watermark robustness toolkit: image containers, watermark codecs,
//! degradation and restoration operators, degrade-then-restore attack
//! pipelines and frequency-domain diagnostics.
//!
//! Images are planar `f64` in `[0, 1]`. Every operator that can leave that
//! range clamps exactly once, at its end.

pub mod attack;
pub mod dct;
pub mod degrade;
pub mod error;
pub mod fourier;
pub mod image;
pub mod io;
pub mod metrics;
pub mod plot;
pub mod restore;
pub mod rng;
pub mod spectral;
pub mod synth;
pub mod watermark;

pub use error::{Error, Result};
pub use image::Image;
