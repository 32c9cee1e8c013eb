//! Residual watermark energy `‖E(I')‖²`, the extractor term of the removal
//! objective. This is an evaluation-side score computed with the true key.

use crate::error::Result;
use crate::image::Image;
use crate::watermark::{detect_additive, extract_ss, AdditivePattern, SpreadSpectrumKey};

#[derive(Clone, Copy, Debug)]
pub enum Extractor<'a> {
    /// Blind additive detector; energy is the squared normalized correlation.
    Additive(&'a AdditivePattern),
    /// Spread-spectrum extractor; energy is the squared mean chip correlation
    /// in units of the embedding strength.
    SpreadSpectrum(&'a SpreadSpectrumKey),
}

pub fn residual_watermark_energy(candidate: &Image, extractor: &Extractor<'_>) -> Result<f64> {
    let correlation = match extractor {
        Extractor::Additive(wm) => detect_additive(candidate, wm, None)?.correlation,
        Extractor::SpreadSpectrum(key) => extract_ss(candidate, key)?.correlation,
    };
    Ok(correlation * correlation)
}

/// `‖I' − I‖² + λ·‖E(I')‖²` against the clean image `I`.
pub fn removal_objective(candidate: &Image, clean: &Image, extractor: &Extractor<'_>, lambda: f64) -> Result<f64> {
    Ok(candidate.sub(clean)?.sum_squares() + lambda * residual_watermark_energy(candidate, extractor)?)
}
