//! Watermark codecs: a fragile spatial additive codec and a redundant
//! mid-band spread-spectrum codec in the 8×8 DCT domain.
//!
//! Both carry a multi-bit payload, so both report bit accuracy (0.5 is
//! chance). Keys serialize to a small text record, see [`WatermarkKey`].

mod additive;
mod key;
mod spread;

pub use additive::{
    detect_additive, detect_additive_at, embed_additive, highpass, AdditiveKey, AdditivePattern,
    DEFAULT_ADDITIVE_STRENGTH, DEFAULT_ADDITIVE_THRESHOLD,
};
pub use key::WatermarkKey;
pub use spread::{
    embed_ss, extract_ss, Band, Chip, SpreadSpectrumKey, CHIPS_PER_BIT, DEFAULT_SS_STRENGTH,
    DEFAULT_SS_THRESHOLD,
};

use crate::image::Image;
use crate::rng;
use rand::Rng;

#[derive(Clone, Debug, PartialEq)]
pub struct DetectionResult {
    /// Fraction of payload bits recovered.
    pub bit_accuracy: f64,
    pub bits_correct: usize,
    pub bits_total: usize,
    /// Normalized correlation between the extracted signal and the key.
    pub correlation: f64,
    pub threshold: f64,
    /// `correlation ≥ τ` for the additive codec, `bit_accuracy ≥ τ` for spread spectrum.
    pub present: bool,
}

impl DetectionResult {
    pub(crate) fn from_bits(correct: &[bool], correlation: f64, threshold: f64, by_accuracy: bool) -> Self {
        let bits_total = correct.len();
        let bits_correct = correct.iter().filter(|&&c| c).count();
        let bit_accuracy = bits_correct as f64 / bits_total as f64;
        let present = if by_accuracy {
            bit_accuracy >= threshold
        } else {
            correlation >= threshold
        };
        DetectionResult {
            bit_accuracy,
            bits_correct,
            bits_total,
            correlation,
            threshold,
            present,
        }
    }
}

/// Result of an embedding: the clamped output plus the unclamped shadow used
/// for spectral analysis.
#[derive(Clone, Debug)]
pub struct Embedded {
    pub image: Image,
    pub unclamped: Image,
    /// Fraction of samples that clamping moved.
    pub clamped_fraction: f64,
}

impl Embedded {
    pub(crate) fn from_unclamped(unclamped: Image) -> Self {
        let mut image = unclamped.clone();
        let moved = image.clamp_in_place();
        let clamped_fraction = moved as f64 / image.data().len() as f64;
        Embedded {
            image,
            unclamped,
            clamped_fraction,
        }
    }
}

/// Payload bits drawn from a seed.
pub fn random_payload(seed: u64, bits: usize) -> Vec<bool> {
    let mut r = rng::seeded(rng::derive_seed(seed, 0x7061_796c));
    (0..bits).map(|_| r.random::<bool>()).collect()
}
