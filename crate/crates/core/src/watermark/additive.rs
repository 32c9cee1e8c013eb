//! Spatial additive codec `I_w = I + α·W`.
//!
//! `W` is a zero-mean, unit-RMS pseudorandom ±1 field. Pixels are split into
//! one group per payload bit (seeded permutation) and the chips of each
//! group are multiplied by that bit's sign. The pattern is white, so most of
//! its energy sits at high frequencies: it survives mild noise but not a
//! strong low-pass.

use crate::error::{Error, Result};
use crate::image::Image;
use crate::rng;
use rand::Rng;

use super::{random_payload, DetectionResult, Embedded};

pub const DEFAULT_ADDITIVE_STRENGTH: f64 = 0.02;
pub const DEFAULT_ADDITIVE_THRESHOLD: f64 = 0.1;
const MAX_STRENGTH: f64 = 0.2;

#[derive(Clone, Debug, PartialEq)]
pub struct AdditivePattern {
    pattern: Image,
    strength: f64,
    /// Payload bit index of every pixel.
    groups: Vec<u32>,
    bits: usize,
    threshold: f64,
}

fn check_strength(strength: f64) -> Result<()> {
    if !(0.0..=MAX_STRENGTH).contains(&strength) {
        return Err(Error::param(format!("additive strength {strength} outside [0, {MAX_STRENGTH}]")));
    }
    Ok(())
}

impl AdditivePattern {
    /// Wraps an already normalized single-channel pattern carrying one bit.
    pub fn new(pattern: Image, strength: f64) -> Result<Self> {
        check_strength(strength)?;
        if pattern.channels() != 1 {
            return Err(Error::param("additive pattern must be single-channel"));
        }
        let mean = pattern.mean();
        let rms = (pattern.sum_squares() / pattern.len() as f64).sqrt();
        if mean.abs() >= 1e-9 || (rms - 1.0).abs() >= 1e-9 {
            return Err(Error::param(format!(
                "pattern must be zero-mean and unit-RMS (mean {mean:e}, rms {rms})"
            )));
        }
        let n = pattern.len();
        Ok(AdditivePattern {
            pattern,
            strength,
            groups: vec![0; n],
            bits: 1,
            threshold: DEFAULT_ADDITIVE_THRESHOLD,
        })
    }

    /// Removes the mean and scales to unit RMS.
    pub fn normalized(raw: &Image, strength: f64) -> Result<Self> {
        let pattern = normalize(raw.channel(0))?;
        AdditivePattern::new(pattern, strength)
    }

    pub fn pattern(&self) -> &Image {
        &self.pattern
    }

    pub fn strength(&self) -> f64 {
        self.strength
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn with_strength(mut self, strength: f64) -> Result<Self> {
        check_strength(strength)?;
        self.strength = strength;
        Ok(self)
    }
}

fn normalize(raw: Image) -> Result<Image> {
    let mean = raw.mean();
    let centered = raw.map(|v| v - mean);
    let rms = (centered.sum_squares() / centered.len() as f64).sqrt();
    if rms == 0.0 {
        return Err(Error::param("pattern has no variance"));
    }
    Ok(centered.map(|v| v / rms))
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdditiveKey {
    pub seed: u64,
    pub payload: Vec<bool>,
    pub strength: f64,
    pub threshold: f64,
}

impl AdditiveKey {
    pub fn new(seed: u64, payload: Vec<bool>, strength: f64) -> Result<Self> {
        check_strength(strength)?;
        if payload.is_empty() {
            return Err(Error::param("payload must carry at least one bit"));
        }
        Ok(AdditiveKey {
            seed,
            payload,
            strength,
            threshold: DEFAULT_ADDITIVE_THRESHOLD,
        })
    }

    /// Key with a seed-derived payload of `bits` bits.
    pub fn random(seed: u64, bits: usize, strength: f64) -> Result<Self> {
        AdditiveKey::new(seed, random_payload(seed, bits), strength)
    }

    /// Pattern for a `width × height` luma plane.
    pub fn pattern(&self, width: usize, height: usize) -> Result<AdditivePattern> {
        let n = width * height;
        let bits = self.payload.len();
        if n < 2 * bits {
            return Err(Error::Capacity {
                required: 2 * bits,
                available: n,
            });
        }
        let mut chips = rng::seeded(rng::derive_seed(self.seed, 1));
        let mut order: Vec<u32> = (0..n as u32).collect();
        let mut perm = rng::seeded(rng::derive_seed(self.seed, 2));
        for i in (1..n).rev() {
            let j = perm.random_range(0..=i);
            order.swap(i, j);
        }
        let mut groups = vec![0u32; n];
        for (j, &pixel) in order.iter().enumerate() {
            groups[pixel as usize] = (j % bits) as u32;
        }
        let raw: Vec<f64> = (0..n)
            .map(|i| {
                let chip = if chips.random::<bool>() { 1.0 } else { -1.0 };
                let sign = if self.payload[groups[i] as usize] { 1.0 } else { -1.0 };
                chip * sign
            })
            .collect();
        let pattern = normalize(Image::from_raw(width, height, 1, raw))?;
        Ok(AdditivePattern {
            pattern,
            strength: self.strength,
            groups,
            bits,
            threshold: self.threshold,
        })
    }
}

/// `luma' = luma + α·W`, chroma shifted with luma, then clamp.
pub fn embed_additive(img: &Image, wm: &AdditivePattern) -> Result<Embedded> {
    img.ensure_same_size(&wm.pattern)?;
    if wm.strength == 0.0 {
        return Ok(Embedded::from_unclamped(img.clone()));
    }
    let luma = img.luma();
    let marked = luma.zip_map(&wm.pattern, |l, w| l + wm.strength * w)?;
    Ok(Embedded::from_unclamped(img.with_luma(&marked)?))
}

/// `luma − box3(luma)` with mirrored borders.
pub fn highpass(luma: &Image) -> Image {
    Image::from_fn(luma.width(), luma.height(), |x, y| {
        let (xi, yi) = (x as isize, y as isize);
        let mut acc = 0.0;
        for dy in -1..=1 {
            for dx in -1..=1 {
                acc += luma.get_mirrored(xi + dx, yi + dy, 0);
            }
        }
        luma.get(x, y, 0) - acc / 9.0
    })
}

pub fn detect_additive(img: &Image, wm: &AdditivePattern, original: Option<&Image>) -> Result<DetectionResult> {
    detect_additive_at(img, wm, original, wm.threshold)
}

/// Blind mode correlates `highpass(luma)` with `W`; informed mode (with the
/// original) correlates `luma − original_luma`. The residual mean is removed
/// first, so a uniform intensity shift does not move the informed score. A
/// bit is recovered when its group's partial correlation has the embedded sign.
pub fn detect_additive_at(
    img: &Image,
    wm: &AdditivePattern,
    original: Option<&Image>,
    threshold: f64,
) -> Result<DetectionResult> {
    img.ensure_same_size(&wm.pattern)?;
    let residual = match original {
        Some(orig) => {
            img.ensure_same_size(orig)?;
            img.luma().sub(&orig.luma())?
        }
        None => highpass(&img.luma()),
    };
    let mean = residual.mean();
    let residual = residual.map(|v| v - mean);
    let r = residual.plane(0);
    let w = wm.pattern.plane(0);
    let mut partial = vec![0.0; wm.bits];
    let mut dot = 0.0;
    for i in 0..r.len() {
        let t = r[i] * w[i];
        dot += t;
        partial[wm.groups[i] as usize] += t;
    }
    let norm = (residual.sum_squares() * wm.pattern.sum_squares()).sqrt();
    let correlation = if norm > 0.0 { dot / norm } else { 0.0 };
    let correct: Vec<bool> = partial.iter().map(|&t| t > 0.0).collect();
    Ok(DetectionResult::from_bits(&correct, correlation, threshold, false))
}
