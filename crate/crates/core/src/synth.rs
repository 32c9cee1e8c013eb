//! Seeded synthetic test images with a natural-image-like spectrum.
//!
//! The luma field is random-phase noise with amplitude `∝ (f₀ + f)^(−p)`,
//! rescaled to a target mean and contrast, plus a faint white texture. The
//! steep falloff keeps most energy at low frequencies, as in photographs.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier::{normalized_frequency, SpectralField};
use crate::image::Image;
use crate::rng;
use rand::Rng;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynthParams {
    pub width: usize,
    pub height: usize,
    /// Spectral amplitude exponent `p`.
    pub exponent: f64,
    /// Frequency offset `f₀` that keeps the DC neighbourhood finite.
    pub corner: f64,
    /// Standard deviation of the smooth field.
    pub contrast: f64,
    /// Standard deviation of the white texture.
    pub texture: f64,
}

impl SynthParams {
    pub fn new(width: usize, height: usize) -> Self {
        SynthParams {
            width,
            height,
            exponent: 2.5,
            corner: 0.01,
            contrast: 0.15,
            texture: 0.004,
        }
    }
}

pub fn synthetic_image(p: &SynthParams, seed: u64) -> Result<Image> {
    if p.width == 0 || p.height == 0 {
        return Err(Error::param("synthetic image must be non-empty"));
    }
    let (w, h) = (p.width, p.height);
    let mut phases = rng::seeded(rng::derive_seed(seed, 0));
    let mut coeffs = Vec::with_capacity(w * h);
    for l in 0..h {
        let v = normalized_frequency(l, h);
        for k in 0..w {
            let u = normalized_frequency(k, w);
            let f = (u * u + v * v).sqrt();
            let amp = if k == 0 && l == 0 { 0.0 } else { (p.corner + f).powf(-p.exponent) };
            let phase = phases.random::<f64>() * std::f64::consts::TAU;
            coeffs.push(Complex64::from_polar(amp, phase));
        }
    }
    let field = SpectralField::new(w, h, coeffs).inverse();
    let mean = field.mean();
    let sd = (field.sum_squares() / field.len() as f64 - mean * mean).sqrt();
    let mut r = rng::seeded(rng::derive_seed(seed, 1));
    let level = 0.35 + 0.3 * r.random::<f64>();
    let mut texture = vec![0.0; w * h];
    rng::fill_normal(&mut r, p.texture, &mut texture);
    let data = field
        .data()
        .iter()
        .zip(&texture)
        .map(|(&x, &t)| {
            let s = if sd > 0.0 { (x - mean) / sd } else { 0.0 };
            level + p.contrast * s + t
        })
        .collect();
    Ok(Image::new(w, h, 1, data)?.clamped())
}

/// `count` images; image `i` uses seed `derive_seed(seed, i)`.
pub fn synthetic_corpus(p: &SynthParams, count: usize, seed: u64) -> Result<Vec<Image>> {
    (0..count)
        .map(|i| synthetic_image(p, rng::derive_seed(seed, i as u64)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_in_range_and_varied() {
        let p = SynthParams::new(48, 40);
        let a = synthetic_image(&p, 3).unwrap();
        assert_eq!(a, synthetic_image(&p, 3).unwrap());
        assert_ne!(a, synthetic_image(&p, 4).unwrap());
        assert_eq!((a.width(), a.height(), a.channels()), (48, 40, 1));
        assert!(a.data().iter().all(|v| (0.0..=1.0).contains(v)));
        let sd = (a.sum_squares() / a.len() as f64 - a.mean().powi(2)).sqrt();
        assert!(sd > 0.05, "{sd}");
    }

    #[test]
    fn energy_concentrates_at_low_frequency() {
        let img = synthetic_image(&SynthParams::new(64, 64), 1).unwrap();
        let centered = img.map(|v| v - img.mean());
        let power = crate::fourier::dft2(&centered).power();
        let (mut low, mut total) = (0.0, 0.0);
        for l in 0..64 {
            for k in 0..64 {
                let (u, v) = (normalized_frequency(k, 64), normalized_frequency(l, 64));
                let e = power[l * 64 + k];
                total += e;
                if (u * u + v * v).sqrt() < 0.1 {
                    low += e;
                }
            }
        }
        assert!(low / total > 0.9, "{}", low / total);
    }
}
