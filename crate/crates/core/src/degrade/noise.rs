use crate::error::{Error, Result};
use crate::image::Image;
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseParams {
    /// Standard deviation on the `[0, 1]` intensity scale.
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseParams {
    pub fn new(sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::param(format!("noise sigma {sigma} must be finite and >= 0")));
        }
        Ok(NoiseParams { sigma, seed })
    }
}

/// Adds i.i.d. `N(0, σ²)` to every sample, then clamps.
pub fn add_pixel_noise(img: &Image, p: &NoiseParams) -> Image {
    add_pixel_noise_unclamped(img, p).clamped()
}

pub fn add_pixel_noise_unclamped(img: &Image, p: &NoiseParams) -> Image {
    if p.sigma == 0.0 {
        return img.clone();
    }
    let mut r = rng::seeded(p.seed);
    let mut data = img.data().to_vec();
    for v in &mut data {
        *v += p.sigma * rng::standard_normal(&mut r);
    }
    Image::from_raw(img.width(), img.height(), img.channels(), data)
}
