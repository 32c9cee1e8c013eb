use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use super::{Regularizer, RestorationParams};
use crate::error::{Error, Result};
use crate::fourier::{filter_plane, SpectralField};
use crate::image::Image;

/// Eigenvalues `4sin²(πk/M) + 4sin²(πl/N)` of the periodic discrete Laplacian `DᵀD`.
pub fn laplacian_eigenvalues(width: usize, height: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(width * height);
    for l in 0..height {
        let sy = (PI * l as f64 / height as f64).sin();
        for k in 0..width {
            let sx = (PI * k as f64 / width as f64).sin();
            out.push(4.0 * sx * sx + 4.0 * sy * sy);
        }
    }
    out
}

/// `‖∇x‖²` summed over channels, periodic forward differences.
pub fn gradient_energy(x: &Image) -> f64 {
    let (w, h) = (x.width(), x.height());
    let mut acc = 0.0;
    for c in 0..x.channels() {
        let p = x.plane(c);
        for y in 0..h {
            for i in 0..w {
                let v = p[y * w + i];
                let dx = p[y * w + (i + 1) % w] - v;
                let dy = p[((y + 1) % h) * w + i] - v;
                acc += dx * dx + dy * dy;
            }
        }
    }
    acc
}

pub fn tikhonov_objective(y: &Image, x: &Image, beta: f64) -> Result<f64> {
    Ok(y.sub(x)?.sum_squares() + beta * gradient_energy(x))
}

/// Exact minimizer of `‖y − x‖² + β‖∇x‖²`: `x̂ = ŷ / (1 + βΛ)`, then clamp.
///
/// The filter is the resolvent of a graph Laplacian, a convex combination of
/// samples, so clamping only removes round-off for inputs in `[0, 1]`.
pub fn restore_tikhonov(y: &Image, p: &RestorationParams) -> Result<Image> {
    p.validate()?;
    if p.regularizer != Regularizer::TikhonovGradient {
        return Err(Error::param("restore_tikhonov requires the tikhonov-gradient regularizer"));
    }
    if p.beta == 0.0 {
        return Ok(y.clone());
    }
    let (w, h) = (y.width(), y.height());
    let filter = SpectralField::new(
        w,
        h,
        laplacian_eigenvalues(w, h)
            .into_iter()
            .map(|lam| Complex64::new(1.0 / (1.0 + p.beta * lam), 0.0))
            .collect(),
    );
    let out = y.map_channels(|plane| {
        Ok(Image::from_raw(w, h, 1, filter_plane(plane.plane(0), w, h, &filter)))
    })?;
    Ok(out.clamped())
}
