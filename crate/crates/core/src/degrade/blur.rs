//! Gaussian blur in two boundary modes.
//!
//! * Mirror mode: separable spatial convolution with the sampled, truncated
//!   kernel of odd size `kernel_size`, half-sample symmetric padding.
//! * Periodic mode: multiplication of the DFT by the analytic transfer
//!   function `H(u,v) = exp(−2π²σ²(u²+v²))` at folded normalized
//!   frequencies. This is circular convolution with the periodized Gaussian,
//!   and its spectrum is `H` exactly, so spectral checks and the Wiener
//!   inverse can be compared against the analytic form without aliasing or
//!   truncation error. `kernel_size` is not used in this mode.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier::{filter_plane, SpectralField};
use crate::image::{mirror_index, Image};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlurParams {
    /// Standard deviation in pixels.
    pub sigma: f64,
    /// Odd, at least 1.
    pub kernel_size: usize,
}

impl BlurParams {
    /// Kernel size defaults to `6·⌈σ⌉ + 1`.
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::param(format!("blur sigma {sigma} must be finite and >= 0")));
        }
        BlurParams::with_kernel(sigma, 6 * sigma.ceil() as usize + 1)
    }

    pub fn with_kernel(sigma: f64, kernel_size: usize) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::param(format!("blur sigma {sigma} must be finite and >= 0")));
        }
        if kernel_size == 0 || kernel_size.is_multiple_of(2) {
            return Err(Error::param(format!("kernel size {kernel_size} must be odd and >= 1")));
        }
        Ok(BlurParams { sigma, kernel_size })
    }

    pub fn radius(&self) -> usize {
        self.kernel_size / 2
    }
}

/// Sampled 1-D Gaussian normalized to unit sum. The 2-D kernel is the outer
/// product with itself and therefore also sums to one.
pub fn gaussian_kernel_1d(p: &BlurParams) -> Vec<f64> {
    let r = p.radius() as isize;
    if p.sigma == 0.0 || r == 0 {
        let mut k = vec![0.0; p.kernel_size];
        k[p.radius()] = 1.0;
        return k;
    }
    let two_var = 2.0 * p.sigma * p.sigma;
    let raw: Vec<f64> = (-r..=r).map(|i| (-((i * i) as f64) / two_var).exp()).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / sum).collect()
}

/// Mirror-mode blur, clamped. The kernel may not exceed `2·min(M,N)+1` taps.
pub fn gaussian_blur(img: &Image, p: &BlurParams) -> Result<Image> {
    let limit = 2 * img.width().min(img.height()) + 1;
    if p.kernel_size > limit {
        return Err(Error::param(format!(
            "kernel size {} exceeds {limit} for a {}x{} image",
            p.kernel_size,
            img.width(),
            img.height()
        )));
    }
    if p.kernel_size == 1 {
        return Ok(img.clone());
    }
    let kernel = gaussian_kernel_1d(p);
    let r = p.radius() as isize;
    let (w, h) = (img.width(), img.height());
    let mut out = img.clone();
    let mut tmp = vec![0.0; w * h];
    for c in 0..img.channels() {
        let src = img.plane(c);
        for y in 0..h {
            let row = &src[y * w..(y + 1) * w];
            for x in 0..w {
                let mut acc = 0.0;
                for (i, k) in kernel.iter().enumerate() {
                    acc += k * row[mirror_index(x as isize + i as isize - r, w)];
                }
                tmp[y * w + x] = acc;
            }
        }
        let dst = out.plane_mut(c);
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0;
                for (i, k) in kernel.iter().enumerate() {
                    acc += k * tmp[mirror_index(y as isize + i as isize - r, h) * w + x];
                }
                dst[y * w + x] = acc;
            }
        }
    }
    Ok(out.clamped())
}

/// Analytic `H(u,v)` sampled on an `M × N` grid. Real and positive, `H(0,0) = 1`.
pub fn transfer_function(p: &BlurParams, width: usize, height: usize) -> SpectralField {
    let c = 2.0 * PI * PI * p.sigma * p.sigma;
    SpectralField::from_frequency_fn(width, height, |u, v| {
        Complex64::new((-c * (u * u + v * v)).exp(), 0.0)
    })
}

/// Exact response of the sampled, truncated kernel, `K̂(u)·K̂(v)` with
/// `K̂(f) = Σᵢ kᵢ cos(2πf(i − r))`. Mirror-mode blur of an `M × N` image is
/// circular convolution of its `2M × 2N` symmetric extension with this response.
pub fn kernel_transfer_function(p: &BlurParams, width: usize, height: usize) -> SpectralField {
    let kernel = gaussian_kernel_1d(p);
    let r = p.radius() as f64;
    let response = |f: f64| -> f64 {
        kernel
            .iter()
            .enumerate()
            .map(|(i, k)| k * (2.0 * PI * f * (i as f64 - r)).cos())
            .sum()
    };
    let ku: Vec<f64> = (0..width).map(|k| response(k as f64 / width as f64)).collect();
    let kv: Vec<f64> = (0..height).map(|l| response(l as f64 / height as f64)).collect();
    let mut coeffs = Vec::with_capacity(width * height);
    for &hv in &kv {
        for &hu in &ku {
            coeffs.push(Complex64::new(hu * hv, 0.0));
        }
    }
    SpectralField::new(width, height, coeffs)
}

/// `r(u,v) = |H(u,v)|²`, the fraction of spectral energy surviving the blur, row-major.
pub fn suppression_ratio(p: &BlurParams, width: usize, height: usize) -> Vec<f64> {
    transfer_function(p, width, height).power()
}

/// Periodic-mode blur, clamped.
pub fn gaussian_blur_periodic(img: &Image, p: &BlurParams) -> Image {
    gaussian_blur_periodic_unclamped(img, p).clamped()
}

pub fn gaussian_blur_periodic_unclamped(img: &Image, p: &BlurParams) -> Image {
    let h = transfer_function(p, img.width(), img.height());
    let (w, ht) = (img.width(), img.height());
    img.map_channels(|plane| {
        Ok(Image::from_raw(w, ht, 1, filter_plane(plane.plane(0), w, ht, &h)))
    })
    .expect("per-channel filtering preserves geometry")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::dft2;

    #[test]
    fn default_kernel_size() {
        assert_eq!(BlurParams::new(15.0).unwrap().kernel_size, 91);
        assert_eq!(BlurParams::new(1.5).unwrap().kernel_size, 13);
        assert_eq!(BlurParams::new(0.0).unwrap().kernel_size, 1);
        assert!(BlurParams::with_kernel(1.0, 4).is_err());
        assert!(BlurParams::with_kernel(1.0, 0).is_err());
    }

    #[test]
    fn kernel_sums_to_one() {
        for &(s, k) in &[(15.0, 71), (1.0, 7), (0.3, 3), (4.0, 25)] {
            let kern = gaussian_kernel_1d(&BlurParams::with_kernel(s, k).unwrap());
            assert_eq!(kern.len(), k);
            let sum: f64 = kern.iter().sum();
            assert!((sum - 1.0).abs() < 1e-15);
            let sum2: f64 = kern.iter().flat_map(|a| kern.iter().map(move |b| a * b)).sum();
            assert!((sum2 - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn unit_kernel_is_identity() {
        let img = Image::from_fn(10, 7, |x, y| ((x * y) % 5) as f64 / 5.0);
        let p = BlurParams::with_kernel(3.0, 1).unwrap();
        assert_eq!(gaussian_blur(&img, &p).unwrap(), img);
    }

    #[test]
    fn constant_image_unchanged() {
        let img = Image::filled(20, 12, 3, 0.37);
        let out = gaussian_blur(&img, &BlurParams::with_kernel(2.0, 13).unwrap()).unwrap();
        for v in out.data() {
            assert!((v - 0.37).abs() < 1e-12);
        }
        let out = gaussian_blur_periodic(&img, &BlurParams::new(2.0).unwrap());
        for v in out.data() {
            assert!((v - 0.37).abs() < 1e-12);
        }
    }

    #[test]
    fn oversized_kernel_rejected() {
        let img = Image::filled(10, 10, 1, 0.5);
        assert!(gaussian_blur(&img, &BlurParams::with_kernel(15.0, 71).unwrap()).is_err());
        assert!(gaussian_blur(&img, &BlurParams::with_kernel(3.0, 21).unwrap()).is_ok());
    }

    #[test]
    fn transfer_function_values() {
        let p = BlurParams::new(15.0).unwrap();
        let h = transfer_function(&p, 40, 30);
        assert_eq!(h.get(0, 0).re, 1.0);
        // bin (4, 3) → u = v = 0.1
        let expected = (-2.0 * PI * PI * 225.0 * 0.02f64).exp();
        assert!((h.get(4, 3).re / expected - 1.0).abs() < 1e-12);
        assert!((expected.ln() + 88.826_4).abs() < 1e-3);
        let r = suppression_ratio(&p, 40, 30);
        assert!((r[3 * 40 + 4] / (expected * expected) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn periodic_impulse_response_matches_analytic() {
        for &sigma in &[1.0, 2.0, 4.0] {
            let p = BlurParams::new(sigma).unwrap();
            let (w, h) = (32, 24);
            let delta = Image::from_fn(w, h, |x, y| if x == 0 && y == 0 { 1.0 } else { 0.0 });
            let f = dft2(&gaussian_blur_periodic_unclamped(&delta, &p));
            let t = transfer_function(&p, w, h);
            for (m, a) in f.coefficients().iter().zip(t.coefficients()) {
                if a.re > 0.01 {
                    assert!((m.re / a.re - 1.0).abs() < 0.05);
                }
            }
        }
    }

    #[test]
    fn mirror_blur_approximates_analytic_at_low_frequency() {
        // Truncation at 3σ renormalizes the tails, so agreement is only to ~2e-3.
        let p = BlurParams::new(2.0).unwrap();
        let k = gaussian_kernel_1d(&p);
        let r = p.radius() as f64;
        for &f in &[0.0, 0.02, 0.05, 0.08] {
            let resp: f64 = k
                .iter()
                .enumerate()
                .map(|(i, w)| w * (2.0 * PI * f * (i as f64 - r)).cos())
                .sum();
            let analytic = (-2.0 * PI * PI * 4.0 * f * f).exp();
            assert!((resp - analytic).abs() < 5e-3, "f={f}: {resp} vs {analytic}");
        }
    }
}
