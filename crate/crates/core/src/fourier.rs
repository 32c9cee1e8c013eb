//! Two-dimensional DFT of image planes.
//!
//! Forward transforms are unnormalized, inverse transforms carry the `1/(MN)`
//! factor. With this convention white noise of variance `σ²` has expected
//! per-bin energy `σ²·M·N`. Arbitrary (non power of two) sizes are handled
//! by rustfft's mixed-radix and Bluestein plans.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::image::Image;

/// Complex spectrum of one image plane. Bin `(k, l)` holds horizontal
/// frequency index `k ∈ [0, width)` and vertical index `l ∈ [0, height)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    width: usize,
    height: usize,
    coefficients: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(width: usize, height: usize, coefficients: Vec<Complex64>) -> Self {
        assert_eq!(coefficients.len(), width * height);
        SpectralField {
            width,
            height,
            coefficients,
        }
    }

    /// Field sampled from a function of the folded normalized frequency `(u, v)`.
    pub fn from_frequency_fn(width: usize, height: usize, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let mut coefficients = Vec::with_capacity(width * height);
        for l in 0..height {
            let v = normalized_frequency(l, height);
            for k in 0..width {
                coefficients.push(f(normalized_frequency(k, width), v));
            }
        }
        SpectralField::new(width, height, coefficients)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn get(&self, k: usize, l: usize) -> Complex64 {
        self.coefficients[l * self.width + k]
    }

    /// Folded normalized frequency of bin `(k, l)`, each component in `[-½, ½)`.
    pub fn frequency(&self, k: usize, l: usize) -> (f64, f64) {
        (
            normalized_frequency(k, self.width),
            normalized_frequency(l, self.height),
        )
    }

    /// `Σ |c|²` over all bins.
    pub fn energy(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn power(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c.norm_sqr()).collect()
    }

    pub fn mul(&self, other: &SpectralField) -> SpectralField {
        assert_eq!((self.width, self.height), (other.width, other.height));
        SpectralField::new(
            self.width,
            self.height,
            self.coefficients
                .iter()
                .zip(&other.coefficients)
                .map(|(a, b)| a * b)
                .collect(),
        )
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> SpectralField {
        SpectralField::new(
            self.width,
            self.height,
            self.coefficients.iter().map(|&c| f(c)).collect(),
        )
    }

    /// Inverse DFT (scaled by `1/(MN)`), real part only.
    pub fn inverse(&self) -> Image {
        let mut buf = self.coefficients.clone();
        transform_2d(&mut buf, self.width, self.height, true);
        let scale = 1.0 / (self.width * self.height) as f64;
        Image::from_raw(
            self.width,
            self.height,
            1,
            buf.iter().map(|c| c.re * scale).collect(),
        )
    }
}

/// Folds bin `k` of an `n`-point transform to the normalized frequency in `[-½, ½)`.
pub fn normalized_frequency(k: usize, n: usize) -> f64 {
    if 2 * k >= n {
        (k as f64 - n as f64) / n as f64
    } else {
        k as f64 / n as f64
    }
}

/// Unnormalized forward DFT. Single-channel images are transformed directly,
/// color images through their luma.
pub fn dft2(img: &Image) -> SpectralField {
    let plane = if img.channels() == 1 {
        img.plane(0).to_vec()
    } else {
        img.luma().into_data()
    };
    dft2_plane(&plane, img.width(), img.height())
}

pub fn dft2_plane(plane: &[f64], width: usize, height: usize) -> SpectralField {
    assert_eq!(plane.len(), width * height);
    let mut buf: Vec<Complex64> = plane.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform_2d(&mut buf, width, height, false);
    SpectralField::new(width, height, buf)
}

/// Multiplies the spectrum of a plane by `filter` and returns the real part
/// of the inverse, i.e. a periodic convolution.
pub fn filter_plane(plane: &[f64], width: usize, height: usize, filter: &SpectralField) -> Vec<f64> {
    assert_eq!((filter.width, filter.height), (width, height));
    let mut buf: Vec<Complex64> = plane.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform_2d(&mut buf, width, height, false);
    for (c, h) in buf.iter_mut().zip(&filter.coefficients) {
        *c *= h;
    }
    transform_2d(&mut buf, width, height, true);
    let scale = 1.0 / (width * height) as f64;
    buf.iter().map(|c| c.re * scale).collect()
}

fn transform_2d(buf: &mut [Complex64], width: usize, height: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let row = if inverse {
        planner.plan_fft_inverse(width)
    } else {
        planner.plan_fft_forward(width)
    };
    // rustfft processes consecutive chunks of the plan length.
    row.process(buf);

    if height > 1 {
        let col = if inverse {
            planner.plan_fft_inverse(height)
        } else {
            planner.plan_fft_forward(height)
        };
        let mut t = transpose(buf, width, height);
        col.process(&mut t);
        let back = transpose(&t, height, width);
        buf.copy_from_slice(&back);
    }
}

fn transpose(src: &[Complex64], width: usize, height: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); src.len()];
    for y in 0..height {
        for x in 0..width {
            out[x * height + y] = src[y * width + x];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;
    use std::f64::consts::PI;

    /// Direct O(M²N²) evaluation of the forward DFT.
    fn brute_dft(plane: &[f64], w: usize, h: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); w * h];
        for l in 0..h {
            for k in 0..w {
                let mut acc = Complex64::new(0.0, 0.0);
                for y in 0..h {
                    for x in 0..w {
                        let phase = -2.0 * PI * (k as f64 * x as f64 / w as f64 + l as f64 * y as f64 / h as f64);
                        acc += plane[y * w + x] * Complex64::from_polar(1.0, phase);
                    }
                }
                out[l * w + k] = acc;
            }
        }
        out
    }

    fn random_plane(w: usize, h: usize, seed: u64) -> Vec<f64> {
        let mut r = rng::seeded(seed);
        (0..w * h).map(|_| r.random::<f64>()).collect()
    }

    #[test]
    fn constant_image_is_dc_only() {
        let img = Image::filled(6, 5, 1, 0.25);
        let f = dft2(&img);
        assert!((f.get(0, 0).re - 0.25 * 30.0).abs() < 1e-12);
        for (i, c) in f.coefficients().iter().enumerate().skip(1) {
            assert!(c.norm() < 1e-12, "bin {i} = {c}");
        }
    }

    #[test]
    fn impulse_has_flat_spectrum() {
        let img = Image::from_fn(7, 4, |x, y| if x == 0 && y == 0 { 1.0 } else { 0.0 });
        for c in dft2(&img).coefficients() {
            assert!((c - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn matches_brute_force_oracle() {
        for &(w, h) in &[(8, 8), (5, 3), (6, 7)] {
            let plane = random_plane(w, h, 11 + w as u64);
            let fast = dft2_plane(&plane, w, h);
            let slow = brute_dft(&plane, w, h);
            for (a, b) in fast.coefficients().iter().zip(&slow) {
                assert!((a - b).norm() < 1e-10);
            }
            let e_slow: f64 = slow.iter().map(|c| c.norm_sqr()).sum();
            let e_space: f64 = plane.iter().map(|v| v * v).sum::<f64>() * (w * h) as f64;
            assert!((e_slow - e_space).abs() / e_space < 1e-10);
            assert!((fast.energy() - e_slow).abs() / e_slow < 1e-10);
        }
    }

    #[test]
    fn round_trip() {
        let plane = random_plane(17, 23, 3);
        let back = dft2_plane(&plane, 17, 23).inverse();
        for (a, b) in back.data().iter().zip(&plane) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn frequency_folding() {
        assert_eq!(normalized_frequency(0, 8), 0.0);
        assert_eq!(normalized_frequency(3, 8), 0.375);
        assert_eq!(normalized_frequency(4, 8), -0.5);
        assert_eq!(normalized_frequency(7, 8), -0.125);
        assert!((normalized_frequency(2, 5) - 0.4).abs() < 1e-15);
        assert!((normalized_frequency(3, 5) + 0.4).abs() < 1e-15);
    }
}
