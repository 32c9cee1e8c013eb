//! Frequency-domain diagnostics: band-wise watermark energy before and after
//! an attack, the blur suppression law and the flat pixel-noise spectrum.
//!
//! Radial frequency of bin `(k, l)` is `√(u² + v²)` with `u, v` folded to
//! `[−½, ½)`, so it lies in `[0, √2/2]`. DC belongs to the first band.

use std::fmt::Write;

use rayon::prelude::*;

use crate::degrade::{suppression_ratio, BlurParams};
use crate::error::{Error, Result};
use crate::fourier::{dft2, dft2_plane, normalized_frequency, SpectralField};
use crate::image::Image;
use crate::plot::LinePlot;
use crate::rng;

pub const MAX_RADIUS: f64 = std::f64::consts::FRAC_1_SQRT_2;
pub const DEFAULT_BANDS: usize = 8;

/// DFT of the luma difference `marked − clean`.
pub fn watermark_spectrum(clean: &Image, marked: &Image) -> Result<SpectralField> {
    clean.ensure_same_size(marked)?;
    Ok(dft2(&marked.luma().sub(&clean.luma())?))
}

/// Radial band edges `e₀ = 0 < e₁ < … < e_B = √2/2`. Band `i` holds
/// `e_i ≤ r < e_{i+1}`; the last band also holds `r = √2/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct BandSpec {
    edges: Vec<f64>,
}

impl Default for BandSpec {
    fn default() -> Self {
        BandSpec::uniform(DEFAULT_BANDS).expect("valid")
    }
}

impl BandSpec {
    pub fn uniform(bands: usize) -> Result<Self> {
        if bands == 0 {
            return Err(Error::param("need at least one band"));
        }
        Ok(BandSpec {
            edges: (0..=bands).map(|i| MAX_RADIUS * i as f64 / bands as f64).collect(),
        })
    }

    pub fn from_edges(edges: Vec<f64>) -> Result<Self> {
        let ok = edges.len() >= 2
            && edges[0] == 0.0
            && (edges[edges.len() - 1] - MAX_RADIUS).abs() < 1e-12
            && edges.windows(2).all(|w| w[0] < w[1]);
        if !ok {
            return Err(Error::param("band edges must increase strictly from 0 to √2/2"));
        }
        Ok(BandSpec { edges })
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn band_of(&self, radius: f64) -> usize {
        let n = self.len();
        self.edges[1..n].partition_point(|&e| e <= radius)
    }

    /// Band index of every bin, row-major.
    pub fn assign(&self, width: usize, height: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(width * height);
        for l in 0..height {
            let v = normalized_frequency(l, height);
            for k in 0..width {
                let u = normalized_frequency(k, width);
                out.push(self.band_of((u * u + v * v).sqrt()));
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BandRow {
    pub band: usize,
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
    /// Energy of `marked − clean` in the band.
    pub reference_energy: f64,
    /// Energy of the attacked difference in the band.
    pub attacked_energy: f64,
    /// `attacked_energy / reference_energy`.
    pub measured: f64,
    /// `Σ|ΔI|²·|H|² / Σ|ΔI|²` over the band, for blur attacks.
    pub predicted: Option<f64>,
    /// Unweighted band mean of `|H|²`, for blur attacks.
    pub predicted_flat: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BandEnergyReport {
    pub width: usize,
    pub height: usize,
    pub edges: Vec<f64>,
    /// Populated bands only.
    pub rows: Vec<BandRow>,
    pub notes: Vec<String>,
    /// Sum of reference band energies.
    pub reference_total: f64,
    /// `MN·‖marked − clean‖²` computed in pixel space.
    pub parseval_total: f64,
}

impl BandEnergyReport {
    pub fn parseval_error(&self) -> f64 {
        if self.parseval_total == 0.0 {
            self.reference_total.abs()
        } else {
            (self.reference_total - self.parseval_total).abs() / self.parseval_total
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("band,lo,hi,bins,reference_energy,attacked_energy,measured,predicted,predicted_flat\n");
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.9e}")).unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{:.6},{:.6},{},{:.9e},{:.9e},{:.9e},{},{}",
                r.band,
                r.lo,
                r.hi,
                r.bins,
                r.reference_energy,
                r.attacked_energy,
                r.measured,
                opt(r.predicted),
                opt(r.predicted_flat)
            );
        }
        s
    }

    pub fn to_svg(&self) -> String {
        let center = |r: &BandRow| 0.5 * (r.lo + r.hi);
        let mut plot = LinePlot::new("Watermark energy surviving the attack", "radial frequency", "energy ratio")
            .series("measured", self.rows.iter().map(|r| (center(r), r.measured)).collect());
        if self.rows.iter().any(|r| r.predicted.is_some()) {
            plot = plot.series(
                "predicted |H|²",
                self.rows.iter().filter_map(|r| r.predicted.map(|p| (center(r), p))).collect(),
            );
        }
        plot.log_y = true;
        plot.to_svg()
    }
}

/// Band profile with `attacked` compared against `clean` directly.
pub fn suppression_profile(
    clean: &Image,
    marked: &Image,
    attacked: &Image,
    bands: &BandSpec,
    blur: Option<&BlurParams>,
) -> Result<BandEnergyReport> {
    suppression_profile_paired(clean, marked, clean, attacked, bands, blur)
}

/// Band profile of `attacked_marked − attacked_clean` against
/// `marked − clean`. Attacking the clean image as well isolates the
/// watermark under any linear attack.
pub fn suppression_profile_paired(
    clean: &Image,
    marked: &Image,
    attacked_clean: &Image,
    attacked_marked: &Image,
    bands: &BandSpec,
    blur: Option<&BlurParams>,
) -> Result<BandEnergyReport> {
    for other in [marked, attacked_clean, attacked_marked] {
        clean.ensure_same_size(other)?;
    }
    let (w, h) = (clean.width(), clean.height());
    let diff = marked.luma().sub(&clean.luma())?;
    let reference = dft2(&diff).power();
    let attacked = watermark_spectrum(attacked_clean, attacked_marked)?.power();
    let h2 = blur.map(|b| suppression_ratio(b, w, h));
    let assign = bands.assign(w, h);

    let nb = bands.len();
    let mut bins = vec![0usize; nb];
    let mut refe = vec![0.0; nb];
    let mut att = vec![0.0; nb];
    let mut weighted = vec![0.0; nb];
    let mut flat = vec![0.0; nb];
    for (i, &b) in assign.iter().enumerate() {
        bins[b] += 1;
        refe[b] += reference[i];
        att[b] += attacked[i];
        if let Some(h2) = &h2 {
            weighted[b] += reference[i] * h2[i];
            flat[b] += h2[i];
        }
    }
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    for b in 0..nb {
        let (lo, hi) = (bands.edges[b], bands.edges[b + 1]);
        if bins[b] == 0 {
            notes.push(format!("band {b} [{lo:.4}, {hi:.4}) has no frequency bins; skipped"));
            continue;
        }
        let measured = if refe[b] > 0.0 {
            att[b] / refe[b]
        } else if att[b] == 0.0 {
            1.0
        } else {
            f64::INFINITY
        };
        rows.push(BandRow {
            band: b,
            lo,
            hi,
            bins: bins[b],
            reference_energy: refe[b],
            attacked_energy: att[b],
            measured,
            predicted: h2.as_ref().map(|_| if refe[b] > 0.0 { weighted[b] / refe[b] } else { flat[b] / bins[b] as f64 }),
            predicted_flat: h2.as_ref().map(|_| flat[b] / bins[b] as f64),
        });
    }
    Ok(BandEnergyReport {
        width: w,
        height: h,
        edges: bands.edges.clone(),
        rows,
        notes,
        reference_total: refe.iter().sum(),
        parseval_total: (w * h) as f64 * diff.sum_squares(),
    })
}

/// Band energy of a field, indexed by band.
pub fn band_energies(field: &SpectralField, bands: &BandSpec) -> Vec<f64> {
    let mut out = vec![0.0; bands.len()];
    for (p, b) in field.power().iter().zip(bands.assign(field.width(), field.height())) {
        out[b] += p;
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoiseEnergyReport {
    pub sigma: f64,
    pub width: usize,
    pub height: usize,
    pub trials: usize,
    /// `σ²·MN`.
    pub target: f64,
    /// Mean `|n̂|²` per bin over the trials, row-major.
    pub per_bin_mean: Vec<f64>,
    pub grand_mean: f64,
    /// `|grand_mean − target| / target`, 0 when the target is 0.
    pub relative_error: f64,
    /// Largest per-bin deviation in standard errors.
    pub max_z: f64,
    pub passed: bool,
}

pub const GRAND_MEAN_TOLERANCE: f64 = 0.02;
pub const BIN_Z_LIMIT: f64 = 6.0;

/// Monte-Carlo check of `E|n̂(u,v)|² = σ²MN` for i.i.d. `N(0, σ²)` pixel noise.
///
/// Trial `t` uses seed `derive_seed(seed, t)`. Per-bin standard errors are
/// analytic: `|n̂|²/σ²MN` is Exp(1) for complex bins and χ²₁ for the
/// self-conjugate ones (DC and Nyquist).
pub fn noise_energy_check(sigma: f64, width: usize, height: usize, trials: usize, seed: u64) -> Result<NoiseEnergyReport> {
    if trials == 0 {
        return Err(Error::param("trials must be >= 1"));
    }
    if width == 0 || height == 0 {
        return Err(Error::param("noise field must be non-empty"));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::param(format!("noise sigma {sigma} must be finite and >= 0")));
    }
    let n = width * height;
    let target = sigma * sigma * n as f64;
    let powers: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::seeded(rng::derive_seed(seed, t as u64));
            let mut plane = vec![0.0; n];
            rng::fill_normal(&mut r, sigma, &mut plane);
            dft2_plane(&plane, width, height).power()
        })
        .collect();
    let mut sum = vec![0.0; n];
    for p in &powers {
        for (s, v) in sum.iter_mut().zip(p) {
            *s += v;
        }
    }
    let per_bin_mean: Vec<f64> = sum.iter().map(|s| s / trials as f64).collect();
    let grand_mean = per_bin_mean.iter().sum::<f64>() / n as f64;
    if target == 0.0 {
        let zero = per_bin_mean.iter().all(|&v| v == 0.0);
        return Ok(NoiseEnergyReport {
            sigma,
            width,
            height,
            trials,
            target,
            per_bin_mean,
            grand_mean,
            relative_error: 0.0,
            max_z: 0.0,
            passed: zero,
        });
    }
    let mut max_z: f64 = 0.0;
    for l in 0..height {
        let real_l = l == 0 || 2 * l == height;
        for k in 0..width {
            let real_k = k == 0 || 2 * k == width;
            let sd = if real_k && real_l { std::f64::consts::SQRT_2 * target } else { target };
            let se = sd / (trials as f64).sqrt();
            max_z = max_z.max((per_bin_mean[l * width + k] - target).abs() / se);
        }
    }
    let relative_error = (grand_mean - target).abs() / target;
    Ok(NoiseEnergyReport {
        sigma,
        width,
        height,
        trials,
        target,
        per_bin_mean,
        grand_mean,
        relative_error,
        max_z,
        passed: relative_error <= GRAND_MEAN_TOLERANCE && max_z <= BIN_Z_LIMIT,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::degrade::gaussian_blur_periodic_unclamped;

    fn textured(w: usize, h: usize, seed: u64) -> Image {
        let mut r = rng::seeded(seed);
        let mut v = vec![0.0; w * h];
        rng::fill_normal(&mut r, 0.1, &mut v);
        Image::new(w, h, 1, v.into_iter().map(|x| 0.5 + x).collect()).unwrap()
    }

    #[test]
    fn band_assignment_covers_the_disk() {
        let bands = BandSpec::default();
        assert_eq!(bands.len(), 8);
        assert_eq!(bands.band_of(0.0), 0);
        assert_eq!(bands.band_of(MAX_RADIUS), 7);
        assert_eq!(bands.band_of(MAX_RADIUS / 8.0), 1);
        let a = bands.assign(16, 16);
        assert!(a.iter().all(|&b| b < 8));
        assert_eq!(a[0], 0);
        assert!(BandSpec::from_edges(vec![0.0, 0.3, 0.2, MAX_RADIUS]).is_err());
        assert!(BandSpec::from_edges(vec![0.0, 0.5]).is_err());
    }

    #[test]
    fn identical_images_give_zero_spectrum() {
        let img = textured(12, 10, 1);
        let f = watermark_spectrum(&img, &img).unwrap();
        assert!(f.coefficients().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn identity_attack_profile_is_one_and_parseval_holds() {
        let clean = textured(32, 32, 2);
        let marked = clean.zip_map(&textured(32, 32, 3), |a, b| a + 0.1 * (b - 0.5)).unwrap();
        let r = suppression_profile(&clean, &marked, &marked, &BandSpec::default(), None).unwrap();
        assert_eq!(r.rows.len(), 8);
        for row in &r.rows {
            assert!((row.measured - 1.0).abs() < 1e-12);
        }
        assert!(r.parseval_error() < 1e-6);
    }

    #[test]
    fn empty_bands_are_skipped_with_a_note() {
        let clean = Image::filled(2, 2, 1, 0.5);
        let marked = clean.map(|v| v + 0.1);
        let r = suppression_profile(&clean, &marked, &marked, &BandSpec::uniform(32).unwrap(), None).unwrap();
        assert!(!r.notes.is_empty());
        assert_eq!(r.rows.len() + r.notes.len(), 32);
    }

    #[test]
    fn periodic_blur_matches_weighted_prediction() {
        let clean = Image::filled(64, 64, 1, 0.5);
        let marked = textured(64, 64, 4);
        let blur = BlurParams::new(2.0).unwrap();
        let attacked = gaussian_blur_periodic_unclamped(&marked, &blur);
        let r = suppression_profile(&clean, &marked, &attacked, &BandSpec::default(), Some(&blur)).unwrap();
        for row in &r.rows {
            let p = row.predicted.unwrap();
            assert!((row.measured / p - 1.0).abs() < 0.1, "{row:?}");
        }
        let flat: Vec<f64> = r.rows.iter().map(|r| r.predicted_flat.unwrap()).collect();
        assert!(flat.windows(2).all(|w| w[1] < w[0]));
        assert!(r.to_csv().lines().count() == 9);
        assert!(r.to_svg().contains("measured"));
    }

    #[test]
    fn zero_sigma_noise_check_passes_trivially() {
        let r = noise_energy_check(0.0, 8, 8, 3, 1).unwrap();
        assert!(r.passed);
        assert_eq!(r.target, 0.0);
        assert!(r.per_bin_mean.iter().all(|&v| v == 0.0));
        assert!(noise_energy_check(0.1, 8, 8, 0, 1).is_err());
    }

    #[test]
    fn noise_check_is_deterministic() {
        let a = noise_energy_check(0.05, 17, 23, 20, 9).unwrap();
        let b = noise_energy_check(0.05, 17, 23, 20, 9).unwrap();
        assert_eq!(a, b);
    }
}
