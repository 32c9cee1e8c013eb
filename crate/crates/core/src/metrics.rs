//! Full-reference quality metrics on the `[0, 1]` intensity scale.

use std::fmt;

use crate::error::Result;
use crate::image::Image;

const SSIM_WINDOW: usize = 8;
const SSIM_C1: f64 = 0.01 * 0.01;
const SSIM_C2: f64 = 0.03 * 0.03;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QualityReport {
    /// dB; `f64::INFINITY` for identical images.
    pub psnr: f64,
    pub ssim: f64,
    pub mse: f64,
}

impl QualityReport {
    pub fn compare(a: &Image, b: &Image) -> Result<Self> {
        let mse = mse(a, b)?;
        Ok(QualityReport {
            psnr: psnr_from_mse(mse),
            ssim: ssim(a, b)?,
            mse,
        })
    }
}

impl fmt::Display for QualityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "psnr={} ssim={:.6} mse={:.6e}",
            format_db(self.psnr),
            self.ssim,
            self.mse
        )
    }
}

/// Renders a PSNR value, using `inf` for the identical-image sentinel.
pub fn format_db(db: f64) -> String {
    if db.is_infinite() {
        "inf".to_string()
    } else {
        format!("{db:.4}")
    }
}

pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    a.ensure_same_shape(b)?;
    let n = a.data().len() as f64;
    Ok(a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / n)
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse > 0.0 {
        10.0 * (1.0 / mse).log10()
    } else {
        f64::INFINITY
    }
}

pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    mse(a, b).map(psnr_from_mse)
}

/// Mean SSIM over all 8×8 windows at stride 1, averaged across channels.
/// Window statistics use uniform weights and population moments.
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    a.ensure_same_shape(b)?;
    let (w, h) = (a.width(), a.height());
    let total: f64 = (0..a.channels())
        .map(|c| ssim_plane(a.plane(c), b.plane(c), w, h))
        .sum();
    Ok(total / a.channels() as f64)
}

fn ssim_plane(a: &[f64], b: &[f64], w: usize, h: usize) -> f64 {
    let ww = SSIM_WINDOW.min(w);
    let wh = SSIM_WINDOW.min(h);
    let integral = |f: &dyn Fn(usize) -> f64| -> Vec<f64> {
        // (w+1)×(h+1) summed-area table
        let mut t = vec![0.0; (w + 1) * (h + 1)];
        for y in 0..h {
            let mut row = 0.0;
            for x in 0..w {
                row += f(y * w + x);
                t[(y + 1) * (w + 1) + x + 1] = t[y * (w + 1) + x + 1] + row;
            }
        }
        t
    };
    let sa = integral(&|i| a[i]);
    let sb = integral(&|i| b[i]);
    let saa = integral(&|i| a[i] * a[i]);
    let sbb = integral(&|i| b[i] * b[i]);
    let sab = integral(&|i| a[i] * b[i]);
    let rect = |t: &[f64], x: usize, y: usize| {
        t[(y + wh) * (w + 1) + x + ww] - t[y * (w + 1) + x + ww] - t[(y + wh) * (w + 1) + x]
            + t[y * (w + 1) + x]
    };
    let n = (ww * wh) as f64;
    let mut acc = 0.0;
    let mut count = 0usize;
    for y in 0..=(h - wh) {
        for x in 0..=(w - ww) {
            let ma = rect(&sa, x, y) / n;
            let mb = rect(&sb, x, y) / n;
            let va = (rect(&saa, x, y) / n - ma * ma).max(0.0);
            let vb = (rect(&sbb, x, y) / n - mb * mb).max(0.0);
            let cov = rect(&sab, x, y) / n - ma * mb;
            let num = (2.0 * ma * mb + SSIM_C1) * (2.0 * cov + SSIM_C2);
            let den = (ma * ma + mb * mb + SSIM_C1) * (va + vb + SSIM_C2);
            acc += num / den;
            count += 1;
        }
    }
    acc / count as f64
}
