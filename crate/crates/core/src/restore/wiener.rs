use rustfft::num_complex::Complex64;

use super::{Boundary, RestorationParams};
use crate::degrade::{kernel_transfer_function, transfer_function, BlurParams};
use crate::error::{Error, Result};
use crate::fourier::filter_plane;
use crate::image::Image;

/// Below this gain an unregularized inverse filter is rejected.
const MIN_GAIN: f64 = 1e-12;

/// `X̂ = Ŷ·H* / (|H|² + K)`, then clamp.
///
/// [`Boundary::Periodic`] uses the analytic Gaussian `H`, the exact inverse
/// of the periodic blur. [`Boundary::Symmetric`] mirrors each channel to
/// `2M × 2N` and uses the sampled kernel's response, the exact inverse of the
/// mirror-mode spatial blur.
pub fn wiener_deconvolve(y: &Image, blur: &BlurParams, p: &RestorationParams) -> Result<Image> {
    p.validate()?;
    let (w, h) = (y.width(), y.height());
    let (gw, gh) = match p.boundary {
        Boundary::Periodic => (w, h),
        Boundary::Symmetric => (2 * w, 2 * h),
    };
    let tf = match p.boundary {
        Boundary::Periodic => transfer_function(blur, gw, gh),
        Boundary::Symmetric => kernel_transfer_function(blur, gw, gh),
    };
    let k = p.wiener_nsr;
    if k == 0.0 {
        let min_gain = tf.coefficients().iter().map(|c| c.norm()).fold(f64::INFINITY, f64::min);
        if min_gain < MIN_GAIN {
            return Err(Error::SingularFilter { min_gain });
        }
    }
    let filter = tf.map(|hc| hc.conj() / Complex64::new(hc.norm_sqr() + k, 0.0));
    let out = y.map_channels(|plane| {
        let src = if p.boundary == Boundary::Symmetric {
            plane.mirror_pad(gw, gh)
        } else {
            plane.clone()
        };
        let filtered = Image::from_raw(gw, gh, 1, filter_plane(src.plane(0), gw, gh, &filter));
        Ok(filtered.crop(w, h))
    })?;
    Ok(out.clamped())
}
