//! Restoration operators `R(y) = argmin_x ‖y − x‖² + β·Φ(x)` and the
//! Wiener inverse filter used after blur.

mod residual;
mod tikhonov;
mod tv;
mod wiener;

pub use residual::{removal_objective, residual_watermark_energy, Extractor};
pub use tikhonov::{gradient_energy, laplacian_eigenvalues, restore_tikhonov, tikhonov_objective};
pub use tv::{restore_tv, total_variation, tv_objective, TvOutcome};
pub use wiener::wiener_deconvolve;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regularizer {
    /// `Φ(x) = ‖∇x‖²` with periodic forward differences.
    TikhonovGradient,
    /// Isotropic total variation, periodic forward differences.
    TotalVariation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Boundary {
    #[default]
    Periodic,
    /// Symmetric (mirror) extension to twice the size before filtering.
    Symmetric,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RestorationParams {
    pub beta: f64,
    pub regularizer: Regularizer,
    pub max_iters: usize,
    /// Relative-change stopping threshold.
    pub tol: f64,
    /// Noise-to-signal ratio `K` of the Wiener filter.
    pub wiener_nsr: f64,
    pub boundary: Boundary,
}

pub const DEFAULT_TOL: f64 = 1e-5;
pub const DEFAULT_MAX_ITERS: usize = 500;

impl RestorationParams {
    fn base(beta: f64, regularizer: Regularizer) -> Self {
        RestorationParams {
            beta,
            regularizer,
            max_iters: DEFAULT_MAX_ITERS,
            tol: DEFAULT_TOL,
            wiener_nsr: 0.0,
            boundary: Boundary::Periodic,
        }
    }

    pub fn tikhonov(beta: f64) -> Self {
        Self::base(beta, Regularizer::TikhonovGradient)
    }

    pub fn total_variation(beta: f64) -> Self {
        Self::base(beta, Regularizer::TotalVariation)
    }

    pub fn wiener(nsr: f64, boundary: Boundary) -> Self {
        RestorationParams {
            wiener_nsr: nsr,
            boundary,
            ..Self::base(0.0, Regularizer::TikhonovGradient)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::param(format!("beta {} must be finite and >= 0", self.beta)));
        }
        if self.max_iters < 1 {
            return Err(Error::param("max_iters must be >= 1"));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::param(format!("tol {} must be > 0", self.tol)));
        }
        if !(self.wiener_nsr >= 0.0 && self.wiener_nsr.is_finite()) {
            return Err(Error::param(format!("wiener_nsr {} must be finite and >= 0", self.wiener_nsr)));
        }
        Ok(())
    }
}
