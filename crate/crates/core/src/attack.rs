//! Degrade-then-restore attack pipelines `x' = R(D(x))`.
//!
//! A pipeline is an ordered list of [`Stage`]s plus a seed. Stage `i` draws
//! its randomness from `derive_seed(seed, i)`, so appending a stage never
//! changes what earlier stages do, and running the stages one at a time with
//! [`AttackPipeline::stage_seed`] reproduces [`run_attack`] bit for bit.

use std::fmt;

use crate::degrade::{
    add_latent_noise_tiled, add_pixel_noise, fit_patch_codec, gaussian_blur, gaussian_blur_periodic,
    jpeg_cycle, BlurParams, JpegParams, LatentNoiseParams, NoiseParams,
};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::restore::{restore_tikhonov, restore_tv, wiener_deconvolve, Boundary, RestorationParams};
use crate::rng;

#[derive(Clone, Debug, PartialEq)]
pub enum Stage {
    Identity,
    PixelNoise { sigma: f64 },
    /// Spatial blur with mirrored borders.
    Blur(BlurParams),
    /// Blur by the analytic transfer function on the periodic grid.
    PeriodicBlur(BlurParams),
    Jpeg(JpegParams),
    /// Latent noise through a `patch × patch` linear autoencoder of
    /// dimension `dim`, fitted to the stage input itself.
    LatentNoise { sigma: f64, dim: usize, patch: usize },
    Tikhonov(RestorationParams),
    TotalVariation(RestorationParams),
    Wiener { blur: BlurParams, params: RestorationParams },
}

impl Stage {
    pub fn pixel_noise(sigma: f64) -> Result<Stage> {
        NoiseParams::new(sigma, 0)?;
        Ok(Stage::PixelNoise { sigma })
    }

    pub fn blur(sigma: f64, kernel_size: Option<usize>) -> Result<Stage> {
        Ok(Stage::Blur(blur_params(sigma, kernel_size)?))
    }

    pub fn jpeg(quality: u32) -> Result<Stage> {
        Ok(Stage::Jpeg(JpegParams::new(quality)?))
    }

    pub fn latent_noise(sigma: f64, dim: usize, patch: usize) -> Result<Stage> {
        let s = Stage::LatentNoise { sigma, dim, patch };
        s.validate()?;
        Ok(s)
    }

    pub fn tikhonov(beta: f64) -> Result<Stage> {
        let p = RestorationParams::tikhonov(beta);
        p.validate()?;
        Ok(Stage::Tikhonov(p))
    }

    pub fn total_variation(beta: f64) -> Result<Stage> {
        let p = RestorationParams::total_variation(beta);
        p.validate()?;
        Ok(Stage::TotalVariation(p))
    }

    pub fn wiener(blur: BlurParams, nsr: f64, boundary: Boundary) -> Result<Stage> {
        let params = RestorationParams::wiener(nsr, boundary);
        params.validate()?;
        Ok(Stage::Wiener { blur, params })
    }

    /// Short identifier used in reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Stage::Identity => "identity",
            Stage::PixelNoise { .. } => "noise",
            Stage::Blur(_) => "blur",
            Stage::PeriodicBlur(_) => "periodic-blur",
            Stage::Jpeg(_) => "jpeg",
            Stage::LatentNoise { .. } => "latent-noise",
            Stage::Tikhonov(_) => "tikhonov",
            Stage::TotalVariation(_) => "tv",
            Stage::Wiener { .. } => "wiener",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Stage::Identity | Stage::Jpeg(_) => Ok(()),
            Stage::PixelNoise { sigma } => NoiseParams::new(*sigma, 0).map(|_| ()),
            Stage::Blur(b) | Stage::PeriodicBlur(b) => blur_params(b.sigma, Some(b.kernel_size)).map(|_| ()),
            Stage::LatentNoise { sigma, dim, patch } => {
                if !(*sigma >= 0.0 && sigma.is_finite()) {
                    return Err(Error::param(format!("latent sigma {sigma} must be finite and >= 0")));
                }
                if *patch < 2 || *dim < 1 || *dim > patch * patch {
                    return Err(Error::param(format!(
                        "latent stage needs patch >= 2 and 1 <= dim <= patch², got dim {dim}, patch {patch}"
                    )));
                }
                Ok(())
            }
            Stage::Tikhonov(p) | Stage::TotalVariation(p) => p.validate(),
            Stage::Wiener { blur, params } => {
                blur_params(blur.sigma, Some(blur.kernel_size))?;
                params.validate()
            }
        }
    }

    /// Applies the stage with its own seed. Output is clamped to `[0, 1]`.
    pub fn apply(&self, img: &Image, seed: u64) -> Result<StageOutput> {
        let mut report = StageReport {
            kind: self.kind(),
            iterations: None,
            converged: None,
        };
        let image = match self {
            Stage::Identity => img.clone(),
            Stage::PixelNoise { sigma } => add_pixel_noise(img, &NoiseParams::new(*sigma, seed)?),
            Stage::Blur(b) => gaussian_blur(img, b)?,
            Stage::PeriodicBlur(b) => gaussian_blur_periodic(img, b),
            Stage::Jpeg(q) => jpeg_cycle(img, q),
            Stage::LatentNoise { sigma, dim, patch } => {
                let codec = fit_patch_codec(img, *patch, *dim)?;
                add_latent_noise_tiled(img, &codec, &LatentNoiseParams { sigma: *sigma, seed })?
            }
            Stage::Tikhonov(p) => restore_tikhonov(img, p)?,
            Stage::TotalVariation(p) => {
                let out = restore_tv(img, p)?;
                report.iterations = Some(out.iterations);
                report.converged = Some(out.converged);
                out.image
            }
            Stage::Wiener { blur, params } => wiener_deconvolve(img, blur, params)?,
        };
        Ok(StageOutput { image, report })
    }
}

fn blur_params(sigma: f64, kernel_size: Option<usize>) -> Result<BlurParams> {
    match kernel_size {
        Some(k) => BlurParams::with_kernel(sigma, k),
        None => BlurParams::new(sigma),
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stage::Identity => write!(f, "identity"),
            Stage::PixelNoise { sigma } => write!(f, "noise(sigma={sigma})"),
            Stage::Blur(b) => write!(f, "blur(sigma={}, kernel={})", b.sigma, b.kernel_size),
            Stage::PeriodicBlur(b) => write!(f, "periodic-blur(sigma={})", b.sigma),
            Stage::Jpeg(q) => write!(f, "jpeg(quality={})", q.quality()),
            Stage::LatentNoise { sigma, dim, patch } => {
                write!(f, "latent-noise(sigma={sigma}, dim={dim}, patch={patch})")
            }
            Stage::Tikhonov(p) => write!(f, "tikhonov(beta={})", p.beta),
            Stage::TotalVariation(p) => write!(f, "tv(beta={})", p.beta),
            Stage::Wiener { blur, params } => write!(
                f,
                "wiener(sigma={}, nsr={}, boundary={})",
                blur.sigma,
                params.wiener_nsr,
                match params.boundary {
                    Boundary::Periodic => "periodic",
                    Boundary::Symmetric => "symmetric",
                }
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StageReport {
    pub kind: &'static str,
    pub iterations: Option<usize>,
    /// `Some(false)` when an iterative solver hit its iteration cap.
    pub converged: Option<bool>,
}

#[derive(Clone, Debug)]
pub struct StageOutput {
    pub image: Image,
    pub report: StageReport,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttackPipeline {
    pub name: String,
    pub stages: Vec<Stage>,
    pub seed: u64,
}

impl AttackPipeline {
    pub fn new(name: impl Into<String>, stages: Vec<Stage>, seed: u64) -> Result<Self> {
        let name = name.into();
        if stages.is_empty() {
            return Err(Error::param(format!("pipeline '{name}' has no stages")));
        }
        for (index, stage) in stages.iter().enumerate() {
            stage.validate().map_err(|e| wrap(index, stage, e))?;
        }
        Ok(AttackPipeline { name, stages, seed })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn stage_seed(&self, index: usize) -> u64 {
        rng::derive_seed(self.seed, index as u64)
    }

    pub fn describe(&self) -> String {
        let parts: Vec<String> = self.stages.iter().map(|s| s.to_string()).collect();
        parts.join(" -> ")
    }
}

fn wrap(index: usize, stage: &Stage, source: Error) -> Error {
    Error::Stage {
        index,
        stage: stage.kind().to_string(),
        source: Box::new(source),
    }
}

#[derive(Clone, Debug)]
pub struct AttackOutcome {
    pub image: Image,
    pub stages: Vec<StageReport>,
}

impl AttackOutcome {
    pub fn converged(&self) -> bool {
        self.stages.iter().all(|s| s.converged != Some(false))
    }
}

pub fn run_attack(img: &Image, pipe: &AttackPipeline) -> Result<Image> {
    Ok(run_attack_detailed(img, pipe)?.image)
}

pub fn run_attack_detailed(img: &Image, pipe: &AttackPipeline) -> Result<AttackOutcome> {
    let mut current = img.clone();
    let mut reports = Vec::with_capacity(pipe.stages.len());
    for (index, stage) in pipe.stages.iter().enumerate() {
        let out = stage
            .apply(&current, pipe.stage_seed(index))
            .map_err(|e| wrap(index, stage, e))?;
        current = out.image;
        reports.push(out.report);
    }
    Ok(AttackOutcome {
        image: current.clamped(),
        stages: reports,
    })
}

pub const BUILTIN_NAMES: [&str; 4] = ["denoise-attack", "jpeg-ar-attack", "deblur-attack", "latent-attack"];

/// The four named degrade-then-restore attacks, seeded with 0.
pub fn builtin_pipelines() -> Vec<AttackPipeline> {
    let deblur = BlurParams::with_kernel(15.0, 71).expect("valid");
    let build = |name: &str, stages: Vec<Result<Stage>>| {
        let stages = stages.into_iter().collect::<Result<Vec<_>>>().expect("builtin stages are valid");
        AttackPipeline::new(name, stages, 0).expect("builtin pipelines are valid")
    };
    vec![
        build("denoise-attack", vec![Stage::pixel_noise(0.05), Stage::total_variation(0.1)]),
        build("jpeg-ar-attack", vec![Stage::jpeg(30), Stage::total_variation(0.05)]),
        build(
            "deblur-attack",
            vec![Ok(Stage::Blur(deblur)), Stage::wiener(deblur, 1e-3, Boundary::Symmetric)],
        ),
        build("latent-attack", vec![Stage::latent_noise(0.1, 32, 16)]),
    ]
}

pub fn builtin(name: &str) -> Option<AttackPipeline> {
    builtin_pipelines().into_iter().find(|p| p.name == name)
}
