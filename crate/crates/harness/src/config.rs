//! Declarative experiment configuration, one TOML file per experiment.
//!
//! Unknown keys anywhere in the file are errors. Relative dataset paths
//! resolve against the directory holding the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use wmbench_core::attack::{builtin, AttackPipeline, Stage};
use wmbench_core::degrade::BlurParams;
use wmbench_core::restore::{Boundary, RestorationParams};
use wmbench_core::rng::derive_seed;
use wmbench_core::synth::SynthParams;
use wmbench_core::watermark::{
    AdditiveKey, Band, SpreadSpectrumKey, WatermarkKey, DEFAULT_ADDITIVE_STRENGTH, DEFAULT_SS_STRENGTH,
};

use crate::error::{HarnessError, Result};

/// Attack name that skips the attack stage entirely.
pub const NO_ATTACK: &str = "none";

const CODEC_STREAM: u64 = 0x636f_6465_0000;
const ATTACK_STREAM: u64 = 0x6174_7461_0000;
const SELECTION_STREAM: u64 = 0x6d69_7800_0000;

fn default_ratios() -> Vec<f64> {
    vec![0.2, 0.4, 0.6, 0.8]
}

fn default_true() -> bool {
    true
}

fn default_output() -> PathBuf {
    PathBuf::from("wmbench-out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Root seed; every key, attack and selection seed derives from it.
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; 0 uses every core. Results do not depend on it.
    #[serde(default)]
    pub workers: usize,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    /// Compute PSNR and SSIM against the clean image.
    #[serde(default = "default_true")]
    pub metrics: bool,
    #[serde(default)]
    pub averaging: Averaging,
    /// Protection ratios for the mixing study, each in (0, 1].
    #[serde(default = "default_ratios")]
    pub protection_ratios: Vec<f64>,
    #[serde(rename = "dataset")]
    pub datasets: Vec<DatasetConfig>,
    #[serde(rename = "codec")]
    pub codecs: Vec<CodecConfig>,
    #[serde(rename = "attack")]
    pub attacks: Vec<AttackConfig>,
}

/// How cell means combine across several datasets.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    /// Pool every image, so large datasets weigh more.
    #[default]
    Micro,
    /// Mean of per-dataset means.
    Macro,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    #[serde(default)]
    pub name: Option<String>,
    /// Directory of PNG/PGM/PPM files. Exactly one of `path` and `synthetic`.
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub synthetic: Option<SyntheticConfig>,
    /// Center-crop and resample every image to `[width, height]`.
    #[serde(default)]
    pub resize: Option<[usize; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub count: usize,
    pub width: usize,
    pub height: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub exponent: Option<f64>,
}

impl SyntheticConfig {
    pub fn params(&self) -> SynthParams {
        let mut p = SynthParams::new(self.width, self.height);
        if let Some(e) = self.exponent {
            p.exponent = e;
        }
        p
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CodecKind {
    Additive,
    SpreadSpectrum,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodecConfig {
    pub kind: CodecKind,
    #[serde(default)]
    pub name: Option<String>,
    /// Key seed; derived from the root seed when absent.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub strength: Option<f64>,
    #[serde(default)]
    pub bits: Option<usize>,
    #[serde(default)]
    pub threshold: Option<f64>,
    /// Spread spectrum only: `[min, max]` of `u + v` inside each 8×8 block.
    #[serde(default)]
    pub band: Option<[usize; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackConfig {
    #[serde(default)]
    pub name: Option<String>,
    /// A builtin pipeline name, or `"none"` for the unattacked baseline.
    #[serde(default)]
    pub builtin: Option<String>,
    #[serde(default)]
    pub stages: Option<Vec<StageConfig>>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Curve this cell belongs to in the accuracy plots.
    #[serde(default)]
    pub family: Option<String>,
    /// Abscissa of this cell on its curve.
    #[serde(default)]
    pub x: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryConfig {
    Periodic,
    Symmetric,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StageConfig {
    Identity,
    Noise {
        sigma: f64,
    },
    Blur {
        sigma: f64,
        #[serde(default)]
        kernel: Option<usize>,
    },
    PeriodicBlur {
        sigma: f64,
    },
    Jpeg {
        quality: u32,
    },
    LatentNoise {
        sigma: f64,
        #[serde(default)]
        dim: Option<usize>,
        #[serde(default)]
        patch: Option<usize>,
    },
    Tikhonov {
        beta: f64,
    },
    Tv {
        beta: f64,
        #[serde(default)]
        max_iters: Option<usize>,
        #[serde(default)]
        tol: Option<f64>,
    },
    Wiener {
        sigma: f64,
        #[serde(default)]
        kernel: Option<usize>,
        nsr: f64,
        #[serde(default)]
        boundary: Option<BoundaryConfig>,
    },
}

impl StageConfig {
    pub fn build(&self) -> wmbench_core::Result<Stage> {
        match *self {
            StageConfig::Identity => Ok(Stage::Identity),
            StageConfig::Noise { sigma } => Stage::pixel_noise(sigma),
            StageConfig::Blur { sigma, kernel } => Stage::blur(sigma, kernel),
            StageConfig::PeriodicBlur { sigma } => Ok(Stage::PeriodicBlur(BlurParams::new(sigma)?)),
            StageConfig::Jpeg { quality } => Stage::jpeg(quality),
            StageConfig::LatentNoise { sigma, dim, patch } => {
                Stage::latent_noise(sigma, dim.unwrap_or(32), patch.unwrap_or(16))
            }
            StageConfig::Tikhonov { beta } => Stage::tikhonov(beta),
            StageConfig::Tv { beta, max_iters, tol } => {
                let mut p = RestorationParams::total_variation(beta);
                p.max_iters = max_iters.unwrap_or(p.max_iters);
                p.tol = tol.unwrap_or(p.tol);
                let stage = Stage::TotalVariation(p);
                stage.validate()?;
                Ok(stage)
            }
            StageConfig::Wiener { sigma, kernel, nsr, boundary } => {
                let blur = match kernel {
                    Some(k) => BlurParams::with_kernel(sigma, k)?,
                    None => BlurParams::new(sigma)?,
                };
                let boundary = match boundary.unwrap_or(BoundaryConfig::Symmetric) {
                    BoundaryConfig::Periodic => Boundary::Periodic,
                    BoundaryConfig::Symmetric => Boundary::Symmetric,
                };
                Stage::wiener(blur, nsr, boundary)
            }
        }
    }
}

/// A codec with its key fixed.
#[derive(Clone, Debug, PartialEq)]
pub struct ResolvedCodec {
    pub name: String,
    pub key: WatermarkKey,
}

/// An attack cell; `pipeline` is `None` for the unattacked baseline.
#[derive(Clone, Debug, PartialEq)]
pub struct ResolvedAttack {
    pub name: String,
    pub pipeline: Option<AttackPipeline>,
    pub family: Option<String>,
    pub x: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses a config file and rebases relative dataset paths onto its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        for d in &mut cfg.datasets {
            if let Some(p) = &d.path {
                if p.is_relative() {
                    d.path = Some(base.join(p));
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.datasets.is_empty() {
            return bad("at least one [[dataset]] is required".into());
        }
        for (i, d) in self.datasets.iter().enumerate() {
            match (&d.path, &d.synthetic) {
                (Some(_), None) => {}
                (None, Some(s)) => {
                    if s.count == 0 || s.width == 0 || s.height == 0 {
                        return bad(format!("dataset {i}: synthetic count and size must be positive"));
                    }
                }
                _ => return bad(format!("dataset {i}: set exactly one of `path` and `synthetic`")),
            }
            if let Some([w, h]) = d.resize {
                if w == 0 || h == 0 {
                    return bad(format!("dataset {i}: resize must be positive"));
                }
            }
        }
        if self.codecs.is_empty() {
            return bad("at least one [[codec]] is required".into());
        }
        if self.attacks.is_empty() {
            return bad("at least one [[attack]] is required".into());
        }
        for &p in &self.protection_ratios {
            if !(p > 0.0 && p <= 1.0) {
                return bad(format!("protection ratio {p} outside (0, 1]"));
            }
        }
        self.resolve_codecs()?;
        self.resolve_attacks()?;
        unique(self.dataset_names().iter().map(String::as_str), "dataset")?;
        Ok(())
    }

    pub fn dataset_names(&self) -> Vec<String> {
        self.datasets
            .iter()
            .enumerate()
            .map(|(i, d)| match (&d.name, &d.path) {
                (Some(n), _) => n.clone(),
                (None, Some(p)) => p.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or(format!("dataset-{i}")),
                (None, None) => format!("synthetic-{i}"),
            })
            .collect()
    }

    pub fn resolve_codecs(&self) -> Result<Vec<ResolvedCodec>> {
        let mut out = Vec::with_capacity(self.codecs.len());
        for (i, c) in self.codecs.iter().enumerate() {
            let seed = c.seed.unwrap_or_else(|| derive_seed(self.seed, CODEC_STREAM + i as u64));
            let bits = c.bits.unwrap_or(64);
            let err = |e: wmbench_core::Error| HarnessError::Config(format!("codec {i}: {e}"));
            let key = match c.kind {
                CodecKind::Additive => {
                    if c.band.is_some() {
                        return Err(HarnessError::Config(format!("codec {i}: `band` applies to spread-spectrum only")));
                    }
                    let mut k = AdditiveKey::random(seed, bits, c.strength.unwrap_or(DEFAULT_ADDITIVE_STRENGTH)).map_err(err)?;
                    if let Some(t) = c.threshold {
                        k.threshold = t;
                    }
                    WatermarkKey::Additive(k)
                }
                CodecKind::SpreadSpectrum => {
                    let mut k = SpreadSpectrumKey::random(seed, bits, c.strength.unwrap_or(DEFAULT_SS_STRENGTH)).map_err(err)?;
                    if let Some([lo, hi]) = c.band {
                        k.band = Band::new(lo, hi).map_err(err)?;
                    }
                    if let Some(t) = c.threshold {
                        k.threshold = t;
                    }
                    WatermarkKey::SpreadSpectrum(k)
                }
            };
            let name = c.name.clone().unwrap_or_else(|| key.codec_name().to_string());
            out.push(ResolvedCodec { name, key });
        }
        unique(out.iter().map(|c| c.name.as_str()), "codec")?;
        Ok(out)
    }

    pub fn resolve_attacks(&self) -> Result<Vec<ResolvedAttack>> {
        let mut out = Vec::with_capacity(self.attacks.len());
        for (i, a) in self.attacks.iter().enumerate() {
            let seed = a.seed.unwrap_or_else(|| derive_seed(self.seed, ATTACK_STREAM + i as u64));
            let (default_name, pipeline) = match (&a.builtin, &a.stages) {
                (Some(b), None) if b == NO_ATTACK => (NO_ATTACK.to_string(), None),
                (Some(b), None) => {
                    let p = builtin(b)
                        .ok_or_else(|| HarnessError::Config(format!("attack {i}: unknown builtin '{b}'")))?;
                    (b.clone(), Some(p.with_seed(seed)))
                }
                (None, Some(stages)) => {
                    let name = a.name.clone().unwrap_or(format!("attack-{i}"));
                    let built = stages
                        .iter()
                        .map(StageConfig::build)
                        .collect::<wmbench_core::Result<Vec<_>>>()
                        .map_err(|e| HarnessError::Config(format!("attack {i}: {e}")))?;
                    let p = AttackPipeline::new(name.clone(), built, seed)
                        .map_err(|e| HarnessError::Config(format!("attack {i}: {e}")))?;
                    (name, Some(p))
                }
                _ => {
                    return Err(HarnessError::Config(format!(
                        "attack {i}: set exactly one of `builtin` and `stages`"
                    )))
                }
            };
            let name = a.name.clone().unwrap_or(default_name);
            let pipeline = pipeline.map(|mut p| {
                p.name = name.clone();
                p
            });
            out.push(ResolvedAttack {
                name,
                pipeline,
                family: a.family.clone(),
                x: a.x,
            });
        }
        unique(out.iter().map(|a| a.name.as_str()), "attack")?;
        Ok(out)
    }

    /// Seed of the shuffle that picks which images of dataset `d` get marked.
    pub fn selection_seed(&self, dataset: usize) -> u64 {
        derive_seed(self.seed, SELECTION_STREAM + dataset as u64)
    }

    /// SHA-256 over every field that can change results; `workers` and
    /// `output` are excluded.
    pub fn fingerprint(&self) -> String {
        let mut canonical = self.clone();
        canonical.workers = 0;
        canonical.output = PathBuf::new();
        let text = toml::to_string(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

fn unique<'a>(names: impl Iterator<Item = &'a str>, what: &str) -> Result<()> {
    let mut seen = std::collections::BTreeSet::new();
    for n in names {
        if !seen.insert(n) {
            return Err(HarnessError::Config(format!("duplicate {what} name '{n}'")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        seed = 3
        [[dataset]]
        synthetic = { count = 4, width = 32, height = 32 }
        [[codec]]
        kind = "spread-spectrum"
        [[attack]]
        builtin = "none"
        [[attack]]
        name = "jpeg-75"
        stages = [{ op = "jpeg", quality = 75 }]
    "#;

    #[test]
    fn minimal_config_resolves() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.protection_ratios, vec![0.2, 0.4, 0.6, 0.8]);
        assert_eq!(cfg.averaging, Averaging::Micro);
        let attacks = cfg.resolve_attacks().unwrap();
        assert_eq!(attacks[0].name, "none");
        assert!(attacks[0].pipeline.is_none());
        assert_eq!(attacks[1].pipeline.as_ref().unwrap().stages.len(), 1);
        assert_eq!(cfg.resolve_codecs().unwrap()[0].name, "spread-spectrum");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for typo in [
            MINIMAL.replace("seed = 3", "sed = 3"),
            MINIMAL.replace("quality = 75", "qualty = 75"),
            MINIMAL.replace("kind = \"spread-spectrum\"", "kind = \"spread-spectrum\"\nstrenght = 2.0"),
        ] {
            assert!(matches!(ExperimentConfig::from_toml(&typo), Err(HarnessError::Config(_))), "{typo}");
        }
    }

    #[test]
    fn invariants_are_checked() {
        let bad_ratio = format!("protection_ratios = [0.0, 0.5]\n{MINIMAL}");
        assert!(ExperimentConfig::from_toml(&bad_ratio).is_err());
        let bad_builtin = MINIMAL.replace("builtin = \"none\"", "builtin = \"unblur-attack\"");
        assert!(ExperimentConfig::from_toml(&bad_builtin).is_err());
        let both = MINIMAL.replace("builtin = \"none\"", "builtin = \"none\"\nstages = []");
        assert!(ExperimentConfig::from_toml(&both).is_err());
        let dup = MINIMAL.replace("name = \"jpeg-75\"", "name = \"none\"");
        assert!(ExperimentConfig::from_toml(&dup).is_err());
    }

    #[test]
    fn fingerprint_ignores_workers_and_output() {
        let a = ExperimentConfig::from_toml(MINIMAL).unwrap();
        let mut b = a.clone();
        b.workers = 7;
        b.output = "elsewhere".into();
        assert_eq!(a.fingerprint(), b.fingerprint());
        b.seed = 4;
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint().len(), 64);
    }
}
