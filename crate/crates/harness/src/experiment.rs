//! Robustness grids and protection-ratio mixing studies.
//!
//! Images are processed in parallel but every mean is accumulated in image
//! order afterwards, so reports do not depend on the worker count.

use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use wmbench_core::attack::run_attack;
use wmbench_core::metrics::{psnr, ssim};
use wmbench_core::rng::{derive_seed, seeded};
use wmbench_core::watermark::{detect_additive, embed_additive, embed_ss, extract_ss, DetectionResult, Embedded, WatermarkKey};
use wmbench_core::Image;

use crate::config::{Averaging, ExperimentConfig, ResolvedAttack, ResolvedCodec};
use crate::dataset::{load_dataset, Dataset};
use crate::error::{HarnessError, Result};
use crate::report::{ExperimentReport, Provenance, ReportKind, ReportRow};

/// Identical images have infinite PSNR; per-image values are capped here
/// before averaging.
pub const PSNR_CAP_DB: f64 = 100.0;

pub fn embed(key: &WatermarkKey, img: &Image) -> wmbench_core::Result<Embedded> {
    match key {
        WatermarkKey::Additive(k) => embed_additive(img, &k.pattern(img.width(), img.height())?),
        WatermarkKey::SpreadSpectrum(k) => embed_ss(img, k),
    }
}

/// Blind detection with `key`.
pub fn detect(key: &WatermarkKey, img: &Image) -> wmbench_core::Result<DetectionResult> {
    match key {
        WatermarkKey::Additive(k) => detect_additive(img, &k.pattern(img.width(), img.height())?, None),
        WatermarkKey::SpreadSpectrum(k) => extract_ss(img, k),
    }
}

/// Smallest integer `≥ p·n`, robust to `p·n` landing a hair above an integer.
pub fn marked_count(p: f64, n: usize) -> usize {
    let x = p * n as f64;
    let r = x.round();
    if (x - r).abs() <= 1e-9 * (n.max(1) as f64) {
        r as usize
    } else {
        x.ceil() as usize
    }
}

/// Rank of each image in the seeded selection order. Image `i` is marked
/// at ratio `p` iff `rank[i] < ⌈p·n⌉`, so marked sets are nested in `p`.
pub fn selection_ranks(n: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeded(seed));
    let mut rank = vec![0; n];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    rank
}

/// Outcome for one image under one attack.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImageRecord {
    pub accuracy: f64,
    pub present: bool,
    /// Against the clean image; `None` when metrics are off.
    pub psnr: Option<f64>,
    pub ssim: Option<f64>,
    /// Fraction of samples clamped by embedding; 0 for unmarked images.
    pub clamped: f64,
    /// Attack plus detection time.
    pub seconds: f64,
}

/// Runs every attack on one image, marked or not. Returns one record per attack.
#[allow(clippy::too_many_arguments)]
fn evaluate_image(
    clean: &Image,
    image_index: usize,
    dataset_index: usize,
    codec: &ResolvedCodec,
    attacks: &[ResolvedAttack],
    marked: bool,
    metrics: bool,
) -> Result<Vec<ImageRecord>> {
    let (input, clamped) = if marked {
        let e = embed(&codec.key, clean)?;
        (e.image, e.clamped_fraction)
    } else {
        (clean.clone(), 0.0)
    };
    let mut out = Vec::with_capacity(attacks.len());
    for attack in attacks {
        let start = Instant::now();
        let attacked = match &attack.pipeline {
            None => input.clone(),
            Some(p) => {
                let seed = derive_seed(derive_seed(p.seed, dataset_index as u64), image_index as u64);
                run_attack(&input, &p.clone().with_seed(seed))?
            }
        };
        let d = detect(&codec.key, &attacked)?;
        let seconds = start.elapsed().as_secs_f64();
        let (psnr, ssim) = if metrics {
            (
                Some(psnr(&attacked, clean)?.min(PSNR_CAP_DB)),
                Some(ssim(&attacked, clean)?),
            )
        } else {
            (None, None)
        };
        out.push(ImageRecord {
            accuracy: d.bit_accuracy,
            present: d.present,
            psnr,
            ssim,
            clamped,
            seconds,
        });
    }
    Ok(out)
}

/// Records indexed `[attack][image]` for every image in one state.
fn evaluate_dataset(
    ds: &Dataset,
    dataset_index: usize,
    codec: &ResolvedCodec,
    attacks: &[ResolvedAttack],
    marked: bool,
    metrics: bool,
) -> Result<Vec<Vec<ImageRecord>>> {
    let per_image: Vec<Vec<ImageRecord>> = ds
        .images
        .par_iter()
        .enumerate()
        .map(|(i, img)| evaluate_image(img, i, dataset_index, codec, attacks, marked, metrics))
        .collect::<Result<_>>()?;
    Ok((0..attacks.len())
        .map(|a| per_image.iter().map(|r| r[a]).collect())
        .collect())
}

/// Summary of one cell on one dataset.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellStats {
    pub n_images: usize,
    pub n_marked: usize,
    pub accuracy: f64,
    pub accuracy_marked: Option<f64>,
    pub accuracy_unmarked: Option<f64>,
    /// Standard error of `accuracy` with the subset sizes held fixed.
    pub accuracy_se: f64,
    pub detection_rate: f64,
    pub psnr: Option<f64>,
    pub ssim: Option<f64>,
    /// Mean over marked images.
    pub clamped_fraction: f64,
    pub seconds: f64,
}

fn mean_var(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var)
}

/// Reduces per-image records in image order. `marked[i]` says which subset image `i` is in.
pub fn summarize(records: &[ImageRecord], marked: &[bool]) -> CellStats {
    assert_eq!(records.len(), marked.len());
    assert!(!records.is_empty());
    let n = records.len();
    let pick = |flag: bool| -> Vec<f64> {
        records.iter().zip(marked).filter(|(_, &m)| m == flag).map(|(r, _)| r.accuracy).collect()
    };
    let (acc_m, acc_u) = (pick(true), pick(false));
    let subset = |v: &[f64]| (!v.is_empty()).then(|| mean_var(v));
    let (sm, su) = (subset(&acc_m), subset(&acc_u));
    let spread = sm.map_or(0.0, |(_, var)| var * acc_m.len() as f64) + su.map_or(0.0, |(_, var)| var * acc_u.len() as f64);
    let mean_of = |f: &dyn Fn(&ImageRecord) -> Option<f64>| -> Option<f64> {
        records.iter().map(f).sum::<Option<f64>>().map(|s| s / n as f64)
    };
    let clamped = if acc_m.is_empty() {
        0.0
    } else {
        records.iter().zip(marked).filter(|(_, &m)| m).map(|(r, _)| r.clamped).sum::<f64>() / acc_m.len() as f64
    };
    CellStats {
        n_images: n,
        n_marked: acc_m.len(),
        accuracy: records.iter().map(|r| r.accuracy).sum::<f64>() / n as f64,
        accuracy_marked: sm.map(|(m, _)| m),
        accuracy_unmarked: su.map(|(m, _)| m),
        accuracy_se: spread.sqrt() / n as f64,
        detection_rate: records.iter().filter(|r| r.present).count() as f64 / n as f64,
        psnr: mean_of(&|r| r.psnr),
        ssim: mean_of(&|r| r.ssim),
        clamped_fraction: clamped,
        seconds: records.iter().map(|r| r.seconds).sum(),
    }
}

/// Combines per-dataset cells under the configured averaging policy.
pub fn combine(cells: &[CellStats], averaging: Averaging, pooled: impl FnOnce() -> CellStats) -> CellStats {
    if cells.len() == 1 {
        return cells[0];
    }
    match averaging {
        Averaging::Micro => pooled(),
        Averaging::Macro => {
            let d = cells.len() as f64;
            let avg = |f: &dyn Fn(&CellStats) -> f64| cells.iter().map(f).sum::<f64>() / d;
            let avg_opt = |f: &dyn Fn(&CellStats) -> Option<f64>| {
                let v: Vec<f64> = cells.iter().filter_map(f).collect();
                (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
            };
            CellStats {
                n_images: cells.iter().map(|c| c.n_images).sum(),
                n_marked: cells.iter().map(|c| c.n_marked).sum(),
                accuracy: avg(&|c| c.accuracy),
                accuracy_marked: avg_opt(&|c| c.accuracy_marked),
                accuracy_unmarked: avg_opt(&|c| c.accuracy_unmarked),
                accuracy_se: cells.iter().map(|c| c.accuracy_se.powi(2)).sum::<f64>().sqrt() / d,
                detection_rate: avg(&|c| c.detection_rate),
                psnr: avg_opt(&|c| c.psnr),
                ssim: avg_opt(&|c| c.ssim),
                clamped_fraction: avg(&|c| c.clamped_fraction),
                seconds: cells.iter().map(|c| c.seconds).sum(),
            }
        }
    }
}

pub fn load_datasets(cfg: &ExperimentConfig) -> Result<Vec<Dataset>> {
    cfg.datasets
        .iter()
        .zip(cfg.dataset_names())
        .map(|(d, name)| load_dataset(d, &name))
        .collect()
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Config(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(f))
}

fn provenance(cfg: &ExperimentConfig, codecs: &[ResolvedCodec], attacks: &[ResolvedAttack], datasets: &[Dataset]) -> Provenance {
    Provenance {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: cfg.fingerprint(),
        seed: cfg.seed,
        averaging: cfg.averaging,
        codec_seeds: codecs
            .iter()
            .map(|c| {
                let seed = match &c.key {
                    WatermarkKey::Additive(k) => k.seed,
                    WatermarkKey::SpreadSpectrum(k) => k.seed,
                };
                (c.name.clone(), seed)
            })
            .collect(),
        attack_seeds: attacks.iter().map(|a| (a.name.clone(), a.pipeline.as_ref().map(|p| p.seed))).collect(),
        datasets: datasets.iter().map(|d| (d.name.clone(), d.len())).collect(),
        selection_seeds: (0..datasets.len()).map(|d| cfg.selection_seed(d)).collect(),
    }
}

fn check_nonempty(datasets: &[Dataset]) -> Result<()> {
    if datasets.is_empty() || datasets.iter().any(Dataset::is_empty) {
        return Err(HarnessError::Dataset("no valid images".into()));
    }
    Ok(())
}

/// Full codec × attack grid with every image marked.
pub fn run_robustness_grid(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let datasets = load_datasets(cfg)?;
    run_robustness_grid_on(cfg, &datasets)
}

pub fn run_robustness_grid_on(cfg: &ExperimentConfig, datasets: &[Dataset]) -> Result<ExperimentReport> {
    cfg.validate()?;
    check_nonempty(datasets)?;
    let codecs = cfg.resolve_codecs()?;
    let attacks = cfg.resolve_attacks()?;
    let start = Instant::now();
    let mut rows = Vec::new();
    for codec in &codecs {
        let per_ds = with_pool(cfg.workers, || {
            datasets
                .iter()
                .enumerate()
                .map(|(d, ds)| evaluate_dataset(ds, d, codec, &attacks, true, cfg.metrics))
                .collect::<Result<Vec<_>>>()
        })??;
        for (a, attack) in attacks.iter().enumerate() {
            let cells: Vec<CellStats> = per_ds.iter().map(|recs| summarize(&recs[a], &vec![true; recs[a].len()])).collect();
            let stats = combine(&cells, cfg.averaging, || {
                let all: Vec<ImageRecord> = per_ds.iter().flat_map(|recs| recs[a].iter().copied()).collect();
                summarize(&all, &vec![true; all.len()])
            });
            rows.push(ReportRow::new(&codec.name, attack, 1.0, stats));
        }
    }
    Ok(ExperimentReport {
        kind: ReportKind::Grid,
        rows,
        provenance: provenance(cfg, &codecs, &attacks, datasets),
        warnings: datasets.iter().flat_map(|d| d.warnings.iter().map(move |w| format!("{}: {w}", d.name))).collect(),
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Protection-ratio study: at each ratio `p` exactly `⌈p·n⌉` images of
/// every dataset are marked, every image is attacked, every image is read.
pub fn run_mixing_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let datasets = load_datasets(cfg)?;
    run_mixing_experiment_on(cfg, &datasets)
}

pub fn run_mixing_experiment_on(cfg: &ExperimentConfig, datasets: &[Dataset]) -> Result<ExperimentReport> {
    cfg.validate()?;
    check_nonempty(datasets)?;
    if cfg.protection_ratios.is_empty() {
        return Err(HarnessError::Config("mixing needs at least one protection ratio".into()));
    }
    let codecs = cfg.resolve_codecs()?;
    let attacks = cfg.resolve_attacks()?;
    let ranks: Vec<Vec<usize>> = datasets
        .iter()
        .enumerate()
        .map(|(d, ds)| selection_ranks(ds.len(), cfg.selection_seed(d)))
        .collect();
    let start = Instant::now();
    let mut rows = Vec::new();
    for codec in &codecs {
        // Attack seeds ignore the marking state, so each image is evaluated
        // once per state and every ratio reuses the records.
        let (marked, unmarked) = with_pool(cfg.workers, || -> Result<_> {
            let mut m = Vec::new();
            let mut u = Vec::new();
            for (d, ds) in datasets.iter().enumerate() {
                m.push(evaluate_dataset(ds, d, codec, &attacks, true, cfg.metrics)?);
                u.push(evaluate_dataset(ds, d, codec, &attacks, false, cfg.metrics)?);
            }
            Ok((m, u))
        })??;
        for (a, attack) in attacks.iter().enumerate() {
            for &p in &cfg.protection_ratios {
                let mut cells = Vec::new();
                let mut pooled = Vec::new();
                let mut pooled_flags = Vec::new();
                for (d, ds) in datasets.iter().enumerate() {
                    let k = marked_count(p, ds.len());
                    let flags: Vec<bool> = ranks[d].iter().map(|&r| r < k).collect();
                    let recs: Vec<ImageRecord> = flags
                        .iter()
                        .enumerate()
                        .map(|(i, &f)| if f { marked[d][a][i] } else { unmarked[d][a][i] })
                        .collect();
                    let stats = summarize(&recs, &flags);
                    if stats.n_marked != k {
                        return Err(HarnessError::Dataset(format!(
                            "{}: marked {} images, expected {k}",
                            ds.name, stats.n_marked
                        )));
                    }
                    cells.push(stats);
                    pooled.extend(recs);
                    pooled_flags.extend(flags);
                }
                let stats = combine(&cells, cfg.averaging, || summarize(&pooled, &pooled_flags));
                rows.push(ReportRow::new(&codec.name, attack, p, stats));
            }
        }
    }
    Ok(ExperimentReport {
        kind: ReportKind::Mixing,
        rows,
        provenance: provenance(cfg, &codecs, &attacks, datasets),
        warnings: datasets.iter().flat_map(|d| d.warnings.iter().map(move |w| format!("{}: {w}", d.name))).collect(),
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn marked_count_is_exact_ceiling() {
        assert_eq!(marked_count(0.6, 100), 60);
        assert_eq!(marked_count(0.7, 10), 7);
        assert_eq!(marked_count(0.5, 7), 4);
        assert_eq!(marked_count(1.0, 3), 3);
        assert_eq!(marked_count(0.01, 3), 1);
        for n in 1..200 {
            for k in 1..=n {
                assert_eq!(marked_count(k as f64 / n as f64, n), k, "{k}/{n}");
            }
        }
    }

    #[test]
    fn selection_is_a_permutation_and_nested() {
        let r = selection_ranks(50, 9);
        let mut sorted = r.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..50).collect::<Vec<_>>());
        assert_eq!(r, selection_ranks(50, 9));
        assert_ne!(r, selection_ranks(50, 10));
    }

    fn rec(accuracy: f64) -> ImageRecord {
        ImageRecord {
            accuracy,
            present: accuracy >= 0.75,
            psnr: Some(40.0),
            ssim: Some(0.99),
            clamped: 0.01,
            seconds: 0.0,
        }
    }

    #[test]
    fn summary_splits_subsets() {
        let recs = [rec(1.0), rec(0.5), rec(1.0), rec(0.25)];
        let s = summarize(&recs, &[true, false, true, false]);
        assert_eq!(s.n_marked, 2);
        assert_eq!(s.accuracy, 0.6875);
        assert_eq!(s.accuracy_marked, Some(1.0));
        assert_eq!(s.accuracy_unmarked, Some(0.375));
        assert_eq!(s.detection_rate, 0.5);
        assert_eq!(s.clamped_fraction, 0.01);
        // Unmarked sample variance 0.03125 over two images, out of four.
        assert!((s.accuracy_se - (2.0f64 * 0.03125).sqrt() / 4.0).abs() < 1e-15);
    }

    #[test]
    fn macro_average_weighs_datasets_equally() {
        let a = summarize(&[rec(1.0)], &[true]);
        let b = summarize(&[rec(0.5), rec(0.5), rec(0.5)], &[true, true, true]);
        let m = combine(&[a, b], Averaging::Macro, || unreachable!());
        assert_eq!(m.accuracy, 0.75);
        assert_eq!(m.n_images, 4);
        let pooled = summarize(&[rec(1.0), rec(0.5), rec(0.5), rec(0.5)], &[true; 4]);
        let micro = combine(&[a, b], Averaging::Micro, || pooled);
        assert_eq!(micro.accuracy, 0.625);
    }
}
