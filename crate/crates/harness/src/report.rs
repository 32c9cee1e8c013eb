//! Report rows and their CSV, markdown and SVG renderings.
//!
//! Renderings are pure functions of the report. Timing lives only in the
//! markdown, so CSV bytes repeat exactly across reruns.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use wmbench_core::plot::LinePlot;

use crate::config::{Averaging, ResolvedAttack};
use crate::error::{HarnessError, Result};
use crate::experiment::CellStats;

pub const CSV_HEADER: [&str; 13] = [
    "codec",
    "attack",
    "ratio",
    "n_images",
    "n_marked",
    "accuracy",
    "accuracy_marked",
    "accuracy_unmarked",
    "accuracy_se",
    "detection_rate",
    "psnr",
    "ssim",
    "clamped_fraction",
];

pub const SUBSTITUTION_NOTE: &str = "Rows are indexed by watermark codec. No generative model is trained by this \
toolkit, so the codec axis takes the place of a model fine-tuning method axis.";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportKind {
    Grid,
    Mixing,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Markdown,
    Svg,
}

impl Format {
    pub const ALL: [Format; 3] = [Format::Csv, Format::Markdown, Format::Svg];

    pub fn parse(s: &str) -> Option<Format> {
        match s {
            "csv" => Some(Format::Csv),
            "md" | "markdown" => Some(Format::Markdown),
            "svg" => Some(Format::Svg),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub codec: String,
    pub attack: String,
    pub family: Option<String>,
    pub x: Option<f64>,
    pub ratio: f64,
    pub stats: CellStats,
}

impl ReportRow {
    pub fn new(codec: &str, attack: &ResolvedAttack, ratio: f64, stats: CellStats) -> Self {
        ReportRow {
            codec: codec.to_string(),
            attack: attack.name.clone(),
            family: attack.family.clone(),
            x: attack.x,
            ratio,
            stats,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Provenance {
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub averaging: Averaging,
    pub codec_seeds: Vec<(String, u64)>,
    /// `None` for the unattacked baseline.
    pub attack_seeds: Vec<(String, Option<u64>)>,
    pub datasets: Vec<(String, usize)>,
    pub selection_seeds: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub kind: ReportKind,
    pub rows: Vec<ReportRow>,
    pub provenance: Provenance,
    pub warnings: Vec<String>,
    pub wall_seconds: f64,
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map(|x| format!("{x:.digits$}")).unwrap_or_default()
}

impl ExperimentReport {
    pub fn row(&self, codec: &str, attack: &str, ratio: f64) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.codec == codec && r.attack == attack && r.ratio == ratio)
    }

    pub fn codecs(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.codec.as_str()) {
                out.push(&r.codec);
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER).expect("in-memory write");
        for r in &self.rows {
            let s = &r.stats;
            w.write_record([
                r.codec.clone(),
                r.attack.clone(),
                format!("{:.4}", r.ratio),
                s.n_images.to_string(),
                s.n_marked.to_string(),
                format!("{:.6}", s.accuracy),
                opt(s.accuracy_marked, 6),
                opt(s.accuracy_unmarked, 6),
                format!("{:.6}", s.accuracy_se),
                format!("{:.6}", s.detection_rate),
                opt(s.psnr, 4),
                opt(s.ssim, 6),
                format!("{:.6}", s.clamped_fraction),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let title = match self.kind {
            ReportKind::Grid => "Robustness grid",
            ReportKind::Mixing => "Protection-ratio mixing",
        };
        let _ = writeln!(out, "# {title}\n\n{SUBSTITUTION_NOTE}\n");
        out.push_str("| codec | attack | ratio | images | marked | Acc | Acc marked | Acc unmarked | SE | detected | PSNR (dB) | SSIM | clamped | time (s) |\n");
        out.push_str("|---|---|---:|---:|---:|---:|---:|---:|---:|---:|---:|---:|---:|---:|\n");
        let dash = |s: String| if s.is_empty() { "-".to_string() } else { s };
        for r in &self.rows {
            let s = &r.stats;
            let _ = writeln!(
                out,
                "| {} | {} | {:.2} | {} | {} | {:.4} | {} | {} | {:.4} | {:.3} | {} | {} | {:.4} | {:.2} |",
                r.codec.replace('|', "\\|"),
                r.attack.replace('|', "\\|"),
                r.ratio,
                s.n_images,
                s.n_marked,
                s.accuracy,
                dash(opt(s.accuracy_marked, 4)),
                dash(opt(s.accuracy_unmarked, 4)),
                s.accuracy_se,
                s.detection_rate,
                dash(opt(s.psnr, 2)),
                dash(opt(s.ssim, 4)),
                s.clamped_fraction,
                s.seconds,
            );
        }
        let p = &self.provenance;
        let _ = writeln!(out, "\n## Provenance\n");
        let _ = writeln!(out, "- toolkit version: {}", p.version);
        let _ = writeln!(out, "- config hash: `{}`", p.config_hash);
        let _ = writeln!(out, "- root seed: {}", p.seed);
        let _ = writeln!(out, "- averaging: {:?}", p.averaging);
        for (name, seed) in &p.codec_seeds {
            let _ = writeln!(out, "- codec `{name}` key seed: {seed}");
        }
        for (name, seed) in &p.attack_seeds {
            match seed {
                Some(s) => {
                    let _ = writeln!(out, "- attack `{name}` seed: {s}");
                }
                None => {
                    let _ = writeln!(out, "- attack `{name}`: no attack applied");
                }
            }
        }
        for ((name, n), seed) in p.datasets.iter().zip(&p.selection_seeds) {
            let _ = writeln!(out, "- dataset `{name}`: {n} images, selection seed {seed}");
        }
        let _ = writeln!(out, "- wall time: {:.2} s", self.wall_seconds);
        if !self.warnings.is_empty() {
            let _ = writeln!(out, "\n## Warnings\n");
            for w in &self.warnings {
                let _ = writeln!(out, "- {w}");
            }
        }
        out
    }

    /// One accuracy plot per codec, as `(codec, svg)`.
    ///
    /// Grid plots put attacks with a `family` on curves against their `x`;
    /// the remaining attacks form one curve against their position. Mixing
    /// plots draw one curve per attack against the ratio.
    pub fn to_svgs(&self) -> Vec<(String, String)> {
        self.codecs()
            .into_iter()
            .map(|codec| {
                let rows: Vec<&ReportRow> = self.rows.iter().filter(|r| r.codec == codec).collect();
                let mut curves: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
                let mut push = |name: &str, point: (f64, f64)| match curves.iter_mut().find(|(n, _)| n == name) {
                    Some((_, pts)) => pts.push(point),
                    None => curves.push((name.to_string(), vec![point])),
                };
                let x_label = match self.kind {
                    ReportKind::Mixing => {
                        for r in &rows {
                            push(&r.attack, (r.ratio, r.stats.accuracy));
                        }
                        "protection ratio"
                    }
                    ReportKind::Grid => {
                        let mut position = 0.0;
                        for r in &rows {
                            match &r.family {
                                Some(f) => push(f, (r.x.unwrap_or(position), r.stats.accuracy)),
                                None => push("attacks", (position, r.stats.accuracy)),
                            }
                            position += 1.0;
                        }
                        "attack parameter"
                    }
                };
                let mut plot = LinePlot::new(format!("{codec}: bit accuracy"), x_label, "bit accuracy");
                plot.y_range = Some((0.0, 1.0));
                for (name, pts) in curves {
                    plot = plot.series(name, pts);
                }
                (codec.to_string(), plot.to_svg())
            })
            .collect()
    }
}

/// File-name-safe form of a codec name.
pub fn slug(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

/// Writes the requested renderings into `dir`, returning the paths written.
pub fn emit_report(report: &ExperimentReport, formats: &[Format], dir: &Path) -> Result<Vec<PathBuf>> {
    if report.rows.is_empty() {
        return Err(HarnessError::Config("report has no rows".into()));
    }
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(format!("cannot create {}", dir.display()), e))?;
    let mut written = Vec::new();
    let mut put = |name: String, body: &str| -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| HarnessError::io(format!("cannot write {}", path.display()), e))?;
        written.push(path);
        Ok(())
    };
    for f in formats {
        match f {
            Format::Csv => put("report.csv".into(), &report.to_csv())?,
            Format::Markdown => put("report.md".into(), &report.to_markdown())?,
            Format::Svg => {
                for (codec, svg) in report.to_svgs() {
                    put(format!("accuracy-{}.svg", slug(&codec)), &svg)?;
                }
            }
        }
    }
    Ok(written)
}
