use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use wmbench::config::{ExperimentConfig, NO_ATTACK};
use wmbench::experiment::{detect, embed};
use wmbench::report::{emit_report, Format};
use wmbench::{run_mixing_experiment, run_robustness_grid, HarnessError, Result};
use wmbench_core::attack::{builtin, run_attack_detailed, AttackPipeline};
use wmbench_core::degrade::BlurParams;
use wmbench_core::io::{read_image, write_image};
use wmbench_core::metrics::QualityReport;
use wmbench_core::spectral::{noise_energy_check, suppression_profile, suppression_profile_paired, BandSpec};
use wmbench_core::synth::{synthetic_corpus, SynthParams};
use wmbench_core::watermark::{
    detect_additive, AdditiveKey, SpreadSpectrumKey, WatermarkKey, DEFAULT_ADDITIVE_STRENGTH, DEFAULT_SS_STRENGTH,
};

#[derive(Parser)]
#[command(name = "wmbench", version, about = "Watermark robustness benchmark")]
struct Cli {
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed; overrides the config's root seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads, 0 for all cores.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Report formats; repeat or comma-separate. Default: all.
    #[arg(long, global = true, value_enum, value_delimiter = ',')]
    format: Vec<FormatArg>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Md,
    Svg,
}

#[derive(Clone, Copy, ValueEnum)]
enum CodecArg {
    Additive,
    SpreadSpectrum,
}

#[derive(Subcommand)]
enum Command {
    /// Embed a fresh key into an image and write the key file.
    Embed {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Key file to write.
        #[arg(long)]
        key: PathBuf,
        #[arg(long, value_enum, default_value = "spread-spectrum")]
        codec: CodecArg,
        #[arg(long)]
        strength: Option<f64>,
        #[arg(long, default_value_t = 64)]
        bits: usize,
    },
    /// Run an attack pipeline on an image.
    Attack {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Builtin name, or the name of an attack in --config.
        #[arg(long)]
        pipeline: String,
    },
    /// Read a watermark with a key file.
    Detect {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        key: PathBuf,
        /// Unmarked original, for informed additive detection.
        #[arg(long)]
        original: Option<PathBuf>,
    },
    /// Radial band energy of a watermark before and after an attack, or the
    /// pixel-noise energy check with --noise-sigma.
    AnalyzeSpectrum {
        #[arg(long)]
        clean: Option<PathBuf>,
        #[arg(long)]
        marked: Option<PathBuf>,
        #[arg(long)]
        attacked: Option<PathBuf>,
        /// The clean image under the same attack; isolates the watermark.
        #[arg(long)]
        attacked_clean: Option<PathBuf>,
        /// Blur the attack applied, for the predicted profile.
        #[arg(long)]
        blur_sigma: Option<f64>,
        #[arg(long)]
        blur_kernel: Option<usize>,
        #[arg(long, default_value_t = 8)]
        bands: usize,
        #[arg(long)]
        noise_sigma: Option<f64>,
        #[arg(long, default_value = "64x64")]
        size: String,
        #[arg(long, default_value_t = 200)]
        trials: usize,
    },
    /// Codec × attack robustness grid from --config.
    Bench,
    /// Protection-ratio mixing study from --config.
    Mix,
    /// Write a synthetic grayscale corpus as PNG files.
    Synth {
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 128)]
        width: usize,
        #[arg(long, default_value_t = 128)]
        height: usize,
        #[arg(long)]
        exponent: Option<f64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("wmbench: error[{}]: {e}", e.category());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn formats(cli: &[FormatArg]) -> Vec<Format> {
    if cli.is_empty() {
        return Format::ALL.to_vec();
    }
    cli.iter()
        .map(|f| match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Md => Format::Markdown,
            FormatArg::Svg => Format::Svg,
        })
        .collect()
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| HarnessError::Config("--config is required".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    if let Some(o) = &cli.out {
        cfg.output = o.clone();
    }
    Ok(cfg)
}

fn out_dir(cli: &Cli) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| PathBuf::from("wmbench-out"))
}

fn write(path: &Path, body: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(format!("cannot create {}", dir.display()), e))?;
    }
    std::fs::write(path, body).map_err(|e| HarnessError::io(format!("cannot write {}", path.display()), e))
}

fn parse_size(s: &str) -> Result<(usize, usize)> {
    let bad = || HarnessError::Config(format!("size '{s}' is not WIDTHxHEIGHT"));
    let (w, h) = s.split_once('x').ok_or_else(bad)?;
    Ok((w.parse().map_err(|_| bad())?, h.parse().map_err(|_| bad())?))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Embed {
            input,
            output,
            key,
            codec,
            strength,
            bits,
        } => {
            let seed = cli.seed.unwrap_or(0);
            let wm = match codec {
                CodecArg::Additive => WatermarkKey::Additive(AdditiveKey::random(
                    seed,
                    *bits,
                    strength.unwrap_or(DEFAULT_ADDITIVE_STRENGTH),
                )?),
                CodecArg::SpreadSpectrum => WatermarkKey::SpreadSpectrum(SpreadSpectrumKey::random(
                    seed,
                    *bits,
                    strength.unwrap_or(DEFAULT_SS_STRENGTH),
                )?),
            };
            let img = read_image(input)?;
            let marked = embed(&wm, &img)?;
            write_image(&marked.image, output)?;
            wm.write(key)?;
            let q = QualityReport::compare(&marked.image, &img)?;
            println!("codec={} {q} clamped_fraction={:.6}", wm.codec_name(), marked.clamped_fraction);
        }
        Command::Attack { input, output, pipeline } => {
            let pipe = resolve_pipeline(&cli, pipeline)?;
            let img = read_image(input)?;
            let out = run_attack_detailed(&img, &pipe)?;
            write_image(&out.image, output)?;
            println!("pipeline={} seed={} stages={}", pipe.name, pipe.seed, pipe.describe());
            for s in &out.stages {
                if let (Some(it), Some(c)) = (s.iterations, s.converged) {
                    println!("stage={} iterations={it} converged={c}", s.kind);
                }
            }
            println!("{}", QualityReport::compare(&out.image, &img)?);
        }
        Command::Detect { input, key, original } => {
            let wm = WatermarkKey::read(key)?;
            let img = read_image(input)?;
            let d = match (original, &wm) {
                (None, _) => detect(&wm, &img)?,
                (Some(o), WatermarkKey::Additive(k)) => {
                    let orig = read_image(o)?;
                    detect_additive(&img, &k.pattern(img.width(), img.height())?, Some(&orig))?
                }
                (Some(_), WatermarkKey::SpreadSpectrum(_)) => {
                    return Err(HarnessError::Config("--original applies to the additive codec only".into()))
                }
            };
            println!(
                "codec={} bit_accuracy={:.6} bits={}/{} correlation={:.6} threshold={} present={}",
                wm.codec_name(),
                d.bit_accuracy,
                d.bits_correct,
                d.bits_total,
                d.correlation,
                d.threshold,
                d.present
            );
        }
        Command::AnalyzeSpectrum {
            clean,
            marked,
            attacked,
            attacked_clean,
            blur_sigma,
            blur_kernel,
            bands,
            noise_sigma,
            size,
            trials,
        } => {
            if let Some(sigma) = noise_sigma {
                let (w, h) = parse_size(size)?;
                let r = noise_energy_check(*sigma, w, h, *trials, cli.seed.unwrap_or(0))?;
                println!(
                    "sigma={} size={w}x{h} trials={} target={:.6e} grand_mean={:.6e} relative_error={:.6} max_z={:.3} passed={}",
                    r.sigma, r.trials, r.target, r.grand_mean, r.relative_error, r.max_z, r.passed
                );
                return Ok(if r.passed { ExitCode::SUCCESS } else { ExitCode::from(1) });
            }
            let need = |p: &Option<PathBuf>, flag: &str| {
                p.as_ref()
                    .ok_or_else(|| HarnessError::Config(format!("--{flag} is required without --noise-sigma")))
                    .and_then(|p| Ok(read_image(p)?))
            };
            let (c, m, a) = (need(clean, "clean")?, need(marked, "marked")?, need(attacked, "attacked")?);
            let blur = match (blur_sigma, blur_kernel) {
                (Some(s), Some(k)) => Some(BlurParams::with_kernel(*s, *k)?),
                (Some(s), None) => Some(BlurParams::new(*s)?),
                (None, Some(_)) => return Err(HarnessError::Config("--blur-kernel needs --blur-sigma".into())),
                (None, None) => None,
            };
            let spec = BandSpec::uniform(*bands)?;
            let report = match attacked_clean {
                Some(p) => suppression_profile_paired(&c, &m, &read_image(p)?, &a, &spec, blur.as_ref())?,
                None => suppression_profile(&c, &m, &a, &spec, blur.as_ref())?,
            };
            let dir = out_dir(&cli);
            for f in formats(&cli.format) {
                match f {
                    Format::Csv => write(&dir.join("spectrum.csv"), &report.to_csv())?,
                    Format::Svg => write(&dir.join("spectrum.svg"), &report.to_svg())?,
                    Format::Markdown => write(&dir.join("spectrum.md"), &spectrum_markdown(&report.to_csv()))?,
                }
            }
            for note in &report.notes {
                eprintln!("note: {note}");
            }
            println!("parseval_error={:.3e} bands={} out={}", report.parseval_error(), report.rows.len(), dir.display());
        }
        Command::Bench | Command::Mix => {
            let cfg = load_config(&cli)?;
            let report = if matches!(cli.command, Command::Bench) {
                run_robustness_grid(&cfg)?
            } else {
                run_mixing_experiment(&cfg)?
            };
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            let written = emit_report(&report, &formats(&cli.format), &cfg.output)?;
            for r in &report.rows {
                println!(
                    "{:<20} {:<20} p={:.2} n={} marked={} acc={:.4}",
                    r.codec, r.attack, r.ratio, r.stats.n_images, r.stats.n_marked, r.stats.accuracy
                );
            }
            for p in written {
                println!("wrote {}", p.display());
            }
        }
        Command::Synth {
            count,
            width,
            height,
            exponent,
        } => {
            let mut p = SynthParams::new(*width, *height);
            if let Some(e) = exponent {
                p.exponent = *e;
            }
            let dir = out_dir(&cli);
            std::fs::create_dir_all(&dir).map_err(|e| HarnessError::io(format!("cannot create {}", dir.display()), e))?;
            for (i, img) in synthetic_corpus(&p, *count, cli.seed.unwrap_or(0))?.iter().enumerate() {
                write_image(img, &dir.join(format!("synthetic-{i:05}.png")))?;
            }
            println!("wrote {count} images to {}", dir.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn resolve_pipeline(cli: &Cli, name: &str) -> Result<AttackPipeline> {
    let seed = cli.seed;
    if let Some(p) = builtin(name) {
        return Ok(match seed {
            Some(s) => p.with_seed(s),
            None => p,
        });
    }
    if cli.config.is_none() {
        return Err(HarnessError::Config(format!("unknown builtin '{name}'; pass --config to use a configured attack")));
    }
    let cfg = load_config(cli)?;
    let attack = cfg
        .resolve_attacks()?
        .into_iter()
        .find(|a| a.name == name)
        .ok_or_else(|| HarnessError::Config(format!("no attack named '{name}' in the config")))?;
    let pipe = attack.pipeline.ok_or_else(|| {
        HarnessError::Config(format!("attack '{name}' is the '{NO_ATTACK}' baseline, nothing to run"))
    })?;
    Ok(match seed {
        Some(s) => pipe.with_seed(s),
        None => pipe,
    })
}

fn spectrum_markdown(csv: &str) -> String {
    let mut lines = csv.lines();
    let mut out = String::new();
    if let Some(header) = lines.next() {
        let cols: Vec<&str> = header.split(',').collect();
        out.push_str(&format!("| {} |\n", cols.join(" | ")));
        out.push_str(&format!("|{}\n", "---|".repeat(cols.len())));
    }
    for l in lines {
        out.push_str(&format!("| {} |\n", l.split(',').collect::<Vec<_>>().join(" | ")));
    }
    out
}
