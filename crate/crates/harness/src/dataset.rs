//! Dataset ingestion: a directory of images or a synthetic corpus.

use std::path::Path;

use wmbench_core::io::{is_supported, read_image, read_image_resized};
use wmbench_core::synth::synthetic_corpus;
use wmbench_core::Image;

use crate::config::DatasetConfig;
use crate::error::{HarnessError, Result};

#[derive(Clone, Debug)]
pub struct Dataset {
    pub name: String,
    /// File stems or synthetic indices, parallel to `images`.
    pub ids: Vec<String>,
    pub images: Vec<Image>,
    /// One entry per file that could not be used.
    pub warnings: Vec<String>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }
}

/// Reads every regular file of `dir` in byte-wise lexicographic name order.
///
/// Unreadable or unsupported files become warnings. Fails only when no
/// image survives.
pub fn ingest_dataset(dir: &Path, resize: Option<(usize, usize)>) -> Result<Dataset> {
    let entries = std::fs::read_dir(dir).map_err(|e| HarnessError::io(format!("cannot list {}", dir.display()), e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| HarnessError::io(format!("cannot list {}", dir.display()), e))?;
        let path = entry.path();
        if path.is_file() {
            paths.push(path);
        }
    }
    paths.sort_by(|a, b| a.file_name().cmp(&b.file_name()));

    let mut ids = Vec::new();
    let mut images = Vec::new();
    let mut warnings = Vec::new();
    for path in paths {
        let shown = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
        if !is_supported(&path) {
            warnings.push(format!("{shown}: skipped, not a PNG/PGM/PPM file"));
            continue;
        }
        let read = match resize {
            Some((w, h)) => read_image_resized(&path, w, h),
            None => read_image(&path),
        };
        match read {
            Ok(img) => {
                ids.push(shown);
                images.push(img);
            }
            Err(e) => warnings.push(format!("{shown}: {e}")),
        }
    }
    if images.is_empty() {
        return Err(HarnessError::Dataset(format!("no valid images in {}", dir.display())));
    }
    let name = dir.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(Dataset {
        name,
        ids,
        images,
        warnings,
    })
}

/// Materializes a configured dataset under `name`.
pub fn load_dataset(cfg: &DatasetConfig, name: &str) -> Result<Dataset> {
    let resize = cfg.resize.map(|[w, h]| (w, h));
    let mut ds = match (&cfg.path, &cfg.synthetic) {
        (Some(dir), None) => ingest_dataset(dir, resize)?,
        (None, Some(s)) => {
            let mut p = s.params();
            if let Some((w, h)) = resize {
                p.width = w;
                p.height = h;
            }
            let images = synthetic_corpus(&p, s.count, s.seed)?;
            Dataset {
                name: String::new(),
                ids: (0..images.len()).map(|i| format!("synthetic-{i:05}")).collect(),
                images,
                warnings: Vec::new(),
            }
        }
        _ => return Err(HarnessError::Config("dataset needs exactly one of `path` and `synthetic`".into())),
    };
    ds.name = name.to_string();
    Ok(ds)
}
