//! Resolves `--data DIR` into labelled windows.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use stc_core::config::DataConfig;
use stc_core::data::pamap2::looks_like_pamap2;
use stc_core::data::{load_pamap2, qualifying_subjects, read_dataset_csv, window_recording, TimeSeriesSample};

use crate::exit::{CliError, Context};

pub const PAMAP2_SUBJECTS: [u32; 5] = [1, 2, 5, 6, 8];

pub struct Dataset {
    pub samples: Vec<TimeSeriesSample>,
    pub subjects: Vec<u32>,
    pub source: &'static str,
}

pub fn cache_path(dir: &Path, subject: u32) -> PathBuf {
    dir.join(format!("subject_{subject}.csv"))
}

fn cached_subjects(dir: &Path) -> Result<Vec<u32>, CliError> {
    let entries = std::fs::read_dir(dir).context(dir.display())?;
    let mut ids: Vec<u32> = entries
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let name = e.file_name().into_string().ok()?;
            name.strip_prefix("subject_")?.strip_suffix(".csv")?.parse().ok()
        })
        .collect();
    ids.sort_unstable();
    Ok(ids)
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::data(e.to_string())
    }
}

/// Loads `subjects` (or the directory's default set) from `dir`.
pub fn load(dir: &Path, subjects: Option<&[u32]>, cfg: &DataConfig) -> Result<Dataset, CliError> {
    if !dir.is_dir() {
        return Err(CliError::usage(format!("{}: no such data directory", dir.display())));
    }
    if looks_like_pamap2(dir) {
        let wanted = subjects.map_or_else(|| PAMAP2_SUBJECTS.to_vec(), <[u32]>::to_vec);
        let recordings = load_pamap2(dir, &wanted)?;
        let ok = qualifying_subjects(&recordings, cfg.min_seconds);
        if let Some(bad) = wanted.iter().find(|s| !ok.contains(s)) {
            return Err(CliError::data(format!(
                "subject {bad} has less than {} s of standing, walking or running",
                cfg.min_seconds
            )));
        }
        let mut samples = Vec::new();
        for rec in &recordings {
            samples.extend(window_recording(rec, cfg.window, cfg.stride)?);
        }
        return Ok(Dataset {
            samples,
            subjects: wanted,
            source: "pamap2",
        });
    }

    let available = cached_subjects(dir)?;
    if available.is_empty() {
        return Err(CliError::usage(format!(
            "{}: neither PAMAP2 `subject10X.dat` files nor `subject_<id>.csv` files",
            dir.display()
        )));
    }
    let wanted = subjects.map_or_else(|| available.clone(), <[u32]>::to_vec);
    let mut samples = Vec::new();
    let mut shape = None;
    for &s in &wanted {
        if !available.contains(&s) {
            return Err(CliError::usage(format!("subject {s} not found in {}", dir.display())));
        }
        let path = cache_path(dir, s);
        let file = File::open(&path).context(path.display())?;
        let csv = read_dataset_csv(BufReader::new(file)).context(path.display())?;
        if *shape.get_or_insert((csv.channels, csv.length)) != (csv.channels, csv.length) {
            return Err(CliError::data(format!("{}: window shape differs from other subjects", path.display())));
        }
        if let Some(bad) = csv.samples.iter().find(|w| w.subject != s) {
            return Err(CliError::data(format!("{}: contains subject {}", path.display(), bad.subject)));
        }
        samples.extend(csv.samples);
    }
    Ok(Dataset {
        samples,
        subjects: wanted,
        source: "csv",
    })
}
