//! PAMAP2 protocol recordings.
//!
//! Each `subject10X.dat` row holds 54 space-separated columns: timestamp,
//! activity id, heart rate, then hand, chest and ankle IMU blocks of 17
//! columns each. Only the ±16g accelerometers of the three IMUs are kept.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use crate::error::{Result, StcError};
use crate::nn::Matrix;

pub const N_COLUMNS: usize = 54;
pub const SAMPLE_RATE_HZ: f64 = 100.0;

/// Column indices (0-based) of hand, chest and ankle ±16g acceleration x/y/z.
pub const ACCEL_COLUMNS: [usize; 9] = [4, 5, 6, 21, 22, 23, 38, 39, 40];

/// PAMAP2 activity ids for standing, walking and running → labels 0, 1, 2.
pub const ACTIVITY_IDS: [u32; 3] = [3, 4, 5];

pub fn activity_label(id: u32) -> Option<usize> {
    ACTIVITY_IDS.iter().position(|&a| a == id)
}

/// A contiguous run of one retained activity, `channels × steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSegment {
    pub label: usize,
    pub values: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubjectRecording {
    pub subject: u32,
    pub segments: Vec<LabeledSegment>,
}

impl SubjectRecording {
    /// Seconds of data per class.
    pub fn class_seconds(&self) -> [f64; 3] {
        let mut out = [0.0; 3];
        for s in &self.segments {
            out[s.label] += s.values.cols() as f64 / SAMPLE_RATE_HZ;
        }
        out
    }
}

fn subject_file(dir: &Path, subject: u32) -> Option<PathBuf> {
    let name = format!("subject{}.dat", 100 + subject);
    [dir.join(&name), dir.join("Protocol").join(&name)]
        .into_iter()
        .find(|p| p.is_file())
}

/// True if `dir` (or `dir/Protocol`) holds any `subject10X.dat` file.
pub fn looks_like_pamap2(dir: &Path) -> bool {
    (1..=9).any(|s| subject_file(dir, s).is_some())
}

/// Loads the requested subjects from `dir` or `dir/Protocol`.
pub fn load_pamap2(dir: &Path, subjects: &[u32]) -> Result<Vec<SubjectRecording>> {
    subjects
        .iter()
        .map(|&s| {
            let path = subject_file(dir, s).ok_or_else(|| {
                StcError::Data(format!(
                    "subject {s}: subject{}.dat not found under {}",
                    100 + s,
                    dir.display()
                ))
            })?;
            let file = File::open(&path).map_err(|e| StcError::io(&path, e))?;
            parse_pamap2(BufReader::new(file), s).map_err(|e| match e {
                StcError::Parse { line, msg } => StcError::Parse {
                    line,
                    msg: format!("{}: {msg}", path.display()),
                },
                other => other,
            })
        })
        .collect()
}

/// Parses one subject file.
pub fn parse_pamap2<R: BufRead>(reader: R, subject: u32) -> Result<SubjectRecording> {
    // (label, rows of 9 channel values)
    let mut runs: Vec<(usize, Vec<[f64; 9]>)> = Vec::new();
    let mut previous_kept = false;
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| StcError::parse(lineno, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_ascii_whitespace().collect();
        if fields.len() != N_COLUMNS {
            return Err(StcError::parse(
                lineno,
                format!("expected {N_COLUMNS} columns, found {}", fields.len()),
            ));
        }
        let mut parsed = [0.0f64; N_COLUMNS];
        for (c, f) in fields.iter().enumerate() {
            parsed[c] = f
                .parse::<f64>()
                .map_err(|_| StcError::parse(lineno, format!("column {c}: bad number {f:?}")))?;
        }
        let activity = parsed[1];
        if !(activity.is_finite() && activity >= 0.0 && activity.fract() == 0.0 && activity < 1e6) {
            return Err(StcError::parse(lineno, format!("bad activity id {activity}")));
        }
        let label = match activity_label(activity as u32) {
            Some(l) => l,
            None => {
                previous_kept = false;
                continue;
            }
        };
        let mut row = [0.0; 9];
        for (dst, &c) in row.iter_mut().zip(&ACCEL_COLUMNS) {
            *dst = parsed[c];
        }
        match runs.last_mut() {
            Some((l, rows)) if previous_kept && *l == label => rows.push(row),
            _ => runs.push((label, vec![row])),
        }
        previous_kept = true;
    }

    let segments = runs
        .into_iter()
        .filter_map(|(label, rows)| repair_segment(&rows).map(|values| LabeledSegment { label, values }))
        .collect();
    Ok(SubjectRecording { subject, segments })
}

/// Trims rows with any missing channel at either end, then linearly
/// interpolates interior gaps per channel. `None` if nothing remains.
fn repair_segment(rows: &[[f64; 9]]) -> Option<Matrix> {
    let complete = |r: &[f64; 9]| r.iter().all(|v| v.is_finite());
    let start = rows.iter().position(complete)?;
    let end = rows.iter().rposition(complete)? + 1;
    let rows = &rows[start..end];
    let steps = rows.len();
    let mut values = Matrix::zeros(9, steps);
    for c in 0..9 {
        let mut series: Vec<f64> = rows.iter().map(|r| r[c]).collect();
        interpolate_gaps(&mut series);
        values.row_mut(c).copy_from_slice(&series);
    }
    Some(values)
}

/// Fills non-finite interior runs by linear interpolation between the
/// nearest finite neighbours. Endpoints must be finite.
pub(crate) fn interpolate_gaps(series: &mut [f64]) {
    let mut t = 0;
    while t < series.len() {
        if series[t].is_finite() {
            t += 1;
            continue;
        }
        let left = t - 1;
        let mut right = t;
        while !series[right].is_finite() {
            right += 1;
        }
        let (a, b) = (series[left], series[right]);
        let span = (right - left) as f64;
        for (k, v) in series.iter_mut().enumerate().take(right).skip(t) {
            let w = (k - left) as f64 / span;
            *v = a + (b - a) * w;
        }
        t = right + 1;
    }
}

/// Subjects with at least `min_seconds` of every class.
pub fn qualifying_subjects(recordings: &[SubjectRecording], min_seconds: f64) -> Vec<u32> {
    recordings
        .iter()
        .filter(|r| r.class_seconds().iter().all(|&s| s >= min_seconds))
        .map(|r| r.subject)
        .collect()
}
