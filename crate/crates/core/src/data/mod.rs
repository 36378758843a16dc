//! Samples, PAMAP2 ingestion, windowing, subject splits and the synthetic
//! shifted-subject generator.

mod cache;
pub mod pamap2;
mod split;
pub mod synth;
mod window;

pub use cache::{read_dataset_csv, write_dataset_csv, DatasetCsv};
pub use pamap2::{load_pamap2, parse_pamap2, qualifying_subjects, LabeledSegment, SubjectRecording};
pub use split::{make_split, DatasetSplit};
pub use synth::{shifted_subjects, synth_generate, SubjectSpread, SynthSpec};
pub use window::{window, window_recording};

use crate::error::{Result, StcError};
use crate::nn::Matrix;

pub const N_CLASSES: usize = 3;
pub const CLASS_NAMES: [&str; N_CLASSES] = ["standing", "walking", "running"];

/// One windowed multichannel series, `values` is `channels × length`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesSample {
    values: Matrix,
    pub subject: u32,
    pub label: Option<usize>,
}

impl TimeSeriesSample {
    pub fn new(values: Matrix, subject: u32, label: Option<usize>) -> Result<Self> {
        if let Some(l) = label {
            if l >= N_CLASSES {
                return Err(StcError::Data(format!("label {l} outside [0, {N_CLASSES})")));
            }
        }
        if let Some(pos) = values.data().iter().position(|v| !v.is_finite()) {
            return Err(StcError::NonFinite(format!(
                "subject {subject}: channel {} step {}",
                pos / values.cols(),
                pos % values.cols()
            )));
        }
        Ok(Self {
            values,
            subject,
            label,
        })
    }

    pub fn channels(&self) -> usize {
        self.values.rows()
    }

    pub fn len(&self) -> usize {
        self.values.cols()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn channel(&self, k: usize) -> &[f64] {
        self.values.row(k)
    }

    /// Copy with replaced values; subject and label carry over.
    pub fn with_values(&self, values: Matrix) -> Result<Self> {
        if values.shape() != self.values.shape() {
            return Err(StcError::Shape(format!(
                "replacement values {:?} differ from {:?}",
                values.shape(),
                self.values.shape()
            )));
        }
        Self::new(values, self.subject, self.label)
    }
}
