use super::{TimeSeriesSample, N_CLASSES};
use crate::error::{Result, StcError};

/// Cross-subject roles: pretrain on the source (labels unused), fit the probe
/// on labelled source windows, test on the target.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub source: u32,
    pub target: u32,
    pub pretrain: Vec<TimeSeriesSample>,
    pub probe_train: Vec<TimeSeriesSample>,
    pub test: Vec<TimeSeriesSample>,
}

fn check_subject(samples: &[&TimeSeriesSample], subject: u32) -> Result<()> {
    if samples.is_empty() {
        return Err(StcError::Data(format!("subject {subject} has no windows")));
    }
    let mut seen = [false; N_CLASSES];
    for s in samples {
        match s.label {
            Some(l) => seen[l] = true,
            None => return Err(StcError::Data(format!("subject {subject} has unlabelled windows"))),
        }
    }
    if let Some(missing) = seen.iter().position(|&s| !s) {
        return Err(StcError::Data(format!(
            "subject {subject} has no windows of class {}",
            super::CLASS_NAMES[missing]
        )));
    }
    Ok(())
}

pub fn make_split(samples: &[TimeSeriesSample], source: u32, target: u32) -> Result<DatasetSplit> {
    if source == target {
        return Err(StcError::InvalidArgument(format!(
            "source and target must differ (both {source})"
        )));
    }
    let src: Vec<&TimeSeriesSample> = samples.iter().filter(|s| s.subject == source).collect();
    let tgt: Vec<&TimeSeriesSample> = samples.iter().filter(|s| s.subject == target).collect();
    check_subject(&src, source)?;
    check_subject(&tgt, target)?;
    let probe_train: Vec<TimeSeriesSample> = src.into_iter().cloned().collect();
    let pretrain = probe_train
        .iter()
        .map(|s| TimeSeriesSample {
            label: None,
            ..s.clone()
        })
        .collect();
    Ok(DatasetSplit {
        source,
        target,
        pretrain,
        probe_train,
        test: tgt.into_iter().cloned().collect(),
    })
}
