use super::pamap2::{LabeledSegment, SubjectRecording};
use super::TimeSeriesSample;
use crate::error::{Result, StcError};
use crate::nn::Matrix;

/// Slides a `length`-step window with `stride` over one single-label segment.
/// Yields `floor((T - length) / stride) + 1` windows when `T ≥ length`.
pub fn window(segment: &LabeledSegment, subject: u32, length: usize, stride: usize) -> Result<Vec<TimeSeriesSample>> {
    if length == 0 || stride == 0 {
        return Err(StcError::InvalidArgument("window length and stride must be positive".into()));
    }
    let (k, steps) = segment.values.shape();
    if steps < length {
        return Ok(Vec::new());
    }
    let count = (steps - length) / stride + 1;
    (0..count)
        .map(|w| {
            let start = w * stride;
            let mut data = Vec::with_capacity(k * length);
            for c in 0..k {
                data.extend_from_slice(&segment.values.row(c)[start..start + length]);
            }
            TimeSeriesSample::new(Matrix::new(k, length, data)?, subject, Some(segment.label))
        })
        .collect()
}

/// Windows every segment of a recording; windows never cross segments.
pub fn window_recording(rec: &SubjectRecording, length: usize, stride: usize) -> Result<Vec<TimeSeriesSample>> {
    let mut out = Vec::new();
    for seg in &rec.segments {
        out.extend(window(seg, rec.subject, length, stride)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(steps: usize) -> LabeledSegment {
        LabeledSegment {
            label: 1,
            values: Matrix::new(2, steps, (0..2 * steps).map(|v| v as f64).collect()).unwrap(),
        }
    }

    #[test]
    fn window_counts() {
        assert_eq!(window(&seg(9000), 1, 256, 128).unwrap().len(), 69);
        assert_eq!(window(&seg(256), 1, 256, 128).unwrap().len(), 1);
        assert_eq!(window(&seg(255), 1, 256, 128).unwrap().len(), 0);
        assert!(window(&seg(10), 1, 0, 1).is_err());
    }

    #[test]
    fn window_contents_and_labels() {
        let w = window(&seg(10), 7, 4, 3).unwrap();
        assert_eq!(w.len(), 3);
        assert_eq!(w[1].channel(0), &[3.0, 4.0, 5.0, 6.0]);
        assert_eq!(w[1].channel(1), &[13.0, 14.0, 15.0, 16.0]);
        assert!(w.iter().all(|s| s.label == Some(1) && s.subject == 7));
    }

    #[test]
    fn windows_never_straddle_segments() {
        let rec = SubjectRecording {
            subject: 2,
            segments: vec![
                seg(5),
                LabeledSegment {
                    label: 2,
                    values: Matrix::zeros(2, 5),
                },
            ],
        };
        let w = window_recording(&rec, 4, 1).unwrap();
        assert_eq!(w.len(), 4);
        assert_eq!(w.iter().filter(|s| s.label == Some(2)).count(), 2);
    }
}
