//! Window cache as CSV.
//!
//! ```text
//! # channels=9
//! # length=256
//! # <any other key=value metadata>
//! subject,label,c0t0,c0t1,...
//! 1,0,0.12,0.15,...
//! ```
//!
//! Values are channel-major. An empty label field means unlabelled.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use super::TimeSeriesSample;
use crate::error::{Result, StcError};
use crate::nn::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetCsv {
    pub channels: usize,
    pub length: usize,
    /// Extra `key=value` comment lines, in file order.
    pub metadata: Vec<(String, String)>,
    pub samples: Vec<TimeSeriesSample>,
}

pub fn write_dataset_csv<W: Write>(mut out: W, samples: &[TimeSeriesSample], metadata: &[(String, String)]) -> std::io::Result<()> {
    let (k, l) = samples.first().map_or((0, 0), |s| (s.channels(), s.len()));
    writeln!(out, "# channels={k}")?;
    writeln!(out, "# length={l}")?;
    for (key, value) in metadata {
        writeln!(out, "# {key}={value}")?;
    }
    let mut header = String::from("subject,label");
    for c in 0..k {
        for t in 0..l {
            write!(header, ",c{c}t{t}").unwrap();
        }
    }
    writeln!(out, "{header}")?;
    let mut line = String::new();
    for s in samples {
        line.clear();
        write!(line, "{},", s.subject).unwrap();
        if let Some(label) = s.label {
            write!(line, "{label}").unwrap();
        }
        for v in s.values().data() {
            write!(line, ",{v}").unwrap();
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn read_dataset_csv<R: BufRead>(reader: R) -> Result<DatasetCsv> {
    let mut channels = None;
    let mut length = None;
    let mut metadata = Vec::new();
    let mut header_seen = false;
    let mut samples = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| StcError::parse(lineno, e.to_string()))?;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if header_seen {
                continue;
            }
            let Some((key, value)) = comment.trim().split_once('=') else {
                continue;
            };
            let (key, value) = (key.trim(), value.trim());
            let parse_dim = || {
                value
                    .parse::<usize>()
                    .map_err(|_| StcError::parse(lineno, format!("bad {key} {value:?}")))
            };
            match key {
                "channels" => channels = Some(parse_dim()?),
                "length" => length = Some(parse_dim()?),
                _ => metadata.push((key.to_string(), value.to_string())),
            }
            continue;
        }
        let (k, l) = match (channels, length) {
            (Some(k), Some(l)) => (k, l),
            _ => return Err(StcError::parse(lineno, "missing `# channels=` / `# length=` metadata")),
        };
        if !header_seen {
            if !line.starts_with("subject,label") {
                return Err(StcError::parse(lineno, "expected `subject,label,...` header"));
            }
            header_seen = true;
            continue;
        }
        let width = k
            .checked_mul(l)
            .filter(|&w| w > 0 && w < (1 << 28))
            .ok_or_else(|| StcError::parse(lineno, format!("unusable shape {k}x{l}")))?;
        let mut fields = line.split(',');
        let subject = fields
            .next()
            .and_then(|f| f.trim().parse::<u32>().ok())
            .ok_or_else(|| StcError::parse(lineno, "bad subject id"))?;
        let label = match fields.next().map(str::trim) {
            Some("") => None,
            Some(f) => Some(
                f.parse::<usize>()
                    .map_err(|_| StcError::parse(lineno, format!("bad label {f:?}")))?,
            ),
            None => return Err(StcError::parse(lineno, "missing label field")),
        };
        let mut data = Vec::with_capacity(width);
        for f in fields {
            let v: f64 = f
                .trim()
                .parse()
                .map_err(|_| StcError::parse(lineno, format!("bad value {f:?}")))?;
            data.push(v);
        }
        if data.len() != width {
            return Err(StcError::parse(
                lineno,
                format!("expected {width} values, found {}", data.len()),
            ));
        }
        let values = Matrix::new(k, l, data).map_err(|e| StcError::parse(lineno, e.to_string()))?;
        let sample = TimeSeriesSample::new(values, subject, label).map_err(|e| StcError::parse(lineno, e.to_string()))?;
        samples.push(sample);
    }
    Ok(DatasetCsv {
        channels: channels.unwrap_or(0),
        length: length.unwrap_or(0),
        metadata,
        samples,
    })
}
