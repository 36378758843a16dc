//! Bag-of-symbols representation.
//!
//! Each channel is cut into `n` regions: `n - 2` equal-width bins spanning
//! `mean ± 3σ` plus one open region below and one above. A window becomes the
//! per-channel histogram of its symbols (time order discarded), concatenated
//! over channels and z-scored within the sample.

use std::fmt::Write as _;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::data::TimeSeriesSample;
use crate::error::{Result, StcError};

/// Number of symbols used for PAMAP2 experiments.
pub const DEFAULT_N_SYMBOLS: usize = 64;

/// Per-channel mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub mean: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl ChannelStats {
    pub fn new(mean: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        if mean.is_empty() || mean.len() != sigma.len() {
            return Err(StcError::Shape(format!(
                "{} means and {} sigmas",
                mean.len(),
                sigma.len()
            )));
        }
        for (k, (m, s)) in mean.iter().zip(&sigma).enumerate() {
            if !m.is_finite() || !s.is_finite() || *s < 0.0 {
                return Err(StcError::InvalidArgument(format!(
                    "channel {k}: mean {m}, sigma {s}"
                )));
            }
        }
        Ok(Self { mean, sigma })
    }

    pub fn channels(&self) -> usize {
        self.mean.len()
    }

    /// CSV text with header `channel,mean,sigma`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("channel,mean,sigma\n");
        for (k, (m, s)) in self.mean.iter().zip(&self.sigma).enumerate() {
            writeln!(out, "{k},{m:?},{s:?}").unwrap();
        }
        out
    }

    /// Parses the format written by [`ChannelStats::to_csv`]. Lines starting
    /// with `#` are ignored.
    pub fn from_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut mean = Vec::new();
        let mut sigma = Vec::new();
        let mut saw_header = false;
        for (i, line) in reader.lines().enumerate() {
            let lineno = i + 1;
            let line = line.map_err(|e| StcError::parse(lineno, e.to_string()))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !saw_header {
                if line != "channel,mean,sigma" {
                    return Err(StcError::parse(lineno, "expected header `channel,mean,sigma`"));
                }
                saw_header = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(StcError::parse(lineno, format!("expected 3 fields, got {}", fields.len())));
            }
            let k: usize = fields[0]
                .parse()
                .map_err(|_| StcError::parse(lineno, "bad channel index"))?;
            if k != mean.len() {
                return Err(StcError::parse(lineno, format!("channel {k} out of order")));
            }
            let parse = |s: &str| s.parse::<f64>().map_err(|_| StcError::parse(lineno, format!("bad number {s:?}")));
            mean.push(parse(fields[1])?);
            sigma.push(parse(fields[2])?);
        }
        Self::new(mean, sigma)
    }
}

/// Per-channel mean and population σ over every time step of every sample.
pub fn fit_channel_stats(dataset: &[TimeSeriesSample]) -> Result<ChannelStats> {
    let first = dataset
        .first()
        .ok_or_else(|| StcError::InvalidArgument("cannot fit channel stats on an empty dataset".into()))?;
    let k = first.channels();
    for (i, s) in dataset.iter().enumerate() {
        if s.channels() != k {
            return Err(StcError::Shape(format!(
                "sample {i} has {} channels, expected {k}",
                s.channels()
            )));
        }
        for c in 0..k {
            if s.channel(c).iter().any(|v| !v.is_finite()) {
                return Err(StcError::NonFinite(format!("sample {i} channel {c}")));
            }
        }
    }
    let mut mean = vec![0.0; k];
    let mut sigma = vec![0.0; k];
    for c in 0..k {
        let count: usize = dataset.iter().map(|s| s.len()).sum();
        let m = dataset.iter().flat_map(|s| s.channel(c)).sum::<f64>() / count as f64;
        let var = dataset
            .iter()
            .flat_map(|s| s.channel(c))
            .map(|v| (v - m) * (v - m))
            .sum::<f64>()
            / count as f64;
        mean[c] = m;
        sigma[c] = var.sqrt();
    }
    ChannelStats::new(mean, sigma)
}

/// Symbol boundaries per channel, strictly increasing, `n_symbols - 1` each.
#[derive(Debug, Clone, PartialEq)]
pub struct CutLines {
    n_symbols: usize,
    boundaries: Vec<Vec<f64>>,
}

impl CutLines {
    pub fn n_symbols(&self) -> usize {
        self.n_symbols
    }

    pub fn channels(&self) -> usize {
        self.boundaries.len()
    }

    pub fn boundaries(&self, channel: usize) -> &[f64] {
        &self.boundaries[channel]
    }

    /// Symbol of `x` on `channel`: the number of boundaries strictly below it,
    /// so a value equal to a boundary takes the lower symbol.
    #[inline]
    pub fn symbol_of(&self, channel: usize, x: f64) -> usize {
        self.boundaries[channel].partition_point(|&b| b < x)
    }
}

/// Boundaries `mean + (-3σ + 6σ/(n-2)·j)` for `j = 0..=n-2`.
pub fn make_cutlines(stats: &ChannelStats, n_symbols: usize) -> Result<CutLines> {
    if n_symbols < 3 {
        return Err(StcError::InvalidArgument(format!(
            "need at least 3 symbols, got {n_symbols}"
        )));
    }
    let gaps = (n_symbols - 2) as f64;
    let mut boundaries = Vec::with_capacity(stats.channels());
    for (k, (&m, &s)) in stats.mean.iter().zip(&stats.sigma).enumerate() {
        if !s.is_finite() {
            return Err(StcError::NonFinite(format!("sigma of channel {k}")));
        }
        if s == 0.0 {
            return Err(StcError::InvalidArgument(format!(
                "channel {k} has zero variance; drop or jitter it before symbolization"
            )));
        }
        let b: Vec<f64> = (0..n_symbols - 1)
            .map(|j| m + (-3.0 * s + 6.0 * s / gaps * j as f64))
            .collect();
        if b.iter().any(|x| !x.is_finite()) {
            return Err(StcError::NonFinite(format!("channel {k}: boundaries overflow for mean {m}, sigma {s}")));
        }
        if b.windows(2).any(|w| w[0] >= w[1]) {
            return Err(StcError::Numerical(format!(
                "channel {k}: sigma {s} too small for distinct boundaries"
            )));
        }
        boundaries.push(b);
    }
    Ok(CutLines {
        n_symbols,
        boundaries,
    })
}

/// Symbol indices, `channels × length`, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolSeries {
    n_symbols: usize,
    channels: usize,
    length: usize,
    symbols: Vec<usize>,
}

impl SymbolSeries {
    pub fn new(n_symbols: usize, channels: usize, length: usize, symbols: Vec<usize>) -> Result<Self> {
        if channels == 0 || length == 0 {
            return Err(StcError::Shape(format!(
                "symbol series needs positive shape, got {channels}x{length}"
            )));
        }
        if symbols.len() != channels * length {
            return Err(StcError::Shape("symbol count does not match shape".into()));
        }
        if let Some(s) = symbols.iter().find(|&&s| s >= n_symbols) {
            return Err(StcError::InvalidArgument(format!(
                "symbol {s} outside [0, {n_symbols})"
            )));
        }
        Ok(Self {
            n_symbols,
            channels,
            length,
            symbols,
        })
    }

    pub fn n_symbols(&self) -> usize {
        self.n_symbols
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn len(&self) -> usize {
        self.length
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn channel(&self, k: usize) -> &[usize] {
        &self.symbols[k * self.length..(k + 1) * self.length]
    }
}

/// Per-channel symbol histogram (`channels × n_symbols`, row-major) and its
/// per-sample z-scored form.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolVector {
    channels: usize,
    n_symbols: usize,
    counts: Vec<u32>,
    normalized: Option<Vec<f64>>,
}

impl SymbolVector {
    pub fn from_counts(channels: usize, n_symbols: usize, counts: Vec<u32>) -> Result<Self> {
        if channels == 0 || n_symbols == 0 || counts.len() != channels * n_symbols {
            return Err(StcError::Shape(format!(
                "{} counts for {channels} channels × {n_symbols} symbols",
                counts.len()
            )));
        }
        Ok(Self {
            channels,
            n_symbols,
            counts,
            normalized: None,
        })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn n_symbols(&self) -> usize {
        self.n_symbols
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn channel_counts(&self, k: usize) -> &[u32] {
        &self.counts[k * self.n_symbols..(k + 1) * self.n_symbols]
    }

    pub(crate) fn counts_mut(&mut self) -> &mut [u32] {
        self.normalized = None;
        &mut self.counts
    }

    /// Flat z-scored vector of length `channels · n_symbols`, if computed.
    pub fn normalized(&self) -> Option<&[f64]> {
        self.normalized.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }
}

/// Symbol index for every entry of `sample`.
pub fn discretize(sample: &TimeSeriesSample, cuts: &CutLines) -> Result<SymbolSeries> {
    if sample.channels() != cuts.channels() {
        return Err(StcError::Shape(format!(
            "sample has {} channels, cutlines have {}",
            sample.channels(),
            cuts.channels()
        )));
    }
    let mut symbols = Vec::with_capacity(sample.channels() * sample.len());
    for k in 0..sample.channels() {
        for (t, &x) in sample.channel(k).iter().enumerate() {
            if !x.is_finite() {
                return Err(StcError::NonFinite(format!("channel {k} step {t}")));
            }
            symbols.push(cuts.symbol_of(k, x));
        }
    }
    SymbolSeries::new(cuts.n_symbols(), sample.channels(), sample.len(), symbols)
}

/// Order-free per-channel tally of a symbol series.
pub fn count_symbols(series: &SymbolSeries) -> SymbolVector {
    let n = series.n_symbols();
    let mut counts = vec![0u32; series.channels() * n];
    for k in 0..series.channels() {
        for &s in series.channel(k) {
            counts[k * n + s] += 1;
        }
    }
    SymbolVector::from_counts(series.channels(), n, counts).expect("shape follows series")
}

/// Z-scores a count vector: `(c - mean) / popstd`, zeros if all counts are equal.
pub fn zscore_counts(counts: &[u32]) -> Vec<f64> {
    let n = counts.len() as f64;
    if counts.windows(2).all(|w| w[0] == w[1]) {
        return vec![0.0; counts.len()];
    }
    let mean = counts.iter().map(|&c| c as f64).sum::<f64>() / n;
    let var = counts
        .iter()
        .map(|&c| (c as f64 - mean).powi(2))
        .sum::<f64>()
        / n;
    let sd = var.sqrt();
    counts.iter().map(|&c| (c as f64 - mean) / sd).collect()
}

/// Fills the normalized form over the flattened `channels · n_symbols` counts.
pub fn normalize_histogram(mut vec: SymbolVector) -> SymbolVector {
    vec.normalized = Some(zscore_counts(&vec.counts));
    vec
}

/// discretize → count → normalize.
pub fn symbolize(sample: &TimeSeriesSample, cuts: &CutLines) -> Result<SymbolVector> {
    Ok(normalize_histogram(count_symbols(&discretize(sample, cuts)?)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Matrix;

    fn sample(rows: &[&[f64]]) -> TimeSeriesSample {
        TimeSeriesSample::new(Matrix::from_rows(rows).unwrap(), 1, None).unwrap()
    }

    fn stats1(mean: f64, sigma: f64) -> ChannelStats {
        ChannelStats::new(vec![mean], vec![sigma]).unwrap()
    }

    #[test]
    fn constant_signal_has_zero_sigma() {
        let s = fit_channel_stats(&[sample(&[&[1.0, 1.0, 1.0, 1.0]])]).unwrap();
        assert_eq!((s.mean[0], s.sigma[0]), (1.0, 0.0));
    }

    #[test]
    fn two_point_population_std() {
        let s = fit_channel_stats(&[sample(&[&[0.0, 2.0]])]).unwrap();
        assert_eq!((s.mean[0], s.sigma[0]), (1.0, 1.0));
    }

    #[test]
    fn stats_fit_errors() {
        assert!(fit_channel_stats(&[]).is_err());
        let a = sample(&[&[0.0, 1.0]]);
        let b = sample(&[&[0.0, 1.0], &[2.0, 3.0]]);
        assert!(fit_channel_stats(&[a, b]).is_err());
    }

    #[test]
    fn cutlines_formula() {
        let c = make_cutlines(&stats1(0.0, 1.0), 4).unwrap();
        assert_eq!(c.boundaries(0), &[-3.0, 0.0, 3.0]);
        let c = make_cutlines(&stats1(5.0, 1.0), 4).unwrap();
        assert_eq!(c.boundaries(0), &[2.0, 5.0, 8.0]);
        let c = make_cutlines(&stats1(0.0, 1.0), 64).unwrap();
        let b = c.boundaries(0);
        assert_eq!(b.len(), 63);
        assert!((b[1] - b[0] - 6.0 / 62.0).abs() < 1e-12);
        assert!((b[1] - b[0] - 0.09677).abs() < 1e-5);
        assert_eq!(b[0], -3.0);
        assert!((b[62] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn cutline_errors() {
        assert!(make_cutlines(&stats1(0.0, 1.0), 2).is_err());
        assert!(make_cutlines(&stats1(0.0, 0.0), 8).is_err());
    }

    #[test]
    fn discretize_bins_and_ties() {
        let cuts = make_cutlines(&stats1(0.0, 1.0), 4).unwrap();
        let s = discretize(&sample(&[&[-5.0, 0.5, 10.0]]), &cuts).unwrap();
        assert_eq!(s.channel(0), &[0, 2, 3]);
        let s = discretize(&sample(&[&[0.0, -3.0, 3.0]]), &cuts).unwrap();
        assert_eq!(s.channel(0), &[1, 0, 2]);
        let s = discretize(&sample(&[&[0.2; 6]]), &cuts).unwrap();
        assert!(s.channel(0).iter().all(|&v| v == s.channel(0)[0]));
    }

    #[test]
    fn discretize_channel_mismatch() {
        let cuts = make_cutlines(&stats1(0.0, 1.0), 4).unwrap();
        assert!(discretize(&sample(&[&[0.0], &[1.0]]), &cuts).is_err());
    }

    #[test]
    fn counting_is_order_free() {
        let a = SymbolSeries::new(4, 1, 4, vec![0, 2, 3, 2]).unwrap();
        let b = SymbolSeries::new(4, 1, 4, vec![2, 3, 0, 2]).unwrap();
        assert_eq!(count_symbols(&a).counts(), &[1, 0, 2, 1]);
        assert_eq!(count_symbols(&a), count_symbols(&b));
        assert!(SymbolSeries::new(4, 1, 0, vec![]).is_err());
        assert!(SymbolSeries::new(4, 1, 1, vec![4]).is_err());
    }

    #[test]
    fn normalization_examples() {
        let v = normalize_histogram(SymbolVector::from_counts(1, 4, vec![1, 0, 2, 1]).unwrap());
        let expected = [0.0, -std::f64::consts::SQRT_2, std::f64::consts::SQRT_2, 0.0];
        for (a, b) in v.normalized().unwrap().iter().zip(expected) {
            assert!((a - b).abs() < 1e-4);
        }
        let v = normalize_histogram(SymbolVector::from_counts(1, 4, vec![3; 4]).unwrap());
        assert_eq!(v.normalized().unwrap(), &[0.0; 4]);
    }

    #[test]
    fn scaled_counts_match_recomputation() {
        let base = [4u32, 1, 0, 7, 2, 2];
        let doubled: Vec<u32> = base.iter().map(|c| 2 * c).collect();
        let brute = |c: &[u32]| -> Vec<f64> {
            let xs: Vec<f64> = c.iter().map(|&v| v as f64).collect();
            let m = xs.iter().sum::<f64>() / xs.len() as f64;
            let sd = (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64).sqrt();
            xs.iter().map(|x| (x - m) / sd).collect()
        };
        for c in [&base[..], &doubled[..]] {
            for (a, b) in zscore_counts(c).iter().zip(brute(c)) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        // z-scoring is scale-free
        for (a, b) in zscore_counts(&base).iter().zip(zscore_counts(&doubled)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn end_to_end_symbolize() {
        let cuts = make_cutlines(&stats1(0.0, 1.0), 4).unwrap();
        let v = symbolize(&sample(&[&[-5.0, 0.5, 10.0, 1.0]]), &cuts).unwrap();
        assert_eq!(v.counts(), &[1, 0, 2, 1]);
        assert!((v.normalized().unwrap()[2] - std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn stats_csv_round_trip() {
        let s = ChannelStats::new(vec![0.1, -2.5], vec![1.0 / 3.0, 7.0]).unwrap();
        let back = ChannelStats::from_csv(s.to_csv().as_bytes()).unwrap();
        assert_eq!(s, back);
        assert!(ChannelStats::from_csv("channel,mean,sigma\n0,1,-1\n".as_bytes()).is_err());
        assert!(ChannelStats::from_csv("nope\n".as_bytes()).is_err());
    }
}
