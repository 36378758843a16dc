//! Linear-probe evaluation, cross-subject benchmark and supervised baselines.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{make_split, DatasetSplit, TimeSeriesSample};
use crate::error::{Result, StcError};
use crate::model::time_input;
use crate::nn::logistic::{argmax, softmax_rows};
use crate::nn::{mlp_backward, mlp_forward, mlp_infer, train_logistic, AdamState, LogisticConfig, Matrix, MlpParams};
use crate::symbolize::fit_channel_stats;
use crate::trainer::{pretrain_samples, Pretrained, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ProbeMode {
    /// Time-view projection only.
    ZtOnly,
    /// Time and symbol projections concatenated.
    ZtPlusZs,
}

impl fmt::Display for ProbeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::ZtOnly => "zt",
            Self::ZtPlusZs => "zt-zs",
        })
    }
}

impl FromStr for ProbeMode {
    type Err = StcError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zt" => Ok(Self::ZtOnly),
            "zt-zs" | "zt+zs" => Ok(Self::ZtPlusZs),
            other => Err(StcError::InvalidArgument(format!("unknown probe mode {other:?} (zt | zt-zs)"))),
        }
    }
}

/// Which subject's labelled windows train the probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ProbeOn {
    /// Fit on source windows, test on all target windows.
    #[default]
    Source,
    /// Fit on even-indexed target windows, test on odd-indexed ones.
    Target,
}

impl FromStr for ProbeOn {
    type Err = StcError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "source" => Ok(Self::Source),
            "target" => Ok(Self::Target),
            other => Err(StcError::InvalidArgument(format!("unknown probe target {other:?} (source | target)"))),
        }
    }
}

impl fmt::Display for ProbeOn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Source => "source",
            Self::Target => "target",
        })
    }
}

fn labels_of(samples: &[TimeSeriesSample]) -> Result<Vec<usize>> {
    samples
        .iter()
        .map(|s| s.label.ok_or_else(|| StcError::Data("evaluation window without a label".into())))
        .collect()
}

/// Frozen-model features for `samples`.
pub fn probe_features(model: &Pretrained, samples: &[TimeSeriesSample], mode: ProbeMode) -> Result<Matrix> {
    let zt = model.time_features(samples)?;
    match mode {
        ProbeMode::ZtOnly => Ok(zt),
        ProbeMode::ZtPlusZs => Matrix::hstack(&[&zt, &model.symbol_features(samples)?]),
    }
}

fn probe_sets(split: &DatasetSplit, on: ProbeOn) -> (Vec<TimeSeriesSample>, Vec<TimeSeriesSample>) {
    match on {
        ProbeOn::Source => (split.probe_train.clone(), split.test.clone()),
        ProbeOn::Target => {
            let (even, odd): (Vec<_>, Vec<_>) = split.test.iter().cloned().enumerate().partition(|(i, _)| i % 2 == 0);
            (even.into_iter().map(|x| x.1).collect(), odd.into_iter().map(|x| x.1).collect())
        }
    }
}

/// Linear-probe accuracy of a frozen model on the split.
pub fn probe(model: &Pretrained, split: &DatasetSplit, mode: ProbeMode, cfg: &LogisticConfig, on: ProbeOn) -> Result<f64> {
    let (train, test) = probe_sets(split, on);
    let clf = train_logistic(&probe_features(model, &train, mode)?, &labels_of(&train)?, cfg)?;
    clf.accuracy(&probe_features(model, &test, mode)?, &labels_of(&test)?)
}

fn raw_features(samples: &[TimeSeriesSample], reference: &[TimeSeriesSample]) -> Result<Matrix> {
    let stats = fit_channel_stats(reference)?;
    let refs: Vec<&TimeSeriesSample> = samples.iter().collect();
    time_input(&refs, &stats)
}

/// Logistic regression on raw flattened windows.
pub fn baseline_lr(split: &DatasetSplit, cfg: &LogisticConfig) -> Result<f64> {
    let clf = train_logistic(
        &raw_features(&split.probe_train, &split.probe_train)?,
        &labels_of(&split.probe_train)?,
        cfg,
    )?;
    clf.accuracy(&raw_features(&split.test, &split.probe_train)?, &labels_of(&split.test)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpBaselineConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for MlpBaselineConfig {
    fn default() -> Self {
        Self {
            hidden: vec![128, 64],
            epochs: 100,
            lr: crate::nn::adam::DEFAULT_LR,
            batch_size: 64,
            seed: 0,
        }
    }
}

/// Supervised MLP on raw flattened windows, trained from scratch.
pub fn baseline_mlp(split: &DatasetSplit, cfg: &MlpBaselineConfig) -> Result<f64> {
    let x = raw_features(&split.probe_train, &split.probe_train)?;
    let y = labels_of(&split.probe_train)?;
    let n_classes = y.iter().max().map_or(0, |m| m + 1).max(2);
    let mut sizes = vec![x.cols()];
    sizes.extend(&cfg.hidden);
    sizes.push(n_classes);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut net = MlpParams::relu_mlp(&sizes, &mut rng)?;
    let mut adam = AdamState::new(&net, cfg.lr);
    let batch = cfg.batch_size.clamp(1, x.rows());
    let mut order: Vec<usize> = (0..x.rows()).collect();
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for idx in order.chunks(batch) {
            let xb = x.select_rows(idx)?;
            let acts = mlp_forward(&net, &xb)?;
            let mut delta = acts.output().clone();
            softmax_rows(&mut delta);
            let scale = 1.0 / idx.len() as f64;
            for (r, &i) in idx.iter().enumerate() {
                let row = delta.row_mut(r);
                row[y[i]] -= 1.0;
                row.iter_mut().for_each(|v| *v *= scale);
            }
            let (grads, _) = mlp_backward(&net, &acts, &delta)?;
            adam.update(&mut net, &grads)?;
        }
    }
    let test_x = raw_features(&split.test, &split.probe_train)?;
    let test_y = labels_of(&split.test)?;
    let logits = mlp_infer(&net, &test_x)?;
    let hits = (0..logits.rows()).filter(|&r| argmax(logits.row(r)) == test_y[r]).count();
    Ok(hits as f64 / test_y.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Stc,
    Mlp,
    Lr,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Stc => "stc",
            Self::Mlp => "mlp",
            Self::Lr => "lr",
        })
    }
}

impl FromStr for Method {
    type Err = StcError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stc" => Ok(Self::Stc),
            "mlp" => Ok(Self::Mlp),
            "lr" => Ok(Self::Lr),
            other => Err(StcError::InvalidArgument(format!("unknown method {other:?}"))),
        }
    }
}

/// Column of the benchmark: a method and, for the probe, its feature mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Column {
    pub method: Method,
    pub mode: Option<ProbeMode>,
}

impl fmt::Display for Column {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.mode {
            Some(m) => write!(f, "{}:{m}", self.method),
            None => write!(f, "{}", self.method),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchmarkRow {
    pub source: u32,
    pub target: u32,
    pub column: Column,
    pub accuracy: f64,
}

/// Source × target accuracies per column.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchmarkMatrix {
    pub rows: Vec<BenchmarkRow>,
}

impl BenchmarkMatrix {
    pub fn columns(&self) -> Vec<Column> {
        let mut cols: Vec<Column> = self.rows.iter().map(|r| r.column).collect();
        cols.sort();
        cols.dedup();
        cols
    }

    pub fn pairs(&self) -> Vec<(u32, u32)> {
        let mut seen = Vec::new();
        for r in &self.rows {
            if !seen.contains(&(r.source, r.target)) {
                seen.push((r.source, r.target));
            }
        }
        seen
    }

    pub fn accuracy(&self, source: u32, target: u32, column: Column) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.source == source && r.target == target && r.column == column)
            .map(|r| r.accuracy)
    }

    /// Arithmetic mean over the pairs of one column.
    pub fn average(&self, column: Column) -> Option<f64> {
        let v: Vec<f64> = self.rows.iter().filter(|r| r.column == column).map(|r| r.accuracy).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    /// CSV `source,target,method,mode,accuracy`, one average row per column.
    pub fn to_csv(&self, metadata: &[(String, String)]) -> Result<String> {
        if self.rows.is_empty() {
            return Err(StcError::InvalidArgument("benchmark matrix is empty".into()));
        }
        let mut out = String::new();
        for (k, v) in metadata {
            writeln!(out, "# {k}={v}").unwrap();
        }
        out.push_str("source,target,method,mode,accuracy\n");
        let mode_str = |c: &Column| c.mode.map_or_else(|| "raw".to_string(), |m| m.to_string());
        for r in &self.rows {
            writeln!(out, "{},{},{},{},{:?}", r.source, r.target, r.column.method, mode_str(&r.column), r.accuracy).unwrap();
        }
        for c in self.columns() {
            writeln!(out, "average,average,{},{},{:?}", c.method, mode_str(&c), self.average(c).unwrap()).unwrap();
        }
        Ok(out)
    }

    /// Parses [`BenchmarkMatrix::to_csv`] output; average rows must match the data.
    pub fn from_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut rows = Vec::new();
        let mut averages = Vec::new();
        let mut header = false;
        for (i, line) in reader.lines().enumerate() {
            let lineno = i + 1;
            let line = line.map_err(|e| StcError::parse(lineno, e.to_string()))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !header {
                if line != "source,target,method,mode,accuracy" {
                    return Err(StcError::parse(lineno, "expected `source,target,method,mode,accuracy` header"));
                }
                header = true;
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(StcError::parse(lineno, format!("expected 5 fields, got {}", f.len())));
            }
            let method: Method = f[2].parse().map_err(|e: StcError| StcError::parse(lineno, e.to_string()))?;
            let mode = match f[3] {
                "raw" => None,
                m => Some(m.parse::<ProbeMode>().map_err(|e| StcError::parse(lineno, e.to_string()))?),
            };
            let accuracy: f64 = f[4]
                .parse()
                .map_err(|_| StcError::parse(lineno, format!("bad accuracy {:?}", f[4])))?;
            if !(0.0..=1.0).contains(&accuracy) {
                return Err(StcError::parse(lineno, format!("accuracy {accuracy} outside [0, 1]")));
            }
            let column = Column { method, mode };
            if f[0] == "average" {
                averages.push((lineno, column, accuracy));
                continue;
            }
            let parse_id = |s: &str| s.parse::<u32>().map_err(|_| StcError::parse(lineno, format!("bad subject {s:?}")));
            rows.push(BenchmarkRow {
                source: parse_id(f[0])?,
                target: parse_id(f[1])?,
                column,
                accuracy,
            });
        }
        let m = BenchmarkMatrix { rows };
        for (lineno, column, avg) in averages {
            match m.average(column) {
                Some(a) if (a - avg).abs() <= 1e-12 => {}
                _ => return Err(StcError::parse(lineno, format!("average for {column} does not match rows"))),
            }
        }
        Ok(m)
    }

    /// Aligned text table with one column per method/mode and a `best` column.
    pub fn to_table(&self) -> String {
        let cols = self.columns();
        let mut out = String::new();
        write!(out, "{:>8} {:>8}", "source", "target").unwrap();
        for c in &cols {
            write!(out, " {:>10}", c.to_string()).unwrap();
        }
        writeln!(out, " {:>10}", "best").unwrap();
        let best_of = |vals: &[Option<f64>]| -> String {
            let mut best: Option<(usize, f64)> = None;
            for (i, v) in vals.iter().enumerate() {
                if let Some(v) = v {
                    if best.is_none_or(|(_, b)| *v > b) {
                        best = Some((i, *v));
                    }
                }
            }
            best.map_or_else(|| "-".into(), |(i, _)| cols[i].to_string())
        };
        for (s, t) in self.pairs() {
            write!(out, "{s:>8} {t:>8}").unwrap();
            let vals: Vec<Option<f64>> = cols.iter().map(|&c| self.accuracy(s, t, c)).collect();
            for v in &vals {
                match v {
                    Some(v) => write!(out, " {v:>10.3}").unwrap(),
                    None => write!(out, " {:>10}", "-").unwrap(),
                }
            }
            writeln!(out, " {:>10}", best_of(&vals)).unwrap();
        }
        write!(out, "{:>17}", "average").unwrap();
        let avgs: Vec<Option<f64>> = cols.iter().map(|&c| self.average(c)).collect();
        for v in &avgs {
            write!(out, " {:>10.3}", v.unwrap_or(f64::NAN)).unwrap();
        }
        writeln!(out, " {:>10}", best_of(&avgs)).unwrap();
        out
    }
}

/// Writes `path` as CSV and a sibling `.txt` aligned table.
pub fn report(matrix: &BenchmarkMatrix, path: &Path, metadata: &[(String, String)]) -> Result<()> {
    let csv = matrix.to_csv(metadata)?;
    std::fs::write(path, csv).map_err(|e| StcError::io(path, e))?;
    let table_path = path.with_extension("txt");
    let mut table = String::new();
    for (k, v) in metadata {
        writeln!(table, "# {k}={v}").unwrap();
    }
    table.push_str(&matrix.to_table());
    std::fs::write(&table_path, table).map_err(|e| StcError::io(&table_path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    pub train: TrainConfig,
    pub probe: LogisticConfig,
    pub modes: Vec<ProbeMode>,
    pub probe_on: ProbeOn,
    pub baselines: bool,
    pub mlp: MlpBaselineConfig,
    /// Worker threads; 1 runs everything on the calling thread.
    pub jobs: usize,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            probe: LogisticConfig::default(),
            modes: vec![ProbeMode::ZtOnly],
            probe_on: ProbeOn::Source,
            baselines: false,
            mlp: MlpBaselineConfig::default(),
            jobs: 1,
        }
    }
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| StcError::InvalidArgument(format!("thread pool: {e}")))
}

/// Every ordered pair `(i, j)`, `i ≠ j`: pretrain on `i`, probe on `j`.
///
/// A source's pretraining depends only on its own windows and the seed, so it
/// runs once per source and is shared by all of that source's targets.
pub fn pairwise_benchmark(samples: &[TimeSeriesSample], subjects: &[u32], cfg: &BenchmarkConfig) -> Result<BenchmarkMatrix> {
    if subjects.len() < 2 {
        return Err(StcError::InvalidArgument("benchmark needs at least two subjects".into()));
    }
    let mut uniq = subjects.to_vec();
    uniq.sort_unstable();
    uniq.dedup();
    if uniq.len() != subjects.len() {
        return Err(StcError::InvalidArgument("duplicate subject ids".into()));
    }
    let pairs: Vec<(u32, u32)> = subjects
        .iter()
        .flat_map(|&s| subjects.iter().filter(move |&&t| t != s).map(move |&t| (s, t)))
        .collect();
    let splits: BTreeMap<(u32, u32), DatasetSplit> = pairs
        .iter()
        .map(|&(s, t)| make_split(samples, s, t).map(|sp| ((s, t), sp)))
        .collect::<Result<_>>()?;

    let workers = pool(cfg.jobs)?;
    let models: BTreeMap<u32, Pretrained> = workers.install(|| {
        subjects
            .par_iter()
            .map(|&s| {
                let split = &splits[&(s, pairs.iter().find(|p| p.0 == s).unwrap().1)];
                pretrain_samples(&split.pretrain, &cfg.train).map(|(m, _)| (s, m))
            })
            .collect::<Result<_>>()
    })?;

    let per_pair: Vec<Vec<BenchmarkRow>> = workers.install(|| {
        pairs
            .par_iter()
            .map(|&(s, t)| {
                let split = &splits[&(s, t)];
                let mut rows = Vec::new();
                for &mode in &cfg.modes {
                    let accuracy = probe(&models[&s], split, mode, &cfg.probe, cfg.probe_on)?;
                    rows.push(BenchmarkRow {
                        source: s,
                        target: t,
                        column: Column {
                            method: Method::Stc,
                            mode: Some(mode),
                        },
                        accuracy,
                    });
                }
                if cfg.baselines {
                    for (method, accuracy) in [
                        (Method::Mlp, baseline_mlp(split, &cfg.mlp)?),
                        (Method::Lr, baseline_lr(split, &cfg.probe)?),
                    ] {
                        rows.push(BenchmarkRow {
                            source: s,
                            target: t,
                            column: Column { method, mode: None },
                            accuracy,
                        });
                    }
                }
                Ok(rows)
            })
            .collect::<Result<_>>()
    })?;
    Ok(BenchmarkMatrix {
        rows: per_pair.into_iter().flatten().collect(),
    })
}
