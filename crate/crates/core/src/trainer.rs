//! Self-supervised pretraining loop.

use std::fmt::Write as _;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::augment::{jitter, perturb_symbols, AugmentConfig};
use crate::data::{DatasetSplit, TimeSeriesSample};
use crate::error::{Result, StcError};
use crate::losses::{total_loss, LossConfig};
use crate::model::{
    backward_embeddings, embed_symbol, embed_time, forward_embeddings, symbol_input, time_input, Architecture,
    DataDims, StcModel, ViewBatch,
};
use crate::nn::adam::DEFAULT_LR;
use crate::nn::{AdamState, Matrix, PlateauScheduler, PlateauSettings};
use crate::symbolize::{fit_channel_stats, make_cutlines, symbolize, ChannelStats, CutLines, SymbolVector, DEFAULT_N_SYMBOLS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
    pub n_symbols: usize,
    pub arch: Architecture,
    pub loss: LossConfig,
    pub augment: AugmentConfig,
    pub scheduler: PlateauSettings,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 64,
            lr: DEFAULT_LR,
            seed: 0,
            n_symbols: DEFAULT_N_SYMBOLS,
            arch: Architecture::default(),
            loss: LossConfig::default(),
            augment: AugmentConfig::default(),
            scheduler: PlateauSettings::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 2 {
            return Err(StcError::Config(format!(
                "train.batch_size must be at least 2, got {}",
                self.batch_size
            )));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(StcError::Config(format!("train.lr must be > 0, got {}", self.lr)));
        }
        if self.n_symbols < 3 {
            return Err(StcError::Config("data.n_symbols must be at least 3".into()));
        }
        let s = &self.scheduler;
        if !(s.factor > 0.0 && s.factor < 1.0) || !(s.min_lr >= 0.0) {
            return Err(StcError::Config("sched.factor must lie in (0, 1) and sched.min_lr >= 0".into()));
        }
        if self.arch.h_dim == 0 || self.arch.z_dim == 0 {
            return Err(StcError::Config("model.h_dim and model.z_dim must be positive".into()));
        }
        self.loss.validate()?;
        self.augment.validate()
    }
}

/// A trained (or freshly initialised) model with the preprocessing it was fit with.
#[derive(Debug, Clone, PartialEq)]
pub struct Pretrained {
    pub model: StcModel,
    pub stats: ChannelStats,
    pub cutlines: CutLines,
    pub config: TrainConfig,
}

impl Pretrained {
    pub fn new(model: StcModel, stats: ChannelStats, config: TrainConfig) -> Result<Self> {
        if stats.channels() != model.dims.channels || config.n_symbols != model.dims.n_symbols {
            return Err(StcError::Shape("stats/config do not match model dims".into()));
        }
        let cutlines = make_cutlines(&stats, config.n_symbols)?;
        Ok(Self {
            model,
            stats,
            cutlines,
            config,
        })
    }

    /// Fails unless `samples` match the channel count and window length the model was built for.
    pub fn check_samples(&self, samples: &[TimeSeriesSample]) -> Result<()> {
        let d = self.model.dims;
        for s in samples {
            if s.channels() != d.channels || s.len() != d.length {
                return Err(StcError::Shape(format!(
                    "model expects {}x{} windows, data has {}x{}",
                    d.channels,
                    d.length,
                    s.channels(),
                    s.len()
                )));
            }
        }
        Ok(())
    }

    pub fn time_features(&self, samples: &[TimeSeriesSample]) -> Result<Matrix> {
        self.check_samples(samples)?;
        let refs: Vec<&TimeSeriesSample> = samples.iter().collect();
        Ok(embed_time(&self.model, &time_input(&refs, &self.stats)?)?.1)
    }

    pub fn symbol_features(&self, samples: &[TimeSeriesSample]) -> Result<Matrix> {
        self.check_samples(samples)?;
        let vectors = samples
            .iter()
            .map(|s| symbolize(s, &self.cutlines))
            .collect::<Result<Vec<_>>>()?;
        let refs: Vec<&SymbolVector> = vectors.iter().collect();
        Ok(embed_symbol(&self.model, &symbol_input(&refs)?)?.1)
    }
}

/// Epoch means of the loss terms and the learning rate used during the epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub time: f64,
    pub symbol: f64,
    pub consistency: f64,
    pub total: f64,
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    pub wall_seconds: f64,
}

impl TrainReport {
    pub fn lr_trace(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.lr).collect()
    }

    /// `epoch,L_T,L_S,L_TS,total,lr` rows preceded by `# key=value` lines.
    pub fn to_csv(&self, metadata: &[(String, String)]) -> String {
        let mut out = String::new();
        for (k, v) in metadata {
            writeln!(out, "# {k}={v}").unwrap();
        }
        out.push_str("epoch,L_T,L_S,L_TS,total,lr\n");
        for e in &self.epochs {
            writeln!(
                out,
                "{},{:?},{:?},{:?},{:?},{:?}",
                e.epoch, e.time, e.symbol, e.consistency, e.total, e.lr
            )
            .unwrap();
        }
        out
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Model with freshly initialised weights for `samples`, without training.
pub fn initialize(samples: &[TimeSeriesSample], cfg: &TrainConfig) -> Result<Pretrained> {
    cfg.validate()?;
    let stats = fit_channel_stats(samples)?;
    let first = &samples[0];
    let dims = DataDims {
        channels: first.channels(),
        length: first.len(),
        n_symbols: cfg.n_symbols,
    };
    let model = StcModel::new(dims, cfg.arch.clone(), &mut stream(cfg.seed, 0))?;
    Pretrained::new(model, stats, cfg.clone())
}

/// Pretrains on the split's unlabelled source windows.
pub fn pretrain(split: &DatasetSplit, cfg: &TrainConfig) -> Result<(Pretrained, TrainReport)> {
    pretrain_samples(&split.pretrain, cfg)
}

/// Pretrains on `samples`. Channel stats and cutlines are fit on these samples only.
pub fn pretrain_samples(samples: &[TimeSeriesSample], cfg: &TrainConfig) -> Result<(Pretrained, TrainReport)> {
    let started = Instant::now();
    if samples.len() < 2 {
        return Err(StcError::Data(format!(
            "pretraining needs at least 2 windows, got {}",
            samples.len()
        )));
    }
    let mut trained = initialize(samples, cfg)?;
    trained.check_samples(samples)?;

    // Symbol histograms do not depend on augmentation; compute once.
    let histograms = samples
        .iter()
        .map(|s| symbolize(s, &trained.cutlines))
        .collect::<Result<Vec<_>>>()?;
    let sample_refs: Vec<&TimeSeriesSample> = samples.iter().collect();
    let time_all = time_input(&sample_refs, &trained.stats)?;
    let hist_refs: Vec<&SymbolVector> = histograms.iter().collect();
    let symbol_all = symbol_input(&hist_refs)?;

    let batch = cfg.batch_size.min(samples.len());
    let n_batches = samples.len() / batch;
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut shuffle_rng = stream(cfg.seed, 1);
    let mut aug_rng = stream(cfg.augment.seed, 2);
    let mut adam = AdamState::new(&trained.model, cfg.lr);
    let mut sched = PlateauScheduler::new(cfg.scheduler, cfg.lr);
    adam.lr = sched.lr();
    let mut records = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut sums = [0.0f64; 4];
        for b in 0..n_batches {
            let idx = &order[b * batch..(b + 1) * batch];
            let jittered = idx
                .iter()
                .map(|&i| jitter(&samples[i], &trained.stats, &cfg.augment, &mut aug_rng))
                .collect::<Result<Vec<_>>>()?;
            let jittered_refs: Vec<&TimeSeriesSample> = jittered.iter().collect();
            let perturbed = idx
                .iter()
                .map(|&i| perturb_symbols(&histograms[i], &cfg.augment, &mut aug_rng))
                .collect::<Result<Vec<_>>>()?;
            let perturbed_refs: Vec<&SymbolVector> = perturbed.iter().collect();
            let views = ViewBatch {
                time: time_all.select_rows(idx)?,
                time_aug: time_input(&jittered_refs, &trained.stats)?,
                symbol: symbol_all.select_rows(idx)?,
                symbol_aug: symbol_input(&perturbed_refs)?,
            };

            let context = |e: StcError| match e {
                StcError::Numerical(m) | StcError::NonFinite(m) => {
                    StcError::Numerical(format!("epoch {epoch} batch {b}: {m}"))
                }
                other => other,
            };
            let (emb, cache) = forward_embeddings(&trained.model, &views).map_err(context)?;
            let (breakdown, grads) = total_loss(&emb, &cfg.loss).map_err(context)?;
            let param_grads = backward_embeddings(&trained.model, &cache, &grads).map_err(context)?;
            adam.update(&mut trained.model, &param_grads).map_err(context)?;

            sums[0] += breakdown.time;
            sums[1] += breakdown.symbol;
            sums[2] += breakdown.consistency;
            sums[3] += breakdown.total;
        }
        let nb = n_batches as f64;
        let record = EpochRecord {
            epoch,
            time: sums[0] / nb,
            symbol: sums[1] / nb,
            consistency: sums[2] / nb,
            total: sums[3] / nb,
            lr: adam.lr,
        };
        records.push(record);
        adam.lr = sched.step(record.total);
    }

    Ok((
        trained,
        TrainReport {
            epochs: records,
            wall_seconds: started.elapsed().as_secs_f64(),
        },
    ))
}
