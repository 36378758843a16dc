//! Positive-view augmentations: Gaussian jitter for the raw series and
//! single-count insertions/deletions for the symbol histogram.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::TimeSeriesSample;
use crate::error::{Result, StcError};
use crate::symbolize::{normalize_histogram, ChannelStats, SymbolVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    /// Noise std as a fraction of each channel's σ.
    pub jitter_sigma: f64,
    /// Fraction of the total count mass edited.
    pub symbol_edit_rate: f64,
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            jitter_sigma: 0.1,
            symbol_edit_rate: 0.02,
            seed: 0,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.jitter_sigma >= 0.0 && self.jitter_sigma.is_finite()) {
            return Err(StcError::Config(format!(
                "augment.jitter_sigma must be >= 0, got {}",
                self.jitter_sigma
            )));
        }
        if !(0.0..=1.0).contains(&self.symbol_edit_rate) {
            return Err(StcError::Config(format!(
                "augment.symbol_edit_rate must lie in [0, 1], got {}",
                self.symbol_edit_rate
            )));
        }
        Ok(())
    }
}

/// Adds independent `N(0, (jitter_sigma·σ_k)²)` noise to every entry.
pub fn jitter<R: Rng + ?Sized>(
    sample: &TimeSeriesSample,
    stats: &ChannelStats,
    cfg: &AugmentConfig,
    rng: &mut R,
) -> Result<TimeSeriesSample> {
    cfg.validate()?;
    if stats.channels() != sample.channels() {
        return Err(StcError::Shape(format!(
            "stats cover {} channels, sample has {}",
            stats.channels(),
            sample.channels()
        )));
    }
    if cfg.jitter_sigma == 0.0 {
        return Ok(sample.clone());
    }
    let mut values = sample.values().clone();
    for k in 0..values.rows() {
        let std = cfg.jitter_sigma * stats.sigma[k];
        let noise = Normal::new(0.0, std).map_err(|e| StcError::InvalidArgument(e.to_string()))?;
        for v in values.row_mut(k) {
            *v += noise.sample(rng);
        }
    }
    sample.with_values(values)
}

/// One single-count histogram edit at a flat `(channel, symbol)` cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolEdit {
    Insert(usize),
    Delete(usize),
}

/// Applies `edit` to raw counts. Deleting from an empty cell is an error.
pub fn apply_edit(counts: &mut [u32], edit: SymbolEdit) -> Result<()> {
    match edit {
        SymbolEdit::Insert(i) => {
            let c = counts
                .get_mut(i)
                .ok_or_else(|| StcError::InvalidArgument(format!("cell {i} out of range")))?;
            *c += 1;
        }
        SymbolEdit::Delete(i) => {
            let c = counts
                .get_mut(i)
                .ok_or_else(|| StcError::InvalidArgument(format!("cell {i} out of range")))?;
            if *c == 0 {
                return Err(StcError::InvalidArgument(format!("cell {i} is already empty")));
            }
            *c -= 1;
        }
    }
    Ok(())
}

/// Draws one edit: insertion or deletion with probability ½ each, deletion
/// falling back to insertion when every cell is empty.
pub fn random_edit<R: Rng + ?Sized>(counts: &[u32], rng: &mut R) -> SymbolEdit {
    if rng.random_bool(0.5) {
        let nonzero: Vec<usize> = counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, _)| i)
            .collect();
        if !nonzero.is_empty() {
            return SymbolEdit::Delete(nonzero[rng.random_range(0..nonzero.len())]);
        }
    }
    SymbolEdit::Insert(rng.random_range(0..counts.len()))
}

/// Number of edits for a histogram holding `mass` counts.
pub fn edit_count(mass: u64, rate: f64) -> usize {
    (rate * mass as f64).round() as usize
}

/// Applies `round(rate · total count)` random edits to the raw counts, then
/// re-normalizes.
pub fn perturb_symbols<R: Rng + ?Sized>(
    vec: &SymbolVector,
    cfg: &AugmentConfig,
    rng: &mut R,
) -> Result<SymbolVector> {
    cfg.validate()?;
    let mass: u64 = vec.counts().iter().map(|&c| c as u64).sum();
    let m = edit_count(mass, cfg.symbol_edit_rate);
    let mut out = vec.clone();
    let counts = out.counts_mut();
    for _ in 0..m {
        let edit = random_edit(counts, rng);
        apply_edit(counts, edit)?;
    }
    Ok(normalize_histogram(out))
}
