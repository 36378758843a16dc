//! Plain-text `key = value` configuration with dotted keys.
//!
//! ```text
//! # comments and blank lines are ignored
//! loss.tau = 0.2
//! model.hidden = 256
//! train.epochs = 100
//! ```
//!
//! Every key has a default; unknown or repeated keys are errors.

use std::collections::HashSet;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, StcError};
use crate::evaluate::MlpBaselineConfig;
use crate::nn::LogisticConfig;
use crate::trainer::TrainConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataConfig {
    pub window: usize,
    pub stride: usize,
    /// PAMAP2 subjects need this many seconds of every activity.
    pub min_seconds: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            window: 256,
            stride: 128,
            min_seconds: 90.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StcConfig {
    pub data: DataConfig,
    pub train: TrainConfig,
    pub probe: LogisticConfig,
    pub baseline: MlpBaselineConfig,
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| StcError::Config(format!("{key}: cannot parse {value:?}")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<usize>> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|v| {
            let n: usize = parse_value(key, v.trim())?;
            if n == 0 {
                return Err(StcError::Config(format!("{key}: layer widths must be positive")));
            }
            Ok(n)
        })
        .collect()
}

fn join(v: &[usize]) -> String {
    v.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(",")
}

impl StcConfig {
    /// Sets one dotted key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let t = &mut self.train;
        match key {
            "data.window" => self.data.window = parse_value(key, value)?,
            "data.stride" => self.data.stride = parse_value(key, value)?,
            "data.n_symbols" => t.n_symbols = parse_value(key, value)?,
            "data.min_seconds" => self.data.min_seconds = parse_value(key, value)?,
            "model.h_dim" => t.arch.h_dim = parse_value(key, value)?,
            "model.z_dim" => t.arch.z_dim = parse_value(key, value)?,
            "model.hidden" => t.arch.hidden = parse_list(key, value)?,
            "model.proj_hidden" => t.arch.proj_hidden = parse_list(key, value)?,
            "loss.tau" => t.loss.tau = parse_value(key, value)?,
            "loss.delta" => t.loss.delta = parse_value(key, value)?,
            "loss.lambda" => t.loss.lambda = parse_value(key, value)?,
            "loss.denominator_mode" => t.loss.denominator_mode = value.parse()?,
            "augment.jitter_sigma" => t.augment.jitter_sigma = parse_value(key, value)?,
            "augment.symbol_edit_rate" => t.augment.symbol_edit_rate = parse_value(key, value)?,
            "augment.seed" => t.augment.seed = parse_value(key, value)?,
            "train.epochs" => t.epochs = parse_value(key, value)?,
            "train.batch_size" => t.batch_size = parse_value(key, value)?,
            "train.lr" => t.lr = parse_value(key, value)?,
            "train.seed" => t.seed = parse_value(key, value)?,
            "sched.factor" => t.scheduler.factor = parse_value(key, value)?,
            "sched.patience" => t.scheduler.patience = parse_value(key, value)?,
            "sched.min_lr" => t.scheduler.min_lr = parse_value(key, value)?,
            "probe.lr" => self.probe.lr = parse_value(key, value)?,
            "probe.epochs" => self.probe.epochs = parse_value(key, value)?,
            "probe.reg" => self.probe.reg = parse_value(key, value)?,
            "baseline.hidden" => self.baseline.hidden = parse_list(key, value)?,
            "baseline.epochs" => self.baseline.epochs = parse_value(key, value)?,
            "baseline.lr" => self.baseline.lr = parse_value(key, value)?,
            "baseline.batch_size" => self.baseline.batch_size = parse_value(key, value)?,
            "baseline.seed" => self.baseline.seed = parse_value(key, value)?,
            other => return Err(StcError::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Effective settings as `(key, value)` pairs in a fixed order; feeding
    /// them back through [`StcConfig::set`] reproduces `self`.
    pub fn entries(&self) -> Vec<(String, String)> {
        let t = &self.train;
        let pairs: Vec<(&str, String)> = vec![
            ("data.window", self.data.window.to_string()),
            ("data.stride", self.data.stride.to_string()),
            ("data.n_symbols", t.n_symbols.to_string()),
            ("data.min_seconds", format!("{:?}", self.data.min_seconds)),
            ("model.h_dim", t.arch.h_dim.to_string()),
            ("model.z_dim", t.arch.z_dim.to_string()),
            ("model.hidden", join(&t.arch.hidden)),
            ("model.proj_hidden", join(&t.arch.proj_hidden)),
            ("loss.tau", format!("{:?}", t.loss.tau)),
            ("loss.delta", format!("{:?}", t.loss.delta)),
            ("loss.lambda", format!("{:?}", t.loss.lambda)),
            ("loss.denominator_mode", t.loss.denominator_mode.to_string()),
            ("augment.jitter_sigma", format!("{:?}", t.augment.jitter_sigma)),
            ("augment.symbol_edit_rate", format!("{:?}", t.augment.symbol_edit_rate)),
            ("augment.seed", t.augment.seed.to_string()),
            ("train.epochs", t.epochs.to_string()),
            ("train.batch_size", t.batch_size.to_string()),
            ("train.lr", format!("{:?}", t.lr)),
            ("train.seed", t.seed.to_string()),
            ("sched.factor", format!("{:?}", t.scheduler.factor)),
            ("sched.patience", t.scheduler.patience.to_string()),
            ("sched.min_lr", format!("{:?}", t.scheduler.min_lr)),
            ("probe.lr", format!("{:?}", self.probe.lr)),
            ("probe.epochs", self.probe.epochs.to_string()),
            ("probe.reg", format!("{:?}", self.probe.reg)),
            ("baseline.hidden", join(&self.baseline.hidden)),
            ("baseline.epochs", self.baseline.epochs.to_string()),
            ("baseline.lr", format!("{:?}", self.baseline.lr)),
            ("baseline.batch_size", self.baseline.batch_size.to_string()),
            ("baseline.seed", self.baseline.seed.to_string()),
        ];
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    /// Renders the effective configuration in the file format.
    pub fn to_text(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.data.window == 0 || self.data.stride == 0 {
            return Err(StcError::Config("data.window and data.stride must be positive".into()));
        }
        if self.baseline.batch_size == 0 {
            return Err(StcError::Config("baseline.batch_size must be positive".into()));
        }
        self.train.validate()
    }
}

/// Parses a configuration file body on top of the defaults.
pub fn parse_config(text: &str) -> Result<StcConfig> {
    let mut cfg = StcConfig::default();
    let mut seen = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| StcError::parse(lineno, format!("expected `key = value`, got {line:?}")))?;
        let key = key.trim();
        if !seen.insert(key.to_string()) {
            return Err(StcError::parse(lineno, format!("duplicate key {key:?}")));
        }
        cfg.set(key, value).map_err(|e| StcError::parse(lineno, e.to_string()))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::DenominatorMode;

    #[test]
    fn defaults_follow_documented_values() {
        let c = StcConfig::default();
        assert_eq!(c.train.lr, 5e-4);
        assert_eq!(c.train.n_symbols, 64);
        assert_eq!((c.train.loss.tau, c.train.loss.delta, c.train.loss.lambda), (0.2, 1.0, 0.5));
        assert_eq!((c.train.augment.jitter_sigma, c.train.augment.symbol_edit_rate), (0.1, 0.02));
        assert_eq!((c.train.epochs, c.train.batch_size), (100, 64));
        assert_eq!((c.data.window, c.data.stride), (256, 128));
    }

    #[test]
    fn parses_and_overrides() {
        let text = "# test\nloss.tau = 0.5\nmodel.hidden = 32, 16\n\nloss.denominator_mode = paper_literal\n";
        let c = parse_config(text).unwrap();
        assert_eq!(c.train.loss.tau, 0.5);
        assert_eq!(c.train.arch.hidden, vec![32, 16]);
        assert_eq!(c.train.loss.denominator_mode, DenominatorMode::PaperLiteral);
    }

    #[test]
    fn echo_round_trips() {
        let mut c = StcConfig::default();
        c.set("loss.tau", "0.123456789").unwrap();
        c.set("model.proj_hidden", "").unwrap();
        assert_eq!(parse_config(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn errors_carry_line_numbers() {
        for (text, line) in [
            ("loss.tau = 0.2\nbogus.key = 1\n", 2),
            ("loss.tau\n", 1),
            ("loss.tau = 1\nloss.tau = 2\n", 2),
            ("train.epochs = -3\n", 1),
        ] {
            match parse_config(text) {
                Err(StcError::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
        assert!(parse_config("loss.tau = 0\n").is_err());
        assert!(parse_config("train.batch_size = 1\n").is_err());
    }
}
