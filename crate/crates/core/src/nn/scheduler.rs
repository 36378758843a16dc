use serde::{Deserialize, Serialize};

/// Minimum decrease of the monitored metric that counts as improvement.
pub const IMPROVEMENT_THRESHOLD: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateauSettings {
    pub factor: f64,
    pub patience: usize,
    pub min_lr: f64,
}

impl Default for PlateauSettings {
    fn default() -> Self {
        Self {
            factor: 0.5,
            patience: 10,
            min_lr: 1e-6,
        }
    }
}

/// Reduce-on-plateau learning-rate schedule for a minimised metric.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateauScheduler {
    settings: PlateauSettings,
    best_metric: f64,
    stall_count: usize,
    lr: f64,
}

impl PlateauScheduler {
    pub fn new(settings: PlateauSettings, initial_lr: f64) -> Self {
        assert!(
            settings.factor > 0.0 && settings.factor < 1.0,
            "plateau factor must lie in (0, 1)"
        );
        Self {
            settings,
            best_metric: f64::INFINITY,
            stall_count: 0,
            lr: initial_lr.max(settings.min_lr),
        }
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    pub fn best_metric(&self) -> f64 {
        self.best_metric
    }

    /// Records one epoch's metric and returns the learning rate to use next.
    ///
    /// A reduction happens once the metric has failed to beat the best value by
    /// [`IMPROVEMENT_THRESHOLD`] on `patience` consecutive calls.
    pub fn step(&mut self, metric: f64) -> f64 {
        if metric < self.best_metric - IMPROVEMENT_THRESHOLD {
            self.best_metric = metric;
            self.stall_count = 0;
        } else {
            self.stall_count += 1;
            if self.stall_count >= self.settings.patience {
                self.lr = (self.lr * self.settings.factor).max(self.settings.min_lr);
                self.stall_count = 0;
            }
        }
        self.lr
    }
}
