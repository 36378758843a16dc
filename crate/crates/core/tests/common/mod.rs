//! Shared fixtures and independent reference computations for integration tests.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use stc_core::data::{shifted_subjects, synth_generate, SubjectSpread, TimeSeriesSample};
use stc_core::losses::{DenominatorMode, LossConfig};
use stc_core::model::{EmbeddingSet, StcModel, ViewBatch};
use stc_core::nn::{Matrix, Parameters};

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    let data = (0..rows * cols).map(|_| StandardNormal.sample(rng)).collect();
    Matrix::new(rows, cols, data).unwrap()
}

pub fn random_embeddings(rng: &mut ChaCha8Rng, n: usize, h: usize, z: usize) -> EmbeddingSet {
    EmbeddingSet {
        h_time: gaussian_matrix(rng, n, h),
        h_time_aug: gaussian_matrix(rng, n, h),
        h_symbol: gaussian_matrix(rng, n, h),
        h_symbol_aug: gaussian_matrix(rng, n, h),
        z_time: gaussian_matrix(rng, n, z),
        z_time_aug: gaussian_matrix(rng, n, z),
        z_symbol: gaussian_matrix(rng, n, z),
        z_symbol_aug: gaussian_matrix(rng, n, z),
    }
}

pub fn random_loss_config(rng: &mut ChaCha8Rng) -> LossConfig {
    LossConfig {
        tau: rng.random_range(0.05..2.0),
        delta: rng.random_range(0.0..2.0),
        lambda: rng.random_range(0.0..2.0),
        denominator_mode: if rng.random_bool(0.5) {
            DenominatorMode::SimclrStandard
        } else {
            DenominatorMode::PaperLiteral
        },
    }
}

/// Full cosine-similarity matrix between the rows of `a` and `b`.
pub fn similarity_matrix(a: &Matrix, b: &Matrix) -> Vec<Vec<f64>> {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    (0..a.rows())
        .map(|i| {
            (0..b.rows())
                .map(|j| {
                    let (u, v) = (a.row(i), b.row(j));
                    u.iter().zip(v).map(|(x, y)| x * y).sum::<f64>() / (norm(u) * norm(v))
                })
                .collect()
        })
        .collect()
}

/// InfoNCE straight from the definition: positive `exp(s_ii/τ)` over the sum
/// of `exp(s/τ)` for the off-diagonal entries of every pool similarity matrix.
pub fn brute_info_nce(anchors: &Matrix, positives: &Matrix, pool: &[&Matrix], cfg: &LossConfig) -> Vec<f64> {
    let pos = similarity_matrix(anchors, positives);
    let pools: Vec<Vec<Vec<f64>>> = pool.iter().map(|m| similarity_matrix(anchors, m)).collect();
    (0..anchors.rows())
        .map(|i| {
            let numerator = (pos[i][i] / cfg.tau).exp();
            let mut denom = 0.0;
            for s in &pools {
                for (j, row_val) in s[i].iter().enumerate() {
                    if j != i {
                        denom += (row_val / cfg.tau).exp();
                    }
                }
            }
            if cfg.denominator_mode == DenominatorMode::SimclrStandard {
                denom += numerator;
            }
            -(numerator / denom).ln()
        })
        .collect()
}

pub fn brute_consistency(e: &EmbeddingSet, cfg: &LossConfig) -> Vec<f64> {
    let l = |a: &Matrix, b: &Matrix| brute_info_nce(a, b, &[b], cfg);
    let l_ts = l(&e.z_time, &e.z_symbol);
    let others = [
        l_ts.clone(),
        l(&e.z_time, &e.z_symbol_aug),
        l(&e.z_time_aug, &e.z_symbol),
        l(&e.z_time_aug, &e.z_symbol_aug),
    ];
    (0..l_ts.len())
        .map(|i| others.iter().map(|o| l_ts[i] - o[i] + cfg.delta).sum())
        .collect()
}

pub fn brute_total(e: &EmbeddingSet, cfg: &LossConfig) -> f64 {
    let mean = |v: Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
    let lt = mean(brute_info_nce(&e.h_time, &e.h_time_aug, &[&e.h_time, &e.h_time_aug], cfg));
    let ls = mean(brute_info_nce(&e.h_symbol, &e.h_symbol_aug, &[&e.h_symbol, &e.h_symbol_aug], cfg));
    lt + ls + cfg.lambda * mean(brute_consistency(e, cfg))
}

pub fn random_views(rng: &mut ChaCha8Rng, n: usize, time_dim: usize, symbol_dim: usize) -> ViewBatch {
    ViewBatch {
        time: gaussian_matrix(rng, n, time_dim),
        time_aug: gaussian_matrix(rng, n, time_dim),
        symbol: gaussian_matrix(rng, n, symbol_dim),
        symbol_aug: gaussian_matrix(rng, n, symbol_dim),
    }
}

/// Largest relative error between analytic gradients and central differences
/// over every parameter of `model`.
pub fn max_gradient_error(model: &StcModel, analytic: &dyn Parameters, loss: &dyn Fn(&StcModel) -> f64) -> (f64, String) {
    const H: f64 = 1e-6;
    let mut worst = (0.0, String::new());
    let names: Vec<(String, usize)> = model.named_tensors().into_iter().map(|(n, t)| (n, t.len())).collect();
    let grads: Vec<Vec<f64>> = analytic.named_tensors().into_iter().map(|(_, t)| t.to_vec()).collect();
    for (ti, (name, len)) in names.iter().enumerate() {
        for (k, &a) in grads[ti].iter().enumerate().take(*len) {
            let mut plus = model.clone();
            plus.tensors_mut()[ti][k] += H;
            let mut minus = model.clone();
            minus.tensors_mut()[ti][k] -= H;
            let numeric = (loss(&plus) - loss(&minus)) / (2.0 * H);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-3);
            if rel > worst.0 {
                worst = (rel, format!("{name}[{k}]: analytic {a:e}, numeric {numeric:e}"));
            }
        }
    }
    worst
}

/// Three moderately shifted synthetic subjects.
pub fn synthetic_subjects(n_per_class: usize, length: usize, channels: usize, seed: u64) -> Vec<TimeSeriesSample> {
    let specs = shifted_subjects(3, &SubjectSpread::default(), seed);
    synth_generate(&specs, n_per_class, length, channels).unwrap()
}

/// Finite-difference check of the full model (batch 4, K=2, L=16, n=8).
pub fn model_gradient_check(seed: u64) -> (f64, String) {
    use rand::SeedableRng;
    use stc_core::losses::total_loss;
    use stc_core::model::{backward_embeddings, forward_embeddings, Architecture, DataDims};

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = DataDims {
        channels: 2,
        length: 16,
        n_symbols: 8,
    };
    let arch = Architecture {
        h_dim: 8,
        z_dim: 4,
        hidden: vec![12],
        proj_hidden: vec![16],
    };
    let model = StcModel::new(dims, arch, &mut rng).unwrap();
    let views = random_views(&mut rng, 4, dims.time_input(), dims.symbol_input());
    let cfg = random_loss_config(&mut rng);
    let (emb, cache) = forward_embeddings(&model, &views).unwrap();
    let (_, g) = total_loss(&emb, &cfg).unwrap();
    let grads = backward_embeddings(&model, &cache, &g).unwrap();
    let loss = |m: &StcModel| total_loss(&forward_embeddings(m, &views).unwrap().0, &cfg).unwrap().0.total;
    max_gradient_error(&model, &grads, &loss)
}

/// Small, fast training configuration.
pub fn small_train_config(epochs: usize) -> stc_core::trainer::TrainConfig {
    stc_core::trainer::TrainConfig {
        epochs,
        batch_size: 16,
        n_symbols: 16,
        arch: stc_core::model::Architecture {
            h_dim: 16,
            z_dim: 8,
            hidden: vec![32],
            proj_hidden: vec![16],
        },
        ..Default::default()
    }
}

/// Two subjects drawn from the same distribution.
pub fn identical_subjects(n_per_class: usize, length: usize, channels: usize) -> Vec<TimeSeriesSample> {
    use stc_core::data::SynthSpec;
    let spec = |subject: u32, seed: u64| SynthSpec {
        noise_std: 0.1,
        phase_jitter: std::f64::consts::TAU,
        ..SynthSpec::clean(subject, seed)
    };
    synth_generate(&[spec(1, 101), spec(2, 202)], n_per_class, length, channels).unwrap()
}

/// Configuration used for the synthetic transfer runs.
pub fn transfer_train_config() -> stc_core::trainer::TrainConfig {
    stc_core::trainer::TrainConfig {
        epochs: 20,
        batch_size: 32,
        arch: stc_core::model::Architecture {
            h_dim: 32,
            z_dim: 16,
            hidden: vec![64],
            proj_hidden: vec![32],
        },
        ..Default::default()
    }
}
