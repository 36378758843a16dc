mod common;

use common::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stc_core::checkpoint::encode_checkpoint;
use stc_core::data::{make_split, shifted_subjects, synth_generate, SubjectSpread};
use stc_core::evaluate::{
    baseline_lr, baseline_mlp, pairwise_benchmark, probe, probe_features, BenchmarkConfig, BenchmarkMatrix,
    MlpBaselineConfig, ProbeMode, ProbeOn,
};
use stc_core::nn::LogisticConfig;
use stc_core::trainer::{initialize, pretrain};

#[test]
fn untrained_probe_accuracy_is_a_fraction() {
    let samples = synthetic_subjects(10, 32, 2, 3);
    let split = make_split(&samples, 1, 2).unwrap();
    let model = initialize(&split.pretrain, &small_train_config(0)).unwrap();
    for mode in [ProbeMode::ZtOnly, ProbeMode::ZtPlusZs] {
        let acc = probe(&model, &split, mode, &LogisticConfig::default(), ProbeOn::Source).unwrap();
        assert!((0.0..=1.0).contains(&acc));
    }
}

#[test]
fn combined_features_are_twice_as_wide() {
    let samples = synthetic_subjects(4, 32, 2, 3);
    let cfg = small_train_config(0);
    let model = initialize(&samples, &cfg).unwrap();
    assert_eq!(probe_features(&model, &samples, ProbeMode::ZtOnly).unwrap().cols(), cfg.arch.z_dim);
    assert_eq!(probe_features(&model, &samples, ProbeMode::ZtPlusZs).unwrap().cols(), 2 * cfg.arch.z_dim);
}

#[test]
fn probing_leaves_the_model_untouched() {
    let samples = synthetic_subjects(10, 32, 2, 3);
    let split = make_split(&samples, 2, 3).unwrap();
    let (model, _) = pretrain(&split, &small_train_config(2)).unwrap();
    let before = encode_checkpoint(&model).unwrap();
    for on in [ProbeOn::Source, ProbeOn::Target] {
        probe(&model, &split, ProbeMode::ZtPlusZs, &LogisticConfig::default(), on).unwrap();
    }
    assert_eq!(before, encode_checkpoint(&model).unwrap());
}

#[test]
fn identical_subjects_transfer() {
    let samples = identical_subjects(60, 128, 3);
    let split = make_split(&samples, 1, 2).unwrap();
    let (model, _) = pretrain(&split, &transfer_train_config()).unwrap();
    let acc = probe(&model, &split, ProbeMode::ZtOnly, &LogisticConfig::default(), ProbeOn::Source).unwrap();
    assert!(acc >= 0.95, "accuracy {acc}");
}

#[test]
fn mlp_baseline_learns_separable_data_and_not_noise() {
    let samples = identical_subjects(40, 64, 2);
    let split = make_split(&samples, 1, 2).unwrap();
    let cfg = MlpBaselineConfig {
        epochs: 60,
        ..MlpBaselineConfig::default()
    };
    let acc = baseline_mlp(&split, &cfg).unwrap();
    assert!(acc >= 0.9, "separable accuracy {acc}");
    assert_eq!(acc, baseline_mlp(&split, &cfg).unwrap());

    // Labels shuffled on both sides are independent of the inputs.
    let mut shuffled = split.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for set in [&mut shuffled.probe_train, &mut shuffled.test] {
        let mut labels: Vec<_> = set.iter().map(|s| s.label).collect();
        labels.shuffle(&mut rng);
        for (s, l) in set.iter_mut().zip(labels) {
            s.label = l;
        }
    }
    let chance = baseline_mlp(&shuffled, &cfg).unwrap();
    assert!((chance - 1.0 / 3.0).abs() <= 0.1, "shuffled accuracy {chance}");
    let lr_chance = baseline_lr(&shuffled, &LogisticConfig::default()).unwrap();
    assert!((lr_chance - 1.0 / 3.0).abs() <= 0.1, "shuffled LR accuracy {lr_chance}");
}

#[test]
fn lr_baseline_separates_level_classes() {
    // Phase-free templates make the classes linearly separable in raw space.
    use stc_core::data::SynthSpec;
    let spec = |subject, seed| SynthSpec {
        noise_std: 0.1,
        ..SynthSpec::clean(subject, seed)
    };
    let samples = synth_generate(&[spec(1, 1), spec(2, 2)], 20, 64, 2).unwrap();
    let split = make_split(&samples, 1, 2).unwrap();
    let acc = baseline_lr(&split, &LogisticConfig::default()).unwrap();
    assert!(acc >= 0.9, "{acc}");
    assert_eq!(acc, baseline_lr(&split, &LogisticConfig::default()).unwrap());
}

fn quick_benchmark() -> BenchmarkConfig {
    BenchmarkConfig {
        train: small_train_config(1),
        modes: vec![ProbeMode::ZtOnly, ProbeMode::ZtPlusZs],
        ..BenchmarkConfig::default()
    }
}

#[test]
fn two_subjects_give_two_pairs() {
    let samples = synthetic_subjects(6, 32, 2, 4);
    let m = pairwise_benchmark(&samples, &[1, 2], &quick_benchmark()).unwrap();
    assert_eq!(m.pairs(), vec![(1, 2), (2, 1)]);
    let csv = m.to_csv(&[]).unwrap();
    assert_eq!(BenchmarkMatrix::from_csv(csv.as_bytes()).unwrap(), m);
}

#[test]
fn five_subjects_give_twenty_pairs_in_any_order() {
    let specs = shifted_subjects(5, &SubjectSpread::default(), 2);
    let samples = synth_generate(&specs, 4, 32, 2).unwrap();
    let mut cfg = quick_benchmark();
    cfg.baselines = true;
    cfg.mlp.epochs = 2;
    let m = pairwise_benchmark(&samples, &[1, 2, 3, 4, 5], &cfg).unwrap();
    assert_eq!(m.pairs().len(), 20);
    for col in m.columns() {
        let rows: Vec<f64> = m.rows.iter().filter(|r| r.column == col).map(|r| r.accuracy).collect();
        assert_eq!(rows.len(), 20);
        assert!((m.average(col).unwrap() - rows.iter().sum::<f64>() / 20.0).abs() < 1e-12);
    }

    cfg.jobs = 4;
    let reordered = pairwise_benchmark(&samples, &[5, 3, 1, 4, 2], &cfg).unwrap();
    for r in &m.rows {
        assert_eq!(reordered.accuracy(r.source, r.target, r.column), Some(r.accuracy));
    }
    assert_eq!(reordered.rows.len(), m.rows.len());
}

#[test]
fn benchmark_preconditions() {
    let samples = synthetic_subjects(4, 32, 2, 4);
    assert!(pairwise_benchmark(&samples, &[1], &quick_benchmark()).is_err());
    assert!(pairwise_benchmark(&samples, &[1, 1], &quick_benchmark()).is_err());
    assert!(pairwise_benchmark(&samples, &[1, 9], &quick_benchmark()).is_err());
}

#[test]
fn report_writes_csv_and_table() {
    let samples = synthetic_subjects(6, 32, 2, 4);
    let m = pairwise_benchmark(&samples, &[1, 2, 3], &quick_benchmark()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("results.csv");
    stc_core::evaluate::report(&m, &path, &[("train.seed".into(), "0".into())]).unwrap();
    let csv = std::fs::read_to_string(&path).unwrap();
    assert!(csv.starts_with("# train.seed=0\nsource,target,method,mode,accuracy\n"));
    let table = std::fs::read_to_string(path.with_extension("txt")).unwrap();
    assert!(table.contains("best"));
    assert!(stc_core::evaluate::report(&BenchmarkMatrix::default(), &path, &[]).is_err());
    assert!(stc_core::evaluate::report(&m, &dir.path().join("missing/results.csv"), &[]).is_err());
}
