mod common;

use common::{small_train_config, synthetic_subjects};
use stc_core::checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint};
use stc_core::data::{synth_generate, SynthSpec};
use stc_core::nn::Parameters;
use stc_core::trainer::{initialize, pretrain_samples};
use stc_core::StcError;

fn trained() -> (stc_core::trainer::Pretrained, Vec<stc_core::data::TimeSeriesSample>) {
    let samples = synthetic_subjects(8, 32, 2, 1);
    let source: Vec<_> = samples.iter().filter(|s| s.subject == 1).cloned().collect();
    (pretrain_samples(&source, &small_train_config(2)).unwrap().0, samples)
}

#[test]
fn round_trip_is_bitwise() {
    let (model, samples) = trained();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.stc");
    save_checkpoint(&model, &path).unwrap();
    let back = load_checkpoint(&path).unwrap();
    assert_eq!(back, model);
    for ((na, a), (nb, b)) in model.model.named_tensors().iter().zip(back.model.named_tensors()) {
        assert_eq!(na, &nb);
        assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
    assert_eq!(back.time_features(&samples).unwrap(), model.time_features(&samples).unwrap());
    assert_eq!(encode_checkpoint(&back).unwrap(), encode_checkpoint(&model).unwrap());
}

#[test]
fn header_echoes_config_and_seed() {
    let (model, _) = trained();
    let bytes = encode_checkpoint(&model).unwrap();
    let header_len = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let header: serde_json::Value = serde_json::from_slice(&bytes[8..8 + header_len]).unwrap();
    assert_eq!(header["seed"], 0);
    assert_eq!(header["config"]["loss"]["tau"], 0.2);
    assert_eq!(header["dims"]["channels"], 2);
}

#[test]
fn corrupted_magic_is_rejected() {
    let (model, _) = trained();
    let mut bytes = encode_checkpoint(&model).unwrap();
    bytes[0] = b'X';
    match decode_checkpoint(&bytes) {
        Err(StcError::Checkpoint(msg)) => assert_eq!(msg, "not an STC checkpoint"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn every_truncation_is_an_error() {
    let samples = synthetic_subjects(4, 8, 1, 1);
    let mut cfg = small_train_config(0);
    cfg.arch.hidden = vec![3];
    cfg.arch.proj_hidden = vec![];
    cfg.arch.h_dim = 3;
    cfg.arch.z_dim = 2;
    let bytes = encode_checkpoint(&initialize(&samples, &cfg).unwrap()).unwrap();
    for cut in 0..bytes.len() {
        assert!(decode_checkpoint(&bytes[..cut]).is_err(), "accepted {cut} of {} bytes", bytes.len());
    }
    let mut extra = bytes.clone();
    extra.push(0);
    assert!(decode_checkpoint(&extra).is_err());
}

#[test]
fn channel_mismatch_is_a_dimension_error() {
    let nine = synth_generate(&[SynthSpec::clean(1, 0)], 4, 32, 9).unwrap();
    let six = synth_generate(&[SynthSpec::clean(1, 0)], 4, 32, 6).unwrap();
    let model = initialize(&nine, &small_train_config(0)).unwrap();
    let back = decode_checkpoint(&encode_checkpoint(&model).unwrap()).unwrap();
    match back.time_features(&six) {
        Err(StcError::Shape(msg)) => assert!(msg.contains("9x32") && msg.contains("6x32"), "{msg}"),
        other => panic!("{other:?}"),
    }
}
