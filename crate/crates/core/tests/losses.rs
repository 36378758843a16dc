mod common;

use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stc_core::losses::{
    consistency_loss, cross_pair_loss, info_nce, symbol_loss, time_loss, total_loss, DenominatorMode, LossConfig,
};
use stc_core::model::EmbeddingSet;
use stc_core::nn::Matrix;

const TOL: f64 = 1e-9;

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * (1.0 + y.abs()))
}

#[test]
fn every_term_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 2..=12 {
        let e = random_embeddings(&mut rng, n, 5, 4);
        let cfg = random_loss_config(&mut rng);
        let t = time_loss(&e, &cfg).unwrap();
        assert!(close(&t, &brute_info_nce(&e.h_time, &e.h_time_aug, &[&e.h_time, &e.h_time_aug], &cfg), TOL));
        let s = symbol_loss(&e, &cfg).unwrap();
        assert!(close(&s, &brute_info_nce(&e.h_symbol, &e.h_symbol_aug, &[&e.h_symbol, &e.h_symbol_aug], &cfg), TOL));
        let c = cross_pair_loss(&e.z_time, &e.z_symbol_aug, &cfg).unwrap();
        assert!(close(&c, &brute_info_nce(&e.z_time, &e.z_symbol_aug, &[&e.z_symbol_aug], &cfg), TOL));
        assert!(close(&consistency_loss(&e, &cfg).unwrap(), &brute_consistency(&e, &cfg), TOL));
        let (b, _) = total_loss(&e, &cfg).unwrap();
        assert!((b.total - brute_total(&e, &cfg)).abs() <= TOL * (1.0 + b.total.abs()));
    }
}

#[test]
fn closed_form_single_negative() {
    let cfg = LossConfig {
        tau: 1.0,
        ..LossConfig::default()
    };
    let a = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
    let l = info_nce(&a, &a, &[&a], &cfg).unwrap();
    let expected = (1.0 + (-1.0f64).exp()).ln();
    assert!((l[0] - expected).abs() < TOL && (expected - 0.31326).abs() < 1e-5);
}

#[test]
fn paper_literal_drops_positive_from_denominator() {
    let a = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
    let cfg = LossConfig {
        tau: 1.0,
        denominator_mode: DenominatorMode::PaperLiteral,
        ..LossConfig::default()
    };
    // exp(1) / exp(0) → loss −1
    let l = info_nce(&a, &a, &[&a], &cfg).unwrap();
    assert!((l[0] + 1.0).abs() < TOL);
}

#[test]
fn consistency_cancels_when_views_coincide() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut e = random_embeddings(&mut rng, 5, 3, 3);
    e.z_time_aug = e.z_time.clone();
    e.z_symbol_aug = e.z_symbol.clone();
    let cfg = LossConfig {
        delta: 0.7,
        ..LossConfig::default()
    };
    for v in consistency_loss(&e, &cfg).unwrap() {
        assert!((v - 4.0 * 0.7).abs() < TOL);
    }
}

#[test]
fn embedding_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let e = random_embeddings(&mut rng, 4, 3, 3);
    let cfg = random_loss_config(&mut rng);
    let (_, g) = total_loss(&e, &cfg).unwrap();
    let h = 1e-6;
    for slot in 0..8 {
        for k in 0..e.matrices()[slot].data().len() {
            let mut plus = e.clone();
            plus.matrices_mut()[slot].data_mut()[k] += h;
            let mut minus = e.clone();
            minus.matrices_mut()[slot].data_mut()[k] -= h;
            let numeric = (total_loss(&plus, &cfg).unwrap().0.total - total_loss(&minus, &cfg).unwrap().0.total) / (2.0 * h);
            let analytic = g.matrices()[slot].data()[k];
            assert!(
                (numeric - analytic).abs() < 1e-6 * (1.0 + analytic.abs()),
                "slot {slot} entry {k}: {analytic} vs {numeric}"
            );
        }
    }
}

fn scale_rows(m: &Matrix, factors: &[f64]) -> Matrix {
    let mut out = m.clone();
    for (r, f) in factors.iter().enumerate() {
        out.row_mut(r).iter_mut().for_each(|v| *v *= f);
    }
    out
}

fn permute(e: &EmbeddingSet, perm: &[usize]) -> EmbeddingSet {
    let mut out = e.clone();
    for (dst, src) in out.matrices_mut().into_iter().zip(e.matrices()) {
        *dst = src.select_rows(perm).unwrap();
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn losses_ignore_embedding_norms(seed in any::<u64>(), n in 2usize..10, scale in 0.01f64..100.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = random_embeddings(&mut rng, n, 4, 3);
        let cfg = random_loss_config(&mut rng);
        let factors: Vec<f64> = (0..n).map(|i| scale * (1.0 + i as f64)).collect();
        let mut scaled = e.clone();
        for m in scaled.matrices_mut() {
            *m = scale_rows(m, &factors);
        }
        let (a, _) = total_loss(&e, &cfg).unwrap();
        let (b, _) = total_loss(&scaled, &cfg).unwrap();
        prop_assert!((a.total - b.total).abs() < 1e-9 * (1.0 + a.total.abs()));
    }

    #[test]
    fn per_sample_losses_follow_batch_permutations(seed in any::<u64>(), n in 2usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = random_embeddings(&mut rng, n, 4, 3);
        let cfg = random_loss_config(&mut rng);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.rotate_left(1);
        perm.swap(0, n - 1);
        let (a, _) = total_loss(&e, &cfg).unwrap();
        let (b, _) = total_loss(&permute(&e, &perm), &cfg).unwrap();
        for (i, &p) in perm.iter().enumerate() {
            prop_assert!((b.per_sample_time[i] - a.per_sample_time[p]).abs() < 1e-12);
            prop_assert!((b.per_sample_consistency[i] - a.per_sample_consistency[p]).abs() < 1e-12);
        }
        prop_assert!((a.total - b.total).abs() < 1e-12);
    }

    #[test]
    fn breakdown_is_consistent(seed in any::<u64>(), n in 2usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = random_embeddings(&mut rng, n, 4, 3);
        let cfg = random_loss_config(&mut rng);
        let (b, _) = total_loss(&e, &cfg).unwrap();
        prop_assert!((b.total - (b.time + b.symbol + cfg.lambda * b.consistency)).abs() < 1e-9);
    }
}
