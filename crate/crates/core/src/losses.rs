//! Contrastive objectives: time-wise and symbol-wise InfoNCE on encoder
//! embeddings, cross-domain InfoNCE on projections, the symbol-temporal
//! consistency term, and their weighted total. Every loss comes with an
//! analytic gradient with respect to the embeddings.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, StcError};
use crate::model::EmbeddingSet;
use crate::nn::Matrix;

/// Which terms enter the InfoNCE denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DenominatorMode {
    /// Negatives only, as the loss is literally written. Can go negative.
    PaperLiteral,
    /// Positive pair plus negatives (NT-Xent). Always ≥ 0.
    SimclrStandard,
}

impl FromStr for DenominatorMode {
    type Err = StcError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper_literal" => Ok(Self::PaperLiteral),
            "simclr_standard" => Ok(Self::SimclrStandard),
            other => Err(StcError::Config(format!(
                "unknown denominator mode {other:?} (expected paper_literal or simclr_standard)"
            ))),
        }
    }
}

impl std::fmt::Display for DenominatorMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::PaperLiteral => "paper_literal",
            Self::SimclrStandard => "simclr_standard",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    /// Temperature.
    pub tau: f64,
    /// Consistency margin.
    pub delta: f64,
    /// Consistency weight.
    pub lambda: f64,
    pub denominator_mode: DenominatorMode,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            tau: 0.2,
            delta: 1.0,
            lambda: 0.5,
            denominator_mode: DenominatorMode::SimclrStandard,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(StcError::Config(format!("loss.tau must be > 0, got {}", self.tau)));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(StcError::Config(format!("loss.delta must be >= 0, got {}", self.delta)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(StcError::Config(format!("loss.lambda must be >= 0, got {}", self.lambda)));
        }
        Ok(())
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Cosine similarity; zero vectors are an error.
pub fn cosine_sim(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(StcError::Shape(format!("vectors of length {} and {}", a.len(), b.len())));
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(StcError::InvalidArgument("cosine similarity of a zero vector".into()));
    }
    let c = a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (na * nb);
    Ok(c.clamp(-1.0, 1.0))
}

/// Row-normalised copy of `m` together with the original row norms.
struct UnitRows {
    unit: Matrix,
    norms: Vec<f64>,
}

impl UnitRows {
    fn new(m: &Matrix, what: &str) -> Result<Self> {
        let mut unit = m.clone();
        let mut norms = Vec::with_capacity(m.rows());
        for r in 0..m.rows() {
            let n = norm(m.row(r));
            if n == 0.0 || !n.is_finite() {
                return Err(StcError::Numerical(format!("{what} row {r} has norm {n}")));
            }
            unit.row_mut(r).iter_mut().for_each(|v| *v /= n);
            norms.push(n);
        }
        Ok(Self { unit, norms })
    }

    /// Converts ∂L/∂(unit rows) into ∂L/∂(original rows).
    fn backprop(&self, grad_unit: &Matrix) -> Matrix {
        let mut out = grad_unit.clone();
        for r in 0..out.rows() {
            let u = self.unit.row(r);
            let g = out.row_mut(r);
            let radial: f64 = g.iter().zip(u).map(|(a, b)| a * b).sum();
            for (gi, ui) in g.iter_mut().zip(u) {
                *gi = (*gi - radial * ui) / self.norms[r];
            }
        }
        out
    }
}

/// Per-sample InfoNCE losses plus gradients of `Σ_i w_i L_i`.
#[derive(Debug, Clone)]
pub struct NceOutput {
    pub losses: Vec<f64>,
    pub grad_anchors: Matrix,
    pub grad_positives: Matrix,
    pub grad_pool: Vec<Matrix>,
}

fn check_nce_inputs(anchors: &Matrix, positives: &Matrix, pool: &[&Matrix]) -> Result<()> {
    if anchors.rows() < 2 {
        return Err(StcError::InvalidArgument(format!(
            "contrastive loss needs a batch of at least 2 for negatives, got {}",
            anchors.rows()
        )));
    }
    if pool.is_empty() {
        return Err(StcError::InvalidArgument("empty negatives pool".into()));
    }
    for m in std::iter::once(&positives).chain(pool.iter()) {
        if m.shape() != anchors.shape() {
            return Err(StcError::Shape(format!(
                "embedding matrices {:?} and {:?} differ",
                anchors.shape(),
                m.shape()
            )));
        }
    }
    Ok(())
}

/// InfoNCE with gradients.
///
/// Anchor `i` pairs with positive row `i`. Its negatives are rows `j ≠ i` of
/// every matrix in `pool`. `weights[i]` scales sample `i` in the gradient.
pub fn info_nce_with_grad(
    anchors: &Matrix,
    positives: &Matrix,
    pool: &[&Matrix],
    cfg: &LossConfig,
    weights: &[f64],
) -> Result<NceOutput> {
    cfg.validate()?;
    check_nce_inputs(anchors, positives, pool)?;
    let n = anchors.rows();
    if weights.len() != n {
        return Err(StcError::Shape("one weight per sample required".into()));
    }
    let a = UnitRows::new(anchors, "anchor")?;
    let p = UnitRows::new(positives, "positive")?;
    let pool_units = pool
        .iter()
        .map(|m| UnitRows::new(m, "negative"))
        .collect::<Result<Vec<_>>>()?;
    let include_positive = cfg.denominator_mode == DenominatorMode::SimclrStandard;
    let inv_tau = 1.0 / cfg.tau;

    let mut losses = Vec::with_capacity(n);
    let mut ga = Matrix::zeros(n, anchors.cols());
    let mut gp = Matrix::zeros(n, anchors.cols());
    let mut gpool: Vec<Matrix> = pool.iter().map(|_| Matrix::zeros(n, anchors.cols())).collect();
    let mut neg_logits = Vec::with_capacity(pool.len() * (n - 1));

    for i in 0..n {
        let ai = a.unit.row(i);
        let s_pos = dot(ai, p.unit.row(i)) * inv_tau;
        neg_logits.clear();
        for pu in &pool_units {
            for j in (0..n).filter(|&j| j != i) {
                neg_logits.push(dot(ai, pu.unit.row(j)) * inv_tau);
            }
        }
        let mut max = neg_logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if include_positive {
            max = max.max(s_pos);
        }
        let mut denom: f64 = neg_logits.iter().map(|s| (s - max).exp()).sum();
        if include_positive {
            denom += (s_pos - max).exp();
        }
        let lse = max + denom.ln();
        losses.push(lse - s_pos);

        let w = weights[i];
        if w == 0.0 {
            continue;
        }
        let coef_pos = if include_positive {
            (s_pos - lse).exp() - 1.0
        } else {
            -1.0
        } * w
            * inv_tau;
        for (g, x) in ga.row_mut(i).iter_mut().zip(p.unit.row(i)) {
            *g += coef_pos * x;
        }
        for (g, x) in gp.row_mut(i).iter_mut().zip(ai) {
            *g += coef_pos * x;
        }
        let mut idx = 0;
        for (m, pu) in pool_units.iter().enumerate() {
            for j in (0..n).filter(|&j| j != i) {
                let coef = (neg_logits[idx] - lse).exp() * w * inv_tau;
                idx += 1;
                for (g, x) in ga.row_mut(i).iter_mut().zip(pu.unit.row(j)) {
                    *g += coef * x;
                }
                for (g, x) in gpool[m].row_mut(j).iter_mut().zip(ai) {
                    *g += coef * x;
                }
            }
        }
    }

    Ok(NceOutput {
        losses,
        grad_anchors: a.backprop(&ga),
        grad_positives: p.backprop(&gp),
        grad_pool: gpool
            .iter()
            .zip(&pool_units)
            .map(|(g, u)| u.backprop(g))
            .collect(),
    })
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Per-sample InfoNCE losses.
pub fn info_nce(anchors: &Matrix, positives: &Matrix, pool: &[&Matrix], cfg: &LossConfig) -> Result<Vec<f64>> {
    let zeros = vec![0.0; anchors.rows()];
    Ok(info_nce_with_grad(anchors, positives, pool, cfg, &zeros)?.losses)
}

/// Time-wise loss: anchors `hT`, positives `hT̃`, negatives from both views.
pub fn time_loss(e: &EmbeddingSet, cfg: &LossConfig) -> Result<Vec<f64>> {
    info_nce(&e.h_time, &e.h_time_aug, &[&e.h_time, &e.h_time_aug], cfg)
}

/// Symbol-wise loss: anchors `hS`, positives `hS̃`, negatives from both views.
pub fn symbol_loss(e: &EmbeddingSet, cfg: &LossConfig) -> Result<Vec<f64>> {
    info_nce(&e.h_symbol, &e.h_symbol_aug, &[&e.h_symbol, &e.h_symbol_aug], cfg)
}

/// Cross-domain loss `L_{a,b}`: negatives are the other samples' `b` rows.
pub fn cross_pair_loss(a: &Matrix, b: &Matrix, cfg: &LossConfig) -> Result<Vec<f64>> {
    info_nce(a, b, &[b], cfg)
}

/// Consistency loss: `Σ_{a∈{zT,zT̃}} Σ_{b∈{zS,zS̃}} (L_{zT,zS} − L_{a,b} + δ)`.
pub fn consistency_loss(e: &EmbeddingSet, cfg: &LossConfig) -> Result<Vec<f64>> {
    let pairs = cross_pairs(e);
    let per_pair = pairs
        .iter()
        .map(|(a, b)| cross_pair_loss(a, b, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(combine_consistency(&per_pair, cfg.delta))
}

/// The four (time view, symbol view) pairs, `(zT, zS)` first.
fn cross_pairs(e: &EmbeddingSet) -> [(&Matrix, &Matrix); 4] {
    [
        (&e.z_time, &e.z_symbol),
        (&e.z_time, &e.z_symbol_aug),
        (&e.z_time_aug, &e.z_symbol),
        (&e.z_time_aug, &e.z_symbol_aug),
    ]
}

fn combine_consistency(per_pair: &[Vec<f64>], delta: f64) -> Vec<f64> {
    let anchor = &per_pair[0];
    (0..anchor.len())
        .map(|i| per_pair.iter().map(|l| anchor[i] - l[i] + delta).sum())
        .collect()
}

/// Mean losses and per-sample values.
#[derive(Debug, Clone, PartialEq)]
pub struct LossBreakdown {
    pub time: f64,
    pub symbol: f64,
    pub consistency: f64,
    pub total: f64,
    pub per_sample_time: Vec<f64>,
    pub per_sample_symbol: Vec<f64>,
    pub per_sample_consistency: Vec<f64>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Total objective `mean L_T + mean L_S + λ · mean L_TS` with gradients
/// with respect to all eight embedding matrices.
pub fn total_loss(e: &EmbeddingSet, cfg: &LossConfig) -> Result<(LossBreakdown, EmbeddingSet)> {
    cfg.validate()?;
    e.validate()?;
    let n = e.batch_size();
    let w = vec![1.0 / n as f64; n];

    let t = info_nce_with_grad(&e.h_time, &e.h_time_aug, &[&e.h_time, &e.h_time_aug], cfg, &w)?;
    let s = info_nce_with_grad(&e.h_symbol, &e.h_symbol_aug, &[&e.h_symbol, &e.h_symbol_aug], cfg, &w)?;

    // L_TS,i = 3·L_{zT,zS} − L_{zT,zS̃} − L_{zT̃,zS} − L_{zT̃,zS̃} + 4δ
    let pair_coef = [3.0, -1.0, -1.0, -1.0];
    let pairs = cross_pairs(e);
    let mut per_pair = Vec::with_capacity(4);
    let mut z_grads = [
        Matrix::zeros(n, e.z_time.cols()),
        Matrix::zeros(n, e.z_time.cols()),
        Matrix::zeros(n, e.z_time.cols()),
        Matrix::zeros(n, e.z_time.cols()),
    ];
    // z_grads order: zT, zT̃, zS, zS̃
    let slot = |m: &Matrix| -> usize {
        if std::ptr::eq(m, &e.z_time) {
            0
        } else if std::ptr::eq(m, &e.z_time_aug) {
            1
        } else if std::ptr::eq(m, &e.z_symbol) {
            2
        } else {
            3
        }
    };
    for ((a, b), coef) in pairs.iter().zip(pair_coef) {
        let wp: Vec<f64> = w.iter().map(|x| x * cfg.lambda * coef).collect();
        let out = info_nce_with_grad(a, b, &[b], cfg, &wp)?;
        z_grads[slot(a)].add_assign(&out.grad_anchors);
        z_grads[slot(b)].add_assign(&out.grad_positives);
        z_grads[slot(b)].add_assign(&out.grad_pool[0]);
        per_pair.push(out.losses);
    }
    let per_sample_consistency = combine_consistency(&per_pair, cfg.delta);

    let mut h_time = t.grad_anchors;
    h_time.add_assign(&t.grad_pool[0]);
    let mut h_time_aug = t.grad_positives;
    h_time_aug.add_assign(&t.grad_pool[1]);
    let mut h_symbol = s.grad_anchors;
    h_symbol.add_assign(&s.grad_pool[0]);
    let mut h_symbol_aug = s.grad_positives;
    h_symbol_aug.add_assign(&s.grad_pool[1]);

    let [z_time, z_time_aug, z_symbol, z_symbol_aug] = z_grads;
    let grads = EmbeddingSet {
        h_time,
        h_time_aug,
        h_symbol,
        h_symbol_aug,
        z_time,
        z_time_aug,
        z_symbol,
        z_symbol_aug,
    };

    let (lt, ls, lts) = (mean(&t.losses), mean(&s.losses), mean(&per_sample_consistency));
    let total = lt + ls + cfg.lambda * lts;
    if !total.is_finite() {
        return Err(StcError::Numerical(format!("total loss is {total}")));
    }
    Ok((
        LossBreakdown {
            time: lt,
            symbol: ls,
            consistency: lts,
            total,
            per_sample_time: t.losses,
            per_sample_symbol: s.losses,
            per_sample_consistency,
        },
        grads,
    ))
}
