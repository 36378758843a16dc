//! Twin encoders and projectors.
//!
//! The time encoder sees the flattened, channel-standardised window; the
//! symbol encoder sees the z-scored symbol histogram. Both projectors map into
//! the same latent width.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::TimeSeriesSample;
use crate::error::{Result, StcError};
use crate::nn::{mlp_backward, mlp_forward, mlp_infer, Matrix, MlpActivations, MlpGrads, MlpParams, Parameters};
use crate::symbolize::{ChannelStats, SymbolVector};

/// Layer widths. Encoders are `[input, hidden..., h_dim]`, projectors
/// `[h_dim, proj_hidden..., z_dim]`; ReLU between layers, identity at the end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub h_dim: usize,
    pub z_dim: usize,
    pub hidden: Vec<usize>,
    pub proj_hidden: Vec<usize>,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            h_dim: 128,
            z_dim: 32,
            hidden: vec![256],
            proj_hidden: vec![64],
        }
    }
}

/// Data-side dimensions the encoders are built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataDims {
    pub channels: usize,
    pub length: usize,
    pub n_symbols: usize,
}

impl DataDims {
    pub fn time_input(&self) -> usize {
        self.channels * self.length
    }

    pub fn symbol_input(&self) -> usize {
        self.channels * self.n_symbols
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StcModel {
    pub dims: DataDims,
    pub arch: Architecture,
    pub time_encoder: MlpParams,
    pub symbol_encoder: MlpParams,
    pub time_projector: MlpParams,
    pub symbol_projector: MlpParams,
}

fn chain(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    let mut v = vec![input];
    v.extend_from_slice(hidden);
    v.push(output);
    v
}

impl StcModel {
    pub fn new<R: Rng + ?Sized>(dims: DataDims, arch: Architecture, rng: &mut R) -> Result<Self> {
        let time_encoder = MlpParams::relu_mlp(&chain(dims.time_input(), &arch.hidden, arch.h_dim), rng)?;
        let symbol_encoder = MlpParams::relu_mlp(&chain(dims.symbol_input(), &arch.hidden, arch.h_dim), rng)?;
        let time_projector = MlpParams::relu_mlp(&chain(arch.h_dim, &arch.proj_hidden, arch.z_dim), rng)?;
        let symbol_projector = MlpParams::relu_mlp(&chain(arch.h_dim, &arch.proj_hidden, arch.z_dim), rng)?;
        Self::from_parts(dims, arch, time_encoder, symbol_encoder, time_projector, symbol_projector)
    }

    pub fn from_parts(
        dims: DataDims,
        arch: Architecture,
        time_encoder: MlpParams,
        symbol_encoder: MlpParams,
        time_projector: MlpParams,
        symbol_projector: MlpParams,
    ) -> Result<Self> {
        let check = |name: &str, net: &MlpParams, input: usize, output: usize| -> Result<()> {
            if net.input_dim() != input || net.output_dim() != output {
                return Err(StcError::Shape(format!(
                    "{name} maps {} → {}, expected {input} → {output}",
                    net.input_dim(),
                    net.output_dim()
                )));
            }
            Ok(())
        };
        check("time encoder", &time_encoder, dims.time_input(), arch.h_dim)?;
        check("symbol encoder", &symbol_encoder, dims.symbol_input(), arch.h_dim)?;
        check("time projector", &time_projector, arch.h_dim, arch.z_dim)?;
        check("symbol projector", &symbol_projector, arch.h_dim, arch.z_dim)?;
        Ok(Self {
            dims,
            arch,
            time_encoder,
            symbol_encoder,
            time_projector,
            symbol_projector,
        })
    }

    pub fn networks(&self) -> [(&'static str, &MlpParams); 4] {
        [
            ("time_encoder", &self.time_encoder),
            ("symbol_encoder", &self.symbol_encoder),
            ("time_projector", &self.time_projector),
            ("symbol_projector", &self.symbol_projector),
        ]
    }
}

fn prefixed<'a>(parts: [(&str, &'a dyn Parameters); 4]) -> Vec<(String, &'a [f64])> {
    parts
        .into_iter()
        .flat_map(|(prefix, p)| {
            p.named_tensors()
                .into_iter()
                .map(move |(name, t)| (format!("{prefix}.{name}"), t))
        })
        .collect()
}

impl Parameters for StcModel {
    fn named_tensors(&self) -> Vec<(String, &[f64])> {
        prefixed([
            ("time_encoder", &self.time_encoder),
            ("symbol_encoder", &self.symbol_encoder),
            ("time_projector", &self.time_projector),
            ("symbol_projector", &self.symbol_projector),
        ])
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = self.time_encoder.tensors_mut();
        out.extend(self.symbol_encoder.tensors_mut());
        out.extend(self.time_projector.tensors_mut());
        out.extend(self.symbol_projector.tensors_mut());
        out
    }
}

/// Gradients mirroring [`StcModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct StcGrads {
    pub time_encoder: MlpGrads,
    pub symbol_encoder: MlpGrads,
    pub time_projector: MlpGrads,
    pub symbol_projector: MlpGrads,
}

impl Parameters for StcGrads {
    fn named_tensors(&self) -> Vec<(String, &[f64])> {
        prefixed([
            ("time_encoder", &self.time_encoder),
            ("symbol_encoder", &self.symbol_encoder),
            ("time_projector", &self.time_projector),
            ("symbol_projector", &self.symbol_projector),
        ])
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = self.time_encoder.tensors_mut();
        out.extend(self.symbol_encoder.tensors_mut());
        out.extend(self.time_projector.tensors_mut());
        out.extend(self.symbol_projector.tensors_mut());
        out
    }
}

/// The eight embeddings of a batch: encoder level `h` and projection level
/// `z`, each for the original and augmented view of both domains.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    pub h_time: Matrix,
    pub h_time_aug: Matrix,
    pub h_symbol: Matrix,
    pub h_symbol_aug: Matrix,
    pub z_time: Matrix,
    pub z_time_aug: Matrix,
    pub z_symbol: Matrix,
    pub z_symbol_aug: Matrix,
}

impl EmbeddingSet {
    pub fn batch_size(&self) -> usize {
        self.h_time.rows()
    }

    pub fn matrices(&self) -> [&Matrix; 8] {
        [
            &self.h_time,
            &self.h_time_aug,
            &self.h_symbol,
            &self.h_symbol_aug,
            &self.z_time,
            &self.z_time_aug,
            &self.z_symbol,
            &self.z_symbol_aug,
        ]
    }

    pub fn matrices_mut(&mut self) -> [&mut Matrix; 8] {
        [
            &mut self.h_time,
            &mut self.h_time_aug,
            &mut self.h_symbol,
            &mut self.h_symbol_aug,
            &mut self.z_time,
            &mut self.z_time_aug,
            &mut self.z_symbol,
            &mut self.z_symbol_aug,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.batch_size();
        let h = self.h_time.cols();
        let z = self.z_time.cols();
        for (i, m) in self.matrices().iter().enumerate() {
            let width = if i < 4 { h } else { z };
            if m.shape() != (n, width) {
                return Err(StcError::Shape(format!(
                    "embedding {i} is {:?}, expected {:?}",
                    m.shape(),
                    (n, width)
                )));
            }
            if !m.is_finite() {
                return Err(StcError::NonFinite(format!("embedding {i}")));
            }
        }
        Ok(())
    }
}

/// Model inputs for one batch, one row per sample.
#[derive(Debug, Clone)]
pub struct ViewBatch {
    pub time: Matrix,
    pub time_aug: Matrix,
    pub symbol: Matrix,
    pub symbol_aug: Matrix,
}

/// Everything [`backward_embeddings`] needs from the forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    enc_time: MlpActivations,
    enc_time_aug: MlpActivations,
    enc_symbol: MlpActivations,
    enc_symbol_aug: MlpActivations,
    proj_time: MlpActivations,
    proj_time_aug: MlpActivations,
    proj_symbol: MlpActivations,
    proj_symbol_aug: MlpActivations,
}

/// Computes all eight embeddings; original and augmented views share weights.
pub fn forward_embeddings(model: &StcModel, batch: &ViewBatch) -> Result<(EmbeddingSet, ForwardCache)> {
    let n = batch.time.rows();
    for m in [&batch.time_aug, &batch.symbol, &batch.symbol_aug] {
        if m.rows() != n {
            return Err(StcError::Shape("views disagree on batch size".into()));
        }
    }
    let enc_time = mlp_forward(&model.time_encoder, &batch.time)?;
    let enc_time_aug = mlp_forward(&model.time_encoder, &batch.time_aug)?;
    let enc_symbol = mlp_forward(&model.symbol_encoder, &batch.symbol)?;
    let enc_symbol_aug = mlp_forward(&model.symbol_encoder, &batch.symbol_aug)?;
    let proj_time = mlp_forward(&model.time_projector, enc_time.output())?;
    let proj_time_aug = mlp_forward(&model.time_projector, enc_time_aug.output())?;
    let proj_symbol = mlp_forward(&model.symbol_projector, enc_symbol.output())?;
    let proj_symbol_aug = mlp_forward(&model.symbol_projector, enc_symbol_aug.output())?;
    let set = EmbeddingSet {
        h_time: enc_time.output().clone(),
        h_time_aug: enc_time_aug.output().clone(),
        h_symbol: enc_symbol.output().clone(),
        h_symbol_aug: enc_symbol_aug.output().clone(),
        z_time: proj_time.output().clone(),
        z_time_aug: proj_time_aug.output().clone(),
        z_symbol: proj_symbol.output().clone(),
        z_symbol_aug: proj_symbol_aug.output().clone(),
    };
    Ok((
        set,
        ForwardCache {
            enc_time,
            enc_time_aug,
            enc_symbol,
            enc_symbol_aug,
            proj_time,
            proj_time_aug,
            proj_symbol,
            proj_symbol_aug,
        },
    ))
}

/// Backpropagates embedding gradients (as produced by
/// [`crate::losses::total_loss`]) into parameter gradients.
pub fn backward_embeddings(model: &StcModel, cache: &ForwardCache, grads: &EmbeddingSet) -> Result<StcGrads> {
    let (mut gp_t, gh_t) = mlp_backward(&model.time_projector, &cache.proj_time, &grads.z_time)?;
    let (gp_t2, gh_t2) = mlp_backward(&model.time_projector, &cache.proj_time_aug, &grads.z_time_aug)?;
    gp_t.add_assign(&gp_t2);
    let (mut gp_s, gh_s) = mlp_backward(&model.symbol_projector, &cache.proj_symbol, &grads.z_symbol)?;
    let (gp_s2, gh_s2) = mlp_backward(&model.symbol_projector, &cache.proj_symbol_aug, &grads.z_symbol_aug)?;
    gp_s.add_assign(&gp_s2);

    let mut d = grads.h_time.clone();
    d.add_assign(&gh_t);
    let (mut ge_t, _) = mlp_backward(&model.time_encoder, &cache.enc_time, &d)?;
    let mut d = grads.h_time_aug.clone();
    d.add_assign(&gh_t2);
    ge_t.add_assign(&mlp_backward(&model.time_encoder, &cache.enc_time_aug, &d)?.0);

    let mut d = grads.h_symbol.clone();
    d.add_assign(&gh_s);
    let (mut ge_s, _) = mlp_backward(&model.symbol_encoder, &cache.enc_symbol, &d)?;
    let mut d = grads.h_symbol_aug.clone();
    d.add_assign(&gh_s2);
    ge_s.add_assign(&mlp_backward(&model.symbol_encoder, &cache.enc_symbol_aug, &d)?.0);

    Ok(StcGrads {
        time_encoder: ge_t,
        symbol_encoder: ge_s,
        time_projector: gp_t,
        symbol_projector: gp_s,
    })
}

/// Inference path for the time domain: returns `(hT, zT)`.
pub fn embed_time(model: &StcModel, x: &Matrix) -> Result<(Matrix, Matrix)> {
    let h = mlp_infer(&model.time_encoder, x)?;
    let z = mlp_infer(&model.time_projector, &h)?;
    Ok((h, z))
}

/// Inference path for the symbol domain: returns `(hS, zS)`.
pub fn embed_symbol(model: &StcModel, x: &Matrix) -> Result<(Matrix, Matrix)> {
    let h = mlp_infer(&model.symbol_encoder, x)?;
    let z = mlp_infer(&model.symbol_projector, &h)?;
    Ok((h, z))
}

/// Flattens samples channel-major after standardising each channel with
/// `stats` (zero-σ channels are only centred).
pub fn time_input(samples: &[&TimeSeriesSample], stats: &ChannelStats) -> Result<Matrix> {
    let first = samples
        .first()
        .ok_or_else(|| StcError::InvalidArgument("empty batch".into()))?;
    let (k, l) = (first.channels(), first.len());
    if stats.channels() != k {
        return Err(StcError::Shape(format!(
            "stats cover {} channels, samples have {k}",
            stats.channels()
        )));
    }
    let mut data = Vec::with_capacity(samples.len() * k * l);
    for s in samples {
        if (s.channels(), s.len()) != (k, l) {
            return Err(StcError::Shape(format!(
                "sample is {}x{}, batch is {k}x{l}",
                s.channels(),
                s.len()
            )));
        }
        for c in 0..k {
            let (m, sd) = (stats.mean[c], stats.sigma[c]);
            let sd = if sd > 0.0 { sd } else { 1.0 };
            data.extend(s.channel(c).iter().map(|v| (v - m) / sd));
        }
    }
    Matrix::new(samples.len(), k * l, data)
}

/// Stacks normalized symbol vectors into rows.
pub fn symbol_input(vectors: &[&SymbolVector]) -> Result<Matrix> {
    let first = vectors
        .first()
        .ok_or_else(|| StcError::InvalidArgument("empty batch".into()))?;
    let d = first.dim();
    let mut data = Vec::with_capacity(vectors.len() * d);
    for v in vectors {
        let norm = v
            .normalized()
            .ok_or_else(|| StcError::InvalidArgument("symbol vector is not normalized".into()))?;
        if norm.len() != d {
            return Err(StcError::Shape("symbol vectors differ in width".into()));
        }
        data.extend_from_slice(norm);
    }
    Matrix::new(vectors.len(), d, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small() -> StcModel {
        let dims = DataDims {
            channels: 2,
            length: 5,
            n_symbols: 4,
        };
        let arch = Architecture {
            h_dim: 6,
            z_dim: 3,
            hidden: vec![7],
            proj_hidden: vec![4],
        };
        StcModel::new(dims, arch, &mut ChaCha8Rng::seed_from_u64(1)).unwrap()
    }

    fn rand_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
        Matrix::new(rows, cols, (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    fn batch(n: usize, seed: u64) -> ViewBatch {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ViewBatch {
            time: rand_matrix(n, 10, &mut rng),
            time_aug: rand_matrix(n, 10, &mut rng),
            symbol: rand_matrix(n, 8, &mut rng),
            symbol_aug: rand_matrix(n, 8, &mut rng),
        }
    }

    #[test]
    fn shapes_and_finiteness() {
        let model = small();
        let (e, _) = forward_embeddings(&model, &batch(8, 2)).unwrap();
        e.validate().unwrap();
        assert_eq!(e.h_time.shape(), (8, 6));
        assert_eq!(e.z_symbol_aug.shape(), (8, 3));
    }

    #[test]
    fn zero_weights_give_bias_images() {
        let mut model = small();
        for t in model.tensors_mut() {
            t.iter_mut().for_each(|v| *v = 0.0);
        }
        model.time_encoder.layers_mut()[1].bias = vec![0.5; 6];
        model.time_projector.layers_mut()[1].bias = vec![0.25, -1.0, 2.0];
        let (e, _) = forward_embeddings(&model, &batch(3, 4)).unwrap();
        for r in 0..3 {
            assert_eq!(e.h_time.row(r), &[0.5; 6]);
            assert_eq!(e.z_time.row(r), &[0.25, -1.0, 2.0]);
        }
    }

    #[test]
    fn shared_weights_across_views() {
        let model = small();
        let mut b = batch(4, 3);
        b.time_aug = b.time.clone();
        let (e, _) = forward_embeddings(&model, &b).unwrap();
        assert_eq!(e.h_time, e.h_time_aug);
        assert_eq!(e.z_time, e.z_time_aug);
    }

    #[test]
    fn embed_paths_agree_with_forward() {
        let model = small();
        let b = batch(32, 5);
        let (e, _) = forward_embeddings(&model, &b).unwrap();
        let (h, z) = embed_time(&model, &b.time).unwrap();
        assert_eq!((h, z.clone()), (e.h_time.clone(), e.z_time.clone()));
        let (_, zs) = embed_symbol(&model, &b.symbol).unwrap();
        assert_eq!(zs, e.z_symbol);
        for r in [0, 7, 31] {
            let single = b.time.select_rows(&[r]).unwrap();
            let (_, z1) = embed_time(&model, &single).unwrap();
            assert_eq!(z1.row(0), z.row(r));
        }
    }

    #[test]
    fn shape_errors() {
        let model = small();
        let mut b = batch(4, 6);
        b.symbol = Matrix::zeros(4, 9);
        assert!(forward_embeddings(&model, &b).is_err());
        assert!(time_input(&[], &ChannelStats::new(vec![0.0], vec![1.0]).unwrap()).is_err());
        assert!(symbol_input(&[]).is_err());
    }

    #[test]
    fn projector_widths_must_agree() {
        let m = small();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let other = MlpParams::relu_mlp(&[6, 4, 5], &mut rng).unwrap();
        assert!(StcModel::from_parts(
            m.dims,
            m.arch.clone(),
            m.time_encoder.clone(),
            m.symbol_encoder.clone(),
            m.time_projector.clone(),
            other
        )
        .is_err());
    }
}
