use rand::Rng;
use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use super::Parameters;
use crate::error::{Result, StcError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Identity => x,
        }
    }

    #[inline]
    fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

/// Fully connected layer computing `act(x · W + b)` with `W` stored `in × out`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weight: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn input_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.cols()
    }
}

/// Parameters of a multilayer perceptron.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    layers: Vec<DenseLayer>,
}

impl MlpParams {
    /// Builds a network from explicit layers, checking that dimensions chain.
    pub fn from_layers(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(StcError::InvalidArgument("an MLP needs at least one layer".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.bias.len() != l.output_dim() {
                return Err(StcError::Shape(format!(
                    "layer {i}: bias length {} != output dim {}",
                    l.bias.len(),
                    l.output_dim()
                )));
            }
            if !l.weight.is_finite() || l.bias.iter().any(|b| !b.is_finite()) {
                return Err(StcError::NonFinite(format!("layer {i} parameters")));
            }
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(StcError::Shape(format!(
                    "layer {i} outputs {} but layer {} expects {}",
                    pair[0].output_dim(),
                    i + 1,
                    pair[1].input_dim()
                )));
            }
        }
        Ok(Self { layers })
    }

    /// Glorot-uniform initialised network; `activations[i]` applies after layer `i`.
    pub fn init<R: Rng + ?Sized>(
        sizes: &[usize],
        activations: &[Activation],
        rng: &mut R,
    ) -> Result<Self> {
        if sizes.len() < 2 || activations.len() != sizes.len() - 1 {
            return Err(StcError::InvalidArgument(format!(
                "{} layer sizes need {} activations, got {}",
                sizes.len(),
                sizes.len().saturating_sub(1),
                activations.len()
            )));
        }
        if sizes.contains(&0) {
            return Err(StcError::InvalidArgument("layer sizes must be positive".into()));
        }
        let layers = sizes
            .windows(2)
            .zip(activations)
            .map(|(io, &activation)| {
                let (fan_in, fan_out) = (io[0], io[1]);
                let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let data = (0..fan_in * fan_out)
                    .map(|_| rng.random_range(-a..a))
                    .collect();
                DenseLayer {
                    weight: Matrix::new(fan_in, fan_out, data).expect("sizes are positive"),
                    bias: vec![0.0; fan_out],
                    activation,
                }
            })
            .collect();
        Self::from_layers(layers)
    }

    /// ReLU on every hidden layer, identity on the output layer.
    pub fn relu_mlp<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Result<Self> {
        let n = sizes.len().saturating_sub(1);
        let mut acts = vec![Activation::Relu; n];
        if let Some(last) = acts.last_mut() {
            *last = Activation::Identity;
        }
        Self::init(sizes, &acts, rng)
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    /// `[input, hidden..., output]`
    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut s = vec![self.input_dim()];
        s.extend(self.layers.iter().map(DenseLayer::output_dim));
        s
    }

    pub fn activations(&self) -> Vec<Activation> {
        self.layers.iter().map(|l| l.activation).collect()
    }

    pub fn zeros_like(&self) -> MlpGrads {
        MlpGrads {
            weights: self
                .layers
                .iter()
                .map(|l| Matrix::zeros(l.input_dim(), l.output_dim()))
                .collect(),
            biases: self.layers.iter().map(|l| vec![0.0; l.output_dim()]).collect(),
        }
    }
}

impl Parameters for MlpParams {
    fn named_tensors(&self) -> Vec<(String, &[f64])> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for (i, l) in self.layers.iter().enumerate() {
            out.push((format!("layer{i}.weight"), l.weight.data()));
            out.push((format!("layer{i}.bias"), l.bias.as_slice()));
        }
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for l in &mut self.layers {
            out.push(l.weight.data_mut());
            out.push(l.bias.as_mut_slice());
        }
        out
    }
}

/// Gradients mirroring [`MlpParams`] layer by layer.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

impl MlpGrads {
    pub fn add_assign(&mut self, other: &MlpGrads) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            a.add_assign(b);
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }
}

impl Parameters for MlpGrads {
    fn named_tensors(&self) -> Vec<(String, &[f64])> {
        let mut out = Vec::with_capacity(2 * self.weights.len());
        for (i, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            out.push((format!("layer{i}.weight"), w.data()));
            out.push((format!("layer{i}.bias"), b.as_slice()));
        }
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(2 * self.weights.len());
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            out.push(w.data_mut());
            out.push(b.as_mut_slice());
        }
        out
    }
}

/// Intermediate values of one forward pass, kept for backward.
#[derive(Debug, Clone)]
pub struct MlpActivations {
    /// Input of each layer; `inputs[0]` is the network input.
    inputs: Vec<Matrix>,
    /// Pre-activation of each layer.
    pre: Vec<Matrix>,
    output: Matrix,
}

impl MlpActivations {
    pub fn output(&self) -> &Matrix {
        &self.output
    }

    pub fn into_output(self) -> Matrix {
        self.output
    }

    pub fn batch_size(&self) -> usize {
        self.output.rows()
    }
}

fn layer_forward(layer: &DenseLayer, x: &Matrix) -> Result<(Matrix, Matrix)> {
    let mut pre = x.matmul(&layer.weight)?;
    for r in 0..pre.rows() {
        for (v, b) in pre.row_mut(r).iter_mut().zip(&layer.bias) {
            *v += b;
        }
    }
    let mut out = pre.clone();
    for v in out.data_mut() {
        *v = layer.activation.apply(*v);
    }
    Ok((pre, out))
}

fn check_input(params: &MlpParams, input: &Matrix) -> Result<()> {
    if input.cols() != params.input_dim() {
        return Err(StcError::Shape(format!(
            "network expects {} input features, got {}",
            params.input_dim(),
            input.cols()
        )));
    }
    Ok(())
}

pub fn mlp_forward(params: &MlpParams, input: &Matrix) -> Result<MlpActivations> {
    check_input(params, input)?;
    let mut inputs = Vec::with_capacity(params.layers.len());
    let mut pre = Vec::with_capacity(params.layers.len());
    let mut x = input.clone();
    for layer in &params.layers {
        let (p, out) = layer_forward(layer, &x)?;
        inputs.push(x);
        pre.push(p);
        x = out;
    }
    if !x.is_finite() {
        return Err(StcError::NonFinite("MLP output".into()));
    }
    Ok(MlpActivations {
        inputs,
        pre,
        output: x,
    })
}

/// Forward pass without retaining intermediates.
pub fn mlp_infer(params: &MlpParams, input: &Matrix) -> Result<Matrix> {
    check_input(params, input)?;
    let mut x = input.clone();
    for layer in &params.layers {
        x = layer_forward(layer, &x)?.1;
    }
    if !x.is_finite() {
        return Err(StcError::NonFinite("MLP output".into()));
    }
    Ok(x)
}

/// Backpropagates `output_gradient` (∂loss/∂output) and returns parameter
/// gradients together with ∂loss/∂input.
pub fn mlp_backward(
    params: &MlpParams,
    acts: &MlpActivations,
    output_gradient: &Matrix,
) -> Result<(MlpGrads, Matrix)> {
    if acts.pre.len() != params.layers.len() {
        return Err(StcError::Shape(format!(
            "cache has {} layers, network has {}",
            acts.pre.len(),
            params.layers.len()
        )));
    }
    for (i, (l, p)) in params.layers.iter().zip(&acts.pre).enumerate() {
        if p.cols() != l.output_dim() || acts.inputs[i].cols() != l.input_dim() {
            return Err(StcError::Shape(format!("cache does not match layer {i}")));
        }
    }
    if output_gradient.shape() != acts.output.shape() {
        return Err(StcError::Shape(format!(
            "output gradient {:?} does not match output {:?}",
            output_gradient.shape(),
            acts.output.shape()
        )));
    }

    let n = params.layers.len();
    let mut weights = Vec::with_capacity(n);
    let mut biases = Vec::with_capacity(n);
    let mut upstream = output_gradient.clone();
    for i in (0..n).rev() {
        let layer = &params.layers[i];
        let mut delta = upstream;
        for (d, &p) in delta.data_mut().iter_mut().zip(acts.pre[i].data()) {
            *d *= layer.activation.derivative(p);
        }
        weights.push(acts.inputs[i].matmul_tn(&delta)?);
        biases.push(delta.column_sums());
        upstream = delta.matmul_nt(&layer.weight)?;
    }
    weights.reverse();
    biases.reverse();
    Ok((MlpGrads { weights, biases }, upstream))
}
