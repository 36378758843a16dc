use super::Parameters;
use crate::error::{Result, StcError};

pub const DEFAULT_LR: f64 = 5e-4;

/// Adam moments and hyperparameters for one parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl AdamState {
    /// Zero-initialised moments shaped like `params`.
    pub fn new<P: Parameters + ?Sized>(params: &P, lr: f64) -> Self {
        let shapes: Vec<usize> = params.named_tensors().iter().map(|(_, t)| t.len()).collect();
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            first: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            second: shapes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    /// One bias-corrected Adam update of `params` using `grads`.
    ///
    /// Gradients are validated before anything is written, so an error leaves
    /// both the parameters and the optimizer state untouched.
    pub fn update<P, G>(&mut self, params: &mut P, grads: &G) -> Result<()>
    where
        P: Parameters + ?Sized,
        G: Parameters + ?Sized,
    {
        let named = grads.named_tensors();
        if named.len() != self.first.len() {
            return Err(StcError::Shape(format!(
                "optimizer tracks {} tensors, got {} gradients",
                self.first.len(),
                named.len()
            )));
        }
        for ((name, g), m) in named.iter().zip(&self.first) {
            if g.len() != m.len() {
                return Err(StcError::Shape(format!(
                    "gradient {name} has {} entries, expected {}",
                    g.len(),
                    m.len()
                )));
            }
            if let Some(pos) = g.iter().position(|v| !v.is_finite()) {
                return Err(StcError::NonFinite(format!("gradient of {name} at index {pos}")));
            }
        }
        let mut tensors = params.tensors_mut();
        if tensors.len() != named.len() || tensors.iter().zip(&named).any(|(p, (_, g))| p.len() != g.len()) {
            return Err(StcError::Shape("parameters do not mirror gradients".into()));
        }

        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for (((p, (_, g)), m), v) in tensors
            .iter_mut()
            .zip(&named)
            .zip(self.first.iter_mut())
            .zip(self.second.iter_mut())
        {
            for i in 0..p.len() {
                let gi = g[i];
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * gi;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * gi * gi;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}
