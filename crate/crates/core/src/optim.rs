//! First-order optimizers over a model's trainable parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::Model;
use crate::nn::Param;
use crate::tensor::{Scalar, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OptimizerConfig {
    Adam {
        lr: f64,
        beta1: f64,
        beta2: f64,
        eps: f64,
    },
    Sgd {
        lr: f64,
        momentum: f64,
    },
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig::Adam {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl OptimizerConfig {
    pub fn adam(lr: f64) -> Self {
        match Self::default() {
            OptimizerConfig::Adam { beta1, beta2, eps, .. } => OptimizerConfig::Adam { lr, beta1, beta2, eps },
            _ => unreachable!(),
        }
    }

    pub fn lr(&self) -> f64 {
        match *self {
            OptimizerConfig::Adam { lr, .. } | OptimizerConfig::Sgd { lr, .. } => lr,
        }
    }
}

/// Adam moments for one parameter tensor.
#[derive(Debug, Clone)]
pub struct AdamState<T> {
    pub m: Vec<T>,
    pub v: Vec<T>,
    pub t: u32,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![T::zero(); len],
            v: vec![T::zero(); len],
            t: 0,
        }
    }
}

/// One bias-corrected Adam update of `param` in place.
pub fn adam_step<T: Scalar>(param: &mut [T], grad: &[T], state: &mut AdamState<T>, lr: f64, beta1: f64, beta2: f64, eps: f64) {
    state.t += 1;
    let (b1, b2) = (T::of(beta1), T::of(beta2));
    let c1 = T::of(1.0 - beta1.powi(state.t as i32));
    let c2 = T::of(1.0 - beta2.powi(state.t as i32));
    let (lr, eps) = (T::of(lr), T::of(eps));
    for (((p, &g), m), v) in param.iter_mut().zip(grad).zip(&mut state.m).zip(&mut state.v) {
        *m = b1 * *m + (T::one() - b1) * g;
        *v = b2 * *v + (T::one() - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p = *p - lr * m_hat / (v_hat.sqrt() + eps);
    }
}

#[derive(Debug, Clone)]
enum Slot<T> {
    Adam(AdamState<T>),
    Momentum(Vec<T>),
}

/// Optimizer with per-tensor state, keyed by position in the model's
/// trainable-parameter list (layer order).
#[derive(Debug, Clone)]
pub struct Optimizer<T> {
    pub config: OptimizerConfig,
    slots: Vec<Slot<T>>,
}

impl<T: Scalar> Optimizer<T> {
    pub fn new(config: OptimizerConfig) -> Self {
        Self { config, slots: Vec::new() }
    }

    /// Apply one update using the gradients left by the last backward pass.
    /// Frozen layers are never visited.
    pub fn step(&mut self, model: &mut Model<T>) -> Result<()> {
        let params = model.trainable_params_mut();
        self.step_params(params)
    }

    pub fn step_params(&mut self, params: Vec<&mut Param<T>>) -> Result<()> {
        if self.slots.is_empty() {
            self.slots = params
                .iter()
                .map(|p| match self.config {
                    OptimizerConfig::Adam { .. } => Slot::Adam(AdamState::new(p.value.len())),
                    OptimizerConfig::Sgd { .. } => Slot::Momentum(vec![T::zero(); p.value.len()]),
                })
                .collect();
        }
        if self.slots.len() != params.len() {
            return Err(Error::invalid("trainable parameter set changed under the optimizer"));
        }
        for (p, slot) in params.into_iter().zip(&mut self.slots) {
            let grad: &Tensor<T> = p
                .grad
                .as_ref()
                .ok_or_else(|| Error::invalid("optimizer step without gradients"))?;
            match (self.config, slot) {
                (OptimizerConfig::Adam { lr, beta1, beta2, eps }, Slot::Adam(state)) => {
                    adam_step(p.value.data_mut(), grad.data(), state, lr, beta1, beta2, eps)
                }
                (OptimizerConfig::Sgd { lr, momentum }, Slot::Momentum(vel)) => {
                    let (lr, mu) = (T::of(lr), T::of(momentum));
                    for ((w, &g), v) in p.value.data_mut().iter_mut().zip(grad.data()).zip(vel.iter_mut()) {
                        *v = mu * *v - lr * g;
                        *w = *w + *v;
                    }
                }
                _ => unreachable!("slot kind follows config"),
            }
        }
        Ok(())
    }
}
