//! Layers with hand-written backward passes, losses, and a finite-difference
//! gradient checker.

mod conv;
mod dense;
pub mod gradcheck;
pub mod loss;
mod simple;

pub use conv::Conv2d;
pub use dense::Dense;
pub use simple::{Dropout, GlobalAvgPool, MaxPool2x2, Relu};

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::tensor::{Scalar, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// A learnable tensor and its most recent gradient.
#[derive(Debug, Clone)]
pub struct Param<T> {
    pub name: &'static str,
    pub value: Tensor<T>,
    /// Written by backward; stays `None` while the owning layer is frozen.
    pub grad: Option<Tensor<T>>,
}

impl<T: Scalar> Param<T> {
    pub fn new(name: &'static str, value: Tensor<T>) -> Self {
        Self {
            name,
            value,
            grad: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    Conv2d,
    Relu,
    MaxPool2x2,
    Dropout,
    GlobalAvgPool,
    Dense,
}

impl LayerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LayerKind::Conv2d => "conv2d",
            LayerKind::Relu => "relu",
            LayerKind::MaxPool2x2 => "maxpool2x2",
            LayerKind::Dropout => "dropout",
            LayerKind::GlobalAvgPool => "global_avg_pool",
            LayerKind::Dense => "dense",
        }
    }
}

#[derive(Debug, Clone)]
pub enum Op<T> {
    Conv2d(Conv2d<T>),
    Relu(Relu<T>),
    MaxPool2x2(MaxPool2x2),
    Dropout(Dropout<T>),
    GlobalAvgPool(GlobalAvgPool),
    Dense(Dense<T>),
}

/// A named layer in a model's ordered layer list.
#[derive(Debug, Clone)]
pub struct Layer<T> {
    pub name: String,
    pub frozen: bool,
    pub op: Op<T>,
}

impl<T: Scalar> Layer<T> {
    pub fn new(name: impl Into<String>, op: Op<T>) -> Self {
        Self {
            name: name.into(),
            frozen: false,
            op,
        }
    }

    pub fn kind(&self) -> LayerKind {
        match self.op {
            Op::Conv2d(_) => LayerKind::Conv2d,
            Op::Relu(_) => LayerKind::Relu,
            Op::MaxPool2x2(_) => LayerKind::MaxPool2x2,
            Op::Dropout(_) => LayerKind::Dropout,
            Op::GlobalAvgPool(_) => LayerKind::GlobalAvgPool,
            Op::Dense(_) => LayerKind::Dense,
        }
    }

    pub fn params(&self) -> Vec<&Param<T>> {
        match &self.op {
            Op::Conv2d(l) => vec![&l.weight, &l.bias],
            Op::Dense(l) => vec![&l.weight, &l.bias],
            _ => Vec::new(),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        match &mut self.op {
            Op::Conv2d(l) => vec![&mut l.weight, &mut l.bias],
            Op::Dense(l) => vec![&mut l.weight, &mut l.bias],
            _ => Vec::new(),
        }
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.value.len()).sum()
    }

    pub fn has_params(&self) -> bool {
        matches!(self.op, Op::Conv2d(_) | Op::Dense(_))
    }

    pub fn is_trainable(&self) -> bool {
        self.has_params() && !self.frozen
    }

    /// Pure forward pass (dropout is the identity).
    pub fn forward_eval(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        match &self.op {
            Op::Conv2d(l) => l.forward(x),
            Op::Relu(_) => Ok(simple::relu(x)),
            Op::MaxPool2x2(_) => Ok(simple::maxpool(x)?.0),
            Op::Dropout(_) => Ok(x.clone()),
            Op::GlobalAvgPool(_) => simple::global_avg_pool(x),
            Op::Dense(l) => l.forward(x),
        }
    }

    /// Forward pass that caches what backward needs.
    pub fn forward_train(&mut self, x: &Tensor<T>, rng: &mut SeededRng) -> Result<Tensor<T>> {
        match &mut self.op {
            Op::Conv2d(l) => l.forward_train(x),
            Op::Relu(l) => Ok(l.forward_train(x)),
            Op::MaxPool2x2(l) => l.forward_train(x),
            Op::Dropout(l) => Ok(l.forward_train(x, rng)),
            Op::GlobalAvgPool(l) => l.forward_train(x),
            Op::Dense(l) => l.forward_train(x),
        }
    }

    pub fn forward(&mut self, x: &Tensor<T>, mode: Mode, rng: &mut SeededRng) -> Result<Tensor<T>> {
        match mode {
            Mode::Eval => self.forward_eval(x),
            Mode::Train => self.forward_train(x, rng),
        }
    }

    /// Backward pass. Parameter gradients are written only for trainable
    /// layers; the input gradient is returned when `need_dx` is set.
    pub fn backward(&mut self, dy: &Tensor<T>, need_dx: bool) -> Result<Option<Tensor<T>>> {
        let param_grads = !self.frozen;
        match &mut self.op {
            Op::Conv2d(l) => l.backward(dy, param_grads, need_dx),
            Op::Dense(l) => l.backward(dy, param_grads, need_dx),
            Op::Relu(l) => l.backward(dy).map(Some),
            Op::MaxPool2x2(l) => l.backward(dy).map(Some),
            Op::Dropout(l) => l.backward(dy).map(Some),
            Op::GlobalAvgPool(l) => l.backward(dy).map(Some),
        }
    }

    pub fn clear_cache(&mut self) {
        match &mut self.op {
            Op::Conv2d(l) => l.cache = None,
            Op::Dense(l) => l.cache = None,
            Op::Relu(l) => l.mask = None,
            Op::MaxPool2x2(l) => l.cache = None,
            Op::Dropout(l) => l.mask = None,
            Op::GlobalAvgPool(l) => l.cache = None,
        }
    }

    pub fn clear_grads(&mut self) {
        for p in self.params_mut() {
            p.grad = None;
        }
    }
}

pub(crate) fn missing_cache(layer: &str) -> Error {
    Error::invalid(format!("{layer}: backward called without a cached forward pass"))
}
