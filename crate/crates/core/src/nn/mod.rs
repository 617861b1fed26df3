//! Minimal double-precision CNN stack.
//!
//! Layers cache what they need during `forward` and consume it in
//! `backward`, which returns the input gradient and overwrites each
//! parameter's `grad` buffer.

mod adam;
mod batchnorm;
mod conv;
mod linear;
mod loss;
mod model;
mod pool;
mod relu;
mod tensor;
mod train;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::Result;

pub use adam::{adam_step, Adam, OptimizerConfig};
pub use batchnorm::{BatchNorm2d, BN_EPS, BN_MOMENTUM};
pub use conv::Conv2d;
pub use linear::Linear;
pub use loss::softmax_cross_entropy;
pub use model::{build_toy_cnn, build_toy_cnn_with, Sequential};
pub use pool::PoolLayer;
pub use relu::Relu;
pub use tensor::{Shape, Tensor4};
pub use train::{evaluate, read_metrics_csv, train, train_toy_cnn, write_metrics_csv, EpochMetrics, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// A trainable tensor with its gradient and Adam moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: &'static str,
    pub value: Vec<f64>,
    pub grad: Vec<f64>,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl Param {
    pub fn new(name: &'static str, value: Vec<f64>) -> Self {
        let n = value.len();
        Self {
            name,
            value,
            grad: vec![0.0; n],
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    /// Fan-in scaled normal init, std = sqrt(2 / fan_in).
    pub(crate) fn kaiming(name: &'static str, len: usize, fan_in: usize, rng: &mut impl Rng) -> Self {
        let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("valid std");
        Self::new(name, (0..len).map(|_| normal.sample(rng)).collect())
    }
}

pub trait Layer: Send {
    fn name(&self) -> &str;

    fn output_shape(&self, input: Shape) -> Result<Shape>;

    fn forward(&mut self, x: &Tensor4, mode: Mode) -> Result<Tensor4>;

    fn backward(&mut self, g_out: &Tensor4) -> Result<Tensor4>;

    fn params(&self) -> Vec<&Param> {
        Vec::new()
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        Vec::new()
    }
}

pub(crate) fn missing_forward(layer: &str) -> crate::Error {
    crate::Error::invalid(format!("{layer}: backward called before forward"))
}
