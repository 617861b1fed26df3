use super::{missing_forward, Layer, Mode, Param, Shape, Tensor4};
use crate::{Error, Execution, Result};

pub const BN_MOMENTUM: f64 = 0.1;
pub const BN_EPS: f64 = 1e-5;

struct Saved {
    shape: Shape,
    mode: Mode,
    xhat: Vec<f64>,
    inv_std: Vec<f64>,
}

/// Per-channel batch normalization over (N, H, W).
///
/// Training mode normalizes with batch statistics and folds them into the
/// running estimates (`momentum` weight on the new batch, unbiased variance);
/// evaluation mode uses the running estimates.
pub struct BatchNorm2d {
    name: String,
    channels: usize,
    gamma: Param,
    beta: Param,
    running_mean: Vec<f64>,
    running_var: Vec<f64>,
    stats_ready: bool,
    exec: Execution,
    saved: Option<Saved>,
}

impl BatchNorm2d {
    pub fn new(name: impl Into<String>, channels: usize) -> Self {
        Self {
            name: name.into(),
            channels,
            gamma: Param::new("gamma", vec![1.0; channels]),
            beta: Param::new("beta", vec![0.0; channels]),
            running_mean: vec![0.0; channels],
            running_var: vec![1.0; channels],
            stats_ready: false,
            exec: Execution::default(),
            saved: None,
        }
    }

    /// Allows evaluation before any training step, with mean 0 and variance 1.
    pub fn with_default_stats(mut self) -> Self {
        self.stats_ready = true;
        self
    }

    pub fn with_affine(mut self, gamma: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        if gamma.len() != self.channels || beta.len() != self.channels {
            return Err(Error::invalid("batchnorm affine length mismatch"));
        }
        self.gamma = Param::new("gamma", gamma);
        self.beta = Param::new("beta", beta);
        Ok(self)
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn running_mean(&self) -> &[f64] {
        &self.running_mean
    }

    pub fn running_var(&self) -> &[f64] {
        &self.running_var
    }

    /// Sums `f(plane)` over every plane of channel `c`, in sample order.
    fn channel_sum(shape: Shape, data: &[f64], c: usize, mut f: impl FnMut(usize, &[f64]) -> f64) -> f64 {
        let p = shape.plane();
        (0..shape.n)
            .map(|n| {
                let off = (n * shape.c + c) * p;
                f(off, &data[off..off + p])
            })
            .sum()
    }
}

impl Layer for BatchNorm2d {
    fn name(&self) -> &str {
        &self.name
    }

    fn output_shape(&self, input: Shape) -> Result<Shape> {
        if input.c != self.channels {
            return Err(Error::invalid(format!(
                "{}: expected {} channels, got {}",
                self.name, self.channels, input.c
            )));
        }
        Ok(input)
    }

    fn forward(&mut self, x: &Tensor4, mode: Mode) -> Result<Tensor4> {
        let shape = self.output_shape(x.shape())?;
        let count = shape.n * shape.plane();
        let data = x.as_slice();
        let (mean, var) = match mode {
            Mode::Train => {
                if count < 2 {
                    return Err(Error::invalid(format!(
                        "{}: training needs at least 2 values per channel, got {count}",
                        self.name
                    )));
                }
                let stats = self.exec.map(shape.c, |c| {
                    let mean = Self::channel_sum(shape, data, c, |_, p| p.iter().sum()) / count as f64;
                    let var = Self::channel_sum(shape, data, c, |_, p| p.iter().map(|v| (v - mean) * (v - mean)).sum())
                        / count as f64;
                    (mean, var)
                });
                let (mean, var): (Vec<f64>, Vec<f64>) = stats.into_iter().unzip();
                let unbias = count as f64 / (count - 1) as f64;
                for c in 0..shape.c {
                    self.running_mean[c] = (1.0 - BN_MOMENTUM) * self.running_mean[c] + BN_MOMENTUM * mean[c];
                    self.running_var[c] = (1.0 - BN_MOMENTUM) * self.running_var[c] + BN_MOMENTUM * var[c] * unbias;
                }
                self.stats_ready = true;
                (mean, var)
            }
            Mode::Eval => {
                if !self.stats_ready {
                    return Err(Error::invalid(format!(
                        "{}: evaluation before any training step (running statistics uninitialized)",
                        self.name
                    )));
                }
                (self.running_mean.clone(), self.running_var.clone())
            }
        };
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + BN_EPS).sqrt()).collect();
        let mut xhat = data.to_vec();
        let mut out = vec![0.0; shape.len()];
        let (gamma, beta) = (&self.gamma.value, &self.beta.value);
        self.exec
            .for_each_chunk_pair_mut(&mut xhat, shape.plane(), &mut out, shape.plane(), |i, xh, o| {
                let c = i % shape.c;
                for (xv, ov) in xh.iter_mut().zip(o.iter_mut()) {
                    *xv = (*xv - mean[c]) * inv_std[c];
                    *ov = gamma[c] * *xv + beta[c];
                }
            });
        self.saved = Some(Saved {
            shape,
            mode,
            xhat,
            inv_std,
        });
        Ok(Tensor4::from_parts(shape, out))
    }

    fn backward(&mut self, g_out: &Tensor4) -> Result<Tensor4> {
        let saved = self.saved.as_ref().ok_or_else(|| missing_forward(&self.name))?;
        let shape = saved.shape;
        g_out.expect_shape(shape, &self.name)?;
        let g = g_out.as_slice();
        let xhat = &saved.xhat;
        let sums = self.exec.map(shape.c, |c| {
            let sg = Self::channel_sum(shape, g, c, |_, p| p.iter().sum());
            let sgx = Self::channel_sum(shape, g, c, |off, p| {
                p.iter().zip(&xhat[off..]).map(|(a, b)| a * b).sum()
            });
            (sg, sgx)
        });
        for (c, &(sg, sgx)) in sums.iter().enumerate() {
            self.beta.grad[c] = sg;
            self.gamma.grad[c] = sgx;
        }
        let count = (shape.n * shape.plane()) as f64;
        let gamma = &self.gamma.value;
        let inv_std = &saved.inv_std;
        let mode = saved.mode;
        let mut gx = g.to_vec();
        self.exec.for_each_chunk_mut(&mut gx, shape.plane(), |i, gp| {
            let c = i % shape.c;
            let k = gamma[c] * inv_std[c];
            let xh = &xhat[i * shape.plane()..][..shape.plane()];
            match mode {
                Mode::Train => {
                    let (sg, sgx) = sums[c];
                    for (gv, x) in gp.iter_mut().zip(xh) {
                        *gv = k * (*gv - sg / count - x * sgx / count);
                    }
                }
                Mode::Eval => gp.iter_mut().for_each(|gv| *gv *= k),
            }
        });
        Ok(Tensor4::from_parts(shape, gx))
    }

    fn params(&self) -> Vec<&Param> {
        vec![&self.gamma, &self.beta]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.gamma, &mut self.beta]
    }
}
