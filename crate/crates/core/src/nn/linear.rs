use rand::Rng;

use super::{missing_forward, Layer, Mode, Param, Shape, Tensor4};
use crate::{Error, Execution, Result};

/// Fully-connected layer on flattened samples; output shape is `N x out x 1 x 1`.
pub struct Linear {
    name: String,
    in_f: usize,
    out_f: usize,
    /// `[out][in]`
    weight: Param,
    bias: Param,
    exec: Execution,
    saved: Option<Tensor4>,
}

impl Linear {
    pub fn new(name: impl Into<String>, in_f: usize, out_f: usize, rng: &mut impl Rng) -> Result<Self> {
        let w = Param::kaiming("weight", in_f * out_f, in_f, rng);
        Self::from_weights(name, in_f, out_f, w.value, vec![0.0; out_f])
    }

    pub fn from_weights(
        name: impl Into<String>,
        in_f: usize,
        out_f: usize,
        weight: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self> {
        if weight.len() != in_f * out_f || bias.len() != out_f {
            return Err(Error::invalid("linear weight/bias length mismatch"));
        }
        Ok(Self {
            name: name.into(),
            in_f,
            out_f,
            weight: Param::new("weight", weight),
            bias: Param::new("bias", bias),
            exec: Execution::default(),
            saved: None,
        })
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }
}

impl Layer for Linear {
    fn name(&self) -> &str {
        &self.name
    }

    fn output_shape(&self, input: Shape) -> Result<Shape> {
        if input.sample() != self.in_f {
            return Err(Error::invalid(format!(
                "{}: {} features per sample, expected {}",
                self.name,
                input.sample(),
                self.in_f
            )));
        }
        Ok(Shape::new(input.n, self.out_f, 1, 1))
    }

    fn forward(&mut self, x: &Tensor4, _mode: Mode) -> Result<Tensor4> {
        let out_shape = self.output_shape(x.shape())?;
        let (w, b, in_f) = (&self.weight.value, &self.bias.value, self.in_f);
        let mut out = vec![0.0; out_shape.len()];
        self.exec.for_each_chunk_mut(&mut out, self.out_f, |n, o| {
            let xs = x.sample(n);
            for (j, ov) in o.iter_mut().enumerate() {
                let row = &w[j * in_f..][..in_f];
                *ov = b[j] + row.iter().zip(xs).map(|(a, c)| a * c).sum::<f64>();
            }
        });
        self.saved = Some(x.clone());
        Ok(Tensor4::from_parts(out_shape, out))
    }

    fn backward(&mut self, g_out: &Tensor4) -> Result<Tensor4> {
        let x = self.saved.as_ref().ok_or_else(|| missing_forward(&self.name))?;
        let batch = x.shape().n;
        g_out.expect_shape(Shape::new(batch, self.out_f, 1, 1), &self.name)?;
        let (in_f, out_f) = (self.in_f, self.out_f);
        let g = g_out.as_slice();

        let mut dw = vec![0.0; in_f * out_f];
        self.exec.for_each_chunk_mut(&mut dw, in_f, |j, row| {
            for n in 0..batch {
                let gv = g[n * out_f + j];
                for (d, xv) in row.iter_mut().zip(x.sample(n)) {
                    *d += gv * xv;
                }
            }
        });
        self.weight.grad = dw;
        for j in 0..out_f {
            self.bias.grad[j] = (0..batch).map(|n| g[n * out_f + j]).sum();
        }

        let w = &self.weight.value;
        let mut gx = vec![0.0; x.shape().len()];
        self.exec.for_each_chunk_mut(&mut gx, in_f, |n, gxs| {
            for j in 0..out_f {
                let gv = g[n * out_f + j];
                for (d, wv) in gxs.iter_mut().zip(&w[j * in_f..][..in_f]) {
                    *d += gv * wv;
                }
            }
        });
        Ok(Tensor4::from_parts(x.shape(), gx))
    }

    fn params(&self) -> Vec<&Param> {
        vec![&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.weight, &mut self.bias]
    }
}
