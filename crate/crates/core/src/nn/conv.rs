use rand::Rng;

use super::{missing_forward, Layer, Mode, Param, Shape, Tensor4};
use crate::gemm::gemm;
use crate::{Error, Execution, Result};

/// Stride-1 "same" cross-correlation with an odd square kernel (no flip).
pub struct Conv2d {
    name: String,
    in_c: usize,
    out_c: usize,
    k: usize,
    weight: Param,
    bias: Option<Param>,
    exec: Execution,
    /// Input of the last forward pass.
    saved: Option<Tensor4>,
}

impl Conv2d {
    pub fn new(
        name: impl Into<String>,
        in_c: usize,
        out_c: usize,
        kernel: usize,
        bias: bool,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let fan_in = in_c * kernel * kernel;
        let weight = Param::kaiming("weight", out_c * fan_in, fan_in, rng);
        let bias = bias.then(|| vec![0.0; out_c]);
        Self::from_weights(name, in_c, out_c, kernel, weight.value, bias)
    }

    /// Weights are laid out `[out_c][in_c][ky][kx]`.
    pub fn from_weights(
        name: impl Into<String>,
        in_c: usize,
        out_c: usize,
        kernel: usize,
        weight: Vec<f64>,
        bias: Option<Vec<f64>>,
    ) -> Result<Self> {
        if kernel.is_multiple_of(2) || in_c == 0 || out_c == 0 {
            return Err(Error::invalid(format!(
                "conv needs an odd kernel and positive channels, got k={kernel} {in_c}->{out_c}"
            )));
        }
        if weight.len() != out_c * in_c * kernel * kernel {
            return Err(Error::invalid("conv weight length mismatch"));
        }
        if bias.as_ref().is_some_and(|b| b.len() != out_c) {
            return Err(Error::invalid("conv bias length mismatch"));
        }
        Ok(Self {
            name: name.into(),
            in_c,
            out_c,
            k: kernel,
            weight: Param::new("weight", weight),
            bias: bias.map(|b| Param::new("bias", b)),
            exec: Execution::default(),
            saved: None,
        })
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn weight(&self) -> &Param {
        &self.weight
    }

    fn kdim(&self) -> usize {
        self.in_c * self.k * self.k
    }
}

/// Unfolds one sample into a `[in_c * k * k][h * w]` patch matrix whose row
/// order matches the weight layout; out-of-image taps are zero.
fn im2col(x: &[f64], in_c: usize, h: usize, w: usize, k: usize, cols: &mut [f64]) {
    let p = k / 2;
    let hw = h * w;
    for ci in 0..in_c {
        let plane = &x[ci * hw..][..hw];
        for ky in 0..k {
            for kx in 0..k {
                let row = &mut cols[((ci * k + ky) * k + kx) * hw..][..hw];
                let (x0, x1) = (p.saturating_sub(kx), (w + p).saturating_sub(kx).min(w));
                for y in 0..h {
                    let dst = &mut row[y * w..][..w];
                    let iy = y + ky;
                    if iy < p || iy >= h + p || x0 >= x1 {
                        dst.fill(0.0);
                        continue;
                    }
                    dst[..x0].fill(0.0);
                    dst[x1..].fill(0.0);
                    let src = &plane[(iy - p) * w..][..w];
                    dst[x0..x1].copy_from_slice(&src[x0 + kx - p..x1 + kx - p]);
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatters patch gradients back onto one sample.
fn col2im(cols: &[f64], in_c: usize, h: usize, w: usize, k: usize, x: &mut [f64]) {
    let p = k / 2;
    let hw = h * w;
    x.fill(0.0);
    for ci in 0..in_c {
        let plane = &mut x[ci * hw..][..hw];
        for ky in 0..k {
            for kx in 0..k {
                let row = &cols[((ci * k + ky) * k + kx) * hw..][..hw];
                let (x0, x1) = (p.saturating_sub(kx), (w + p).saturating_sub(kx).min(w));
                if x0 >= x1 {
                    continue;
                }
                for y in 0..h {
                    let iy = y + ky;
                    if iy < p || iy >= h + p {
                        continue;
                    }
                    let dst = &mut plane[(iy - p) * w..][..w];
                    for (d, s) in dst[x0 + kx - p..x1 + kx - p].iter_mut().zip(&row[y * w..][x0..x1]) {
                        *d += s;
                    }
                }
            }
        }
    }
}

impl Layer for Conv2d {
    fn name(&self) -> &str {
        &self.name
    }

    fn output_shape(&self, input: Shape) -> Result<Shape> {
        if input.c != self.in_c {
            return Err(Error::invalid(format!(
                "{}: expected {} input channels, got {}",
                self.name, self.in_c, input.c
            )));
        }
        Ok(Shape { c: self.out_c, ..input })
    }

    fn forward(&mut self, x: &Tensor4, _mode: Mode) -> Result<Tensor4> {
        let out_shape = self.output_shape(x.shape())?;
        let s = x.shape();
        let (k, hw, kd) = (self.k, s.h * s.w, self.kdim());
        let (in_c, out_c) = (self.in_c, self.out_c);
        let weight = &self.weight.value;
        let bias = self.bias.as_ref().map(|b| b.value.as_slice());
        let mut out = vec![0.0; out_shape.len()];
        self.exec.for_each_chunk_mut(&mut out, out_shape.sample(), |n, o| {
            let mut cols = vec![0.0; kd * hw];
            im2col(x.sample(n), in_c, s.h, s.w, k, &mut cols);
            gemm(out_c, kd, hw, (weight, kd as isize, 1), (&cols, hw as isize, 1), o);
            if let Some(b) = bias {
                for (plane, &bv) in o.chunks_exact_mut(hw).zip(b) {
                    plane.iter_mut().for_each(|v| *v += bv);
                }
            }
        });
        self.saved = Some(x.clone());
        Ok(Tensor4::from_parts(out_shape, out))
    }

    fn backward(&mut self, g_out: &Tensor4) -> Result<Tensor4> {
        let x = self.saved.as_ref().ok_or_else(|| missing_forward(&self.name))?;
        let s = x.shape();
        g_out.expect_shape(self.output_shape(s)?, &self.name)?;
        let (k, hw, kd) = (self.k, s.h * s.w, self.kdim());
        let (in_c, out_c) = (self.in_c, self.out_c);
        let weight = &self.weight.value;

        // Per-sample weight gradients, summed afterwards in sample order.
        let mut dw_parts = vec![0.0; s.n * self.weight.len()];
        let mut gx = vec![0.0; s.len()];
        self.exec
            .for_each_chunk_pair_mut(&mut dw_parts, out_c * kd, &mut gx, s.sample(), |n, dw, gxs| {
                let g = g_out.sample(n);
                let mut cols = vec![0.0; kd * hw];
                im2col(x.sample(n), in_c, s.h, s.w, k, &mut cols);
                gemm(out_c, hw, kd, (g, hw as isize, 1), (&cols, 1, hw as isize), dw);
                gemm(kd, out_c, hw, (weight, 1, kd as isize), (g, hw as isize, 1), &mut cols);
                col2im(&cols, in_c, s.h, s.w, k, gxs);
            });
        let dw = &mut self.weight.grad;
        let len = dw.len();
        dw.copy_from_slice(&dw_parts[..len]);
        for part in dw_parts.chunks_exact(out_c * kd).skip(1) {
            dw.iter_mut().zip(part).for_each(|(d, p)| *d += p);
        }

        if let Some(b) = self.bias.as_mut() {
            for co in 0..out_c {
                b.grad[co] = (0..s.n).map(|n| g_out.plane(n, co).iter().sum::<f64>()).sum();
            }
        }
        Ok(Tensor4::from_parts(s, gx))
    }

    fn params(&self) -> Vec<&Param> {
        std::iter::once(&self.weight).chain(self.bias.as_ref()).collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        std::iter::once(&mut self.weight).chain(self.bias.as_mut()).collect()
    }
}
