//! Spectral and spatial pooling with exact backward passes.
//!
//! All four methods act on a single 2D map; batched, multi-channel use (see
//! [`crate::nn::PoolLayer`]) applies them independently per plane.

mod fourier;
mod hartley;
pub mod reconstruct;
mod spatial;
mod spectrum;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, RealMatrix, Result};

pub use fourier::{enforce_hermitian, fourier_pool_backward, fourier_pool_forward};
pub use hartley::{hartley_pool_backward, hartley_pool_forward};
pub use spatial::{avg_pool_backward, avg_pool_forward, max_pool_backward, max_pool_forward};
pub use spectrum::{crop_spectrum, pad_spectrum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolMethod {
    Hartley,
    Fourier,
    Max,
    #[serde(alias = "average")]
    Avg,
}

impl PoolMethod {
    pub const ALL: [PoolMethod; 4] = [
        PoolMethod::Hartley,
        PoolMethod::Fourier,
        PoolMethod::Max,
        PoolMethod::Avg,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PoolMethod::Hartley => "hartley",
            PoolMethod::Fourier => "fourier",
            PoolMethod::Max => "max",
            PoolMethod::Avg => "avg",
        }
    }

    pub fn is_spectral(self) -> bool {
        matches!(self, PoolMethod::Hartley | PoolMethod::Fourier)
    }
}

impl fmt::Display for PoolMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PoolMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hartley" => Ok(PoolMethod::Hartley),
            "fourier" => Ok(PoolMethod::Fourier),
            "max" => Ok(PoolMethod::Max),
            "avg" | "average" => Ok(PoolMethod::Avg),
            other => Err(Error::invalid(format!(
                "unknown pooling method {other:?} (expected hartley, fourier, max or avg)"
            ))),
        }
    }
}

/// Pooling configuration.
///
/// Spectral methods use `out_rows`x`out_cols`; max/avg use `window` and
/// `stride` and derive their output size from the input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoolSpec {
    pub method: PoolMethod,
    pub out_rows: usize,
    pub out_cols: usize,
    pub window: usize,
    pub stride: usize,
}

impl PoolSpec {
    pub fn spectral(method: PoolMethod, out_rows: usize, out_cols: usize) -> Self {
        Self {
            method,
            out_rows,
            out_cols,
            window: 0,
            stride: 0,
        }
    }

    pub fn spatial(method: PoolMethod, window: usize, stride: usize) -> Self {
        Self {
            method,
            out_rows: 0,
            out_cols: 0,
            window,
            stride,
        }
    }

    /// Output size for an `in_dims` input, validating the spec against it.
    pub fn output_dims(&self, in_dims: (usize, usize)) -> Result<(usize, usize)> {
        if self.method.is_spectral() {
            check_spectral_dims(in_dims, (self.out_rows, self.out_cols))?;
            Ok((self.out_rows, self.out_cols))
        } else {
            // cheapest way to get the same validation as the forward pass
            let probe = RealMatrix::zeros(in_dims.0, in_dims.1);
            pool_forward(self, &probe).map(|(out, _)| out.dims())
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) enum PoolState {
    Hartley,
    Fourier,
    Max { argmax: Vec<usize> },
    Avg { window: usize, stride: usize },
}

/// What a forward pass leaves behind for its backward pass.
#[derive(Debug, Clone)]
pub struct PoolContext {
    in_dims: (usize, usize),
    out_dims: (usize, usize),
    state: PoolState,
}

impl PoolContext {
    pub(crate) fn new(in_dims: (usize, usize), out_dims: (usize, usize), state: PoolState) -> Self {
        Self {
            in_dims,
            out_dims,
            state,
        }
    }

    pub fn in_dims(&self) -> (usize, usize) {
        self.in_dims
    }

    pub fn out_dims(&self) -> (usize, usize) {
        self.out_dims
    }

    pub fn method(&self) -> PoolMethod {
        match self.state {
            PoolState::Hartley => PoolMethod::Hartley,
            PoolState::Fourier => PoolMethod::Fourier,
            PoolState::Max { .. } => PoolMethod::Max,
            PoolState::Avg { .. } => PoolMethod::Avg,
        }
    }

    fn check_grad(&self, g: &RealMatrix) -> Result<()> {
        if g.dims() != self.out_dims {
            return Err(Error::invalid(format!(
                "gradient is {}x{}, pooled output was {}x{}",
                g.rows(),
                g.cols(),
                self.out_dims.0,
                self.out_dims.1
            )));
        }
        Ok(())
    }
}

fn check_spectral_dims(big: (usize, usize), small: (usize, usize)) -> Result<()> {
    let ((hb, wb), (h, w)) = (big, small);
    if h == 0 || w == 0 || h > hb || w > wb {
        return Err(Error::invalid(format!(
            "spectral pooling {hb}x{wb} -> {h}x{w} needs 1 <= h <= H and 1 <= w <= W"
        )));
    }
    Ok(())
}

/// `sqrt(h w / (H W))`: keeps constant maps at their value under a unitary DHT.
pub(crate) fn spectral_scale(big: (usize, usize), small: (usize, usize)) -> f64 {
    ((small.0 * small.1) as f64 / (big.0 * big.1) as f64).sqrt()
}

pub fn pool_forward(spec: &PoolSpec, x: &RealMatrix) -> Result<(RealMatrix, PoolContext)> {
    match spec.method {
        PoolMethod::Hartley => hartley_pool_forward(x, spec.out_rows, spec.out_cols),
        PoolMethod::Fourier => fourier_pool_forward(x, spec.out_rows, spec.out_cols),
        PoolMethod::Max => max_pool_forward(x, spec.window, spec.stride),
        PoolMethod::Avg => avg_pool_forward(x, spec.window, spec.stride),
    }
}

pub fn pool_backward(g_out: &RealMatrix, ctx: &PoolContext) -> Result<RealMatrix> {
    match ctx.method() {
        PoolMethod::Hartley => hartley_pool_backward(g_out, ctx),
        PoolMethod::Fourier => fourier_pool_backward(g_out, ctx),
        PoolMethod::Max => max_pool_backward(g_out, ctx),
        PoolMethod::Avg => avg_pool_backward(g_out, ctx),
    }
}
