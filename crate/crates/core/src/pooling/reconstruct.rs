//! Upsampling counterparts used to measure how much of an image survives
//! pooling: spectral zero-padding for the spectral methods, nearest-neighbour
//! replication for max/avg.

use super::{hartley_pool_forward, pool_forward, PoolMethod, PoolSpec};
use crate::pooling::spectrum::pad_spectrum;
use crate::transform::{center_shift, center_unshift, dht_2d};
use crate::{Error, RealMatrix, Result};

/// Zero-pads the Hartley spectrum of `x` up to `rows`x`cols`, scaled so that
/// constant maps keep their value. Right inverse of Hartley pooling.
pub fn hartley_upsample(x: &RealMatrix, rows: usize, cols: usize) -> Result<RealMatrix> {
    let spectrum = center_shift(&dht_2d(x)?);
    let padded = center_unshift(&pad_spectrum(&spectrum, rows, cols)?);
    let s = ((rows * cols) as f64 / (x.rows() * x.cols()) as f64).sqrt();
    Ok(dht_2d(&padded)?.scaled(s))
}

/// Replicates every entry into a `factor`x`factor` block.
pub fn replicate(x: &RealMatrix, factor: usize) -> RealMatrix {
    RealMatrix::from_fn(x.rows() * factor, x.cols() * factor, |r, c| {
        x.get(r / factor, c / factor)
    })
}

/// `||x - U(P(x))||_2` for pooling by `factor` per axis with `method`.
///
/// `x` must have both sides divisible by `factor`.
pub fn reconstruction_error(x: &RealMatrix, method: PoolMethod, factor: usize) -> Result<f64> {
    let (rows, cols) = x.dims();
    if factor == 0 || rows % factor != 0 || cols % factor != 0 {
        return Err(Error::invalid(format!(
            "{rows}x{cols} is not divisible by reduction factor {factor}"
        )));
    }
    let (h, w) = (rows / factor, cols / factor);
    let restored = match method {
        PoolMethod::Hartley => hartley_upsample(&hartley_pool_forward(x, h, w)?.0, rows, cols)?,
        PoolMethod::Fourier => hartley_upsample(&pool_forward(&PoolSpec::spectral(method, h, w), x)?.0, rows, cols)?,
        PoolMethod::Max | PoolMethod::Avg => {
            let spec = PoolSpec::spatial(method, factor, factor);
            replicate(&pool_forward(&spec, x)?.0, factor)
        }
    };
    Ok(x.lin_comb(1.0, &restored, -1.0).norm())
}
