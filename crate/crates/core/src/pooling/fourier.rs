//! Fourier spectral pooling reference.
//!
//! Cropping a DFT spectrum can break conjugate symmetry (for even sizes the
//! kept block is not symmetric about DC), so the crop is followed by an
//! explicit projection `Y[k] <- (Y[k] + conj(Y[-k])) / 2` about the cropped
//! spectrum's own DC. The inverse DFT of the projected block is real.

use super::spectrum::{crop_unshifted, pad_unshifted};
use super::{check_spectral_dims, spectral_scale, PoolContext, PoolState};
use crate::transform::{dft_2d, idft_2d};
use crate::{ComplexMatrix, Error, RealMatrix, Result};

/// Projects an unshifted spectrum onto conjugate-symmetric spectra.
pub fn enforce_hermitian(y: &ComplexMatrix) -> ComplexMatrix {
    let (rows, cols) = y.dims();
    ComplexMatrix::from_fn(rows, cols, |u, v| {
        let mirror = y.get((rows - u) % rows, (cols - v) % cols);
        (y.get(u, v) + mirror.conj()) * 0.5
    })
}

/// Fourier spectral pooling of `x` down to `h`x`w`, with the same amplitude
/// scale as [`super::hartley_pool_forward`].
pub fn fourier_pool_forward(x: &RealMatrix, h: usize, w: usize) -> Result<(RealMatrix, PoolContext)> {
    check_spectral_dims(x.dims(), (h, w))?;
    let spectrum = dft_2d(x)?;
    let mut cropped = ComplexMatrix::zeros(h, w);
    crop_unshifted(spectrum.as_slice(), x.dims(), (h, w), cropped.as_mut_slice());
    let out = idft_2d(&enforce_hermitian(&cropped))?
        .re()
        .scaled(spectral_scale(x.dims(), (h, w)));
    Ok((out, PoolContext::new(x.dims(), (h, w), PoolState::Fourier)))
}

/// Exact adjoint of [`fourier_pool_forward`].
pub fn fourier_pool_backward(g_out: &RealMatrix, ctx: &PoolContext) -> Result<RealMatrix> {
    if !matches!(ctx.state, PoolState::Fourier) {
        return Err(Error::invalid(format!(
            "fourier backward given a {} context",
            ctx.method()
        )));
    }
    ctx.check_grad(g_out)?;
    let (big, small) = (ctx.in_dims, ctx.out_dims);
    let spectrum = enforce_hermitian(&dft_2d(g_out)?);
    let mut padded = ComplexMatrix::zeros(big.0, big.1);
    pad_unshifted(spectrum.as_slice(), small, big, padded.as_mut_slice());
    Ok(idft_2d(&padded)?.re().scaled(spectral_scale(big, small)))
}
