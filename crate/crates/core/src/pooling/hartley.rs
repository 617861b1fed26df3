use super::spectrum::{crop_unshifted, pad_unshifted};
use super::{check_spectral_dims, spectral_scale, PoolContext, PoolState};
use crate::transform::dht_2d_slice;
use crate::{Error, RealMatrix, Result};

pub(crate) fn forward_slice(x: &[f64], big: (usize, usize), small: (usize, usize), out: &mut [f64]) {
    let mut spectrum = vec![0.0; big.0 * big.1];
    dht_2d_slice(x, big.0, big.1, &mut spectrum);
    let mut cropped = vec![0.0; small.0 * small.1];
    crop_unshifted(&spectrum, big, small, &mut cropped);
    dht_2d_slice(&cropped, small.0, small.1, out);
    let s = spectral_scale(big, small);
    out.iter_mut().for_each(|v| *v *= s);
}

pub(crate) fn backward_slice(g: &[f64], small: (usize, usize), big: (usize, usize), out: &mut [f64]) {
    let mut spectrum = vec![0.0; small.0 * small.1];
    dht_2d_slice(g, small.0, small.1, &mut spectrum);
    let mut padded = vec![0.0; big.0 * big.1];
    pad_unshifted(&spectrum, small, big, &mut padded);
    dht_2d_slice(&padded, big.0, big.1, out);
    let s = spectral_scale(big, small);
    out.iter_mut().for_each(|v| *v *= s);
}

/// Hartley spectral pooling of `x` down to `h`x`w`.
///
/// Transforms with the 2D DHT, keeps the central `h`x`w` block of the
/// DC-centered spectrum and transforms back. The result is multiplied by
/// `sqrt(h w / (H W))` so that constant maps keep their value.
pub fn hartley_pool_forward(x: &RealMatrix, h: usize, w: usize) -> Result<(RealMatrix, PoolContext)> {
    check_spectral_dims(x.dims(), (h, w))?;
    let mut out = RealMatrix::zeros(h, w);
    forward_slice(x.as_slice(), x.dims(), (h, w), out.as_mut_slice());
    Ok((out, PoolContext::new(x.dims(), (h, w), PoolState::Hartley)))
}

/// Exact adjoint of [`hartley_pool_forward`]: DHT, zero-pad the centered
/// spectrum back to `H`x`W`, DHT again, same amplitude scale.
pub fn hartley_pool_backward(g_out: &RealMatrix, ctx: &PoolContext) -> Result<RealMatrix> {
    if !matches!(ctx.state, PoolState::Hartley) {
        return Err(Error::invalid(format!(
            "hartley backward given a {} context",
            ctx.method()
        )));
    }
    ctx.check_grad(g_out)?;
    let mut out = RealMatrix::zeros(ctx.in_dims.0, ctx.in_dims.1);
    backward_slice(g_out.as_slice(), ctx.out_dims, ctx.in_dims, out.as_mut_slice());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pooling::spectrum::{crop_spectrum, pad_spectrum};
    use crate::pooling::test_util::{fd_rel_error, random};
    use crate::transform::{center_shift, center_unshift, dht_2d, dht_2d_direct};
    use std::f64::consts::PI;

    /// Literal pipeline: shift, crop, unshift with the quadratic-cost DHT.
    fn oracle_forward(x: &RealMatrix, h: usize, w: usize) -> RealMatrix {
        let y = center_shift(&dht_2d_direct(x).unwrap());
        let cropped = center_unshift(&crop_spectrum(&y, h, w).unwrap());
        let s = ((h * w) as f64 / (x.rows() * x.cols()) as f64).sqrt();
        dht_2d_direct(&cropped).unwrap().scaled(s)
    }

    #[test]
    fn constant_map_keeps_value() {
        let (p, _) = hartley_pool_forward(&RealMatrix::filled(8, 8, 3.0), 4, 4).unwrap();
        assert!(p.max_abs_diff(&RealMatrix::filled(4, 4, 3.0)) < 1e-12);
    }

    #[test]
    fn full_size_is_identity() {
        let x = random(9, 6, 1);
        let (p, ctx) = hartley_pool_forward(&x, 9, 6).unwrap();
        assert!(p.max_abs_diff(&x) < 1e-10);
        let g = random(9, 6, 2);
        assert!(hartley_pool_backward(&g, &ctx).unwrap().max_abs_diff(&g) < 1e-10);
    }

    #[test]
    fn cosine_matches_direct_pipeline() {
        let x = RealMatrix::from_fn(8, 8, |m, n| (2.0 * PI * (m + n) as f64 / 8.0).cos());
        let (p, _) = hartley_pool_forward(&x, 4, 4).unwrap();
        assert!(p.max_abs_diff(&oracle_forward(&x, 4, 4)) < 1e-11);
        for (hb, wb, h, w, seed) in [(12, 10, 5, 6, 3), (7, 7, 3, 3, 4), (16, 16, 7, 8, 5)] {
            let x = random(hb, wb, seed);
            let (p, _) = hartley_pool_forward(&x, h, w).unwrap();
            assert!(p.max_abs_diff(&oracle_forward(&x, h, w)) < 1e-11);
        }
    }

    #[test]
    fn backward_matches_literal_adjoint_pipeline() {
        let x = random(10, 8, 6);
        let (_, ctx) = hartley_pool_forward(&x, 4, 5).unwrap();
        let g = random(4, 5, 7);
        let z = center_shift(&dht_2d(&g).unwrap());
        let padded = center_unshift(&pad_spectrum(&z, 10, 8).unwrap());
        let want = dht_2d(&padded).unwrap().scaled((20.0f64 / 80.0).sqrt());
        assert!(hartley_pool_backward(&g, &ctx).unwrap().max_abs_diff(&want) < 1e-12);
    }

    #[test]
    fn adjoint_identity() {
        let x = random(8, 8, 8);
        let g = random(4, 4, 9);
        let (p, ctx) = hartley_pool_forward(&x, 4, 4).unwrap();
        let pt = hartley_pool_backward(&g, &ctx).unwrap();
        assert!((p.dot(&g) - x.dot(&pt)).abs() < 1e-10);
    }

    #[test]
    fn finite_difference_gradient() {
        let x = random(6, 6, 10);
        let t = random(3, 3, 11);
        let err = fd_rel_error(&x, &t, |x| hartley_pool_forward(x, 3, 3), hartley_pool_backward);
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn dimension_errors() {
        let x = random(6, 6, 12);
        assert!(hartley_pool_forward(&x, 7, 3).is_err());
        assert!(hartley_pool_forward(&x, 3, 0).is_err());
        let (_, ctx) = hartley_pool_forward(&x, 3, 3).unwrap();
        assert!(hartley_pool_backward(&random(3, 4, 13), &ctx).is_err());
    }
}
