use super::{PoolContext, PoolState};
use crate::{Error, RealMatrix, Result};

fn output_dims(dims: (usize, usize), window: usize, stride: usize) -> Result<(usize, usize)> {
    if window == 0 || stride == 0 {
        return Err(Error::invalid(format!(
            "window ({window}) and stride ({stride}) must be at least 1"
        )));
    }
    let (rows, cols) = dims;
    if rows < window || cols < window {
        return Err(Error::invalid(format!(
            "window {window} larger than input {rows}x{cols}"
        )));
    }
    Ok(((rows - window) / stride + 1, (cols - window) / stride + 1))
}

/// Sliding-window max. Ties go to the first index in row-major scan order.
pub fn max_pool_forward(x: &RealMatrix, window: usize, stride: usize) -> Result<(RealMatrix, PoolContext)> {
    let (oh, ow) = output_dims(x.dims(), window, stride)?;
    let cols = x.cols();
    let src = x.as_slice();
    let mut out = RealMatrix::zeros(oh, ow);
    let mut argmax = Vec::with_capacity(oh * ow);
    for i in 0..oh {
        for j in 0..ow {
            let (r0, c0) = (i * stride, j * stride);
            let mut best = r0 * cols + c0;
            for r in r0..r0 + window {
                for c in c0..c0 + window {
                    let k = r * cols + c;
                    if src[k] > src[best] {
                        best = k;
                    }
                }
            }
            out.set(i, j, src[best]);
            argmax.push(best);
        }
    }
    let state = PoolState::Max { argmax };
    Ok((out, PoolContext::new(x.dims(), (oh, ow), state)))
}

/// Routes each output gradient to the input position that won its window.
pub fn max_pool_backward(g_out: &RealMatrix, ctx: &PoolContext) -> Result<RealMatrix> {
    let PoolState::Max { argmax, .. } = &ctx.state else {
        return Err(Error::invalid(format!("max backward given a {} context", ctx.method())));
    };
    ctx.check_grad(g_out)?;
    let mut g_in = RealMatrix::zeros(ctx.in_dims.0, ctx.in_dims.1);
    let dst = g_in.as_mut_slice();
    for (&k, &g) in argmax.iter().zip(g_out.as_slice()) {
        dst[k] += g;
    }
    Ok(g_in)
}

pub fn avg_pool_forward(x: &RealMatrix, window: usize, stride: usize) -> Result<(RealMatrix, PoolContext)> {
    let (oh, ow) = output_dims(x.dims(), window, stride)?;
    let inv = 1.0 / (window * window) as f64;
    let out = RealMatrix::from_fn(oh, ow, |i, j| {
        let mut acc = 0.0;
        for r in i * stride..i * stride + window {
            acc += x.row(r)[j * stride..j * stride + window].iter().sum::<f64>();
        }
        acc * inv
    });
    let state = PoolState::Avg { window, stride };
    Ok((out, PoolContext::new(x.dims(), (oh, ow), state)))
}

/// Spreads each output gradient uniformly over its window.
pub fn avg_pool_backward(g_out: &RealMatrix, ctx: &PoolContext) -> Result<RealMatrix> {
    let PoolState::Avg { window, stride } = ctx.state else {
        return Err(Error::invalid(format!("avg backward given a {} context", ctx.method())));
    };
    ctx.check_grad(g_out)?;
    let inv = 1.0 / (window * window) as f64;
    let cols = ctx.in_dims.1;
    let mut g_in = RealMatrix::zeros(ctx.in_dims.0, cols);
    let dst = g_in.as_mut_slice();
    for i in 0..ctx.out_dims.0 {
        for j in 0..ctx.out_dims.1 {
            let g = g_out.get(i, j) * inv;
            for r in i * stride..i * stride + window {
                for v in &mut dst[r * cols + j * stride..][..window] {
                    *v += g;
                }
            }
        }
    }
    Ok(g_in)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pooling::test_util::{fd_rel_error, random};

    fn two_by_two() -> RealMatrix {
        RealMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap()
    }

    #[test]
    fn max_examples() {
        let (p, ctx) = max_pool_forward(&two_by_two(), 2, 2).unwrap();
        assert_eq!(p.as_slice(), &[4.0]);
        let g = max_pool_backward(&RealMatrix::filled(1, 1, 1.0), &ctx).unwrap();
        assert_eq!(g.as_slice(), &[0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn max_ties_pick_first_in_scan_order() {
        let x = RealMatrix::filled(2, 2, 5.0);
        let (_, ctx) = max_pool_forward(&x, 2, 2).unwrap();
        let g = max_pool_backward(&RealMatrix::filled(1, 1, 1.0), &ctx).unwrap();
        assert_eq!(g.as_slice(), &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn max_matches_brute_force_scan() {
        let x = random(16, 16, 1);
        let (p, _) = max_pool_forward(&x, 2, 2).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let want = [
                    x.get(2 * i, 2 * j),
                    x.get(2 * i, 2 * j + 1),
                    x.get(2 * i + 1, 2 * j),
                    x.get(2 * i + 1, 2 * j + 1),
                ]
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max);
                assert_eq!(p.get(i, j), want);
            }
        }
    }

    #[test]
    fn avg_examples() {
        let (p, ctx) = avg_pool_forward(&two_by_two(), 2, 2).unwrap();
        assert_eq!(p.as_slice(), &[2.5]);
        let g = avg_pool_backward(&RealMatrix::filled(1, 1, 1.0), &ctx).unwrap();
        assert_eq!(g.as_slice(), &[0.25; 4]);
    }

    #[test]
    fn avg_adjoint_with_overlap() {
        let x = random(9, 11, 2);
        let (p, ctx) = avg_pool_forward(&x, 3, 2).unwrap();
        let g = random(p.rows(), p.cols(), 3);
        let pt = avg_pool_backward(&g, &ctx).unwrap();
        assert!((p.dot(&g) - x.dot(&pt)).abs() < 1e-12);
    }

    #[test]
    fn finite_difference_gradients() {
        let x = random(8, 8, 4);
        let t = random(4, 4, 5);
        let err = fd_rel_error(&x, &t, |x| max_pool_forward(x, 2, 2), max_pool_backward);
        assert!(err < 1e-6, "max {err}");
        let t = random(3, 3, 6);
        let err = fd_rel_error(&x, &t, |x| avg_pool_forward(x, 3, 2), avg_pool_backward);
        assert!(err < 1e-6, "avg {err}");
    }

    #[test]
    fn window_errors() {
        let x = random(3, 3, 7);
        assert!(max_pool_forward(&x, 4, 1).is_err());
        assert!(avg_pool_forward(&x, 0, 1).is_err());
        assert!(avg_pool_forward(&x, 2, 0).is_err());
    }
}
