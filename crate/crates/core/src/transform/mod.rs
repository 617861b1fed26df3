//! Unitary discrete Hartley transform and companions.
//!
//! All transforms use the unitary scale `1/sqrt(len)` on every application,
//! which makes the DHT its own inverse. The 2D DHT uses the true 2D kernel
//! `cas(2 pi (u m / M + v n / N))`, obtained from separable row/column passes
//! followed by the correction
//! `H(u,v) = (T(u,v) + T(-u,v) + T(u,-v) - T(-u,-v)) / 2`.

mod plan;

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::gemm::gemm;
use crate::{ComplexMatrix, Error, Matrix, RealMatrix, Result};

use plan::{dht_plan, fft_plan};

/// Largest side accepted by [`dht_2d_direct`].
pub const DIRECT_MAX_SIDE: usize = 128;

fn check_non_empty<T>(m: &Matrix<T>) -> Result<()>
where
    T: Copy + Default,
{
    if m.rows() == 0 || m.cols() == 0 {
        return Err(Error::invalid(format!(
            "transform of an empty {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    Ok(())
}

/// Unitary 1D DHT.
pub fn dht_1d(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::invalid("dht_1d of an empty vector"));
    }
    let mut out = v.to_vec();
    dht_plan(v.len()).apply(&mut out);
    let s = 1.0 / (v.len() as f64).sqrt();
    out.iter_mut().for_each(|x| *x *= s);
    Ok(out)
}

/// Applies a 1D kernel to every row, then every column, of a row-major buffer.
const COLUMN_BLOCK: usize = 16;

fn separable<T: Copy + Default>(
    data: &mut [T],
    rows: usize,
    cols: usize,
    mut row_op: impl FnMut(&mut [T]),
    mut col_op: impl FnMut(&mut [T]),
) {
    for row in data.chunks_exact_mut(cols) {
        row_op(row);
    }
    if rows > 1 {
        // Columns are gathered a block at a time so each row segment read
        // from memory is fully used.
        let mut block = vec![T::default(); COLUMN_BLOCK * rows];
        for c0 in (0..cols).step_by(COLUMN_BLOCK) {
            let width = COLUMN_BLOCK.min(cols - c0);
            for r in 0..rows {
                for (j, &v) in data[r * cols + c0..][..width].iter().enumerate() {
                    block[j * rows + r] = v;
                }
            }
            for col in block.chunks_exact_mut(rows).take(width) {
                col_op(col);
            }
            for r in 0..rows {
                for (j, v) in data[r * cols + c0..][..width].iter_mut().enumerate() {
                    *v = block[j * rows + r];
                }
            }
        }
    }
}

/// Unitary 2D DHT on a raw row-major buffer, writing into `out`.
pub(crate) fn dht_2d_slice(input: &[f64], rows: usize, cols: usize, out: &mut [f64]) {
    debug_assert_eq!(input.len(), rows * cols);
    debug_assert_eq!(out.len(), rows * cols);
    let rp = dht_plan(cols);
    let cp = dht_plan(rows);
    let t = match (cp.kernel(), rp.kernel()) {
        (Some(kc), Some(kr)) => {
            // Kernels are symmetric: T = K_rows X K_cols.
            let mut xr = vec![0.0; rows * cols];
            gemm(
                rows,
                cols,
                cols,
                (input, cols as isize, 1),
                (kr, cols as isize, 1),
                &mut xr,
            );
            let mut t = vec![0.0; rows * cols];
            gemm(
                rows,
                rows,
                cols,
                (kc, rows as isize, 1),
                (&xr, cols as isize, 1),
                &mut t,
            );
            t
        }
        _ => {
            let mut t = input.to_vec();
            separable(&mut t, rows, cols, |r| rp.apply(r), |c| cp.apply(c));
            t
        }
    };
    let scale = 0.5 / ((rows * cols) as f64).sqrt();
    for u in 0..rows {
        let mu = (rows - u) % rows;
        let (tu, tmu) = (&t[u * cols..(u + 1) * cols], &t[mu * cols..(mu + 1) * cols]);
        let o = &mut out[u * cols..(u + 1) * cols];
        for v in 0..cols {
            let nv = (cols - v) % cols;
            o[v] = (tu[v] + tmu[v] + tu[nv] - tmu[nv]) * scale;
        }
    }
}

/// Unitary 2D DHT. Self-inverse: `dht_2d(dht_2d(x)) == x` up to rounding.
pub fn dht_2d(m: &RealMatrix) -> Result<RealMatrix> {
    check_non_empty(m)?;
    let mut out = RealMatrix::zeros(m.rows(), m.cols());
    dht_2d_slice(m.as_slice(), m.rows(), m.cols(), out.as_mut_slice());
    Ok(out)
}

/// Quadruple-loop evaluation of the unitary 2D DHT. Quadratic in the number
/// of entries; serves as the reference for [`dht_2d`].
pub fn dht_2d_direct(m: &RealMatrix) -> Result<RealMatrix> {
    check_non_empty(m)?;
    let (rows, cols) = m.dims();
    if rows > DIRECT_MAX_SIDE || cols > DIRECT_MAX_SIDE {
        return Err(Error::invalid(format!(
            "direct DHT limited to {DIRECT_MAX_SIDE}x{DIRECT_MAX_SIDE}, got {rows}x{cols}"
        )));
    }
    let scale = 1.0 / ((rows * cols) as f64).sqrt();
    Ok(RealMatrix::from_fn(rows, cols, |u, v| {
        let mut acc = 0.0;
        for r in 0..rows {
            let fr = ((u * r) % rows) as f64 / rows as f64;
            for c in 0..cols {
                let fc = ((v * c) % cols) as f64 / cols as f64;
                let theta = 2.0 * PI * (fr + fc);
                acc += m.get(r, c) * (theta.cos() + theta.sin());
            }
        }
        acc * scale
    }))
}

fn fft_2d_in_place(data: &mut [Complex64], rows: usize, cols: usize, inverse: bool) {
    let rp = fft_plan(cols);
    let cp = fft_plan(rows);
    if inverse {
        separable(data, rows, cols, |r| rp.inverse(r), |c| cp.inverse(c));
    } else {
        separable(data, rows, cols, |r| rp.forward(r), |c| cp.forward(c));
    }
    let s = 1.0 / ((rows * cols) as f64).sqrt();
    data.iter_mut().for_each(|z| *z *= s);
}

/// Unitary 2D DFT of a real matrix, `F(u,v) = sum x[m,n] exp(-2 pi i (um/M + vn/N)) / sqrt(MN)`.
pub fn dft_2d(m: &RealMatrix) -> Result<ComplexMatrix> {
    check_non_empty(m)?;
    let mut out = m.map(|x| Complex64::new(x, 0.0));
    let (rows, cols) = out.dims();
    fft_2d_in_place(out.as_mut_slice(), rows, cols, false);
    Ok(out)
}

/// Unitary 2D DFT of a complex matrix.
pub fn dft_2d_complex(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_non_empty(m)?;
    let mut out = m.clone();
    let (rows, cols) = out.dims();
    fft_2d_in_place(out.as_mut_slice(), rows, cols, false);
    Ok(out)
}

/// Unitary inverse 2D DFT.
pub fn idft_2d(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_non_empty(m)?;
    let mut out = m.clone();
    let (rows, cols) = out.dims();
    fft_2d_in_place(out.as_mut_slice(), rows, cols, true);
    Ok(out)
}

/// Circularly shifts so that index `(0, 0)` lands at `(rows/2, cols/2)`.
pub fn center_shift<T: Copy + Default>(m: &Matrix<T>) -> Matrix<T> {
    let (rows, cols) = m.dims();
    let (dr, dc) = (rows / 2, cols / 2);
    Matrix::from_fn(rows, cols, |r, c| m.get((r + rows - dr) % rows, (c + cols - dc) % cols))
}

/// Exact inverse of [`center_shift`].
pub fn center_unshift<T: Copy + Default>(m: &Matrix<T>) -> Matrix<T> {
    let (rows, cols) = m.dims();
    let (dr, dc) = (rows / 2, cols / 2);
    Matrix::from_fn(rows, cols, |r, c| m.get((r + dr) % rows, (c + dc) % cols))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> RealMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        RealMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    /// Independent O(N^2) evaluation of the 1D unitary DHT.
    fn dht_1d_oracle(v: &[f64]) -> Vec<f64> {
        let n = v.len();
        (0..n)
            .map(|k| {
                v.iter()
                    .enumerate()
                    .map(|(j, x)| {
                        let t = 2.0 * PI * (k * j) as f64 / n as f64;
                        x * (t.cos() + t.sin())
                    })
                    .sum::<f64>()
                    / (n as f64).sqrt()
            })
            .collect()
    }

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn dht_1d_impulse_and_constant() {
        let y = dht_1d(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(max_diff(&y, &[0.5; 4]) < 1e-15);
        let y = dht_1d(&[1.0; 4]).unwrap();
        assert!(max_diff(&y, &[2.0, 0.0, 0.0, 0.0]) < 1e-15);
        assert!(matches!(dht_1d(&[]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn dht_1d_matches_direct_sum_and_is_involution() {
        let v = random(1, 64, 1).into_vec();
        let y = dht_1d(&v).unwrap();
        assert!(max_diff(&y, &dht_1d_oracle(&v)) < 1e-12);
        assert!(max_diff(&dht_1d(&y).unwrap(), &v) < 1e-12);
        for n in [1, 3, 7, 12, 28, 100] {
            let v = random(1, n, n as u64).into_vec();
            assert!(max_diff(&dht_1d(&v).unwrap(), &dht_1d_oracle(&v)) < 1e-12, "n={n}");
        }
    }

    #[test]
    fn dht_2d_constant_is_dc_only() {
        let c = 1.75;
        let y = dht_2d(&RealMatrix::filled(6, 10, c)).unwrap();
        let expect = c * 60f64.sqrt();
        for r in 0..6 {
            for k in 0..10 {
                let want = if r == 0 && k == 0 { expect } else { 0.0 };
                assert!((y.get(r, k) - want).abs() < 1e-12);
            }
        }
        assert!(dht_2d(&RealMatrix::zeros(0, 4)).is_err());
    }

    #[test]
    fn dht_2d_involution_and_oracle() {
        let x = random(32, 32, 2);
        let back = dht_2d(&dht_2d(&x).unwrap()).unwrap();
        assert!(back.max_abs_diff(&x) < 1e-10);

        let x = random(16, 16, 3);
        let fast = dht_2d(&x).unwrap();
        assert!(fast.max_abs_diff(&dht_2d_direct(&x).unwrap()) < 1e-11);
    }

    #[test]
    fn direct_small_cases() {
        let y = dht_2d_direct(&RealMatrix::filled(1, 1, 3.5)).unwrap();
        assert_eq!(y.as_slice(), &[3.5]);

        let mut imp = RealMatrix::zeros(4, 4);
        imp.set(0, 0, 1.0);
        let y = dht_2d_direct(&imp).unwrap();
        assert!(y.as_slice().iter().all(|v| (v - 0.25).abs() < 1e-15));

        assert!(dht_2d_direct(&RealMatrix::zeros(129, 2)).is_err());
    }

    #[test]
    fn direct_agrees_with_fast_on_many_8x8() {
        for seed in 0..50 {
            let x = random(8, 8, 100 + seed);
            let d = dht_2d(&x).unwrap().max_abs_diff(&dht_2d_direct(&x).unwrap());
            assert!(d < 1e-12, "seed {seed}: {d}");
        }
    }

    #[test]
    fn dft_bridge_constant_and_hermitian() {
        let x = random(16, 16, 4);
        let f = dft_2d(&x).unwrap();
        let bridged = f.re().lin_comb(1.0, &f.im(), -1.0);
        assert!(bridged.max_abs_diff(&dht_2d(&x).unwrap()) < 1e-10);

        let f = dft_2d(&RealMatrix::filled(4, 4, 2.0)).unwrap();
        for (i, z) in f.as_slice().iter().enumerate() {
            let want = if i == 0 { 8.0 } else { 0.0 };
            assert!((z - Complex64::new(want, 0.0)).norm() < 1e-14);
        }

        let x = random(8, 8, 5);
        let f = dft_2d(&x).unwrap();
        for u in 0..8 {
            for v in 0..8 {
                let mirror = f.get((8 - u) % 8, (8 - v) % 8);
                assert!((mirror - f.get(u, v).conj()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn idft_inverts_dft() {
        let x = random(12, 20, 6);
        let back = idft_2d(&dft_2d(&x).unwrap()).unwrap();
        assert!(back.re().max_abs_diff(&x) < 1e-12);
        assert!(back.im().max_abs() < 1e-12);
    }

    #[test]
    fn shift_examples() {
        let m = RealMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        assert_eq!(
            center_shift(&m),
            RealMatrix::from_rows(&[&[4.0, 3.0], &[2.0, 1.0]]).unwrap()
        );
        let x = random(5, 7, 7);
        assert_eq!(center_unshift(&center_shift(&x)), x);
        assert_eq!(center_shift(&center_unshift(&x)), x);

        let mut imp = RealMatrix::zeros(4, 4);
        imp.set(0, 0, 1.0);
        let s = center_shift(&imp);
        assert_eq!(s.get(2, 2), 1.0);
        assert_eq!(s.as_slice().iter().sum::<f64>(), 1.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn unitary_and_linear(rows in 1usize..40, cols in 1usize..40, seed in 0u64..1000,
                              a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let x = random(rows, cols, seed);
            let y = random(rows, cols, seed + 1);
            let hx = dht_2d(&x).unwrap();
            prop_assert!((hx.norm() - x.norm()).abs() <= 1e-12 * x.norm().max(1e-300));
            let lhs = dht_2d(&x.lin_comb(a, &y, b)).unwrap();
            let rhs = hx.lin_comb(a, &dht_2d(&y).unwrap(), b);
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-11);
            prop_assert!(dht_2d(&hx).unwrap().max_abs_diff(&x) < 1e-10);
        }

        #[test]
        fn fast_matches_direct(rows in 1usize..24, cols in 1usize..24, seed in 0u64..1000) {
            let x = random(rows, cols, seed);
            let d = dht_2d(&x).unwrap().max_abs_diff(&dht_2d_direct(&x).unwrap());
            prop_assert!(d < 1e-11, "{rows}x{cols}: {d}");
        }
    }
}
