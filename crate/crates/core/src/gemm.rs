/// `c = a * b` with `a: m x k` and `b: k x n` given as (slice, row stride,
/// column stride); `c` is row-major `m x n` and fully overwritten.
pub(crate) fn gemm(m: usize, k: usize, n: usize, a: (&[f64], isize, isize), b: (&[f64], isize, isize), c: &mut [f64]) {
    debug_assert!(c.len() >= m * n);
    // SAFETY: strides and extents describe in-bounds views of the slices.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.0.as_ptr(),
            a.1,
            a.2,
            b.0.as_ptr(),
            b.1,
            b.2,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}
