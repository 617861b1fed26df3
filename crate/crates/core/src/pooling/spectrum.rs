//! Central crop / zero-pad of DC-centered spectra.
//!
//! With DC at `(H/2, W/2)`, the crop window starts at `H/2 - h/2`. For even
//! `h` this keeps one more negative than positive frequency per axis; the pad
//! places the block at exactly the same indices, so crop after pad is the
//! identity.

use crate::{Error, Matrix, Result};

fn window_start(big: usize, small: usize) -> usize {
    big / 2 - small / 2
}

fn check_dims(big: (usize, usize), small: (usize, usize)) -> Result<()> {
    let ((hb, wb), (hs, ws)) = (big, small);
    if hs == 0 || ws == 0 {
        return Err(Error::invalid(format!("spectrum size {hs}x{ws} must be positive")));
    }
    if hs > hb || ws > wb {
        return Err(Error::invalid(format!("spectrum size {hs}x{ws} exceeds {hb}x{wb}")));
    }
    Ok(())
}

/// Extracts the central `h`x`w` block of a DC-centered spectrum.
pub fn crop_spectrum<T: Copy + Default>(y: &Matrix<T>, h: usize, w: usize) -> Result<Matrix<T>> {
    check_dims(y.dims(), (h, w))?;
    Ok(y.submatrix(window_start(y.rows(), h), window_start(y.cols(), w), h, w))
}

/// Embeds a DC-centered `h`x`w` spectrum into a zero `rows`x`cols` one. Adjoint of
/// [`crop_spectrum`].
pub fn pad_spectrum<T: Copy + Default>(z: &Matrix<T>, rows: usize, cols: usize) -> Result<Matrix<T>> {
    check_dims((rows, cols), z.dims())?;
    let mut out = Matrix::zeros(rows, cols);
    out.paste(window_start(rows, z.rows()), window_start(cols, z.cols()), z);
    Ok(out)
}

/// Index in a length-`big` unshifted spectrum of bin `i` of the unshifted
/// length-`small` spectrum that the centered crop keeps.
#[inline]
pub(crate) fn source_bin(i: usize, small: usize, big: usize) -> usize {
    let half = small / 2;
    let shifted = (i + half) % small;
    // frequency = shifted - half, taken mod big
    (shifted + big - half) % big
}

/// Crop on unshifted (DC at 0) spectra: equal to
/// `center_unshift(crop_spectrum(center_shift(y), h, w))`.
pub(crate) fn crop_unshifted<T: Copy>(y: &[T], big: (usize, usize), small: (usize, usize), out: &mut [T]) {
    let ((hb, wb), (hs, ws)) = (big, small);
    let cols: Vec<usize> = (0..ws).map(|j| source_bin(j, ws, wb)).collect();
    for i in 0..hs {
        let src = &y[source_bin(i, hs, hb) * wb..][..wb];
        let dst = &mut out[i * ws..(i + 1) * ws];
        for (d, &c) in dst.iter_mut().zip(&cols) {
            *d = src[c];
        }
    }
}

/// Adjoint of [`crop_unshifted`]: equal to
/// `center_unshift(pad_spectrum(center_shift(z), H, W))`.
pub(crate) fn pad_unshifted<T: Copy + Default>(z: &[T], small: (usize, usize), big: (usize, usize), out: &mut [T]) {
    let ((hs, ws), (hb, wb)) = (small, big);
    out.fill(T::default());
    let cols: Vec<usize> = (0..ws).map(|j| source_bin(j, ws, wb)).collect();
    for i in 0..hs {
        let dst = &mut out[source_bin(i, hs, hb) * wb..][..wb];
        let src = &z[i * ws..(i + 1) * ws];
        for (s, &c) in src.iter().zip(&cols) {
            dst[c] = *s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::{center_shift, center_unshift};
    use crate::RealMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn crop_examples() {
        let y = RealMatrix::from_rows(&[
            &[0.0, 0.0, 0.0, 0.0],
            &[0.0, 1.0, 2.0, 0.0],
            &[0.0, 3.0, 4.0, 0.0],
            &[0.0, 0.0, 0.0, 0.0],
        ])
        .unwrap();
        let c = crop_spectrum(&y, 2, 2).unwrap();
        assert_eq!(c.as_slice(), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(crop_spectrum(&y, 4, 4).unwrap(), y);

        let five = RealMatrix::from_fn(5, 5, |r, c| (10 * r + c) as f64);
        let c = crop_spectrum(&five, 3, 3).unwrap();
        assert_eq!(c, five.submatrix(1, 1, 3, 3));

        assert!(crop_spectrum(&y, 5, 2).is_err());
        assert!(crop_spectrum(&y, 0, 2).is_err());
        assert!(crop_spectrum(&y, 2, 0).is_err());
    }

    #[test]
    fn pad_examples() {
        let z = RealMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        let p = pad_spectrum(&z, 4, 4).unwrap();
        assert_eq!(p.submatrix(1, 1, 2, 2), z);
        assert_eq!(p.as_slice().iter().filter(|v| **v != 0.0).count(), 4);
        assert_eq!(pad_spectrum(&z, 2, 2).unwrap(), z);
        assert!(pad_spectrum(&z, 1, 4).is_err());
    }

    #[test]
    fn crop_after_pad_is_identity_on_random_dims() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let (h, w) = (rng.random_range(1..9), rng.random_range(1..9));
            let (hb, wb) = (h + rng.random_range(0..7), w + rng.random_range(0..7));
            let z = RealMatrix::from_fn(h, w, |_, _| rng.random_range(-1.0..1.0));
            let back = crop_spectrum(&pad_spectrum(&z, hb, wb).unwrap(), h, w).unwrap();
            assert_eq!(back, z);
        }
    }

    #[test]
    fn unshifted_helpers_match_shift_crop_unshift() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for (hb, wb, hs, ws) in [
            (8, 8, 4, 4),
            (7, 9, 3, 5),
            (28, 28, 14, 14),
            (14, 14, 7, 7),
            (6, 5, 6, 2),
            (1, 1, 1, 1),
        ] {
            let y = RealMatrix::from_fn(hb, wb, |_, _| rng.random_range(-1.0..1.0));
            let want = center_unshift(&crop_spectrum(&center_shift(&y), hs, ws).unwrap());
            let mut got = vec![0.0; hs * ws];
            crop_unshifted(y.as_slice(), (hb, wb), (hs, ws), &mut got);
            assert_eq!(got, want.as_slice());

            let z = RealMatrix::from_fn(hs, ws, |_, _| rng.random_range(-1.0..1.0));
            let want = center_unshift(&pad_spectrum(&center_shift(&z), hb, wb).unwrap());
            let mut got = vec![0.0; hb * wb];
            pad_unshifted(z.as_slice(), (hs, ws), (hb, wb), &mut got);
            assert_eq!(got, want.as_slice());
        }
    }
}
