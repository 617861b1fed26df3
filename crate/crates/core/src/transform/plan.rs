//! One-dimensional transform kernels and a process-wide plan cache.
//!
//! Plans are immutable once built and shared through `Arc`, so the cache only
//! needs a lock around the map itself.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock, RwLock};

use num_complex::Complex64;

/// Non-power-of-two lengths up to this size use an O(n^2) table kernel; longer
/// ones go through Bluestein's algorithm.
const TABLE_MAX: usize = 64;

fn bit_reverse_table(n: usize) -> Vec<usize> {
    let bits = n.trailing_zeros();
    (0..n)
        .map(|i| {
            if bits == 0 {
                0
            } else {
                i.reverse_bits() >> (usize::BITS - bits)
            }
        })
        .collect()
}

fn permute<T>(data: &mut [T], bitrev: &[usize]) {
    for (i, &j) in bitrev.iter().enumerate() {
        if i < j {
            data.swap(i, j);
        }
    }
}

#[derive(Debug)]
pub(crate) enum FftPlan {
    Radix2 {
        twiddles: Vec<Complex64>,
        bitrev: Vec<usize>,
    },
    Table {
        roots: Vec<Complex64>,
    },
    Bluestein {
        n: usize,
        chirp: Vec<Complex64>,
        kernel: Vec<Complex64>,
        inner: Arc<FftPlan>,
    },
}

impl FftPlan {
    fn build(n: usize) -> Self {
        assert!(n > 0);
        if n.is_power_of_two() {
            FftPlan::Radix2 {
                twiddles: (0..n / 2)
                    .map(|j| Complex64::from_polar(1.0, -2.0 * PI * j as f64 / n as f64))
                    .collect(),
                bitrev: bit_reverse_table(n),
            }
        } else if n <= TABLE_MAX {
            FftPlan::Table {
                roots: (0..n)
                    .map(|j| Complex64::from_polar(1.0, -2.0 * PI * j as f64 / n as f64))
                    .collect(),
            }
        } else {
            let m = (2 * n - 1).next_power_of_two();
            let inner = fft_plan(m);
            // w_k = exp(-i pi k^2 / n); k^2 is reduced mod 2n to keep the angle small.
            let chirp: Vec<Complex64> = (0..n)
                .map(|k| {
                    let k2 = (k as u128 * k as u128 % (2 * n as u128)) as f64;
                    Complex64::from_polar(1.0, -PI * k2 / n as f64)
                })
                .collect();
            let mut kernel = vec![Complex64::default(); m];
            kernel[0] = chirp[0].conj();
            for k in 1..n {
                kernel[k] = chirp[k].conj();
                kernel[m - k] = chirp[k].conj();
            }
            inner.forward(&mut kernel);
            FftPlan::Bluestein {
                n,
                chirp,
                kernel,
                inner,
            }
        }
    }

    pub(crate) fn len(&self) -> usize {
        match self {
            FftPlan::Radix2 { bitrev, .. } => bitrev.len(),
            FftPlan::Table { roots } => roots.len(),
            FftPlan::Bluestein { n, .. } => *n,
        }
    }

    /// Unnormalized forward DFT, `X[k] = sum_j x[j] exp(-2 pi i jk / n)`, in place.
    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.len());
        match self {
            FftPlan::Radix2 { twiddles, bitrev } => {
                let n = data.len();
                permute(data, bitrev);
                let mut len = 2;
                while len <= n {
                    let half = len / 2;
                    let step = n / len;
                    for block in data.chunks_exact_mut(len) {
                        let (lo, hi) = block.split_at_mut(half);
                        for (k, (a, b)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
                            let t = *b * twiddles[k * step];
                            *b = *a - t;
                            *a += t;
                        }
                    }
                    len <<= 1;
                }
            }
            FftPlan::Table { roots } => {
                let n = roots.len();
                let input = data.to_vec();
                for (k, out) in data.iter_mut().enumerate() {
                    let mut acc = Complex64::default();
                    let mut idx = 0;
                    for &x in &input {
                        acc += x * roots[idx];
                        idx += k;
                        if idx >= n {
                            idx -= n;
                        }
                    }
                    *out = acc;
                }
            }
            FftPlan::Bluestein {
                n,
                chirp,
                kernel,
                inner,
            } => {
                let m = kernel.len();
                let mut buf = vec![Complex64::default(); m];
                for k in 0..*n {
                    buf[k] = data[k] * chirp[k];
                }
                inner.forward(&mut buf);
                for (b, k) in buf.iter_mut().zip(kernel) {
                    *b *= *k;
                }
                inner.inverse(&mut buf);
                let inv_m = 1.0 / m as f64;
                for k in 0..*n {
                    data[k] = buf[k] * chirp[k] * inv_m;
                }
            }
        }
    }

    /// Unnormalized inverse DFT (positive exponent), in place.
    pub(crate) fn inverse(&self, data: &mut [Complex64]) {
        data.iter_mut().for_each(|z| *z = z.conj());
        self.forward(data);
        data.iter_mut().for_each(|z| *z = z.conj());
    }
}

#[derive(Debug)]
pub(crate) enum DhtPlan {
    Radix2 {
        /// `(cos, sin)` of `pi k / h` for stage `h` at `h/2 + k - 1`, `0 < k < h/2`.
        twiddles: Vec<(f64, f64)>,
        bitrev: Vec<usize>,
    },
    /// Dense `n x n` kernel, row-major.
    Table {
        cas: Vec<f64>,
    },
    ViaFft(Arc<FftPlan>),
}

impl DhtPlan {
    fn build(n: usize) -> Self {
        assert!(n > 0);
        if n.is_power_of_two() && n >= 4 {
            let angle = |j: usize| 2.0 * PI * j as f64 / n as f64;
            let mut twiddles = vec![(0.0, 0.0); n / 2];
            let mut h = 4;
            while h < n {
                let step = n / (2 * h);
                for k in 1..h / 2 {
                    let t = angle(k * step);
                    twiddles[h / 2 + k - 1] = (t.cos(), t.sin());
                }
                h *= 2;
            }
            DhtPlan::Radix2 {
                twiddles,
                bitrev: bit_reverse_table(n),
            }
        } else if n <= TABLE_MAX {
            let row: Vec<f64> = (0..n)
                .map(|j| {
                    let t = 2.0 * PI * j as f64 / n as f64;
                    t.cos() + t.sin()
                })
                .collect();
            DhtPlan::Table {
                cas: (0..n * n).map(|i| row[(i / n) * (i % n) % n]).collect(),
            }
        } else {
            DhtPlan::ViaFft(fft_plan(n))
        }
    }

    pub(crate) fn len(&self) -> usize {
        match self {
            DhtPlan::Radix2 { bitrev, .. } => bitrev.len(),
            DhtPlan::Table { cas } => cas.len().isqrt(),
            DhtPlan::ViaFft(p) => p.len(),
        }
    }

    /// The dense kernel matrix, for sizes small enough to store one.
    pub(crate) fn kernel(&self) -> Option<&[f64]> {
        match self {
            DhtPlan::Table { cas } => Some(cas),
            _ => None,
        }
    }

    /// Unnormalized DHT, `H[k] = sum_j x[j] cas(2 pi jk / n)`, in place.
    pub(crate) fn apply(&self, data: &mut [f64]) {
        debug_assert_eq!(data.len(), self.len());
        match self {
            DhtPlan::Radix2 { twiddles, bitrev } => {
                let n = data.len();
                permute(data, bitrev);
                // Combine pairs of half-length spectra E (even samples) and O (odd):
                //   H[k]   = E[k] + cos(pi k/h) O[k] + sin(pi k/h) O[h-k]
                //   H[k+h] = E[k] - cos(pi k/h) O[k] - sin(pi k/h) O[h-k]
                let mut h = 1;
                while h < n {
                    for block in data.chunks_exact_mut(2 * h) {
                        let (e0, o0) = (block[0], block[h]);
                        block[0] = e0 + o0;
                        block[h] = e0 - o0;
                        if h >= 2 {
                            let q = h / 2;
                            let (e, o) = (block[q], block[h + q]);
                            block[q] = e + o;
                            block[h + q] = e - o;
                        }
                        if h < 4 {
                            continue;
                        }
                        // k runs up through the lower quarter while h - k runs
                        // down through the upper one.
                        let q = h / 2;
                        let (e, o) = block.split_at_mut(h);
                        let (e_lo, e_hi) = e.split_at_mut(q + 1);
                        let (o_lo, o_hi) = o.split_at_mut(q + 1);
                        let stage = &twiddles[q..h - 1];
                        let lanes = e_lo[1..q]
                            .iter_mut()
                            .zip(e_hi.iter_mut().rev())
                            .zip(o_lo[1..q].iter_mut().zip(o_hi.iter_mut().rev()));
                        for (&(c, s), ((ek, ehk), (ok, ohk))) in stage.iter().zip(lanes) {
                            let t1 = c * *ok + s * *ohk;
                            let t2 = s * *ok - c * *ohk;
                            let (a, b) = (*ek, *ehk);
                            *ek = a + t1;
                            *ok = a - t1;
                            *ehk = b + t2;
                            *ohk = b - t2;
                        }
                    }
                    h *= 2;
                }
            }
            DhtPlan::Table { cas } => {
                let n = data.len();
                if n == 1 {
                    return;
                }
                let input = data.to_vec();
                for (out, row) in data.iter_mut().zip(cas.chunks_exact(n)) {
                    *out = row.iter().zip(&input).map(|(a, b)| a * b).sum();
                }
            }
            DhtPlan::ViaFft(plan) => {
                let mut buf: Vec<Complex64> = data.iter().map(|&x| Complex64::new(x, 0.0)).collect();
                plan.forward(&mut buf);
                // For real input, H = Re{F} - Im{F}.
                for (d, z) in data.iter_mut().zip(&buf) {
                    *d = z.re - z.im;
                }
            }
        }
    }
}

fn cached<P>(
    cache: &'static OnceLock<RwLock<HashMap<usize, Arc<P>>>>,
    n: usize,
    build: impl FnOnce(usize) -> P,
) -> Arc<P> {
    let map = cache.get_or_init(Default::default);
    if let Some(p) = map.read().expect("plan cache poisoned").get(&n) {
        return Arc::clone(p);
    }
    let plan = Arc::new(build(n));
    let mut w = map.write().expect("plan cache poisoned");
    Arc::clone(w.entry(n).or_insert(plan))
}

pub(crate) fn fft_plan(n: usize) -> Arc<FftPlan> {
    static CACHE: OnceLock<RwLock<HashMap<usize, Arc<FftPlan>>>> = OnceLock::new();
    cached(&CACHE, n, FftPlan::build)
}

pub(crate) fn dht_plan(n: usize) -> Arc<DhtPlan> {
    static CACHE: OnceLock<RwLock<HashMap<usize, Arc<DhtPlan>>>> = OnceLock::new();
    cached(&CACHE, n, DhtPlan::build)
}
