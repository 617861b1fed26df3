//! Wall-clock comparison of Hartley and Fourier spectral pooling.
//!
//! Each measurement pools a seeded random n x n input to (n/2, n/2) and
//! back-propagates a seeded random upstream gradient. Timings are medians over
//! the repetitions, after warm-up runs that are not recorded.

use std::io::{Read, Write};
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::pooling::{pool_backward, pool_forward, PoolMethod, PoolSpec};
use crate::{Error, RealMatrix, Result};

pub const MIN_SIZE: usize = 4;
pub const MIN_REPS: usize = 3;
pub const WARMUP_RUNS: usize = 2;
pub const DEFAULT_SEED: u64 = 0;
pub const METHODS: [PoolMethod; 2] = [PoolMethod::Hartley, PoolMethod::Fourier];

/// 32, 64, ..., 512.
pub fn default_sizes() -> Vec<usize> {
    (5..=9).map(|k| 1 << k).collect()
}

/// One CSV row: `method,n,reps,fwd_s,bwd_s,total_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub method: PoolMethod,
    pub n: usize,
    pub reps: usize,
    pub fwd_s: f64,
    pub bwd_s: f64,
    pub total_s: f64,
}

impl BenchRecord {
    /// Pooled output side length.
    pub fn out_n(&self) -> usize {
        self.n / 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CsvLayout {
    #[default]
    Wide,
    /// `method,n,phase,seconds`, one row per timing.
    Long,
}

/// Pooled output and input gradient of one benchmark run.
pub fn pooling_payload(method: PoolMethod, n: usize, seed: u64) -> Result<(RealMatrix, RealMatrix)> {
    let (x, g, spec) = setup(method, n, seed)?;
    let (y, ctx) = pool_forward(&spec, &x)?;
    Ok((y, pool_backward(&g, &ctx)?))
}

fn setup(method: PoolMethod, n: usize, seed: u64) -> Result<(RealMatrix, RealMatrix, PoolSpec)> {
    if !METHODS.contains(&method) {
        return Err(Error::invalid(format!(
            "benchmark compares spectral poolings only, not {method}"
        )));
    }
    if n < MIN_SIZE {
        return Err(Error::invalid(format!(
            "benchmark size must be at least {MIN_SIZE}, got {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = RealMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let g = RealMatrix::from_fn(n / 2, n / 2, |_, _| rng.random_range(-1.0..1.0));
    Ok((x, g, PoolSpec::spectral(method, n / 2, n / 2)))
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Times forward then backward pooling `reps` times on one thread.
pub fn time_pooling(method: PoolMethod, n: usize, reps: usize, seed: u64) -> Result<BenchRecord> {
    if reps < MIN_REPS {
        return Err(Error::invalid(format!(
            "at least {MIN_REPS} repetitions required, got {reps}"
        )));
    }
    let (x, g, spec) = setup(method, n, seed)?;
    let mut reference: Option<(RealMatrix, RealMatrix)> = None;
    let (mut fwd, mut bwd, mut total) = (Vec::new(), Vec::new(), Vec::new());
    for run in 0..WARMUP_RUNS + reps {
        let t0 = Instant::now();
        let (y, ctx) = pool_forward(&spec, &x)?;
        let t1 = Instant::now();
        let dx = pool_backward(&g, &ctx)?;
        let t2 = Instant::now();
        match &reference {
            None => reference = Some((y, dx)),
            Some((ry, rdx)) if *ry != y || *rdx != dx => {
                return Err(Error::Consistency(format!(
                    "{method} pooling payload changed between repetitions at n={n}"
                )))
            }
            Some(_) => {}
        }
        if run >= WARMUP_RUNS {
            let f = (t1 - t0).as_secs_f64().max(1e-9);
            let b = (t2 - t1).as_secs_f64().max(1e-9);
            fwd.push(f);
            bwd.push(b);
            total.push(f + b);
        }
    }
    Ok(BenchRecord {
        method,
        n,
        reps,
        fwd_s: median(&mut fwd),
        bwd_s: median(&mut bwd),
        total_s: median(&mut total),
    })
}

/// Times every (method, size) pair and writes the records as CSV.
pub fn run_benchmark(sizes: &[usize], reps: usize, out_path: &Path, layout: CsvLayout) -> Result<Vec<BenchRecord>> {
    if sizes.is_empty() {
        return Err(Error::invalid("benchmark needs at least one size"));
    }
    let file = std::fs::File::create(out_path).map_err(|e| Error::io(out_path, e))?;
    let mut records = Vec::with_capacity(sizes.len() * METHODS.len());
    for &n in sizes {
        for method in METHODS {
            records.push(time_pooling(method, n, reps, DEFAULT_SEED)?);
        }
    }
    write_records(std::io::BufWriter::new(file), &records, layout)?;
    Ok(records)
}

pub fn write_records(out: impl Write, records: &[BenchRecord], layout: CsvLayout) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    match layout {
        CsvLayout::Wide => {
            for r in records {
                w.serialize(r)?;
            }
        }
        CsvLayout::Long => {
            w.write_record(["method", "n", "phase", "seconds"])?;
            for r in records {
                for (phase, s) in [("forward", r.fwd_s), ("backward", r.bwd_s), ("total", r.total_s)] {
                    w.write_record([r.method.as_str(), &r.n.to_string(), phase, &s.to_string()])?;
                }
            }
        }
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

/// Parses the wide layout.
pub fn read_records(input: impl Read) -> Result<Vec<BenchRecord>> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Sizes at which a method's total time dropped as n grew.
pub fn monotonicity_warnings(records: &[BenchRecord]) -> Vec<String> {
    let mut out = Vec::new();
    for method in METHODS {
        let mut rows: Vec<&BenchRecord> = records.iter().filter(|r| r.method == method).collect();
        rows.sort_by_key(|r| r.n);
        for w in rows.windows(2) {
            if w[1].total_s < w[0].total_s {
                out.push(format!(
                    "{method}: total time at n={} ({:.3e}s) below n={} ({:.3e}s)",
                    w[1].n, w[1].total_s, w[0].n, w[0].total_s
                ));
            }
        }
    }
    out
}

/// Sizes >= `min_n` where Hartley pooling was slower than Fourier pooling.
pub fn hartley_slower_at(records: &[BenchRecord], min_n: usize) -> Vec<usize> {
    let time = |m: PoolMethod, n: usize| records.iter().find(|r| r.method == m && r.n == n).map(|r| r.total_s);
    let mut sizes: Vec<usize> = records.iter().map(|r| r.n).filter(|&n| n >= min_n).collect();
    sizes.sort_unstable();
    sizes.dedup();
    sizes
        .into_iter()
        .filter(
            |&n| match (time(PoolMethod::Hartley, n), time(PoolMethod::Fourier, n)) {
                (Some(h), Some(f)) => h > f,
                _ => false,
            },
        )
        .collect()
}
