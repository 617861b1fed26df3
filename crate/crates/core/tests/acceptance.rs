//! Acceptance suite: one PASS/FAIL line per criterion; exits non-zero if any
//! hard criterion fails. The benchmark criterion only warns.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use hsp_core::bench::{self, CsvLayout};
use hsp_core::gradcheck::{run_suite, SuiteOptions};
use hsp_core::nn::{build_toy_cnn, train_toy_cnn, write_metrics_csv, Shape, TrainConfig};
use hsp_core::pgm::GrayImage;
use hsp_core::pooling::reconstruct::reconstruction_error;
use hsp_core::pooling::{pool_backward, pool_forward, PoolMethod, PoolSpec};
use hsp_core::transform::{dft_2d, dht_2d};
use hsp_core::RealMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DHT_ORACLE_TOL: f64 = 1e-11;
const INVOLUTION_TOL: f64 = 1e-10;
const BRIDGE_TOL: f64 = 1e-10;
const ADJOINT_TOL: f64 = 1e-10;
const ADJOINT_TRIALS: usize = 100;
const TRAIN_SUBSET: usize = 2000;
const TRAIN_EPOCHS: usize = 5;
const TRAIN_SEEDS: [u64; 3] = [0, 1, 2];

type Criterion = (&'static str, fn() -> Outcome);

enum Verdict {
    Pass,
    Fail,
    Warn,
}

struct Outcome {
    verdict: Verdict,
    detail: String,
}

fn check(ok: bool, detail: String) -> Outcome {
    Outcome {
        verdict: if ok { Verdict::Pass } else { Verdict::Fail },
        detail,
    }
}

fn random(rows: usize, cols: usize, rng: &mut impl Rng) -> RealMatrix {
    RealMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// Direct double sum of `x[r][c] cas(2 pi (u r / M + v c / N))`, unitary.
fn dht_oracle(x: &RealMatrix) -> RealMatrix {
    let (m, n) = x.dims();
    let scale = 1.0 / ((m * n) as f64).sqrt();
    RealMatrix::from_fn(m, n, |u, v| {
        let mut acc = 0.0;
        for r in 0..m {
            for c in 0..n {
                let t = 2.0 * PI * (((u * r) % m) as f64 / m as f64 + ((v * c) % n) as f64 / n as f64);
                acc += x.get(r, c) * (t.cos() + t.sin());
            }
        }
        acc * scale
    })
}

fn transform_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let sides = [4, 7, 8, 12, 14, 16, 20, 28, 32, 64];
    let mut dims: Vec<(usize, usize)> = sides.iter().map(|&s| (s, s)).collect();
    dims.extend([(7, 12), (28, 14), (20, 64), (4, 28)]);
    let mut oracle_err = 0.0f64;
    for &(m, n) in &dims {
        let x = random(m, n, &mut rng);
        oracle_err = oracle_err.max(dht_2d(&x).unwrap().max_abs_diff(&dht_oracle(&x)));
    }
    let mut inv_err = 0.0f64;
    for &(m, n) in &[
        (4, 4),
        (7, 9),
        (28, 28),
        (64, 64),
        (100, 60),
        (128, 128),
        (200, 256),
        (256, 256),
    ] {
        let x = random(m, n, &mut rng);
        let back = dht_2d(&dht_2d(&x).unwrap()).unwrap();
        inv_err = inv_err.max(back.max_abs_diff(&x));
    }
    check(
        oracle_err < DHT_ORACLE_TOL && inv_err < INVOLUTION_TOL,
        format!(
            "fast vs direct max abs err {oracle_err:.2e} (tol {DHT_ORACLE_TOL:e}) over {} sizes; \
             involution err {inv_err:.2e} up to 256x256 (tol {INVOLUTION_TOL:e})",
            dims.len()
        ),
    )
}

fn real_minus_imag_bridge() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let x = random(16, 16, &mut rng);
        let f = dft_2d(&x).unwrap();
        let bridge = RealMatrix::from_fn(16, 16, |r, c| {
            let z = f.get(r, c);
            z.re - z.im
        });
        worst = worst.max(dht_2d(&x).unwrap().max_abs_diff(&bridge));
    }
    check(
        worst < BRIDGE_TOL,
        format!("max |dht - (Re dft - Im dft)| {worst:.2e} over 100 16x16 inputs (tol {BRIDGE_TOL:e})"),
    )
}

fn gradient_suite() -> Outcome {
    let report = run_suite(&SuiteOptions::default()).unwrap();
    let failed: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
    let worst = |prefix: &str| {
        report
            .checks
            .iter()
            .filter(|c| c.name.starts_with(prefix))
            .map(|c| c.max_rel_err)
            .fold(0.0, f64::max)
    };
    check(
        failed.is_empty(),
        format!(
            "{} checks; worst rel err pool {:.2e} (tol 1e-6), layers {:.2e} (tol 1e-5), network {:.2e} (tol 1e-4){}",
            report.checks.len(),
            worst("pool/"),
            worst("layer/").max(worst("loss/")),
            worst("net/"),
            if failed.is_empty() {
                String::new()
            } else {
                format!("; failed: {}", failed.join(", "))
            }
        ),
    )
}

fn adjoint_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut details = Vec::new();
    let mut ok = true;
    for method in [PoolMethod::Hartley, PoolMethod::Fourier, PoolMethod::Avg] {
        let mut worst = 0.0f64;
        for _ in 0..ADJOINT_TRIALS {
            let (rows, cols) = (rng.random_range(2..=24), rng.random_range(2..=24));
            let spec = if method.is_spectral() {
                PoolSpec::spectral(method, rng.random_range(1..=rows), rng.random_range(1..=cols))
            } else {
                let window = rng.random_range(1..=rows.min(cols).min(4));
                PoolSpec::spatial(method, window, rng.random_range(1..=window))
            };
            let x = random(rows, cols, &mut rng);
            let (px, ctx) = pool_forward(&spec, &x).unwrap();
            let y = random(px.rows(), px.cols(), &mut rng);
            let pty = pool_backward(&y, &ctx).unwrap();
            worst = worst.max((px.dot(&y) - x.dot(&pty)).abs());
        }
        ok &= worst < ADJOINT_TOL;
        details.push(format!("{method} {worst:.2e}"));
    }
    check(
        ok,
        format!(
            "max |<Px,y> - <x,P'y>| over {ADJOINT_TRIALS} random trials: {} (tol {ADJOINT_TOL:e})",
            details.join(", ")
        ),
    )
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn energy_dominance() -> Outcome {
    let mut ok = true;
    let mut details = Vec::new();
    for name in ["camera.pgm", "moon.pgm"] {
        let x = GrayImage::read(fixture(name)).unwrap().to_matrix();
        let err = |m| reconstruction_error(&x, m, 4).unwrap();
        let (h, mx, av) = (err(PoolMethod::Hartley), err(PoolMethod::Max), err(PoolMethod::Avg));
        ok &= h < mx && h < av;
        details.push(format!("{name} hartley {h:.1} max {mx:.1} avg {av:.1}"));
    }
    check(ok, format!("4x reconstruction error, {}", details.join("; ")))
}

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist-desk")
}

fn toy_cnn_training() -> Outcome {
    let expected = [
        ("conv1", Shape::new(1, 16, 28, 28)),
        ("bn1", Shape::new(1, 16, 28, 28)),
        ("relu1", Shape::new(1, 16, 28, 28)),
        ("pool1", Shape::new(1, 16, 14, 14)),
        ("conv2", Shape::new(1, 32, 14, 14)),
        ("bn2", Shape::new(1, 32, 14, 14)),
        ("relu2", Shape::new(1, 32, 14, 14)),
        ("pool2", Shape::new(1, 32, 7, 7)),
        ("fc", Shape::new(1, 10, 1, 1)),
    ];
    let mut shapes_ok = true;
    for pool in [PoolMethod::Max, PoolMethod::Hartley] {
        let trace = build_toy_cnn(pool, 0)
            .unwrap()
            .shape_trace(Shape::new(1, 1, 28, 28))
            .unwrap();
        let got: Vec<(&str, Shape)> = trace.iter().map(|(n, s)| (n.as_str(), *s)).collect();
        shapes_ok &= got == expected;
    }

    let cfg = |seed| TrainConfig {
        epochs: TRAIN_EPOCHS,
        seed,
        ..Default::default()
    };
    let mean_error = |pool| {
        let errs: Vec<f64> = TRAIN_SEEDS
            .iter()
            .map(|&seed| {
                let m = train_toy_cnn(&data_dir(), pool, Some(TRAIN_SUBSET), &cfg(seed), |_| {}).unwrap();
                m.last().unwrap().test_error
            })
            .collect();
        (errs.iter().sum::<f64>() / errs.len() as f64, errs)
    };
    let (hartley, h_runs) = mean_error(PoolMethod::Hartley);
    let (max, m_runs) = mean_error(PoolMethod::Max);
    let pct = |v: &[f64]| {
        v.iter()
            .map(|e| format!("{:.2}", 100.0 * e))
            .collect::<Vec<_>>()
            .join("/")
    };
    check(
        shapes_ok && hartley <= max,
        format!(
            "layer shapes {}; mean test error after {TRAIN_EPOCHS} epochs on {TRAIN_SUBSET} samples, \
             seeds {TRAIN_SEEDS:?}: hartley {:.2}% ({}) vs max {:.2}% ({})",
            if shapes_ok { "match" } else { "MISMATCH" },
            100.0 * hartley,
            pct(&h_runs),
            100.0 * max,
            pct(&m_runs)
        ),
    )
}

fn benchmark() -> Outcome {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let path = dir.join("acceptance-bench.csv");
    let records = bench::run_benchmark(&bench::default_sizes(), 5, &path, CsvLayout::Wide).unwrap();
    let slower = bench::hartley_slower_at(&records, 256);
    let ratio: Vec<String> = bench::default_sizes()
        .iter()
        .filter_map(|&n| {
            let t = |m| records.iter().find(|r| r.method == m && r.n == n).map(|r| r.total_s);
            Some(format!(
                "n={n} {:.2}x",
                t(PoolMethod::Fourier)? / t(PoolMethod::Hartley)?
            ))
        })
        .collect();
    Outcome {
        verdict: if slower.is_empty() {
            Verdict::Pass
        } else {
            Verdict::Warn
        },
        detail: format!(
            "fourier/hartley total time ratio {}; csv at {}{}",
            ratio.join(", "),
            path.display(),
            if slower.is_empty() {
                String::new()
            } else {
                format!("; hartley slower at n={slower:?}")
            }
        ),
    }
}

fn determinism() -> Outcome {
    let cfg = TrainConfig {
        epochs: 2,
        seed: 11,
        ..Default::default()
    };
    let csv = || {
        let m = train_toy_cnn(&data_dir(), PoolMethod::Hartley, Some(500), &cfg, |_| {}).unwrap();
        let mut buf = Vec::new();
        write_metrics_csv(&mut buf, &m).unwrap();
        buf
    };
    let train_same = csv() == csv();
    let report = || run_suite(&SuiteOptions { seed: 3, corrupt: None }).unwrap().render();
    let grad_same = report() == report();
    check(
        train_same && grad_same,
        format!("repeated train CSV identical: {train_same}; repeated gradcheck report identical: {grad_same}"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("transform correctness", transform_correctness),
        ("dht = Re dft - Im dft", real_minus_imag_bridge),
        ("finite-difference gradients", gradient_suite),
        ("pooling adjoints", adjoint_suite),
        ("reconstruction energy", energy_dominance),
        ("toy CNN spectral vs max", toy_cnn_training),
        ("pooling runtime", benchmark),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let tag = match outcome.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => {
                failed += 1;
                "FAIL"
            }
            Verdict::Warn => "WARN",
        };
        println!(
            "[{tag}] criterion {}: {name}: {} ({:.1}s)",
            i + 1,
            outcome.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
