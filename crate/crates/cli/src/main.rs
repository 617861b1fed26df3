//! `hsp`: spectral pooling demos, gradient checks, training and benchmarks.

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand};
use hsp_core::bench::{self, CsvLayout};
use hsp_core::gradcheck::{run_suite, SuiteOptions};
use hsp_core::nn::{train_toy_cnn, write_metrics_csv, TrainConfig};
use hsp_core::pgm::GrayImage;
use hsp_core::pooling::{pool_forward, PoolMethod, PoolSpec};
use hsp_core::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_CHECK: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "hsp", version, about = "Hartley spectral pooling toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Downsample an 8-bit binary PGM image.
    Downsample {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// hartley, fourier, max or avg.
        #[arg(long)]
        method: PoolMethod,
        /// Output size as HxW. Max and avg need one integer factor on both axes.
        #[arg(long)]
        size: Size,
    },
    /// Run the finite-difference gradient suite.
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Scale the analytic gradients of checks with this name prefix.
        #[arg(long, hide = true)]
        corrupt: Option<String>,
    },
    /// Train the toy CNN on MNIST and write per-epoch metrics.
    Train {
        /// Directory holding the four MNIST IDX files.
        #[arg(long, env = "HSP_DATA_DIR")]
        data_dir: PathBuf,
        /// max or hartley.
        #[arg(long, default_value = "hartley")]
        pool: PoolMethod,
        #[arg(long, default_value_t = 10)]
        epochs: usize,
        /// Train on a seeded class-balanced subset of this many samples.
        #[arg(long)]
        subset: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        batch_size: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Time Hartley against Fourier pooling, forward plus backward.
    Bench {
        /// Square input sides; defaults to 32,64,128,256,512.
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        #[arg(long)]
        out: PathBuf,
        /// Write one row per (method, n, phase) instead of one per (method, n).
        #[arg(long)]
        long: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Size {
    rows: usize,
    cols: usize,
}

impl FromStr for Size {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (h, w) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("expected HxW, got {s:?}"))?;
        let parse = |t: &str| match t.trim().parse::<usize>() {
            Ok(v) if v > 0 => Ok(v),
            _ => Err(format!("invalid size component {t:?} in {s:?}")),
        };
        Ok(Size {
            rows: parse(h)?,
            cols: parse(w)?,
        })
    }
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Core(Error),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(msg) => Failure::Usage(msg),
            other => Failure::Core(other),
        }
    }
}

fn downsample(input: &PathBuf, output: &PathBuf, method: PoolMethod, size: Size) -> Result<(), Failure> {
    let img = GrayImage::read(input)?;
    let spec = if method.is_spectral() {
        PoolSpec::spectral(method, size.rows, size.cols)
    } else {
        let (r, c) = (img.rows(), img.cols());
        let factor = r / size.rows;
        if factor == 0 || r != factor * size.rows || c != factor * size.cols {
            return Err(Failure::Usage(format!(
                "{method} pooling needs {r}x{c} to be an integer multiple of {}x{} with one factor",
                size.rows, size.cols
            )));
        }
        PoolSpec::spatial(method, factor, factor)
    };
    let (y, _) = pool_forward(&spec, &img.to_matrix())?;
    GrayImage::from_matrix(&y).write(output)?;
    println!(
        "{method}: {}x{} -> {}x{} written to {}",
        img.rows(),
        img.cols(),
        y.rows(),
        y.cols(),
        output.display()
    );
    Ok(())
}

fn gradcheck(seed: u64, corrupt: Option<String>) -> Result<(), Failure> {
    let report = run_suite(&SuiteOptions { seed, corrupt })?;
    print!("{}", report.render());
    let failed: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(format!("gradient check failed: {}", failed.join(", "))))
    }
}

fn write_csv(
    path: &PathBuf,
    write: impl FnOnce(std::io::BufWriter<std::fs::File>) -> hsp_core::Result<()>,
) -> Result<(), Failure> {
    let file = std::fs::File::create(path).map_err(|e| Error::Io {
        path: path.clone(),
        source: e,
    })?;
    Ok(write(std::io::BufWriter::new(file))?)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Downsample {
            input,
            output,
            method,
            size,
        } => downsample(&input, &output, method, size),
        Command::Gradcheck { seed, corrupt } => gradcheck(seed, corrupt),
        Command::Train {
            data_dir,
            pool,
            epochs,
            subset,
            seed,
            batch_size,
            out,
        } => {
            if !matches!(pool, PoolMethod::Max | PoolMethod::Hartley) {
                return Err(Failure::Usage(format!("--pool must be max or hartley, not {pool}")));
            }
            let cfg = TrainConfig {
                epochs,
                batch_size,
                seed,
                ..Default::default()
            };
            let metrics = train_toy_cnn(&data_dir, pool, subset, &cfg, |m| {
                eprintln!(
                    "epoch {:>3}  lr {:.0e}  train_loss {:.5}  test_error {:.4}",
                    m.epoch, m.lr, m.train_loss, m.test_error
                )
            })?;
            write_csv(&out, |w| write_metrics_csv(w, &metrics))?;
            if let Some(last) = metrics.last() {
                println!("final test error: {:.2}%", 100.0 * last.test_error);
            }
            Ok(())
        }
        Command::Bench { sizes, reps, out, long } => {
            let sizes = sizes.unwrap_or_else(bench::default_sizes);
            let layout = if long { CsvLayout::Long } else { CsvLayout::Wide };
            let records = bench::run_benchmark(&sizes, reps, &out, layout)?;
            for r in &records {
                println!(
                    "{:<8} n={:<4} fwd {:.3e}s  bwd {:.3e}s  total {:.3e}s",
                    r.method.as_str(),
                    r.n,
                    r.fwd_s,
                    r.bwd_s,
                    r.total_s
                );
            }
            for w in bench::monotonicity_warnings(&records) {
                eprintln!("warning: {w}");
            }
            for n in bench::hartley_slower_at(&records, 256) {
                eprintln!("warning: hartley pooling slower than fourier at n={n}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_IO)
        }
        Err(Failure::Check(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(EXIT_CHECK)
        }
    }
}
