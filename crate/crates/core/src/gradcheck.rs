//! Central finite-difference checks of every backward pass.
//!
//! The error measure is `max_i |a_i - n_i| / max(max_i |a_i|, max_i |n_i|)`
//! between analytic and numeric gradients, i.e. the worst absolute deviation
//! relative to the gradient's overall scale.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::nn::{
    build_toy_cnn, softmax_cross_entropy, BatchNorm2d, Conv2d, Layer, Linear, Mode, Relu, Sequential, Shape, Tensor4,
};
use crate::pooling::{pool_backward, pool_forward, PoolMethod, PoolSpec};
use crate::{RealMatrix, Result};

pub const FD_EPS: f64 = 1e-5;
/// Smaller step for the full network, which keeps perturbations from
/// crossing ReLU and max-pool switching points.
pub const NETWORK_EPS: f64 = 1e-7;
pub const POOL_TOLERANCE: f64 = 1e-6;
pub const LAYER_TOLERANCE: f64 = 1e-5;
pub const NETWORK_TOLERANCE: f64 = 1e-4;
/// Coordinates sampled per parameter group in the full-network check.
pub const NETWORK_SAMPLES: usize = 6;

pub fn rel_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    let scale = analytic.iter().chain(numeric).fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = analytic
        .iter()
        .zip(numeric)
        .fold(0.0f64, |m, (a, n)| m.max((a - n).abs()));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Per-group errors of one layer check.
#[derive(Debug, Clone)]
pub struct LayerReport {
    pub input: f64,
    pub params: Vec<(String, f64)>,
}

impl LayerReport {
    pub fn max_error(&self) -> f64 {
        self.params.iter().map(|p| p.1).fold(self.input, f64::max)
    }
}

fn random_tensor(shape: Shape, rng: &mut impl Rng) -> Tensor4 {
    Tensor4::from_fn(shape, |_| rng.random_range(-1.0..1.0))
}

/// Checks `layer` on `x` against `L = <r, layer(x)>` for a seeded random `r`.
pub fn check_layer(layer: &mut dyn Layer, x: &Tensor4, mode: Mode, eps: f64, seed: u64) -> Result<LayerReport> {
    check_layer_scaled(layer, x, mode, eps, seed, 1.0)
}

fn check_layer_scaled(
    layer: &mut dyn Layer,
    x: &Tensor4,
    mode: Mode,
    eps: f64,
    seed: u64,
    corrupt: f64,
) -> Result<LayerReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y = layer.forward(x, mode)?;
    let r = random_tensor(y.shape(), &mut rng);
    let analytic_x: Vec<f64> = layer.backward(&r)?.as_slice().iter().map(|g| g * corrupt).collect();
    let analytic_p: Vec<Vec<f64>> = layer.params().iter().map(|p| p.grad.clone()).collect();

    let objective = |layer: &mut dyn Layer, x: &Tensor4| -> Result<f64> { Ok(layer.forward(x, mode)?.dot(&r)) };

    let mut numeric_x = vec![0.0; x.shape().len()];
    let mut xp = x.clone();
    for (i, slot) in numeric_x.iter_mut().enumerate() {
        let orig = xp.as_slice()[i];
        xp.as_mut_slice()[i] = orig + eps;
        let up = objective(layer, &xp)?;
        xp.as_mut_slice()[i] = orig - eps;
        let down = objective(layer, &xp)?;
        xp.as_mut_slice()[i] = orig;
        *slot = (up - down) / (2.0 * eps);
    }

    let mut params = Vec::new();
    for (k, analytic) in analytic_p.iter().enumerate() {
        let mut numeric = vec![0.0; analytic.len()];
        for (i, slot) in numeric.iter_mut().enumerate() {
            let orig = layer.params()[k].value[i];
            layer.params_mut()[k].value[i] = orig + eps;
            let up = objective(layer, x)?;
            layer.params_mut()[k].value[i] = orig - eps;
            let down = objective(layer, x)?;
            layer.params_mut()[k].value[i] = orig;
            *slot = (up - down) / (2.0 * eps);
        }
        params.push((layer.params()[k].name.to_string(), rel_error(analytic, &numeric)));
    }
    Ok(LayerReport {
        input: rel_error(&analytic_x, &numeric_x),
        params,
    })
}

/// Checks a single-map pooling against `L(x) = ||P(x) - t||^2 / 2`.
pub fn check_pooling(spec: &PoolSpec, x: &RealMatrix, eps: f64, seed: u64) -> Result<f64> {
    check_pooling_scaled(spec, x, eps, seed, 1.0)
}

fn check_pooling_scaled(spec: &PoolSpec, x: &RealMatrix, eps: f64, seed: u64, corrupt: f64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (p, ctx) = pool_forward(spec, x)?;
    let t = RealMatrix::from_fn(p.rows(), p.cols(), |_, _| rng.random_range(-1.0..1.0));
    let analytic = pool_backward(&p.lin_comb(1.0, &t, -1.0), &ctx)?.scaled(corrupt);
    let loss = |x: &RealMatrix| -> Result<f64> {
        let p = pool_forward(spec, x)?.0;
        Ok(0.5 * p.lin_comb(1.0, &t, -1.0).norm().powi(2))
    };
    let mut xp = x.clone();
    let mut numeric = vec![0.0; x.as_slice().len()];
    for (i, slot) in numeric.iter_mut().enumerate() {
        let orig = xp.as_slice()[i];
        xp.as_mut_slice()[i] = orig + eps;
        let up = loss(&xp)?;
        xp.as_mut_slice()[i] = orig - eps;
        let down = loss(&xp)?;
        xp.as_mut_slice()[i] = orig;
        *slot = (up - down) / (2.0 * eps);
    }
    Ok(rel_error(analytic.as_slice(), &numeric))
}

/// Full-network check of softmax cross-entropy on `(x, labels)`, sampling
/// `samples` coordinates of every parameter group and of the input.
pub fn check_network(
    net: &mut Sequential,
    x: &Tensor4,
    labels: &[u8],
    eps: f64,
    samples: usize,
    seed: u64,
) -> Result<Vec<(String, f64)>> {
    check_network_scaled(net, x, labels, eps, samples, seed, 1.0)
}

fn check_network_scaled(
    net: &mut Sequential,
    x: &Tensor4,
    labels: &[u8],
    eps: f64,
    samples: usize,
    seed: u64,
    corrupt: f64,
) -> Result<Vec<(String, f64)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let loss = |net: &mut Sequential, x: &Tensor4| -> Result<f64> {
        Ok(softmax_cross_entropy(&net.forward(x, Mode::Train)?, labels)?.0)
    };
    let logits = net.forward(x, Mode::Train)?;
    let (_, g) = softmax_cross_entropy(&logits, labels)?;
    let gx = net.backward(&g)?;
    let names: Vec<String> = net.named_params().into_iter().map(|(n, _)| n).collect();
    let grads: Vec<Vec<f64>> = net.params().iter().map(|p| p.grad.clone()).collect();

    let mut out = Vec::new();
    let pick = |rng: &mut ChaCha8Rng, len: usize| -> Vec<usize> {
        rand::seq::index::sample(rng, len, samples.min(len)).into_vec()
    };

    let idx = pick(&mut rng, x.shape().len());
    let mut xp = x.clone();
    let (mut a, mut n) = (Vec::new(), Vec::new());
    for &i in &idx {
        let orig = xp.as_slice()[i];
        xp.as_mut_slice()[i] = orig + eps;
        let up = loss(net, &xp)?;
        xp.as_mut_slice()[i] = orig - eps;
        let down = loss(net, &xp)?;
        xp.as_mut_slice()[i] = orig;
        a.push(gx.as_slice()[i] * corrupt);
        n.push((up - down) / (2.0 * eps));
    }
    out.push(("input".to_string(), rel_error(&a, &n)));

    for (k, name) in names.iter().enumerate() {
        let idx = pick(&mut rng, grads[k].len());
        let (mut a, mut n) = (Vec::new(), Vec::new());
        for &i in &idx {
            let orig = net.params()[k].value[i];
            net.params_mut()[k].value[i] = orig + eps;
            let up = loss(net, x)?;
            net.params_mut()[k].value[i] = orig - eps;
            let down = loss(net, x)?;
            net.params_mut()[k].value[i] = orig;
            a.push(grads[k][i] * corrupt);
            n.push((up - down) / (2.0 * eps));
        }
        out.push((name.clone(), rel_error(&a, &n)));
    }
    Ok(out)
}

#[derive(Debug, Clone, Default)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Test hook: scales the analytic gradient of every check whose name
    /// starts with this prefix, which must then fail.
    pub corrupt: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub max_rel_err: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.max_rel_err < self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed())
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "gradient check, seed {}, eps {:e} (network {:e})",
            self.seed, FD_EPS, NETWORK_EPS
        );
        let _ = writeln!(s, "{:<32} {:>12} {:>10}  status", "check", "max_rel_err", "tolerance");
        for c in &self.checks {
            let status = if c.passed() { "PASS" } else { "FAIL" };
            let _ = writeln!(
                s,
                "{:<32} {:>12.3e} {:>10.0e}  {status}",
                c.name, c.max_rel_err, c.tolerance
            );
        }
        let passed = self.checks.iter().filter(|c| c.passed()).count();
        let _ = writeln!(s, "{passed}/{} checks passed", self.checks.len());
        s
    }
}

/// Runs every pooling, layer and full-network check.
pub fn run_suite(opts: &SuiteOptions) -> Result<SuiteReport> {
    let factor = |name: &str| match &opts.corrupt {
        Some(prefix) if name.starts_with(prefix.as_str()) => 1.5,
        _ => 1.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut checks = Vec::new();
    let mut push = |name: String, err: f64, tol: f64| {
        checks.push(Check {
            name,
            max_rel_err: err,
            tolerance: tol,
        })
    };

    for method in PoolMethod::ALL {
        let (rows, cols) = (rng.random_range(4..=10), rng.random_range(4..=10));
        let spec = if method.is_spectral() {
            PoolSpec::spectral(method, rng.random_range(1..=rows), rng.random_range(1..=cols))
        } else {
            PoolSpec::spatial(method, rng.random_range(1..=3), rng.random_range(1..=3))
        };
        let x = RealMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0));
        let name = format!("pool/{method}");
        let err = check_pooling_scaled(&spec, &x, FD_EPS, rng.random(), factor(&name))?;
        push(name, err, POOL_TOLERANCE);
    }

    let layer_seed: u64 = rng.random();
    let mut init = ChaCha8Rng::seed_from_u64(layer_seed);
    let x = random_tensor(Shape::new(2, 3, 8, 8), &mut init);
    let mut conv = Conv2d::new("conv", 3, 4, 5, true, &mut init)?;
    let bx = random_tensor(Shape::new(4, 3, 5, 5), &mut init);
    let gamma: Vec<f64> = (0..3).map(|_| init.random_range(0.5..1.5)).collect();
    let beta: Vec<f64> = (0..3).map(|_| init.random_range(-0.5..0.5)).collect();
    let mut bn = BatchNorm2d::new("bn", 3).with_affine(gamma, beta)?;
    let rx = Tensor4::from_fn(Shape::new(2, 3, 6, 6), |_| {
        let v: f64 = init.random_range(1e-3..1.0);
        if init.random::<bool>() {
            v
        } else {
            -v
        }
    });
    let mut relu = Relu::new("relu");
    let fx = random_tensor(Shape::new(3, 2, 4, 4), &mut init);
    let mut fc = Linear::new("fc", 32, 10, &mut init)?;

    let layers: [(&str, &mut dyn Layer, &Tensor4); 4] = [
        ("layer/conv2d", &mut conv, &x),
        ("layer/batchnorm", &mut bn, &bx),
        ("layer/relu", &mut relu, &rx),
        ("layer/fc", &mut fc, &fx),
    ];
    for (name, layer, input) in layers {
        let report = check_layer_scaled(layer, input, Mode::Train, FD_EPS, rng.random(), factor(name))?;
        push(name.to_string(), report.max_error(), LAYER_TOLERANCE);
    }

    let name = "loss/softmax_ce";
    let logits = random_tensor(Shape::new(4, 10, 1, 1), &mut init).into_vec();
    let logits = Tensor4::new(Shape::new(4, 10, 1, 1), logits.iter().map(|v| 3.0 * v).collect())?;
    let labels: Vec<u8> = (0..4).map(|_| init.random_range(0..10)).collect();
    let (_, g) = softmax_cross_entropy(&logits, &labels)?;
    let analytic: Vec<f64> = g.as_slice().iter().map(|v| v * factor(name)).collect();
    let mut numeric = Vec::with_capacity(analytic.len());
    for i in 0..analytic.len() {
        let mut zp = logits.clone();
        zp.as_mut_slice()[i] += FD_EPS;
        let mut zm = logits.clone();
        zm.as_mut_slice()[i] -= FD_EPS;
        let up = softmax_cross_entropy(&zp, &labels)?.0;
        let down = softmax_cross_entropy(&zm, &labels)?.0;
        numeric.push((up - down) / (2.0 * FD_EPS));
    }
    push(name.to_string(), rel_error(&analytic, &numeric), LAYER_TOLERANCE);

    let x = Tensor4::from_fn(Shape::new(2, 1, 28, 28), |_| init.random_range(0.0..1.0));
    let labels: Vec<u8> = (0..2).map(|_| init.random_range(0..10)).collect();
    for method in [PoolMethod::Max, PoolMethod::Hartley] {
        let mut net = build_toy_cnn(method, layer_seed)?;
        let prefix = format!("net/toy_cnn_{method}");
        let groups = check_network_scaled(
            &mut net,
            &x,
            &labels,
            NETWORK_EPS,
            NETWORK_SAMPLES,
            rng.random(),
            factor(&prefix),
        )?;
        for (group, err) in groups {
            push(format!("{prefix}/{group}"), err, NETWORK_TOLERANCE);
        }
    }

    Ok(SuiteReport {
        seed: opts.seed,
        checks,
    })
}
