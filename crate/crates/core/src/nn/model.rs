use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{BatchNorm2d, Conv2d, Layer, Linear, Mode, Param, PoolLayer, Relu, Shape, Tensor4};
use crate::pooling::{PoolMethod, PoolSpec};
use crate::{Error, Execution, Result};

/// A stack of layers run in order.
#[derive(Default)]
pub struct Sequential {
    layers: Vec<Box<dyn Layer>>,
}

impl Sequential {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, layer: impl Layer + 'static) {
        self.layers.push(Box::new(layer));
    }

    pub fn layers(&self) -> &[Box<dyn Layer>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Box<dyn Layer>] {
        &mut self.layers
    }

    pub fn forward(&mut self, x: &Tensor4, mode: Mode) -> Result<Tensor4> {
        let mut layers = self.layers.iter_mut();
        let Some(first) = layers.next() else {
            return Ok(x.clone());
        };
        let mut cur = first.forward(x, mode)?;
        for layer in layers {
            cur = layer.forward(&cur, mode)?;
        }
        Ok(cur)
    }

    pub fn backward(&mut self, g_out: &Tensor4) -> Result<Tensor4> {
        let mut g = g_out.clone();
        for layer in self.layers.iter_mut().rev() {
            g = layer.backward(&g)?;
        }
        Ok(g)
    }

    pub fn params(&self) -> Vec<&Param> {
        self.layers.iter().flat_map(|l| l.params()).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        self.layers.iter_mut().flat_map(|l| l.params_mut()).collect()
    }

    /// `(layer name, param)` pairs in forward order.
    pub fn named_params(&self) -> Vec<(String, &Param)> {
        self.layers
            .iter()
            .flat_map(|l| {
                l.params()
                    .into_iter()
                    .map(move |p| (format!("{}.{}", l.name(), p.name), p))
            })
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    /// Output shape after every layer, in order.
    pub fn shape_trace(&self, input: Shape) -> Result<Vec<(String, Shape)>> {
        let mut cur = input;
        self.layers
            .iter()
            .map(|l| {
                cur = l.output_shape(cur)?;
                Ok((l.name().to_string(), cur))
            })
            .collect()
    }
}

/// The toy MNIST CNN: two blocks of 5x5 conv (16 then 32 channels, no bias),
/// batchnorm, ReLU and pooling, then a 10-way fully-connected layer.
///
/// Pooling is either max (window 2, stride 2) or Hartley spectral pooling to
/// 14x14 and 7x7. Both variants have identical parameters for a given seed.
pub fn build_toy_cnn(pool: PoolMethod, seed: u64) -> Result<Sequential> {
    build_toy_cnn_with(pool, seed, Execution::default())
}

pub fn build_toy_cnn_with(pool: PoolMethod, seed: u64, exec: Execution) -> Result<Sequential> {
    let pool_spec = |side: usize| match pool {
        PoolMethod::Max => Ok(PoolSpec::spatial(PoolMethod::Max, 2, 2)),
        PoolMethod::Hartley => Ok(PoolSpec::spectral(PoolMethod::Hartley, side, side)),
        other => Err(Error::invalid(format!(
            "toy CNN supports max or hartley pooling, not {other}"
        ))),
    };
    let (p1, p2) = (pool_spec(14)?, pool_spec(7)?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = Sequential::new();
    net.push(Conv2d::new("conv1", 1, 16, 5, false, &mut rng)?.with_execution(exec));
    net.push(BatchNorm2d::new("bn1", 16).with_execution(exec));
    net.push(Relu::new("relu1"));
    net.push(PoolLayer::new("pool1", p1).with_execution(exec));
    net.push(Conv2d::new("conv2", 16, 32, 5, false, &mut rng)?.with_execution(exec));
    net.push(BatchNorm2d::new("bn2", 32).with_execution(exec));
    net.push(Relu::new("relu2"));
    net.push(PoolLayer::new("pool2", p2).with_execution(exec));
    net.push(Linear::new("fc", 32 * 7 * 7, crate::data::CLASSES, &mut rng)?.with_execution(exec));
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::softmax_cross_entropy;
    use rand::Rng;

    fn batch(n: usize, seed: u64) -> (Tensor4, Vec<u8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Tensor4::from_fn(Shape::new(n, 1, 28, 28), |_| rng.random_range(0.0..1.0));
        let labels = (0..n).map(|_| rng.random_range(0..10u8)).collect();
        (x, labels)
    }

    #[test]
    fn shape_trace_matches_architecture() {
        for pool in [PoolMethod::Max, PoolMethod::Hartley] {
            let net = build_toy_cnn(pool, 0).unwrap();
            let trace = net.shape_trace(Shape::new(1, 1, 28, 28)).unwrap();
            let get = |name: &str| trace.iter().find(|(n, _)| n == name).unwrap().1;
            assert_eq!(get("conv1"), Shape::new(1, 16, 28, 28));
            assert_eq!(get("pool1"), Shape::new(1, 16, 14, 14));
            assert_eq!(get("conv2"), Shape::new(1, 32, 14, 14));
            assert_eq!(get("pool2"), Shape::new(1, 32, 7, 7));
            assert_eq!(get("fc"), Shape::new(1, 10, 1, 1));
        }
    }

    #[test]
    fn variants_share_parameters() {
        let a = build_toy_cnn(PoolMethod::Max, 3).unwrap();
        let b = build_toy_cnn(PoolMethod::Hartley, 3).unwrap();
        assert_eq!(a.param_count(), b.param_count());
        assert_eq!(
            a.param_count(),
            16 * 25 + 16 * 2 + 32 * 16 * 25 + 32 * 2 + 1568 * 10 + 10
        );
        assert_eq!(a.params(), b.params());
        assert!(build_toy_cnn(PoolMethod::Fourier, 0).is_err());
        assert!(build_toy_cnn(PoolMethod::Avg, 0).is_err());
    }

    #[test]
    fn loss_decreases_over_first_adam_steps() {
        use crate::nn::{Adam, OptimizerConfig};
        for pool in [PoolMethod::Max, PoolMethod::Hartley] {
            let mut net = build_toy_cnn(pool, 7).unwrap();
            let mut opt = Adam::new(OptimizerConfig::default()).unwrap();
            let (x, y) = batch(16, 8);
            let mut losses = Vec::new();
            for _ in 0..11 {
                let logits = net.forward(&x, Mode::Train).unwrap();
                let (loss, g) = softmax_cross_entropy(&logits, &y).unwrap();
                losses.push(loss);
                net.backward(&g).unwrap();
                opt.step(net.params_mut(), 1e-3).unwrap();
            }
            assert!(losses.windows(2).all(|w| w[1] < w[0]), "{pool}: {losses:?}");
        }
    }

    #[test]
    fn sequential_and_parallel_agree_bitwise() {
        let (x, y) = batch(4, 9);
        let run = |exec| {
            let mut net = build_toy_cnn_with(PoolMethod::Hartley, 1, exec).unwrap();
            let logits = net.forward(&x, Mode::Train).unwrap();
            let (_, g) = softmax_cross_entropy(&logits, &y).unwrap();
            let gx = net.backward(&g).unwrap();
            let grads: Vec<Vec<f64>> = net.params().iter().map(|p| p.grad.clone()).collect();
            (logits, gx, grads)
        };
        assert_eq!(run(Execution::Sequential), run(Execution::Parallel));
    }
}
