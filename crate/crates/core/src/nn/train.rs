use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{build_toy_cnn, softmax_cross_entropy, Adam, Mode, OptimizerConfig, Sequential};
use crate::data::{MnistSet, Split};
use crate::pooling::PoolMethod;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub optimizer: OptimizerConfig,
    pub epochs: usize,
    pub batch_size: usize,
    /// Seeds the per-epoch shuffles. Weight init is seeded separately, when
    /// the model is built.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            optimizer: OptimizerConfig::default(),
            epochs: 10,
            batch_size: 100,
            seed: 0,
        }
    }
}

/// One CSV row: `epoch,lr,train_loss,test_error`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub lr: f64,
    /// Mean mini-batch loss seen during the epoch.
    pub train_loss: f64,
    /// Test-set misclassification rate in [0, 1], after the epoch.
    pub test_error: f64,
}

/// Fraction of `set` misclassified, with batchnorm in evaluation mode.
pub fn evaluate(model: &mut Sequential, set: &MnistSet, batch_size: usize) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::invalid("evaluation on an empty set"));
    }
    let idx: Vec<usize> = (0..set.len()).collect();
    let mut wrong = 0usize;
    for chunk in idx.chunks(batch_size.max(1)) {
        let (x, labels) = set.batch(chunk);
        let logits = model.forward(&x, Mode::Eval)?;
        for (n, &label) in labels.iter().enumerate() {
            let row = logits.sample(n);
            let pred = row
                .iter()
                .enumerate()
                .fold(0, |best, (k, v)| if *v > row[best] { k } else { best });
            wrong += usize::from(pred != label as usize);
        }
    }
    Ok(wrong as f64 / set.len() as f64)
}

/// Mini-batch Adam training with a per-epoch shuffle.
///
/// `on_epoch` is called with each epoch's metrics as soon as they are known.
pub fn train(
    model: &mut Sequential,
    train_set: &MnistSet,
    test_set: &MnistSet,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochMetrics),
) -> Result<Vec<EpochMetrics>> {
    if train_set.is_empty() || test_set.is_empty() {
        return Err(Error::invalid("training needs non-empty train and test sets"));
    }
    if cfg.batch_size == 0 {
        return Err(Error::invalid("batch size must be positive"));
    }
    let mut opt = Adam::new(cfg.optimizer)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut metrics = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        let lr = cfg.optimizer.lr_for_epoch(epoch);
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let (x, labels) = train_set.batch(chunk);
            let logits = model.forward(&x, Mode::Train)?;
            let (loss, grad) = softmax_cross_entropy(&logits, &labels)?;
            model.backward(&grad)?;
            opt.step(model.params_mut(), lr)?;
            loss_sum += loss;
            batches += 1;
        }
        let m = EpochMetrics {
            epoch,
            lr,
            train_loss: loss_sum / batches as f64,
            test_error: evaluate(model, test_set, cfg.batch_size)?,
        };
        on_epoch(&m);
        metrics.push(m);
    }
    Ok(metrics)
}

/// Trains a freshly built toy CNN on MNIST files in `data_dir`.
///
/// `cfg.seed` seeds the weight init, the training subset draw and the
/// shuffles, so two pooling variants with the same seed see identical
/// initial weights and data. The full test split is used for evaluation.
pub fn train_toy_cnn(
    data_dir: &Path,
    pool: PoolMethod,
    subset: Option<usize>,
    cfg: &TrainConfig,
    on_epoch: impl FnMut(&EpochMetrics),
) -> Result<Vec<EpochMetrics>> {
    let mut train_set = MnistSet::load_dir(data_dir, Split::Train)?;
    let test_set = MnistSet::load_dir(data_dir, Split::Test)?;
    if let Some(n) = subset {
        train_set = train_set.subset(n, cfg.seed)?;
    }
    let mut model = build_toy_cnn(pool, cfg.seed)?;
    train(&mut model, &train_set, &test_set, cfg, on_epoch)
}

pub fn write_metrics_csv(out: impl Write, metrics: &[EpochMetrics]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for m in metrics {
        w.serialize(m)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_metrics_csv(input: impl Read) -> Result<Vec<EpochMetrics>> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}
