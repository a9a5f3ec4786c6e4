use std::hash::{DefaultHasher, Hash, Hasher};
use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::{predicted_class, Dataset, HybridModel, Split};
use crate::error::{QclabError, Result};
use crate::rng::{stream, Domain};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Heavy-ball coefficient; 0 gives plain mini-batch gradient descent.
    pub momentum: f64,
    /// Drives the per-epoch shuffle.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20,
            learning_rate: 0.01,
            batch_size: 16,
            momentum: 0.9,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(QclabError::Config("epochs must be >= 1".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(QclabError::Config(format!(
                "learning rate must be finite and >= 0, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(QclabError::Config("batch_size must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(QclabError::Config(format!("momentum must be in [0, 1), got {}", self.momentum)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitMetrics {
    /// Mean per-sample loss.
    pub loss: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train: SplitMetrics,
    pub val: Option<SplitMetrics>,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainLog {
    pub epochs: Vec<EpochRecord>,
}

impl TrainLog {
    pub fn best_train_accuracy(&self) -> f64 {
        self.epochs.iter().map(|e| e.train.accuracy).fold(0.0, f64::max)
    }

    pub fn best_val_accuracy(&self) -> Option<f64> {
        self.epochs
            .iter()
            .filter_map(|e| e.val.map(|v| v.accuracy))
            .reduce(f64::max)
    }

    /// First epoch reaching the best validation accuracy, or the best train
    /// accuracy when there is no validation split.
    pub fn best_epoch(&self) -> usize {
        let score = |e: &EpochRecord| e.val.map_or(e.train.accuracy, |v| v.accuracy);
        self.epochs
            .iter()
            .fold((0, f64::NEG_INFINITY), |best, e| {
                if score(e) > best.1 {
                    (e.epoch, score(e))
                } else {
                    best
                }
            })
            .0
    }

    /// Hash of every recorded value except wall time.
    pub fn digest(&self) -> u64 {
        let mut h = DefaultHasher::new();
        for e in &self.epochs {
            e.epoch.hash(&mut h);
            for m in std::iter::once(Some(e.train)).chain(std::iter::once(e.val)) {
                match m {
                    Some(m) => {
                        m.loss.to_bits().hash(&mut h);
                        m.accuracy.to_bits().hash(&mut h);
                    }
                    None => u64::MAX.hash(&mut h),
                }
            }
        }
        h.finish()
    }
}

/// Mean loss and accuracy over a split; `None` for an empty split.
pub fn evaluate(model: &HybridModel, split: &Split) -> Result<Option<SplitMetrics>> {
    if split.is_empty() {
        return Ok(None);
    }
    let per_sample = split
        .images
        .par_iter()
        .zip(&split.labels)
        .map(|(img, &label)| {
            let (loss, probs) = model.loss(img, label)?;
            Ok((loss, predicted_class(&probs) == label))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = per_sample.len() as f64;
    Ok(Some(SplitMetrics {
        loss: per_sample.iter().map(|s| s.0).sum::<f64>() / n,
        accuracy: per_sample.iter().filter(|s| s.1).count() as f64 / n,
    }))
}

/// Mini-batch gradient descent with momentum (`v ← μv + g; p ← p − ηv`).
/// After each epoch the full train and validation splits are evaluated.
pub fn train(mut model: HybridModel, dataset: &Dataset, config: &TrainConfig) -> Result<(HybridModel, TrainLog)> {
    config.validate()?;
    dataset.check_trainable()?;
    if (dataset.height, dataset.width) != (model.image_height, model.image_width) {
        return Err(QclabError::DimensionMismatch {
            expected: model.image_height * model.image_width,
            found: dataset.height * dataset.width,
        });
    }
    if dataset.n_classes != model.task.n_classes() {
        return Err(QclabError::DimensionMismatch {
            expected: model.task.n_classes(),
            found: dataset.n_classes,
        });
    }
    let train_split = &dataset.train;
    let mut params = model.parameters();
    let mut velocity = vec![0.0; params.len()];
    let mut order: Vec<usize> = (0..train_split.len()).collect();
    let mut log = TrainLog { epochs: Vec::new() };

    for epoch in 1..=config.epochs {
        let start = Instant::now();
        order.shuffle(&mut stream(config.seed, Domain::Shuffle, epoch as u64));
        for batch in order.chunks(config.batch_size) {
            let per_sample = batch
                .par_iter()
                .map(|&i| model.loss_and_gradient(&train_split.images[i], train_split.labels[i]))
                .collect::<Result<Vec<_>>>()?;
            let scale = 1.0 / batch.len() as f64;
            let mut grad = vec![0.0; params.len()];
            let mut loss = 0.0;
            for (l, g) in &per_sample {
                loss += l * scale;
                for (acc, v) in grad.iter_mut().zip(g) {
                    *acc += v * scale;
                }
            }
            if !loss.is_finite() {
                return Err(QclabError::Divergence { epoch, loss });
            }
            for ((p, v), g) in params.iter_mut().zip(&mut velocity).zip(&grad) {
                *v = config.momentum * *v + g;
                *p -= config.learning_rate * *v;
            }
            model.set_parameters(&params)?;
        }
        let train_metrics = evaluate(&model, train_split)?.expect("train split checked non-empty");
        if !train_metrics.loss.is_finite() {
            return Err(QclabError::Divergence {
                epoch,
                loss: train_metrics.loss,
            });
        }
        let val = evaluate(&model, &dataset.val)?;
        log::debug!(
            "epoch {epoch}: train loss {:.5} acc {:.3}",
            train_metrics.loss,
            train_metrics.accuracy
        );
        log.epochs.push(EpochRecord {
            epoch,
            train: train_metrics,
            val,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }
    Ok((model, log))
}
