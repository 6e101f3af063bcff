//! The training loop: per epoch, set the per-group sharpness from the
//! sharpener, run seeded-shuffled minibatches (forward, population
//! cross-entropy, backward, optimizer step), and record loss, validation
//! accuracy, and the sharpness vector.
//!
//! After the final epoch the network's sharpness is set to the schedule's
//! state *after* the full run, so a schedule that completes exactly at the
//! budget leaves the network fully binarized.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::layers::Batch;
use super::network::Network;
use super::optim::Optimizer;
use super::output_key::{population_loss, OutputKey};
use super::schedule::{AdaptiveSharpener, SharpeningSchedule};
use super::WhetstoneError;

/// Samples plus integer labels.
#[derive(Debug, Clone)]
pub struct LabeledBatch {
    pub inputs: Batch,
    pub labels: Vec<usize>,
}

impl LabeledBatch {
    pub fn new(inputs: Batch, labels: Vec<usize>) -> Result<Self, WhetstoneError> {
        if inputs.n != labels.len() {
            return Err(WhetstoneError::ShapeMismatch(format!(
                "{} samples but {} labels",
                inputs.n,
                labels.len()
            )));
        }
        Ok(Self { inputs, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn subset(&self, indices: &[usize]) -> LabeledBatch {
        let dim = self.inputs.dim;
        let mut data = Vec::with_capacity(indices.len() * dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            data.extend_from_slice(self.inputs.row(i));
            labels.push(self.labels[i]);
        }
        LabeledBatch { inputs: Batch::new(indices.len(), dim, data), labels }
    }
}

/// Seeded 80/20 split, for callers without a preexisting validation set.
pub fn split_train_val(data: &LabeledBatch, seed: u64) -> (LabeledBatch, LabeledBatch) {
    let mut indices: Vec<usize> = (0..data.len()).collect();
    indices.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (data.len() * 8) / 10;
    (data.subset(&indices[..n_train]), data.subset(&indices[n_train..]))
}

/// Scheduled or adaptive sharpening control for one run.
#[derive(Debug, Clone)]
pub enum Sharpener {
    Scheduled(SharpeningSchedule),
    Adaptive(AdaptiveSharpener),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_accuracy: f64,
    pub sharpness: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
    /// Training aborted on a non-finite loss.
    pub failed: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { epochs: 40, batch_size: 64, seed: 0 }
    }
}

/// Mean population cross-entropy over the batch and its gradient with
/// respect to the raw outputs (already divided by the batch size).
pub fn batch_loss(
    key: &OutputKey,
    outputs: &Batch,
    labels: &[usize],
) -> Result<(f64, Batch), WhetstoneError> {
    let n = outputs.n;
    let mut total = 0.0;
    let mut grad = Batch::zeros(n, outputs.dim);
    for r in 0..n {
        let (loss, g) = population_loss(key, outputs.row(r), labels[r])?;
        total += loss;
        for (dst, src) in grad.row_mut(r).iter_mut().zip(&g) {
            *dst = src / n as f64;
        }
    }
    Ok((total / n as f64, grad))
}

/// Fraction of correctly classified samples (eval-mode forward).
pub fn evaluate_accuracy(net: &Network, data: &LabeledBatch) -> Result<f64, WhetstoneError> {
    if data.is_empty() {
        return Err(WhetstoneError::EmptyBatch);
    }
    let preds = net.classify(&data.inputs)?;
    let correct = preds.iter().zip(&data.labels).filter(|(p, l)| p == l).count();
    Ok(correct as f64 / data.len() as f64)
}

/// Train in place. Zero epochs return an empty history and leave the
/// network untouched. A non-finite epoch loss aborts the loop; the history
/// up to that point is returned with `failed` set.
pub fn train(
    net: &mut Network,
    optim: &mut Optimizer,
    sharpener: &mut Sharpener,
    train_set: &LabeledBatch,
    val_set: &LabeledBatch,
    config: &TrainConfig,
) -> Result<TrainHistory, WhetstoneError> {
    if train_set.is_empty() || val_set.is_empty() {
        return Err(WhetstoneError::EmptyBatch);
    }
    if config.batch_size == 0 {
        return Err(WhetstoneError::ShapeMismatch("batch_size must be positive".into()));
    }
    let groups = net.group_count();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut history = TrainHistory::default();

    for epoch in 0..config.epochs {
        let sharpness = match sharpener {
            Sharpener::Scheduled(s) => s.sharpness_at(epoch, groups),
            Sharpener::Adaptive(a) => a.sharpness().to_vec(),
        };
        net.set_sharpness(&sharpness)?;

        let mut order: Vec<usize> = (0..train_set.len()).collect();
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let minibatch = train_set.subset(chunk);
            let outputs = net.forward_train(&minibatch.inputs, &mut rng);
            let (loss, grad) = batch_loss(net.output_key(), &outputs, &minibatch.labels)?;
            loss_sum += loss * chunk.len() as f64;
            net.backward(&grad);
            net.apply_gradients(optim);
        }
        let train_loss = loss_sum / train_set.len() as f64;
        let val_accuracy = evaluate_accuracy(net, val_set)?;
        history.epochs.push(EpochStats { epoch, train_loss, val_accuracy, sharpness });

        if !train_loss.is_finite() {
            history.failed = true;
            return Ok(history);
        }
        if let Sharpener::Adaptive(a) = sharpener {
            a.step(train_loss);
        }
    }

    // Leave the network at the schedule's post-run state.
    if config.epochs > 0 {
        if let Sharpener::Scheduled(s) = sharpener {
            net.set_sharpness(&s.sharpness_at(config.epochs, groups))?;
        }
    }
    Ok(history)
}
