//! Population-coded outputs: each class owns a set of output neurons, the
//! class logit is the mean of its neurons, and the loss is softmax
//! cross-entropy over those logits.
//!
//! Keys are dealt from seeded shuffled decks of the output indices. Without
//! overlap the first `classes * n_per_class` cards form disjoint sets; with
//! overlap the deck is reshuffled whenever it empties, so every neuron is
//! dealt before any is dealt twice and per-class sets stay duplicate-free.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::WhetstoneError;

/// class -> output-neuron indices, `n_per_class` each.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputKey {
    assignments: Vec<Vec<usize>>,
    num_outputs: usize,
    n_per_class: usize,
}

impl OutputKey {
    pub fn num_classes(&self) -> usize {
        self.assignments.len()
    }

    pub fn num_outputs(&self) -> usize {
        self.num_outputs
    }

    pub fn n_per_class(&self) -> usize {
        self.n_per_class
    }

    pub fn class_neurons(&self, class: usize) -> &[usize] {
        &self.assignments[class]
    }
}

/// Deterministic given the rng state.
pub fn make_output_key<R: Rng + ?Sized>(
    num_classes: usize,
    num_outputs: usize,
    n_per_class: usize,
    overlap: bool,
    rng: &mut R,
) -> Result<OutputKey, WhetstoneError> {
    if num_classes == 0 || n_per_class == 0 {
        return Err(WhetstoneError::InfeasibleKey(
            "need at least one class and one neuron per class".into(),
        ));
    }
    if n_per_class > num_outputs {
        return Err(WhetstoneError::InfeasibleKey(format!(
            "n_per_class {n_per_class} exceeds {num_outputs} outputs"
        )));
    }
    if !overlap && num_classes * n_per_class > num_outputs {
        return Err(WhetstoneError::InfeasibleKey(format!(
            "{num_classes} classes x {n_per_class} neurons need more than {num_outputs} outputs"
        )));
    }

    let mut deck: Vec<usize> = (0..num_outputs).collect();
    deck.shuffle(rng);
    let mut cursor = 0;
    let mut assignments = Vec::with_capacity(num_classes);
    for _ in 0..num_classes {
        let mut set = Vec::with_capacity(n_per_class);
        let mut reshuffles = 0;
        while set.len() < n_per_class {
            if cursor == deck.len() {
                deck.shuffle(rng);
                cursor = 0;
                reshuffles += 1;
                if reshuffles > n_per_class + 1 {
                    return Err(WhetstoneError::InfeasibleKey(
                        "could not deal a duplicate-free class set".into(),
                    ));
                }
            }
            let neuron = deck[cursor];
            cursor += 1;
            if !set.contains(&neuron) {
                set.push(neuron);
            }
        }
        set.sort_unstable();
        assignments.push(set);
    }
    Ok(OutputKey { assignments, num_outputs, n_per_class })
}

/// Class logits: mean of each class's assigned outputs. Stays in [0,1] when
/// the outputs do, independent of `n_per_class`.
pub fn population_logits(key: &OutputKey, outputs: &[f64]) -> Result<Vec<f64>, WhetstoneError> {
    if outputs.len() != key.num_outputs {
        return Err(WhetstoneError::ShapeMismatch(format!(
            "expected {} outputs, got {}",
            key.num_outputs,
            outputs.len()
        )));
    }
    Ok(key
        .assignments
        .iter()
        .map(|set| set.iter().map(|&i| outputs[i]).sum::<f64>() / set.len() as f64)
        .collect())
}

/// Numerically-stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Cross-entropy of the softmax over population logits, with its gradient
/// with respect to the raw outputs.
pub fn population_loss(
    key: &OutputKey,
    outputs: &[f64],
    label: usize,
) -> Result<(f64, Vec<f64>), WhetstoneError> {
    if label >= key.num_classes() {
        return Err(WhetstoneError::ShapeMismatch(format!(
            "label {label} out of range for {} classes",
            key.num_classes()
        )));
    }
    let logits = population_logits(key, outputs)?;
    let probs = softmax(&logits);
    let loss = -probs[label].max(f64::MIN_POSITIVE).ln();
    let mut grad = vec![0.0; outputs.len()];
    for (class, set) in key.assignments.iter().enumerate() {
        let dlogit = probs[class] - if class == label { 1.0 } else { 0.0 };
        let share = dlogit / set.len() as f64;
        for &neuron in set {
            grad[neuron] += share;
        }
    }
    Ok((loss, grad))
}
