//! Adadelta and RMSprop parameter updates with the shared learning-rate
//! decay rule `lr_t = lr / (1 + decay * t)`, `t` counting completed steps.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OptimizerKind {
    Adadelta,
    Rmsprop,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerHyper {
    pub kind: OptimizerKind,
    pub lr: f64,
    pub rho: f64,
    pub epsilon: f64,
    pub decay: f64,
}

impl OptimizerHyper {
    pub fn adadelta(lr: f64) -> Self {
        Self { kind: OptimizerKind::Adadelta, lr, rho: 0.95, epsilon: 1e-6, decay: 0.0 }
    }

    pub fn rmsprop(lr: f64) -> Self {
        Self { kind: OptimizerKind::Rmsprop, lr, rho: 0.9, epsilon: 1e-8, decay: 0.0 }
    }

    pub fn lr_at(&self, step: u64) -> f64 {
        self.lr / (1.0 + self.decay * step as f64)
    }
}

/// acc <- rho acc + (1-rho) g^2;  p -= lr_t g / sqrt(acc + eps).
pub fn rmsprop_step(
    hyper: &OptimizerHyper,
    step: u64,
    params: &mut [f64],
    grads: &[f64],
    acc: &mut [f64],
) {
    debug_assert_eq!(params.len(), grads.len());
    debug_assert_eq!(params.len(), acc.len());
    let lr_t = hyper.lr_at(step);
    for i in 0..params.len() {
        let g = grads[i];
        acc[i] = hyper.rho * acc[i] + (1.0 - hyper.rho) * g * g;
        params[i] -= lr_t * g / (acc[i] + hyper.epsilon).sqrt();
    }
}

/// Dual-accumulator update:
/// acc <- rho acc + (1-rho) g^2;
/// u = g sqrt(d_acc + eps) / sqrt(acc + eps);
/// d_acc <- rho d_acc + (1-rho) u^2;  p -= lr_t u.
pub fn adadelta_step(
    hyper: &OptimizerHyper,
    step: u64,
    params: &mut [f64],
    grads: &[f64],
    acc: &mut [f64],
    delta_acc: &mut [f64],
) {
    debug_assert_eq!(params.len(), grads.len());
    let lr_t = hyper.lr_at(step);
    for i in 0..params.len() {
        let g = grads[i];
        acc[i] = hyper.rho * acc[i] + (1.0 - hyper.rho) * g * g;
        let update = g * (delta_acc[i] + hyper.epsilon).sqrt() / (acc[i] + hyper.epsilon).sqrt();
        delta_acc[i] = hyper.rho * delta_acc[i] + (1.0 - hyper.rho) * update * update;
        params[i] -= lr_t * update;
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct Slot {
    acc: Vec<f64>,
    delta_acc: Vec<f64>,
}

/// Per-parameter-tensor accumulator state. Tensors are registered by visit
/// order, which the network keeps fixed across steps.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Optimizer {
    hyper: OptimizerHyper,
    step: u64,
    slots: Vec<Slot>,
    #[serde(skip)]
    cursor: usize,
}

impl Optimizer {
    pub fn new(hyper: OptimizerHyper) -> Self {
        Self { hyper, step: 0, slots: Vec::new(), cursor: 0 }
    }

    pub fn hyper(&self) -> &OptimizerHyper {
        &self.hyper
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Start a step: the following `update` calls must visit the same
    /// tensors in the same order every time.
    pub fn begin_step(&mut self) {
        self.cursor = 0;
    }

    pub fn update(&mut self, params: &mut [f64], grads: &[f64]) {
        if self.cursor == self.slots.len() {
            self.slots.push(Slot {
                acc: vec![0.0; params.len()],
                delta_acc: match self.hyper.kind {
                    OptimizerKind::Adadelta => vec![0.0; params.len()],
                    OptimizerKind::Rmsprop => Vec::new(),
                },
            });
        }
        let slot = &mut self.slots[self.cursor];
        self.cursor += 1;
        match self.hyper.kind {
            OptimizerKind::Rmsprop => {
                rmsprop_step(&self.hyper, self.step, params, grads, &mut slot.acc)
            }
            OptimizerKind::Adadelta => adadelta_step(
                &self.hyper,
                self.step,
                params,
                grads,
                &mut slot.acc,
                &mut slot.delta_acc,
            ),
        }
    }

    pub fn end_step(&mut self) {
        self.step += 1;
    }
}
