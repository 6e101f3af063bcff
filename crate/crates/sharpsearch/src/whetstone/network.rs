//! Network assembly: ordered layer blocks feeding a population-coded
//! readout. A "group" is one sharpenable activation layer; groups sharpen
//! in input-to-output order. The readout itself (class means + softmax) has
//! no parameters and never sharpens.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::activation::ActivationKind;
use super::layers::{
    ActivationLayer, Batch, BatchNormLayer, ConvLayer, DenseLayer, Layer, MaxPoolLayer, NoiseLayer,
};
use super::optim::Optimizer;
use super::output_key::{population_logits, OutputKey};
use super::WhetstoneError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Network {
    layers: Vec<Layer>,
    output_key: OutputKey,
    /// (channels, height, width) of one input sample.
    input_shape: (usize, usize, usize),
    group_count: usize,
    sharpness: Vec<f64>,
}

impl Network {
    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn output_key(&self) -> &OutputKey {
        &self.output_key
    }

    pub fn input_dim(&self) -> usize {
        let (c, h, w) = self.input_shape;
        c * h * w
    }

    pub fn group_count(&self) -> usize {
        self.group_count
    }

    pub fn sharpness(&self) -> &[f64] {
        &self.sharpness
    }

    pub fn num_classes(&self) -> usize {
        self.output_key.num_classes()
    }

    /// Assign per-group sharpness (input-to-output group order).
    pub fn set_sharpness(&mut self, sharpness: &[f64]) -> Result<(), WhetstoneError> {
        if sharpness.len() != self.group_count {
            return Err(WhetstoneError::ShapeMismatch(format!(
                "expected {} group sharpness values, got {}",
                self.group_count,
                sharpness.len()
            )));
        }
        for &s in sharpness {
            if !(0.0..=1.0).contains(&s) {
                return Err(WhetstoneError::InvalidSharpness(s));
            }
        }
        self.sharpness = sharpness.to_vec();
        for layer in &mut self.layers {
            if let Layer::Activation(act) = layer {
                act.sharpness = sharpness[act.group];
            }
        }
        Ok(())
    }

    pub fn forward_train(&mut self, batch: &Batch, rng: &mut ChaCha8Rng) -> Batch {
        let mut x = batch.clone();
        for layer in &mut self.layers {
            x = layer.forward_train(&x, rng);
        }
        x
    }

    /// Read-only inference pass (running stats, no noise, no caches).
    pub fn forward_eval(&self, batch: &Batch) -> Batch {
        let mut x = batch.clone();
        for layer in &self.layers {
            x = layer.forward_eval(&x);
        }
        x
    }

    /// Inference pass that also returns every activation layer's output, in
    /// layer order.
    pub fn forward_eval_with_activations(&self, batch: &Batch) -> (Batch, Vec<Batch>) {
        let mut x = batch.clone();
        let mut captured = Vec::new();
        for layer in &self.layers {
            x = layer.forward_eval(&x);
            if matches!(layer, Layer::Activation(_)) {
                captured.push(x.clone());
            }
        }
        (x, captured)
    }

    pub fn backward(&mut self, grad_outputs: &Batch) {
        let mut grad = grad_outputs.clone();
        for layer in self.layers.iter_mut().rev() {
            grad = layer.backward(&grad);
        }
    }

    pub fn apply_gradients(&mut self, optim: &mut Optimizer) {
        optim.begin_step();
        for layer in &mut self.layers {
            layer.apply_gradients(optim);
        }
        optim.end_step();
    }

    /// Class logits per sample: population means over the raw outputs.
    pub fn class_logits(&self, batch: &Batch) -> Result<Vec<Vec<f64>>, WhetstoneError> {
        let outputs = self.forward_eval(batch);
        (0..outputs.n).map(|r| population_logits(&self.output_key, outputs.row(r))).collect()
    }

    /// Argmax class per sample, lowest index on ties.
    pub fn classify(&self, batch: &Batch) -> Result<Vec<usize>, WhetstoneError> {
        Ok(self
            .class_logits(batch)?
            .into_iter()
            .map(|logits| {
                let mut best = 0;
                for (i, &l) in logits.iter().enumerate() {
                    if l > logits[best] {
                        best = i;
                    }
                }
                best
            })
            .collect())
    }

    /// Fraction of activation-layer units that output exactly 0 on every
    /// probe sample. A unit is one element of an activation layer's output.
    pub fn dead_neuron_fraction(&self, probes: &Batch) -> Result<f64, WhetstoneError> {
        if probes.n == 0 {
            return Err(WhetstoneError::EmptyBatch);
        }
        let (_, activations) = self.forward_eval_with_activations(probes);
        let mut dead = 0usize;
        let mut total = 0usize;
        for act in &activations {
            total += act.dim;
            for unit in 0..act.dim {
                if (0..act.n).all(|r| act.row(r)[unit] == 0.0) {
                    dead += 1;
                }
            }
        }
        Ok(dead as f64 / total as f64)
    }

    /// Bitwise round-trip checkpoint (parameters, running statistics,
    /// output key, sharpness vector).
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), WhetstoneError> {
        let json = serde_json::to_string(self).map_err(|e| WhetstoneError::Checkpoint(e.to_string()))?;
        crate::runlog::write_atomic(path.as_ref(), json.as_bytes())
            .map_err(|e| WhetstoneError::Checkpoint(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, WhetstoneError> {
        let text = std::fs::read_to_string(path).map_err(|e| WhetstoneError::Checkpoint(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| WhetstoneError::Checkpoint(e.to_string()))
    }
}

/// Shape tracker for the builder.
#[derive(Debug, Clone, Copy)]
enum Shape {
    Spatial { c: usize, h: usize, w: usize },
    Flat(usize),
}

impl Shape {
    fn dim(&self) -> usize {
        match *self {
            Shape::Spatial { c, h, w } => c * h * w,
            Shape::Flat(d) => d,
        }
    }
}

/// Builds a network front-to-back, chaining shapes and numbering groups.
/// Weights come from a dedicated seeded generator, so the same seed and
/// calls produce an identical network.
#[derive(Debug)]
pub struct NetworkBuilder {
    input_shape: (usize, usize, usize),
    shape: Shape,
    layers: Vec<Layer>,
    groups: usize,
    rng: ChaCha8Rng,
}

impl NetworkBuilder {
    pub fn new(channels: usize, height: usize, width: usize, seed: u64) -> Self {
        Self {
            input_shape: (channels, height, width),
            shape: Shape::Spatial { c: channels, h: height, w: width },
            layers: Vec::new(),
            groups: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Same-padding stride-1 convolution; filter size must be odd.
    pub fn conv(mut self, out_c: usize, k: usize) -> Result<Self, WhetstoneError> {
        let Shape::Spatial { c, h, w } = self.shape else {
            return Err(WhetstoneError::ShapeMismatch("conv after flatten".into()));
        };
        if k % 2 == 0 || k == 0 {
            return Err(WhetstoneError::ShapeMismatch(format!("filter size {k} must be odd")));
        }
        self.layers.push(Layer::Conv(ConvLayer::new(c, h, w, out_c, k, &mut self.rng)));
        self.shape = Shape::Spatial { c: out_c, h, w };
        Ok(self)
    }

    /// 2x2 max pool, stride 2.
    pub fn max_pool(mut self) -> Result<Self, WhetstoneError> {
        let Shape::Spatial { c, h, w } = self.shape else {
            return Err(WhetstoneError::ShapeMismatch("max_pool after flatten".into()));
        };
        if h < 2 || w < 2 {
            return Err(WhetstoneError::ShapeMismatch(format!("cannot pool {h}x{w}")));
        }
        let layer = MaxPoolLayer::new(c, h, w);
        self.shape = Shape::Spatial { c, h: layer.out_h(), w: layer.out_w() };
        self.layers.push(Layer::MaxPool(layer));
        Ok(self)
    }

    pub fn batch_norm(mut self, momentum: f64, epsilon: f64, center: bool, scale: bool) -> Self {
        let (features, spatial) = match self.shape {
            Shape::Spatial { c, h, w } => (c, h * w),
            Shape::Flat(d) => (d, 1),
        };
        self.layers.push(Layer::BatchNorm(BatchNormLayer::new(
            features, spatial, momentum, epsilon, center, scale,
        )));
        self
    }

    pub fn noise(mut self, std: f64) -> Self {
        self.layers.push(Layer::Noise(NoiseLayer::new(std)));
        self
    }

    /// Closes the current group: the activation sharpens as group index
    /// `groups`, counting from the input.
    pub fn activation(mut self, kind: ActivationKind) -> Self {
        self.layers.push(Layer::Activation(ActivationLayer::new(kind, self.groups)));
        self.groups += 1;
        self
    }

    /// Fully-connected layer; flattens spatial shapes.
    pub fn dense(mut self, width: usize) -> Self {
        let in_dim = self.shape.dim();
        self.layers.push(Layer::Dense(DenseLayer::new(in_dim, width, &mut self.rng)));
        self.shape = Shape::Flat(width);
        self
    }

    /// Finish with a population readout over the last layer's outputs.
    pub fn output(self, key: OutputKey) -> Result<Network, WhetstoneError> {
        if self.shape.dim() != key.num_outputs() {
            return Err(WhetstoneError::ShapeMismatch(format!(
                "output key expects {} neurons, network produces {}",
                key.num_outputs(),
                self.shape.dim()
            )));
        }
        if self.groups == 0 {
            return Err(WhetstoneError::ShapeMismatch("network has no sharpenable groups".into()));
        }
        if !matches!(self.layers.last(), Some(Layer::Activation(_))) {
            return Err(WhetstoneError::ShapeMismatch(
                "the readout must sit on an activation layer".into(),
            ));
        }
        Ok(Network {
            layers: self.layers,
            output_key: key,
            input_shape: self.input_shape,
            group_count: self.groups,
            sharpness: vec![0.0; self.groups],
        })
    }
}
