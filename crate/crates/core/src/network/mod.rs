//! Dense feed-forward regression networks trained against Huber quantile scores.

mod adam;
mod arch;
mod train;

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use adam::{adam_step, adam_update, AdamState};
pub use arch::{ArchitectureSpec, LayerSpec, Preset};
pub use train::{refit_fixed_epochs, train_early_stopping, TrainConfig, TrainReport};

use crate::data::NormStats;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::scoring::ScoreParams;

/// Weights of one fully connected layer; `weights` is row-major `outputs x inputs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct DenseLayer<T> {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> DenseLayer<T> {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        DenseLayer { inputs, outputs, weights: vec![T::zero(); inputs * outputs], bias: vec![T::zero(); outputs] }
    }

    fn apply(&self, input: &[T], out: &mut Vec<T>) {
        out.clear();
        for (row, &b) in self.weights.chunks_exact(self.inputs).zip(&self.bias) {
            let mut acc = b;
            for (&w, &x) in row.iter().zip(input) {
                acc += w * x;
            }
            out.push(acc);
        }
    }
}

/// A trained (or freshly initialized) network together with everything
/// needed to reproduce its predictions from raw features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct NetworkModel<T> {
    pub arch: ArchitectureSpec,
    /// Hidden dense layers in order, then the output layer.
    pub layers: Vec<DenseLayer<T>>,
    pub norm_stats: NormStats<T>,
    pub loss_params: ScoreParams<T>,
    pub seed: u64,
    /// Input columns the model was fitted on (empty when unknown).
    #[serde(default)]
    pub feature_names: Vec<String>,
    #[serde(default)]
    pub target_name: String,
}

/// Forward-pass mode. Dropout is active only in `Train`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

#[derive(Clone, Copy, Debug)]
enum Op {
    Dense { layer: usize, relu: bool },
    Dropout { rate: f64 },
}

fn ops(arch: &ArchitectureSpec) -> Vec<Op> {
    let mut out = Vec::with_capacity(arch.layers.len() + 1);
    let mut layer = 0;
    for spec in &arch.layers {
        match *spec {
            LayerSpec::Dense { .. } => {
                out.push(Op::Dense { layer, relu: true });
                layer += 1;
            }
            LayerSpec::Dropout { rate } => out.push(Op::Dropout { rate }),
        }
    }
    out.push(Op::Dense { layer, relu: false });
    out
}

/// Fan-in scaled uniform weights (`sqrt(6 / fan_in)` for ReLU layers,
/// `sqrt(3 / fan_in)` for the linear output), zero biases.
pub fn init_network<T: Scalar>(arch: &ArchitectureSpec, seed: u64) -> Result<NetworkModel<T>> {
    arch.validate()?;
    let chain = arch.shape_chain();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let last = chain.len() - 2;
    let layers = chain
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let gain = if i == last { 3.0 } else { 6.0 };
            let limit = (gain / fan_in as f64).sqrt();
            let mut layer = DenseLayer::zeros(fan_in, fan_out);
            for v in &mut layer.weights {
                *v = T::lit(rng.random_range(-limit..limit));
            }
            layer
        })
        .collect();
    Ok(NetworkModel {
        arch: arch.clone(),
        layers,
        norm_stats: NormStats::identity(arch.input_dim),
        loss_params: ScoreParams::default(),
        seed,
        feature_names: Vec::new(),
        target_name: String::new(),
    })
}

/// Per-sample activations recorded for backpropagation.
struct Trace<T> {
    /// Input fed to each dense layer.
    inputs: Vec<Vec<T>>,
    /// Pre-activation output of each dense layer.
    pre: Vec<Vec<T>>,
    /// Scale factors (`0` or `1 / (1 - rate)`) of each dropout op, in order.
    masks: Vec<Vec<T>>,
    scratch: Vec<T>,
}

impl<T: Scalar> Trace<T> {
    fn new(n_layers: usize) -> Self {
        Trace { inputs: vec![Vec::new(); n_layers], pre: vec![Vec::new(); n_layers], masks: Vec::new(), scratch: Vec::new() }
    }
}

impl<T: Scalar> NetworkModel<T> {
    pub fn input_dim(&self) -> usize {
        self.arch.input_dim
    }

    /// Structural checks applied after deserialization.
    pub fn validate(&self) -> Result<()> {
        self.arch.validate()?;
        let chain = self.arch.shape_chain();
        if self.layers.len() != chain.len() - 1 {
            return Err(Error::Model(format!("expected {} dense layers, found {}", chain.len() - 1, self.layers.len())));
        }
        for (l, w) in self.layers.iter().zip(chain.windows(2)) {
            if l.inputs != w[0] || l.outputs != w[1] || l.weights.len() != w[0] * w[1] || l.bias.len() != w[1] {
                return Err(Error::Model(format!("layer shape {}x{} does not match {}x{}", l.inputs, l.outputs, w[0], w[1])));
            }
            if l.weights.iter().chain(&l.bias).any(|v| !v.is_finite()) {
                return Err(Error::Model("non-finite weight".into()));
            }
        }
        if self.norm_stats.dim() != self.arch.input_dim {
            return Err(Error::Model("normalization statistics do not match input_dim".into()));
        }
        if !self.feature_names.is_empty() && self.feature_names.len() != self.arch.input_dim {
            return Err(Error::Model("feature_names do not match input_dim".into()));
        }
        self.norm_stats.validate()
    }

    fn run(&self, features: &[T], mode: Mode, rng: &mut ChaCha8Rng, trace: Option<&mut Trace<T>>) -> Result<T> {
        if features.len() != self.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), got: features.len() });
        }
        let mut local;
        let trace = match trace {
            Some(t) => {
                t.masks.clear();
                t
            }
            None => {
                local = Trace::new(0);
                &mut local
            }
        };
        let record = !trace.inputs.is_empty();
        let mut act = features.to_vec();
        for op in ops(&self.arch) {
            match op {
                Op::Dense { layer, relu } => {
                    let l = &self.layers[layer];
                    l.apply(&act, &mut trace.scratch);
                    if record {
                        trace.inputs[layer].clone_from(&act);
                        trace.pre[layer].clone_from(&trace.scratch);
                    }
                    std::mem::swap(&mut act, &mut trace.scratch);
                    if relu {
                        for v in &mut act {
                            *v = v.max(T::zero());
                        }
                    }
                }
                Op::Dropout { rate } => {
                    if mode == Mode::Train {
                        let keep = T::lit(1.0 / (1.0 - rate));
                        let mask: Vec<T> = (0..act.len())
                            .map(|_| if rng.random::<f64>() < rate { T::zero() } else { keep })
                            .collect();
                        for (v, &m) in act.iter_mut().zip(&mask) {
                            *v *= m;
                        }
                        if record {
                            trace.masks.push(mask);
                        }
                    }
                }
            }
        }
        Ok(act[0])
    }

    /// Accumulates `d_out * d(prediction)/d(params)` into `grads`.
    fn backward(&self, trace: &Trace<T>, d_out: T, mode: Mode, grads: &mut Gradients<T>) {
        let mut delta = vec![d_out];
        let mut mask_idx = trace.masks.len();
        for op in ops(&self.arch).into_iter().rev() {
            match op {
                Op::Dense { layer, relu } => {
                    if relu {
                        for (d, &z) in delta.iter_mut().zip(&trace.pre[layer]) {
                            if z <= T::zero() {
                                *d = T::zero();
                            }
                        }
                    }
                    let l = &self.layers[layer];
                    let g = &mut grads.layers[layer];
                    let input = &trace.inputs[layer];
                    let mut next = vec![T::zero(); l.inputs];
                    for (o, &d) in delta.iter().enumerate() {
                        if d == T::zero() {
                            continue;
                        }
                        g.bias[o] += d;
                        let row = o * l.inputs;
                        for i in 0..l.inputs {
                            g.weights[row + i] += d * input[i];
                            next[i] += d * l.weights[row + i];
                        }
                    }
                    delta = next;
                }
                Op::Dropout { .. } => {
                    if mode == Mode::Train {
                        mask_idx -= 1;
                        for (d, &m) in delta.iter_mut().zip(&trace.masks[mask_idx]) {
                            *d *= m;
                        }
                    }
                }
            }
        }
    }

    /// Predictions for rows of raw (un-normalized) features, row-major.
    pub fn predict_batch(&self, features: &[T]) -> Result<Vec<T>> {
        predict_batch(self, features)
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ModelDocument { format: MODEL_FORMAT.to_string(), version: MODEL_VERSION, normalization: "zscore".into(), model: self.clone() };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument<T> = serde_json::from_str(text)?;
        if doc.format != MODEL_FORMAT || doc.version != MODEL_VERSION {
            return Err(Error::Model(format!("unsupported model format {} v{}", doc.format, doc.version)));
        }
        doc.model.validate()?;
        Ok(doc.model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

const MODEL_FORMAT: &str = "hqnet-model";
const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct ModelDocument<T> {
    format: String,
    version: u32,
    normalization: String,
    model: NetworkModel<T>,
}

/// Single forward pass on already-normalized features. `mask_seed` drives the
/// dropout masks in `Train` mode and is ignored in `Infer` mode.
pub fn forward<T: Scalar>(m: &NetworkModel<T>, features: &[T], mode: Mode, mask_seed: u64) -> Result<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(mask_seed);
    m.run(features, mode, &mut rng, None)
}

/// Outputs of every hidden op (dense+ReLU or dropout) for one input.
pub fn hidden_activations<T: Scalar>(
    m: &NetworkModel<T>,
    features: &[T],
    mode: Mode,
    mask_seed: u64,
) -> Result<Vec<Vec<T>>> {
    if features.len() != m.input_dim() {
        return Err(Error::DimensionMismatch { expected: m.input_dim(), got: features.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mask_seed);
    let mut act = features.to_vec();
    let mut out = Vec::new();
    let mut tmp = Vec::new();
    for op in ops(&m.arch) {
        match op {
            Op::Dense { relu: false, .. } => break,
            Op::Dense { layer, .. } => {
                m.layers[layer].apply(&act, &mut tmp);
                act = tmp.iter().map(|v| v.max(T::zero())).collect();
            }
            Op::Dropout { rate } => {
                if mode == Mode::Train {
                    let keep = T::lit(1.0 / (1.0 - rate));
                    for v in &mut act {
                        *v *= if rng.random::<f64>() < rate { T::zero() } else { keep };
                    }
                }
            }
        }
        out.push(act.clone());
    }
    Ok(out)
}

/// Infer-mode predictions for raw feature rows; applies `m.norm_stats` first.
pub fn predict_batch<T: Scalar>(m: &NetworkModel<T>, features: &[T]) -> Result<Vec<T>> {
    let d = m.input_dim();
    if !features.len().is_multiple_of(d) {
        return Err(Error::DimensionMismatch { expected: d, got: features.len() % d });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut row = Vec::with_capacity(d);
    features
        .chunks_exact(d)
        .map(|raw| {
            m.norm_stats.apply_row(raw, &mut row)?;
            m.run(&row, Mode::Infer, &mut rng, None)
        })
        .collect()
}

/// Gradient buffers with the same layout as [`NetworkModel::layers`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<T> {
    pub layers: Vec<DenseLayer<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn zeros_like(m: &NetworkModel<T>) -> Self {
        Gradients { layers: m.layers.iter().map(|l| DenseLayer::zeros(l.inputs, l.outputs)).collect() }
    }

    /// Flattened view in the canonical parameter order (per layer: weights, then bias).
    pub fn flatten(&self) -> Vec<T> {
        flatten_layers(&self.layers)
    }

    pub fn norm(&self) -> T {
        self.flatten().iter().map(|&g| g * g).sum::<T>().sqrt()
    }
}

pub(crate) fn flatten_layers<T: Scalar>(layers: &[DenseLayer<T>]) -> Vec<T> {
    layers.iter().flat_map(|l| l.weights.iter().chain(&l.bias).copied()).collect()
}

/// Feature rows (row-major, already normalized) and their targets.
#[derive(Clone, Copy, Debug)]
pub struct Batch<'a, T> {
    pub features: &'a [T],
    pub targets: &'a [T],
}

impl<'a, T: Scalar> Batch<'a, T> {
    pub fn new(features: &'a [T], targets: &'a [T]) -> Self {
        Batch { features, targets }
    }
}

/// Mean Huber quantile score over the batch and its gradient with respect to
/// every weight and bias. Dropout masks (train mode) are drawn from `mask_seed`.
pub fn loss_and_gradients<T: Scalar>(
    m: &NetworkModel<T>,
    batch: Batch<'_, T>,
    p: &ScoreParams<T>,
    mode: Mode,
    mask_seed: u64,
) -> Result<(T, Gradients<T>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(mask_seed);
    let mut grads = Gradients::zeros_like(m);
    let loss = accumulate_gradients(m, batch, p, mode, &mut rng, &mut grads)?;
    Ok((loss, grads))
}

/// Overwrites `grads` with the batch-mean gradient; returns the mean loss.
pub(crate) fn accumulate_gradients<T: Scalar>(
    m: &NetworkModel<T>,
    batch: Batch<'_, T>,
    p: &ScoreParams<T>,
    mode: Mode,
    rng: &mut ChaCha8Rng,
    grads: &mut Gradients<T>,
) -> Result<T> {
    let n = batch.targets.len();
    if n == 0 {
        return Err(Error::Empty("batch"));
    }
    let d = m.input_dim();
    if batch.features.len() != n * d {
        return Err(Error::DimensionMismatch { expected: n * d, got: batch.features.len() });
    }
    for g in &mut grads.layers {
        g.weights.iter_mut().chain(g.bias.iter_mut()).for_each(|v| *v = T::zero());
    }
    let inv_n = T::one() / T::from_usize(n).unwrap();
    let mut trace = Trace::new(m.layers.len());
    let mut total = T::zero();
    for (x, &y) in batch.features.chunks_exact(d).zip(batch.targets) {
        let pred = m.run(x, mode, rng, Some(&mut trace))?;
        total += p.score(pred, y);
        m.backward(&trace, p.subgradient(pred, y) * inv_n, mode, grads);
    }
    let loss = total * inv_n;
    if !loss.is_finite() {
        return Err(Error::NonFinite("loss"));
    }
    Ok(loss)
}
