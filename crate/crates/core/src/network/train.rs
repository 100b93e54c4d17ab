use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::scoring::ScoreParams;

use super::{accumulate_gradients, adam_step, init_network, AdamState, ArchitectureSpec, Batch, Gradients, Mode, NetworkModel};

/// Minibatch ADAM hyperparameters and early-stopping patience.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.005,
            batch_size: 32,
            max_epochs: 200,
            patience: 10,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::invalid("learning_rate must be positive"));
        }
        if self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::invalid("batch_size and max_epochs must be positive"));
        }
        if !(self.beta1 > 0.0 && self.beta1 < 1.0 && self.beta2 > 0.0 && self.beta2 < 1.0) {
            return Err(Error::invalid("ADAM betas must lie in (0, 1)"));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::invalid("ADAM epsilon must be positive"));
        }
        Ok(())
    }
}

/// Per-epoch scores of an early-stopping run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TrainReport<T> {
    /// Mean training-batch score of each epoch (epoch `i + 1` at index `i`).
    pub train_scores: Vec<T>,
    /// Mean validation score after each epoch, infer mode.
    pub val_scores: Vec<T>,
    /// Epoch with the lowest validation score (1-based).
    pub best_epoch: usize,
    /// Last epoch that was run.
    pub stopped_at: usize,
}

impl<T: Scalar> TrainReport<T> {
    /// `epoch,train_score,val_score,best` rows.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["epoch", "train_score", "val_score", "best"])?;
        for (i, (t, v)) in self.train_scores.iter().zip(&self.val_scores).enumerate() {
            let epoch = i + 1;
            w.write_record([
                epoch.to_string(),
                t.to_string(),
                v.to_string(),
                u8::from(epoch == self.best_epoch).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_inputs<T: Scalar>(d: &Dataset<T>, arch: &ArchitectureSpec, what: &'static str) -> Result<()> {
    if d.is_empty() {
        return Err(Error::Empty(what));
    }
    if !d.is_labeled() {
        return Err(Error::invalid(format!("{what} has no targets")));
    }
    if d.n_features() != arch.input_dim {
        return Err(Error::DimensionMismatch { expected: arch.input_dim, got: d.n_features() });
    }
    Ok(())
}

/// Fresh network plus the RNG that drives shuffling and dropout masks.
fn start<T: Scalar>(arch: &ArchitectureSpec, p: &ScoreParams<T>, cfg: &TrainConfig) -> Result<(NetworkModel<T>, ChaCha8Rng)> {
    cfg.validate()?;
    let mut model = init_network(arch, cfg.seed)?;
    model.loss_params = *p;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    Ok((model, rng))
}

struct Epochs<T> {
    adam: AdamState<T>,
    grads: Gradients<T>,
    order: Vec<usize>,
    xbuf: Vec<T>,
    ybuf: Vec<T>,
}

impl<T: Scalar> Epochs<T> {
    fn new(model: &NetworkModel<T>, n: usize) -> Self {
        Epochs { adam: AdamState::new(model), grads: Gradients::zeros_like(model), order: (0..n).collect(), xbuf: Vec::new(), ybuf: Vec::new() }
    }

    /// One pass over `data` in reshuffled batches; returns the mean training score.
    fn run(&mut self, model: &mut NetworkModel<T>, data: &Dataset<T>, p: &ScoreParams<T>, cfg: &TrainConfig, rng: &mut ChaCha8Rng) -> Result<T> {
        self.order.shuffle(rng);
        let mut weighted = T::zero();
        for chunk in self.order.chunks(cfg.batch_size) {
            self.xbuf.clear();
            self.ybuf.clear();
            for &i in chunk {
                self.xbuf.extend_from_slice(data.row(i));
                self.ybuf.push(data.targets()[i]);
            }
            let loss = accumulate_gradients(model, Batch::new(&self.xbuf, &self.ybuf), p, Mode::Train, rng, &mut self.grads)?;
            weighted += loss * T::from_usize(chunk.len()).unwrap();
            adam_step(&mut model.layers, &self.grads, &mut self.adam, cfg);
        }
        Ok(weighted / T::from_usize(data.n_rows()).unwrap())
    }
}

/// Mean score of infer-mode predictions on a normalized dataset.
pub(crate) fn validation_score<T: Scalar>(model: &NetworkModel<T>, data: &Dataset<T>, p: &ScoreParams<T>) -> Result<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let scores = (0..data.n_rows())
        .map(|i| Ok(p.score(model.run(data.row(i), Mode::Infer, &mut rng, None)?, data.targets()[i])))
        .collect::<Result<Vec<T>>>()?;
    Ok(crate::scalar::pairwise_mean(&scores).unwrap())
}

/// Trains on `train` until the validation score has not improved for
/// `cfg.patience` consecutive epochs (or `cfg.max_epochs` is reached) and
/// returns the weights of the best epoch. Features must be normalized already.
pub fn train_early_stopping<T: Scalar>(
    train: &Dataset<T>,
    val: &Dataset<T>,
    arch: &ArchitectureSpec,
    p: &ScoreParams<T>,
    cfg: &TrainConfig,
) -> Result<(NetworkModel<T>, TrainReport<T>)> {
    check_inputs(train, arch, "training set")?;
    check_inputs(val, arch, "validation set")?;
    let (mut model, mut rng) = start(arch, p, cfg)?;
    let mut epochs = Epochs::new(&model, train.n_rows());
    let mut report = TrainReport { train_scores: Vec::new(), val_scores: Vec::new(), best_epoch: 0, stopped_at: 0 };
    let mut best_score = T::infinity();
    let mut best_layers = model.layers.clone();
    let mut stale = 0;
    for epoch in 1..=cfg.max_epochs {
        let train_score = epochs.run(&mut model, train, p, cfg, &mut rng).map_err(|e| diverged(e, epoch))?;
        let val_score = validation_score(&model, val, p)?;
        if !(train_score.is_finite() && val_score.is_finite()) {
            return Err(Error::Divergence { epoch });
        }
        report.train_scores.push(train_score);
        report.val_scores.push(val_score);
        report.stopped_at = epoch;
        if val_score < best_score {
            best_score = val_score;
            report.best_epoch = epoch;
            best_layers.clone_from(&model.layers);
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        }
    }
    model.layers = best_layers;
    Ok((model, report))
}

/// Re-initializes with the same seed and trains exactly `epochs` epochs, no early stopping.
pub fn refit_fixed_epochs<T: Scalar>(
    train_plus_val: &Dataset<T>,
    arch: &ArchitectureSpec,
    p: &ScoreParams<T>,
    cfg: &TrainConfig,
    epochs: usize,
) -> Result<NetworkModel<T>> {
    let (mut model, mut rng) = start(arch, p, cfg)?;
    if epochs == 0 {
        return Ok(model);
    }
    check_inputs(train_plus_val, arch, "training set")?;
    let mut runner = Epochs::new(&model, train_plus_val.n_rows());
    for epoch in 1..=epochs {
        let score = runner.run(&mut model, train_plus_val, p, cfg, &mut rng).map_err(|e| diverged(e, epoch))?;
        if !score.is_finite() {
            return Err(Error::Divergence { epoch });
        }
    }
    Ok(model)
}

fn diverged(e: Error, epoch: usize) -> Error {
    match e {
        Error::NonFinite(_) => Error::Divergence { epoch },
        other => other,
    }
}
