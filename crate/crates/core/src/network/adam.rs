use crate::scalar::Scalar;

use super::{DenseLayer, Gradients, NetworkModel, TrainConfig};

/// First and second moment estimates, laid out like the network parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T> {
    pub m: Vec<DenseLayer<T>>,
    pub v: Vec<DenseLayer<T>>,
    /// Number of updates applied so far.
    pub t: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(model: &NetworkModel<T>) -> Self {
        let zeros = Gradients::zeros_like(model).layers;
        AdamState { m: zeros.clone(), v: zeros, t: 0 }
    }
}

/// Bias-corrected ADAM update of one parameter block at step `t >= 1`.
pub fn adam_update<T: Scalar>(params: &mut [T], grads: &[T], m: &mut [T], v: &mut [T], cfg: &TrainConfig, t: u64) {
    debug_assert!(t >= 1, "ADAM step index starts at 1");
    let (b1, b2) = (T::lit(cfg.beta1), T::lit(cfg.beta2));
    let lr = T::lit(cfg.learning_rate);
    let eps = T::lit(cfg.epsilon);
    let t = i32::try_from(t).unwrap_or(i32::MAX);
    let c1 = T::one() - b1.powi(t);
    let c2 = T::one() - b2.powi(t);
    for (((w, &g), m), v) in params.iter_mut().zip(grads).zip(m.iter_mut()).zip(v.iter_mut()) {
        *m = b1 * *m + (T::one() - b1) * g;
        *v = b2 * *v + (T::one() - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *w -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}

/// Advances `state.t` and applies one ADAM update to every weight and bias.
pub fn adam_step<T: Scalar>(
    layers: &mut [DenseLayer<T>],
    grads: &Gradients<T>,
    state: &mut AdamState<T>,
    cfg: &TrainConfig,
) {
    state.t += 1;
    let t = state.t;
    for (((layer, g), m), v) in layers.iter_mut().zip(&grads.layers).zip(&mut state.m).zip(&mut state.v) {
        adam_update(&mut layer.weights, &g.weights, &mut m.weights, &mut v.weights, cfg, t);
        adam_update(&mut layer.bias, &g.bias, &mut m.bias, &mut v.bias, cfg, t);
    }
}
