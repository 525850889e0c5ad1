//! Adam and plain gradient descent over a [`ParamStore`].

use super::ParamStore;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub lr: f64,
}

impl AdamState {
    pub fn new(params: &ParamStore, lr: f64) -> Self {
        AdamState {
            m: vec![0.0; params.len()],
            v: vec![0.0; params.len()],
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            lr,
        }
    }
}

/// Bias-corrected Adam update using the gradients stored in `params`.
pub fn adam_step(params: &mut ParamStore, state: &mut AdamState) -> Result<()> {
    if state.m.len() != params.len() || state.v.len() != params.len() {
        return Err(Error::dims("adam_step", params.len(), state.m.len()));
    }
    if let Some(name) = params.non_finite_grad() {
        return Err(Error::NonFinite(format!("gradient of `{name}`")));
    }
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (state.beta1, state.beta2);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    let grads = params.grads().to_vec();
    for (((p, g), m), v) in params
        .values_mut()
        .iter_mut()
        .zip(&grads)
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= state.lr * m_hat / (v_hat.sqrt() + state.eps);
    }
    Ok(())
}

pub fn sgd_step(params: &mut ParamStore, lr: f64) -> Result<()> {
    if let Some(name) = params.non_finite_grad() {
        return Err(Error::NonFinite(format!("gradient of `{name}`")));
    }
    let grads = params.grads().to_vec();
    for (p, g) in params.values_mut().iter_mut().zip(&grads) {
        *p -= lr * g;
    }
    Ok(())
}
