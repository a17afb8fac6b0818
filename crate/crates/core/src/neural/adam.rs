//! Adam with bias correction.
//!
//! A step touches exactly the parameters present in the gradient map;
//! untouched parameters keep their moment state and step count. That
//! is what makes hard parameter sharing literal: an update for one
//! task's head leaves every other head bit-identical.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neural::ParameterStore;
use crate::neural::tape::GradMap;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

#[derive(Debug, Clone, Default)]
struct AdamSlot {
    step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

/// Per-parameter first/second moment accumulators.
#[derive(Debug, Clone, Default)]
pub struct AdamState {
    slots: BTreeMap<String, AdamSlot>,
}

impl AdamState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Step count of one parameter (0 if it has never been updated).
    pub fn step_count(&self, path: &str) -> u64 {
        self.slots.get(path).map_or(0, |s| s.step)
    }

    /// First-moment buffer of one parameter, if it exists.
    pub fn first_moment(&self, path: &str) -> Option<&[f64]> {
        self.slots.get(path).map(|s| s.m.as_slice())
    }

    /// Second-moment buffer of one parameter, if it exists.
    pub fn second_moment(&self, path: &str) -> Option<&[f64]> {
        self.slots.get(path).map(|s| s.v.as_slice())
    }
}

/// Apply one Adam update for every path in `grads`.
pub fn adam_step(
    params: &mut ParameterStore,
    grads: &GradMap,
    state: &mut AdamState,
    config: &AdamConfig,
) -> Result<()> {
    for (path, grad) in grads {
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Divergence(format!(
                "non-finite gradient for parameter '{path}'"
            )));
        }
        let tensor = params.get_mut(path)?;
        if tensor.len() != grad.len() {
            return Err(Error::Shape(format!(
                "gradient for '{path}' has length {}, parameter has {}",
                grad.len(),
                tensor.len()
            )));
        }
        let slot = state.slots.entry(path.clone()).or_insert_with(|| AdamSlot {
            step: 0,
            m: vec![0.0; grad.len()],
            v: vec![0.0; grad.len()],
        });
        slot.step += 1;
        let t = slot.step as f64;
        let bias1 = 1.0 - config.beta1.powf(t);
        let bias2 = 1.0 - config.beta2.powf(t);
        let data = tensor.data_mut();
        for i in 0..grad.len() {
            let g = grad[i];
            slot.m[i] = config.beta1 * slot.m[i] + (1.0 - config.beta1) * g;
            slot.v[i] = config.beta2 * slot.v[i] + (1.0 - config.beta2) * g * g;
            let m_hat = slot.m[i] / bias1;
            let v_hat = slot.v[i] / bias2;
            data[i] -= config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
        }
    }
    Ok(())
}
