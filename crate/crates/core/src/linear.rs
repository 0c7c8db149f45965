//! Log-linear model parameters, sparse gradients and the SGD loop shared by
//! the chain and tree models.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::rng;
use crate::{Error, Result};

/// String-keyed feature registry with stable dense ids.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FeatureIndex {
    ids: BTreeMap<String, usize>,
    names: Vec<String>,
    frozen: bool,
}

impl FeatureIndex {
    pub fn new() -> Self {
        Self::default()
    }

    /// Id of `name`, registering it unless the index is frozen.
    pub fn intern(&mut self, name: &str) -> Option<usize> {
        if let Some(&id) = self.ids.get(name) {
            return Some(id);
        }
        if self.frozen {
            return None;
        }
        let id = self.names.len();
        self.ids.insert(name.to_string(), id);
        self.names.push(name.to_string());
        Some(id)
    }

    pub fn get(&self, name: &str) -> Option<usize> {
        self.ids.get(name).copied()
    }

    pub fn name(&self, id: usize) -> &str {
        &self.names[id]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }
}

/// Sparse vector as unsorted `(index, value)` pairs; duplicates add up.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseVector {
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, index: usize, value: f64) {
        if value != 0.0 {
            self.entries.push((index, value));
        }
    }

    /// Sorts by index and merges duplicates.
    pub fn compact(&mut self) {
        self.entries.sort_by_key(|e| e.0);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(self.entries.len());
        for &(i, v) in &self.entries {
            match out.last_mut() {
                Some(last) if last.0 == i => last.1 += v,
                _ => out.push((i, v)),
            }
        }
        self.entries = out;
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut d = alloc::vec![0.0; dim];
        for &(i, v) in &self.entries {
            d[i] += v;
        }
        d
    }

    pub fn scale(&mut self, s: f64) {
        for e in &mut self.entries {
            e.1 *= s;
        }
    }

    pub fn extend(&mut self, other: &SparseVector) {
        self.entries.extend_from_slice(&other.entries);
    }
}

/// Dense weight vector `theta` stored as `scale * raw`, so that L2 shrinkage
/// is a single multiply per step.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearModelParams {
    raw: Vec<f64>,
    scale: f64,
}

impl LinearModelParams {
    pub fn zeros(dim: usize) -> Self {
        LinearModelParams {
            raw: alloc::vec![0.0; dim],
            scale: 1.0,
        }
    }

    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if let Some(i) = weights.iter().position(|w| !w.is_finite()) {
            return Err(Error::InvalidArgument(alloc::format!("weight {i} is not finite")));
        }
        Ok(LinearModelParams {
            raw: weights,
            scale: 1.0,
        })
    }

    pub fn dim(&self) -> usize {
        self.raw.len()
    }

    /// Grows the vector with zeros.
    pub fn resize(&mut self, dim: usize) {
        if dim > self.raw.len() {
            self.raw.resize(dim, 0.0);
        }
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.raw.get(i).map_or(0.0, |w| w * self.scale)
    }

    pub fn set(&mut self, i: usize, w: f64) {
        self.raw[i] = w / self.scale;
    }

    pub fn weights(&self) -> Vec<f64> {
        self.raw.iter().map(|w| w * self.scale).collect()
    }

    /// `theta . phi` for a feature list with unit values.
    #[inline]
    pub fn dot_ids(&self, ids: &[usize]) -> f64 {
        let s: f64 = ids.iter().map(|&i| self.raw.get(i).copied().unwrap_or(0.0)).sum();
        s * self.scale
    }

    /// `theta += step * g`.
    pub fn axpy(&mut self, step: f64, g: &SparseVector) {
        let inv = step / self.scale;
        for &(i, v) in g.entries() {
            self.raw[i] += inv * v;
        }
    }

    /// `theta *= factor`, folded into the scale.
    pub fn shrink(&mut self, factor: f64) {
        self.scale *= factor;
        if self.scale < 1e-9 {
            self.normalize();
        }
    }

    fn normalize(&mut self) {
        for w in &mut self.raw {
            *w *= self.scale;
        }
        self.scale = 1.0;
    }

    pub fn squared_norm(&self) -> f64 {
        self.raw.iter().map(|w| w * w).sum::<f64>() * self.scale * self.scale
    }
}

/// Plain SGD with optional L2 and `1/(1 + decay * epoch)` step decay.
#[derive(Clone, Debug, PartialEq)]
pub struct SgdConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    /// L2 coefficient; each example step multiplies the weights by
    /// `1 - lr * l2`.
    pub l2: f64,
    pub decay: f64,
    /// Seed for the per-epoch example order.
    pub seed: u64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        SgdConfig {
            learning_rate: 0.1,
            epochs: 10,
            l2: 1e-5,
            decay: 0.0,
            seed: 0,
        }
    }
}

impl SgdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument("learning rate must be positive".into()));
        }
        if !(self.l2 >= 0.0 && self.decay >= 0.0) {
            return Err(Error::InvalidArgument("l2 and decay must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Per-epoch mean loss of a training run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainLog {
    pub epoch_loss: Vec<f64>,
}

/// Runs SGD over `n` examples. `grad(i, params)` returns the loss and
/// gradient of example `i`; examples are visited in a fresh shuffled order
/// every epoch.
pub fn train_sgd<F>(params: &mut LinearModelParams, n: usize, cfg: &SgdConfig, mut grad: F) -> Result<TrainLog>
where
    F: FnMut(usize, &LinearModelParams) -> Result<(f64, SparseVector)>,
{
    cfg.validate()?;
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut log = TrainLog::default();
    for epoch in 0..cfg.epochs {
        let mut g = rng::rng_from_seed(rng::derive(cfg.seed, epoch as u64));
        order.shuffle(&mut g);
        let lr = cfg.learning_rate / (1.0 + cfg.decay * epoch as f64);
        let mut total = 0.0;
        for &i in &order {
            let (loss, gradient) = grad(i, params)?;
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch, loss });
            }
            total += loss;
            if cfg.l2 > 0.0 {
                params.shrink(1.0 - lr * cfg.l2);
            }
            params.axpy(-lr, &gradient);
        }
        log.epoch_loss.push(total / n as f64);
    }
    Ok(log)
}
