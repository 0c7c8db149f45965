use alloc::vec::Vec;

use rand::Rng as _;

use super::{true_conditional, Point2D, SyntheticConfig};
use crate::distributions::{Categorical, LabeledDataset};
use crate::rng::Rng;
use crate::Result;

/// Inputs with one or more sampled labels each.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticData {
    pub inputs: Vec<Point2D>,
    /// `labels[i]` holds the replicate labels of `inputs[i]`.
    pub labels: Vec<Vec<usize>>,
}

impl SyntheticData {
    pub fn num_examples(&self) -> usize {
        self.labels.iter().map(Vec::len).sum()
    }

    /// `(x, y)` pairs keyed by input index, so that replicates of one input
    /// share a key.
    pub fn to_labeled(&self) -> Result<LabeledDataset<usize>> {
        let pairs = self
            .labels
            .iter()
            .enumerate()
            .flat_map(|(i, ys)| ys.iter().map(move |&y| (i, y)))
            .collect();
        LabeledDataset::new(pairs, 4)
    }

    /// Empirical conditional of input `i`.
    pub fn empirical(&self, i: usize) -> Categorical {
        let mut counts = [0.0; 4];
        for &y in &self.labels[i] {
            counts[y] += 1.0;
        }
        let n = self.labels[i].len() as f64;
        Categorical::from_probs(counts.iter().map(|c| c / n).collect()).expect("nonempty")
    }
}

fn draw(c: &Categorical, rng: &mut Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, &p) in c.probs().iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    c.len() - 1
}

fn point(rng: &mut Rng) -> Point2D {
    [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]
}

/// Training set: `n_inputs` uniform inputs, each with `replicates` labels
/// drawn from the true conditional.
pub fn generate_dataset(cfg: &SyntheticConfig, rng: &mut Rng) -> SyntheticData {
    let mut inputs = Vec::with_capacity(cfg.n_inputs);
    let mut labels = Vec::with_capacity(cfg.n_inputs);
    for _ in 0..cfg.n_inputs {
        let x = point(rng);
        let c = true_conditional(x, cfg);
        labels.push((0..cfg.replicates).map(|_| draw(&c, rng)).collect());
        inputs.push(x);
    }
    SyntheticData { inputs, labels }
}

/// Evaluation set of `n` pairs drawn jointly from `P(X, Y)`.
pub fn generate_eval(cfg: &SyntheticConfig, n: usize, rng: &mut Rng) -> SyntheticData {
    let mut inputs = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let x = point(rng);
        labels.push(alloc::vec![draw(&true_conditional(x, cfg), rng)]);
        inputs.push(x);
    }
    SyntheticData { inputs, labels }
}
