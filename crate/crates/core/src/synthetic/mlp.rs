use alloc::vec::Vec;

use rand::Rng as _;

use super::Point2D;
use crate::math::{exp, ln, tanh};
use crate::rng::Rng;

/// Input, two tanh hidden layers, softmax output.
pub const LAYER_SIZES: [usize; 4] = [2, 8, 8, 4];
pub const NUM_CLASSES: usize = 4;

const D: usize = 2;
const H: usize = 8;
const C: usize = 4;

const W1: usize = 0;
const B1: usize = W1 + H * D;
const W2: usize = B1 + H;
const B2: usize = W2 + H * H;
const W3: usize = B2 + H;
const B3: usize = W3 + C * H;
const NPARAMS: usize = B3 + C;

/// Feed-forward classifier with all parameters in one flat vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    pub params: Vec<f64>,
}

struct Activations {
    h1: [f64; H],
    h2: [f64; H],
    logits: [f64; C],
}

impl Mlp {
    pub const NUM_PARAMS: usize = NPARAMS;

    /// Every parameter uniform in `[-range, range]`.
    pub fn init(range: f64, rng: &mut Rng) -> Self {
        Mlp {
            params: (0..NPARAMS).map(|_| rng.random_range(-range..=range)).collect(),
        }
    }

    pub fn zeros() -> Self {
        Mlp { params: alloc::vec![0.0; NPARAMS] }
    }

    fn forward(&self, x: Point2D) -> Activations {
        let p = &self.params;
        let mut h1 = [0.0; H];
        for (j, h) in h1.iter_mut().enumerate() {
            *h = tanh(p[B1 + j] + p[W1 + j * D] * x[0] + p[W1 + j * D + 1] * x[1]);
        }
        let mut h2 = [0.0; H];
        for (j, h) in h2.iter_mut().enumerate() {
            let row = &p[W2 + j * H..W2 + (j + 1) * H];
            *h = tanh(p[B2 + j] + row.iter().zip(&h1).map(|(w, a)| w * a).sum::<f64>());
        }
        let mut logits = [0.0; C];
        for (k, o) in logits.iter_mut().enumerate() {
            let row = &p[W3 + k * H..W3 + (k + 1) * H];
            *o = p[B3 + k] + row.iter().zip(&h2).map(|(w, a)| w * a).sum::<f64>();
        }
        Activations { h1, h2, logits }
    }

    pub fn logits(&self, x: Point2D) -> [f64; C] {
        self.forward(x).logits
    }

    pub fn probs(&self, x: Point2D) -> [f64; C] {
        let l = self.logits(x);
        let s = crate::math::softmax(&l);
        [s[0], s[1], s[2], s[3]]
    }

    /// Argmax class, lowest index on ties.
    pub fn predict(&self, x: Point2D) -> usize {
        crate::math::argmax(&self.logits(x))
    }

    /// Adds `weight * d/dθ CE(target, softmax(f(x)))` to `grad` and returns
    /// `weight * CE`, where `CE = -Σ_k target_k ln p_k`.
    pub fn accumulate_gradient(&self, x: Point2D, target: &[f64; C], weight: f64, grad: &mut [f64]) -> f64 {
        let p = &self.params;
        let a = self.forward(x);
        let m = a.logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = a.logits.iter().map(|l| exp(l - m)).sum();
        let log_z = m + ln(z);
        let mut loss = 0.0;
        let mut d3 = [0.0; C];
        for k in 0..C {
            let lp = a.logits[k] - log_z;
            if target[k] > 0.0 {
                loss -= target[k] * lp;
            }
            d3[k] = weight * (exp(lp) - target[k]);
        }
        let mut dh2 = [0.0; H];
        for k in 0..C {
            grad[B3 + k] += d3[k];
            for j in 0..H {
                grad[W3 + k * H + j] += d3[k] * a.h2[j];
                dh2[j] += d3[k] * p[W3 + k * H + j];
            }
        }
        let mut dh1 = [0.0; H];
        for j in 0..H {
            let d = dh2[j] * (1.0 - a.h2[j] * a.h2[j]);
            grad[B2 + j] += d;
            for i in 0..H {
                grad[W2 + j * H + i] += d * a.h1[i];
                dh1[i] += d * p[W2 + j * H + i];
            }
        }
        for j in 0..H {
            let d = dh1[j] * (1.0 - a.h1[j] * a.h1[j]);
            grad[B1 + j] += d;
            grad[W1 + j * D] += d * x[0];
            grad[W1 + j * D + 1] += d * x[1];
        }
        weight * loss
    }

    /// Soft-target cross-entropy without gradient.
    pub fn loss(&self, x: Point2D, target: &[f64; C]) -> f64 {
        let l = self.logits(x);
        let log_z = crate::math::log_sum_exp(&l);
        (0..C).filter(|&k| target[k] > 0.0).map(|k| -target[k] * (l[k] - log_z)).sum()
    }
}
