//! Cost-sensitive four-class classification on `[-1, 1]^2`.
//!
//! Inputs are uniform on the square and `P(y|x) ∝ exp(-|x - b_y|)` for four
//! base points `b_y` at the corners. A correct prediction of class `y` earns
//! `diag_rewards[y]`, a wrong one earns nothing, so the Bayes decision rule
//! is biased towards the high-reward classes while the Bayes classifier
//! just picks the nearest corner.

mod boundary;
mod data;
mod mlp;
mod sweep;
mod train;

pub use boundary::{decision_boundary_grid, grid_centers, GridCell};
pub use data::{generate_dataset, generate_eval, SyntheticData};
pub use mlp::{Mlp, LAYER_SIZES, NUM_CLASSES};
pub use sweep::{run_cell, tau_sweep, SweepCell, SweepPlan, SweepSeedData};
pub use train::{average_reward, bayes_oracle_reward, soft_targets, train_mlp, TrainConfig, TrainedModel};

use crate::distributions::{bayes_classifier, bayes_decision, Categorical, OutputSpace};
use crate::math::{exp, sqrt};
use crate::reward::RewardMatrix;
use crate::{Error, Result};

/// A point of the input square.
pub type Point2D = [f64; 2];

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticConfig {
    pub base_points: [Point2D; 4],
    pub diag_rewards: [f64; 4],
    /// Distinct training inputs.
    pub n_inputs: usize,
    /// Labels drawn per training input.
    pub replicates: usize,
    pub n_valid: usize,
    pub n_test: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            base_points: [[1.0, 1.0], [1.0, -1.0], [-1.0, -1.0], [-1.0, 1.0]],
            diag_rewards: [exp(2.0), exp(1.6), exp(1.2), exp(1.1)],
            n_inputs: 20_000,
            replicates: 10,
            n_valid: 20_000,
            n_test: 100_000,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.diag_rewards.windows(2).any(|w| !(w[0] > w[1])) || self.diag_rewards[3] <= 0.0 {
            return Err(Error::InvalidArgument("diagonal rewards must be positive and strictly decreasing".into()));
        }
        if self.n_inputs == 0 || self.replicates == 0 || self.n_valid == 0 || self.n_test == 0 {
            return Err(Error::InvalidArgument("dataset sizes must be positive".into()));
        }
        Ok(())
    }

    /// Diagonal reward matrix; off-diagonal rewards are zero.
    pub fn reward_matrix(&self) -> RewardMatrix {
        RewardMatrix::diagonal(&self.diag_rewards).expect("validated rewards")
    }

    #[inline]
    pub fn reward(&self, predicted: usize, label: usize) -> f64 {
        if predicted == label {
            self.diag_rewards[label]
        } else {
            0.0
        }
    }
}

/// `P(y|x) ∝ exp(-|x - b_y|_2)`.
pub fn true_conditional(x: Point2D, cfg: &SyntheticConfig) -> Categorical {
    let logw = cfg
        .base_points
        .iter()
        .map(|b| -sqrt((x[0] - b[0]) * (x[0] - b[0]) + (x[1] - b[1]) * (x[1] - b[1])))
        .collect();
    Categorical::from_log_weights(logw).expect("finite distances")
}

/// Bayes decision rule under the true conditional.
pub fn bayes_rule(x: Point2D, cfg: &SyntheticConfig) -> usize {
    let space = OutputSpace::indices(4);
    bayes_decision(&space, &true_conditional(x, cfg), &cfg.reward_matrix()).expect("valid space")
}

/// Most probable class under the true conditional, i.e. the nearest corner.
pub fn bayes_classifier_rule(x: Point2D, cfg: &SyntheticConfig) -> usize {
    bayes_classifier(&true_conditional(x, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::conditional_reward;

    #[test]
    fn origin_is_uniform() {
        let c = true_conditional([0.0, 0.0], &SyntheticConfig::default());
        assert!(c.probs().iter().all(|p| (p - 0.25).abs() < 1e-15));
        assert_eq!(bayes_rule([0.0, 0.0], &SyntheticConfig::default()), 0);
    }

    #[test]
    fn corner_conditional() {
        let cfg = SyntheticConfig::default();
        let c = true_conditional([1.0, 1.0], &cfg);
        let w = [1.0, exp(-2.0), exp(-2.0 * 2f64.sqrt()), exp(-2.0)];
        let z: f64 = w.iter().sum();
        for k in 0..4 {
            assert!((c.prob(k) - w[k] / z).abs() < 1e-15);
        }
        assert!((c.prob(0) - 0.752).abs() < 1e-3);
        let r0 = conditional_reward(&0, &OutputSpace::indices(4), &c, &cfg.reward_matrix()).unwrap();
        assert!((r0 - c.prob(0) * exp(2.0)).abs() < 1e-12);
        assert!((r0 - 5.557).abs() < 2e-3);
    }

    #[test]
    fn config_validation() {
        let mut cfg = SyntheticConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.diag_rewards = [1.0, 2.0, 0.5, 0.1];
        assert!(cfg.validate().is_err());
    }
}
