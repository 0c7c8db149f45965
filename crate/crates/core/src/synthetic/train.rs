use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::data::SyntheticData;
use super::mlp::{Mlp, NUM_CLASSES};
use super::{bayes_rule, SyntheticConfig};
use crate::distributions::{q_prime, softmax_q, OutputSpace, Temperature};
use crate::rng::{derive_str, rng_from_seed};
use crate::{Error, Objective, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub objective: Objective,
    pub tau: Temperature,
    pub learning_rate: f64,
    pub momentum: f64,
    pub max_epochs: usize,
    pub batch_size: usize,
    /// Epochs without a validation improvement before stopping.
    pub patience: usize,
    /// Initial parameters are uniform in `[-init_range, init_range]`.
    pub init_range: f64,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(objective: Objective, tau: Temperature, seed: u64) -> Self {
        TrainConfig {
            objective,
            tau,
            learning_rate: 0.1,
            momentum: 0.9,
            max_epochs: 100,
            batch_size: 64,
            patience: 10,
            init_range: 0.1,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidArgument("learning rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidArgument("momentum must lie in [0, 1)".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainedModel {
    /// Parameters from the epoch with the best validation reward.
    pub model: Mlp,
    pub epochs_ran: usize,
    pub best_epoch: usize,
    pub best_valid: f64,
}

/// Per-input training targets: the empirical conditional for ML, its
/// mixture of payoff distributions `Q~'` for RAML, and its softmax
/// Q-distribution `Q~` for SQDML.
pub fn soft_targets(data: &SyntheticData, objective: Objective, tau: Temperature, cfg: &SyntheticConfig) -> Result<Vec<[f64; NUM_CLASSES]>> {
    let space = OutputSpace::indices(NUM_CLASSES);
    let r = cfg.reward_matrix();
    (0..data.inputs.len())
        .map(|i| {
            let emp = data.empirical(i);
            let t = match objective {
                Objective::Ml => emp,
                Objective::Raml => q_prime(&space, &emp, tau, &r)?,
                Objective::Sqdml => softmax_q(&space, &emp, tau, &r)?,
            };
            let p = t.probs();
            Ok([p[0], p[1], p[2], p[3]])
        })
        .collect()
}

/// Mean of `r(argmax f(x), y)` over all labeled pairs.
pub fn average_reward(model: &Mlp, data: &SyntheticData, cfg: &SyntheticConfig) -> f64 {
    mean_reward(data, cfg, |x| model.predict(x))
}

/// Average reward of the Bayes decision rule, the ceiling for any model.
pub fn bayes_oracle_reward(data: &SyntheticData, cfg: &SyntheticConfig) -> f64 {
    mean_reward(data, cfg, |x| bayes_rule(x, cfg))
}

fn mean_reward<F: Fn([f64; 2]) -> usize>(data: &SyntheticData, cfg: &SyntheticConfig, predict: F) -> f64 {
    let mut total = 0.0;
    let mut n = 0usize;
    for (x, ys) in data.inputs.iter().zip(&data.labels) {
        let p = predict(*x);
        for &y in ys {
            total += cfg.reward(p, y);
        }
        n += ys.len();
    }
    total / n as f64
}

/// Minibatch SGD with momentum on the soft-target cross-entropy.
///
/// Replicates of an input share one target (their empirical conditional,
/// or the distribution derived from it), so the loss is accumulated per
/// distinct input with weight equal to its replicate count. This is the
/// same objective as summing over all replicated pairs.
///
/// Early stopping monitors validation average reward; the parameters of the
/// best epoch are returned.
pub fn train_mlp(train: &SyntheticData, valid: &SyntheticData, tc: &TrainConfig, cfg: &SyntheticConfig) -> Result<TrainedModel> {
    tc.validate()?;
    if train.inputs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let targets = soft_targets(train, tc.objective, tc.tau, cfg)?;
    let mut model = Mlp::init(tc.init_range, &mut rng_from_seed(derive_str(tc.seed, "init")));
    let mut shuffle = rng_from_seed(derive_str(tc.seed, "shuffle"));
    let mut order: Vec<usize> = (0..train.inputs.len()).collect();
    let mut velocity = alloc::vec![0.0; Mlp::NUM_PARAMS];
    let mut grad = alloc::vec![0.0; Mlp::NUM_PARAMS];
    let mut best = TrainedModel {
        model: model.clone(),
        epochs_ran: 0,
        best_epoch: 0,
        best_valid: f64::NEG_INFINITY,
    };
    let mut stale = 0;
    for epoch in 0..tc.max_epochs {
        order.shuffle(&mut shuffle);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(tc.batch_size) {
            let count: usize = batch.iter().map(|&i| train.labels[i].len()).sum();
            grad.iter_mut().for_each(|g| *g = 0.0);
            for &i in batch {
                let w = train.labels[i].len() as f64 / count as f64;
                epoch_loss += model.accumulate_gradient(train.inputs[i], &targets[i], w, &mut grad);
            }
            for ((p, v), g) in model.params.iter_mut().zip(velocity.iter_mut()).zip(&grad) {
                *v = tc.momentum * *v - tc.learning_rate * g;
                *p += *v;
            }
        }
        if !epoch_loss.is_finite() || model.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Diverged { epoch, loss: epoch_loss });
        }
        best.epochs_ran = epoch + 1;
        let v = average_reward(&model, valid, cfg);
        if v > best.best_valid {
            best.best_valid = v;
            best.best_epoch = epoch + 1;
            best.model = model.clone();
            stale = 0;
        } else {
            stale += 1;
            if stale >= tc.patience {
                break;
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::super::data::{generate_dataset, generate_eval};
    use super::*;
    use crate::rng::rng_from_seed;

    fn tau(t: f64) -> Temperature {
        Temperature::new(t).unwrap()
    }

    fn small() -> SyntheticConfig {
        SyntheticConfig { n_inputs: 400, replicates: 10, n_valid: 400, n_test: 400, ..Default::default() }
    }

    #[test]
    fn ml_targets_are_frequencies_and_small_tau_sqdml_is_sharp() {
        let cfg = small();
        let d = generate_dataset(&cfg, &mut rng_from_seed(0));
        let ml = soft_targets(&d, Objective::Ml, tau(1.0), &cfg).unwrap();
        assert_eq!(ml[3].to_vec(), d.empirical(3).probs().to_vec());
        let sq = soft_targets(&d, Objective::Sqdml, tau(1e-6), &cfg).unwrap();
        for t in &sq {
            assert!(t.iter().any(|&p| p > 1.0 - 1e-9));
        }
    }

    #[test]
    fn perfect_and_wrong_predictors() {
        let cfg = small();
        let data = SyntheticData { inputs: alloc::vec![[0.9, 0.9]; 5], labels: alloc::vec![alloc::vec![0]; 5] };
        let mut m = Mlp::zeros();
        // bias towards class 0
        let b3 = Mlp::NUM_PARAMS - 4;
        m.params[b3] = 1.0;
        assert!((average_reward(&m, &data, &cfg) - crate::math::exp(2.0)).abs() < 1e-12);
        m.params[b3] = -1.0;
        assert_eq!(average_reward(&m, &data, &cfg), 0.0);
    }

    #[test]
    fn training_is_deterministic_and_bounded_by_oracle() {
        let cfg = small();
        let mut g = rng_from_seed(7);
        let train = generate_dataset(&cfg, &mut g);
        let valid = generate_eval(&cfg, 400, &mut g);
        let mut tc = TrainConfig::new(Objective::Sqdml, tau(0.5), 3);
        tc.max_epochs = 15;
        let a = train_mlp(&train, &valid, &tc, &cfg).unwrap();
        let b = train_mlp(&train, &valid, &tc, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.epochs_ran >= a.best_epoch);
        let test = generate_eval(&cfg, 4000, &mut g);
        let oracle = bayes_oracle_reward(&test, &cfg);
        let se = 2.9 / (4000f64).sqrt();
        assert!(average_reward(&a.model, &test, &cfg) <= oracle + 2.0 * se);
    }

    #[test]
    fn divergence_is_reported() {
        let cfg = small();
        let mut g = rng_from_seed(1);
        let train = generate_dataset(&cfg, &mut g);
        let valid = generate_eval(&cfg, 100, &mut g);
        let mut tc = TrainConfig::new(Objective::Ml, tau(1.0), 0);
        tc.learning_rate = 1e300;
        tc.init_range = 1e3;
        assert!(matches!(train_mlp(&train, &valid, &tc, &cfg), Err(Error::Diverged { .. })));
    }
}
