use alloc::vec::Vec;

use super::data::{generate_dataset, generate_eval, SyntheticData};
use super::train::{average_reward, train_mlp, TrainConfig};
use super::SyntheticConfig;
use crate::distributions::Temperature;
use crate::rng::{derive, derive_str, rng_from_seed};
use crate::{Objective, Result};

/// A temperature sweep: every `(objective, tau)` pair is trained once per
/// repetition. ML does not depend on `tau` and is trained once per
/// repetition.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPlan {
    pub taus: Vec<Temperature>,
    pub objectives: Vec<Objective>,
    pub repetitions: usize,
    pub seed: u64,
    /// Optimizer settings; `objective`, `tau` and `seed` are overridden per cell.
    pub train: TrainConfig,
}

impl SweepPlan {
    pub fn repetition_seed(&self, rep: usize) -> u64 {
        derive(self.seed, rep as u64)
    }

    /// Cells of one repetition in evaluation order.
    pub fn cells(&self) -> Vec<(Objective, Option<Temperature>)> {
        let mut out = Vec::new();
        for &o in &self.objectives {
            if o == Objective::Ml {
                out.push((o, None));
            } else {
                out.extend(self.taus.iter().map(|&t| (o, Some(t))));
            }
        }
        out
    }
}

/// Train, validation and test sets of one repetition. They are shared by
/// every cell of that repetition, as is the initialization and shuffling
/// seed, so differences between cells are not due to sampling noise in
/// the data.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSeedData {
    pub seed: u64,
    pub train: SyntheticData,
    pub valid: SyntheticData,
    pub test: SyntheticData,
}

impl SweepSeedData {
    pub fn generate(cfg: &SyntheticConfig, seed: u64) -> Self {
        let mut g = rng_from_seed(derive_str(seed, "data"));
        let train = generate_dataset(cfg, &mut g);
        let valid = generate_eval(cfg, cfg.n_valid, &mut g);
        let test = generate_eval(cfg, cfg.n_test, &mut g);
        SweepSeedData { seed, train, valid, test }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepCell {
    pub objective: Objective,
    /// `None` for ML.
    pub tau: Option<f64>,
    pub seed: u64,
    pub valid_reward: f64,
    pub test_reward: f64,
    pub epochs_ran: usize,
}

pub fn run_cell(
    data: &SweepSeedData,
    objective: Objective,
    tau: Option<Temperature>,
    template: &TrainConfig,
    cfg: &SyntheticConfig,
) -> Result<SweepCell> {
    let mut tc = template.clone();
    tc.objective = objective;
    tc.seed = derive_str(data.seed, "train");
    if let Some(t) = tau {
        tc.tau = t;
    }
    let m = train_mlp(&data.train, &data.valid, &tc, cfg)?;
    Ok(SweepCell {
        objective,
        tau: tau.map(|t| t.value()),
        seed: data.seed,
        valid_reward: m.best_valid,
        test_reward: average_reward(&m.model, &data.test, cfg),
        epochs_ran: m.epochs_ran,
    })
}

/// Runs the whole plan sequentially.
pub fn tau_sweep(plan: &SweepPlan, cfg: &SyntheticConfig) -> Result<Vec<SweepCell>> {
    cfg.validate()?;
    let mut out = Vec::new();
    for rep in 0..plan.repetitions {
        let data = SweepSeedData::generate(cfg, plan.repetition_seed(rep));
        for (o, t) in plan.cells() {
            out.push(run_cell(&data, o, t, &plan.train, cfg)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ml_runs_once_per_repetition() {
        let cfg = SyntheticConfig { n_inputs: 100, replicates: 3, n_valid: 100, n_test: 200, ..Default::default() };
        let t = |v| Temperature::new(v).unwrap();
        let mut train = TrainConfig::new(Objective::Ml, t(1.0), 0);
        train.max_epochs = 2;
        let plan = SweepPlan {
            taus: alloc::vec![t(0.5), t(2.0)],
            objectives: Objective::ALL.to_vec(),
            repetitions: 2,
            seed: 11,
            train,
        };
        let cells = tau_sweep(&plan, &cfg).unwrap();
        assert_eq!(cells.len(), 2 * 5);
        assert_eq!(cells.iter().filter(|c| c.objective == Objective::Ml).count(), 2);
        assert!(cells.iter().all(|c| c.epochs_ran <= 2 && c.test_reward >= 0.0));
        assert_ne!(cells[0].seed, cells[5].seed);
        assert_eq!(cells, tau_sweep(&plan, &cfg).unwrap());
    }
}
