use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// One measured value. `wall_ms` is zero unless timing was requested, which
/// keeps metric files byte-identical across reruns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub task: String,
    pub objective: String,
    pub tau: Option<f64>,
    pub seed: u64,
    pub split: String,
    pub metric: String,
    pub value: f64,
    pub epoch: Option<usize>,
    pub wall_ms: u64,
}

impl MetricRecord {
    #[allow(clippy::too_many_arguments)]
    pub fn new(task: &str, objective: &str, tau: Option<f64>, seed: u64, split: &str, metric: &str, value: f64, epoch: Option<usize>) -> Result<Self> {
        if !value.is_finite() {
            return Err(HarnessError::Numerical(format!("{metric} on {split} is not finite ({value})")));
        }
        Ok(MetricRecord {
            task: task.into(),
            objective: objective.into(),
            tau,
            seed,
            split: split.into(),
            metric: metric.into(),
            value,
            epoch,
            wall_ms: 0,
        })
    }

    /// Identifies the run cell this record belongs to.
    pub fn cell_key(&self) -> CellKey {
        CellKey { objective: self.objective.clone(), tau_bits: self.tau.map(f64::to_bits), seed: self.seed }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellKey {
    pub objective: String,
    pub tau_bits: Option<u64>,
    pub seed: u64,
}

impl CellKey {
    pub fn new(objective: &str, tau: Option<f64>, seed: u64) -> Self {
        CellKey { objective: objective.into(), tau_bits: tau.map(f64::to_bits), seed }
    }
}
