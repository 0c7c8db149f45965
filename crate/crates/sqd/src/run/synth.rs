use sqd_core::distributions::Temperature;
use sqd_core::rng::derive;
use sqd_core::synthetic::{
    bayes_classifier_rule, bayes_oracle_reward, bayes_rule, decision_boundary_grid, run_cell, train_mlp, GridCell, SweepSeedData,
    SyntheticConfig, TrainConfig,
};
use sqd_core::Objective;

use super::{append_metrics, completed_cells, metrics_path, run_chunked, timed};
use crate::config::RunConfig;
use crate::error::Result;
use crate::io::{write_grid_csv, write_jsonl, SweepRecord};
use crate::metrics::{CellKey, MetricRecord};

const TASK: &str = "synth";
const ORACLE: &str = "bayes-rule";

pub fn synth_config(cfg: &RunConfig) -> SyntheticConfig {
    SyntheticConfig {
        n_inputs: cfg.n_inputs,
        replicates: cfg.replicates,
        n_valid: cfg.n_valid,
        n_test: cfg.n_test,
        seed: cfg.seed,
        ..Default::default()
    }
}

/// MLP optimizer settings with the config's overrides applied.
pub fn train_config(cfg: &RunConfig, objective: Objective, tau: Temperature) -> TrainConfig {
    let o = &cfg.optimizer;
    let mut tc = TrainConfig::new(objective, tau, cfg.seed);
    tc.learning_rate = o.learning_rate.unwrap_or(tc.learning_rate);
    tc.momentum = o.momentum.unwrap_or(tc.momentum);
    tc.max_epochs = o.epochs.unwrap_or(tc.max_epochs);
    tc.batch_size = o.batch_size.unwrap_or(tc.batch_size);
    tc.patience = o.patience.unwrap_or(tc.patience);
    tc.init_range = o.init_range.unwrap_or(tc.init_range);
    tc
}

/// Seed of repetition `rep`; data, initialization and shuffling of every
/// cell in that repetition derive from it.
fn rep_seed(cfg: &RunConfig, rep: usize) -> u64 {
    derive(cfg.seed, rep as u64)
}

#[derive(Clone, Copy, Debug)]
enum Cell {
    Train(Objective, Option<Temperature>),
    Oracle,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepSummary {
    pub cells_run: usize,
    pub cells_skipped: usize,
}

fn sweep_records(cell: &sqd_core::synthetic::SweepCell) -> [SweepRecord; 2] {
    let rec = |split: &str, avg_reward| SweepRecord {
        objective: cell.objective.name().into(),
        tau: cell.tau,
        seed: cell.seed,
        split: split.into(),
        avg_reward,
        epochs_ran: cell.epochs_ran,
    };
    [rec("valid", cell.valid_reward), rec("test", cell.test_reward)]
}

fn cell_metrics(cell: &sqd_core::synthetic::SweepCell) -> Result<Vec<MetricRecord>> {
    let o = cell.objective.name();
    Ok(vec![
        MetricRecord::new(TASK, o, cell.tau, cell.seed, "valid", "avg_reward", cell.valid_reward, Some(cell.epochs_ran))?,
        MetricRecord::new(TASK, o, cell.tau, cell.seed, "test", "avg_reward", cell.test_reward, Some(cell.epochs_ran))?,
    ])
}

/// Temperature sweep over `objectives x tau x reps`. ML ignores the
/// temperature and runs once per repetition; the Bayes-rule ceiling is
/// recorded per repetition as objective `bayes-rule`.
///
/// Writes `sweep.jsonl` and `metrics.jsonl` under `cfg.out`.
pub fn synth_sweep(cfg: &RunConfig, workers: usize) -> Result<SweepSummary> {
    let sc = synth_config(cfg);
    sc.validate()?;
    let taus = cfg.tau.temperatures()?;
    let done = completed_cells(&metrics_path(cfg), TASK)?;
    let mut todo: Vec<(usize, Cell)> = Vec::new();
    let mut skipped = 0;
    for rep in 0..cfg.reps {
        let seed = rep_seed(cfg, rep);
        let mut cells = vec![Cell::Oracle];
        for &o in &cfg.objectives {
            if o == Objective::Ml {
                cells.push(Cell::Train(o, None));
            } else {
                cells.extend(taus.iter().map(|&t| Cell::Train(o, Some(t))));
            }
        }
        for c in cells {
            let key = match c {
                Cell::Oracle => CellKey::new(ORACLE, None, seed),
                Cell::Train(o, t) => CellKey::new(o.name(), t.map(|t| t.value()), seed),
            };
            if done.contains(&key) {
                skipped += 1;
            } else {
                todo.push((rep, c));
            }
        }
    }
    let data: Vec<Option<SweepSeedData>> = (0..cfg.reps)
        .map(|rep| todo.iter().any(|&(r, _)| r == rep).then(|| SweepSeedData::generate(&sc, rep_seed(cfg, rep))))
        .collect();
    let template = train_config(cfg, Objective::Ml, taus[0]);
    let sweep_path = cfg.out.join("sweep.jsonl");
    run_chunked(
        &todo,
        workers,
        |&(rep, cell)| {
            let d = data[rep].as_ref().expect("data generated for pending repetitions");
            let mut sweep = Vec::new();
            let recs = timed(cfg.record_timing, || match cell {
                Cell::Oracle => Ok(vec![MetricRecord::new(TASK, ORACLE, None, d.seed, "test", "avg_reward", bayes_oracle_reward(&d.test, &sc), None)?]),
                Cell::Train(o, t) => {
                    let c = run_cell(d, o, t, &template, &sc)?;
                    sweep.extend(sweep_records(&c));
                    cell_metrics(&c)
                }
            })?;
            Ok((sweep, recs))
        },
        |chunk| {
            let (sweep, recs): (Vec<Vec<SweepRecord>>, Vec<Vec<MetricRecord>>) = chunk.into_iter().unzip();
            write_jsonl(&sweep_path, &sweep.concat(), true)?;
            append_metrics(cfg, &recs.concat())
        },
    )?;
    Ok(SweepSummary { cells_run: todo.len(), cells_skipped: skipped })
}

/// Trains each configured objective once, at the first configured
/// temperature, on the data of repetition 0.
pub fn synth_train(cfg: &RunConfig, workers: usize) -> Result<Vec<MetricRecord>> {
    let mut single = cfg.clone();
    single.reps = 1;
    let first = cfg.tau.values()[0];
    single.tau = crate::config::TauGrid::List(vec![first]);
    synth_sweep(&single, workers)?;
    let seed = rep_seed(cfg, 0);
    let all: Vec<MetricRecord> = crate::io::read_jsonl(&metrics_path(cfg))?;
    Ok(all
        .into_iter()
        .filter(|r| r.task == TASK && r.seed == seed && (r.tau.is_none() || r.tau == Some(first)))
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundarySummary {
    pub resolution: usize,
    pub rule: Vec<GridCell>,
    pub classifier: Vec<GridCell>,
    /// Fraction of grid cells where each trained model agrees with the Bayes
    /// decision rule.
    pub agreement: Vec<(Objective, f64)>,
}

impl BoundarySummary {
    pub fn class_count(grid: &[GridCell], label: usize) -> usize {
        grid.iter().filter(|c| c.label == label).count()
    }
}

/// Prediction grids for the Bayes rule, the Bayes classifier and one model
/// per objective trained at the first configured temperature. Writes
/// `boundary_<name>.csv` files and `boundary_metrics.jsonl`.
pub fn synth_boundary(cfg: &RunConfig, workers: usize) -> Result<BoundarySummary> {
    let sc = synth_config(cfg);
    sc.validate()?;
    let res = cfg.grid_resolution;
    let rule = decision_boundary_grid(|x| bayes_rule(x, &sc), res);
    let classifier = decision_boundary_grid(|x| bayes_classifier_rule(x, &sc), res);
    write_grid_csv(&cfg.out.join("boundary_bayes_rule.csv"), &rule)?;
    write_grid_csv(&cfg.out.join("boundary_bayes_classifier.csv"), &classifier)?;
    let tau = cfg.tau.temperatures()?[0];
    let seed = rep_seed(cfg, 0);
    let data = SweepSeedData::generate(&sc, seed);
    let mut agreement = Vec::new();
    let mut recs = Vec::new();
    run_chunked(
        &cfg.objectives,
        workers,
        |&o| {
            let mut tc = train_config(cfg, o, tau);
            tc.seed = sqd_core::rng::derive_str(seed, "train");
            let m = train_mlp(&data.train, &data.valid, &tc, &sc)?;
            Ok((o, decision_boundary_grid(|x| m.model.predict(x), res)))
        },
        |chunk| {
            for (o, grid) in chunk {
                write_grid_csv(&cfg.out.join(format!("boundary_{}.csv", o.name())), &grid)?;
                let agree = grid.iter().zip(&rule).filter(|(a, b)| a.label == b.label).count() as f64 / grid.len() as f64;
                let t = (o != Objective::Ml).then(|| tau.value());
                recs.push(MetricRecord::new(TASK, o.name(), t, seed, "grid", "bayes_rule_agreement", agree, None)?);
                agreement.push((o, agree));
            }
            Ok(())
        },
    )?;
    write_jsonl(&cfg.out.join("boundary_metrics.jsonl"), &recs, false)?;
    Ok(BoundarySummary { resolution: res, rule, classifier, agreement })
}
