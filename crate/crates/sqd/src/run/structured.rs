use sqd_core::chain::{noisy_pair_corpus, ChainCrf, LabelSet, PairCorpusConfig};
use sqd_core::distributions::Temperature;
use sqd_core::linear::SgdConfig;
use sqd_core::rng::{derive, derive_str, rng_from_seed};
use sqd_core::tree::{synthetic_treebank, RootMode, TreeModel, TreebankConfig};
use sqd_core::Objective;

use super::{append_metrics, completed_cells, metrics_path, run_chunked, tau_label, timed};
use crate::checkpoint::{chain_checkpoint, tree_checkpoint};
use crate::config::RunConfig;
use crate::error::{HarnessError, Result};
use crate::io::{read_conll2003, read_treebank, Parsed, Tagged};
use crate::metrics::{CellKey, MetricRecord};

/// Train, dev and test corpora.
type Splits<T> = (Vec<T>, Vec<T>, Vec<T>);

/// Synthetic tagging corpus of `n` training sentences with `2n` dev and
/// `4n` test sentences.
pub fn synthetic_chain_splits(n: usize, seed: u64) -> Splits<Tagged> {
    let mut g = rng_from_seed(derive_str(seed, "corpus"));
    let cfg = |sentences| PairCorpusConfig { sentences, ..Default::default() };
    let train = noisy_pair_corpus(&cfg(n), &mut g);
    let dev = noisy_pair_corpus(&cfg(2 * n), &mut g);
    let test = noisy_pair_corpus(&cfg(4 * n), &mut g);
    (train, dev, test)
}

/// Synthetic treebank with the same split sizes as
/// [`synthetic_chain_splits`].
pub fn synthetic_tree_splits(n: usize, seed: u64) -> Splits<Parsed> {
    let mut g = rng_from_seed(derive_str(seed, "corpus"));
    let cfg = |sentences| TreebankConfig { sentences, ..Default::default() };
    let train = synthetic_treebank(&cfg(n), &mut g);
    let dev = synthetic_treebank(&cfg(2 * n), &mut g);
    let test = synthetic_treebank(&cfg(4 * n), &mut g);
    (train, dev, test)
}

fn sgd_config(cfg: &RunConfig, seed: u64) -> SgdConfig {
    let o = &cfg.optimizer;
    SgdConfig {
        learning_rate: o.learning_rate.unwrap_or(0.1),
        epochs: o.epochs.unwrap_or(15),
        l2: o.l2.unwrap_or(1e-5),
        decay: o.decay.unwrap_or(0.5),
        seed: derive_str(seed, "sgd"),
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StructuredSummary {
    pub cells_run: usize,
    pub cells_skipped: usize,
}

type Cell = (usize, Objective, Option<Temperature>);

fn plan(cfg: &RunConfig, task: &str) -> Result<(Vec<Cell>, usize)> {
    let taus = cfg.tau.temperatures()?;
    let done = completed_cells(&metrics_path(cfg), task)?;
    let mut todo = Vec::new();
    let mut skipped = 0;
    for rep in 0..cfg.reps {
        let seed = derive(cfg.seed, rep as u64);
        for &o in &cfg.objectives {
            let ts: Vec<Option<Temperature>> = if o == Objective::Ml { vec![None] } else { taus.iter().map(|&t| Some(t)).collect() };
            for t in ts {
                if done.contains(&CellKey::new(o.name(), t.map(|t| t.value()), seed)) {
                    skipped += 1;
                } else {
                    todo.push((rep, o, t));
                }
            }
        }
    }
    Ok((todo, skipped))
}

/// Corpora per repetition: the configured files for every repetition, or a
/// fresh synthetic corpus per repetition when no training file is given.
fn corpora<T, R, G>(cfg: &RunConfig, todo: &[Cell], read: R, generate: G) -> Result<Vec<Option<Splits<T>>>>
where
    T: Clone,
    R: Fn(&std::path::Path) -> Result<Vec<T>>,
    G: Fn(usize, u64) -> Splits<T>,
{
    let files = match &cfg.train {
        Some(train) => {
            let opt = |p: &Option<std::path::PathBuf>| p.as_deref().map(&read).transpose().map(Option::unwrap_or_default);
            Some((read(train)?, opt(&cfg.dev)?, opt(&cfg.test)?))
        }
        None => None,
    };
    Ok((0..cfg.reps)
        .map(|rep| {
            if !todo.iter().any(|c| c.0 == rep) {
                return None;
            }
            Some(match &files {
                Some(f) => f.clone(),
                None => generate(cfg.sentences, derive(cfg.seed, rep as u64)),
            })
        })
        .collect())
}

fn checkpoint_path(cfg: &RunConfig, task: &str, o: Objective, t: Option<f64>, seed: u64) -> std::path::PathBuf {
    cfg.out.join("checkpoints").join(format!("{task}_{}_{}_{seed}.ckpt", o.name(), tau_label(t)))
}

/// Trains the linear-chain CRF for every (objective, tau, repetition) cell
/// and records token accuracy, exact match and span F1 on dev and test.
pub fn chain_train(cfg: &RunConfig, workers: usize) -> Result<StructuredSummary> {
    const TASK: &str = "chain";
    let (todo, skipped) = plan(cfg, TASK)?;
    let data = corpora(cfg, &todo, read_conll2003, synthetic_chain_splits)?;
    run_chunked(
        &todo,
        workers,
        |&(rep, o, t)| {
            let seed = derive(cfg.seed, rep as u64);
            let (train, dev, test) = data[rep].as_ref().expect("corpus loaded");
            let tau = t.unwrap_or(Temperature::new(1.0)?);
            let tv = t.map(|t| t.value());
            timed(cfg.record_timing, || {
                if train.is_empty() {
                    return Err(HarnessError::Data("training corpus is empty".into()));
                }
                let mut crf = ChainCrf::new(LabelSet::from_sequences(train.iter().map(|s| s.1.as_slice())));
                let prepared = train.iter().map(|(x, y)| crf.prepare(x, Some(y))).collect::<sqd_core::Result<Vec<_>>>()?;
                let log = crf.train(&prepared, o, tau, &sgd_config(cfg, seed))?;
                let mut recs = Vec::new();
                if let Some(&l) = log.epoch_loss.last() {
                    recs.push(MetricRecord::new(TASK, o.name(), tv, seed, "train", "loss", l, Some(log.epoch_loss.len()))?);
                }
                for (split, corpus) in [("dev", dev), ("test", test)] {
                    if corpus.is_empty() {
                        continue;
                    }
                    let ev = corpus.iter().map(|(x, y)| crf.prepare_frozen(x, Some(y))).collect::<sqd_core::Result<Vec<_>>>()?;
                    let m = crf.evaluate(&ev)?;
                    for (name, v) in [("token_acc", m.token_accuracy()), ("exact_match", m.exact_match()), ("span_f1", m.span_f1())] {
                        recs.push(MetricRecord::new(TASK, o.name(), tv, seed, split, name, v, None)?);
                    }
                }
                chain_checkpoint(&crf).save(&checkpoint_path(cfg, TASK, o, tv, seed))?;
                Ok(recs)
            })
        },
        |chunk| append_metrics(cfg, &chunk.concat()),
    )?;
    Ok(StructuredSummary { cells_run: todo.len(), cells_skipped: skipped })
}

/// Trains the edge-factored dependency model for every cell and records
/// UAS and exact match on dev and test.
pub fn tree_train(cfg: &RunConfig, workers: usize) -> Result<StructuredSummary> {
    const TASK: &str = "tree";
    let (todo, skipped) = plan(cfg, TASK)?;
    let data = corpora(cfg, &todo, read_treebank, synthetic_tree_splits)?;
    let mode = if cfg.multi_root { RootMode::Multi } else { RootMode::Single };
    run_chunked(
        &todo,
        workers,
        |&(rep, o, t)| {
            let seed = derive(cfg.seed, rep as u64);
            let (train, dev, test) = data[rep].as_ref().expect("corpus loaded");
            let tau = t.unwrap_or(Temperature::new(1.0)?);
            let tv = t.map(|t| t.value());
            timed(cfg.record_timing, || {
                if train.is_empty() {
                    return Err(HarnessError::Data("training corpus is empty".into()));
                }
                let mut model = TreeModel::new(mode);
                let prepared = train.iter().map(|(f, h)| model.prepare(f, Some(h))).collect::<sqd_core::Result<Vec<_>>>()?;
                let log = model.train(&prepared, o, tau, &sgd_config(cfg, seed))?;
                let mut recs = Vec::new();
                if let Some(&l) = log.epoch_loss.last() {
                    recs.push(MetricRecord::new(TASK, o.name(), tv, seed, "train", "loss", l, Some(log.epoch_loss.len()))?);
                }
                for (split, corpus) in [("dev", dev), ("test", test)] {
                    if corpus.is_empty() {
                        continue;
                    }
                    let ev = corpus.iter().map(|(f, h)| model.prepare_frozen(f, Some(h))).collect::<sqd_core::Result<Vec<_>>>()?;
                    let m = model.evaluate(&ev)?;
                    for (name, v) in [("uas", m.uas()), ("exact_match", m.exact_match())] {
                        recs.push(MetricRecord::new(TASK, o.name(), tv, seed, split, name, v, None)?);
                    }
                }
                tree_checkpoint(&model).save(&checkpoint_path(cfg, TASK, o, tv, seed))?;
                Ok(recs)
            })
        },
        |chunk| append_metrics(cfg, &chunk.concat()),
    )?;
    Ok(StructuredSummary { cells_run: todo.len(), cells_skipped: skipped })
}
