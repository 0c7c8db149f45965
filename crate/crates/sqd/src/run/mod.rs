//! Task orchestration. Every task writes its artifacts under `cfg.out`.
//!
//! Multi-cell tasks run their cells in chunks of `workers` on a thread pool
//! and write each chunk's records in plan order, so output files do not
//! depend on the worker count. Completed cells found in an existing metrics
//! file are skipped, which makes interrupted runs resumable.

mod bounds;
mod sample;
mod structured;
mod synth;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

pub use bounds::{bound_check, random_instance, BoundRow, BoundSummary, MarginRow, BOUND_RS, SMALL_TAU};
pub(crate) use bounds::write_text;
pub use sample::{sample_build, SampleSummary};
pub use structured::{chain_train, synthetic_chain_splits, synthetic_tree_splits, tree_train, StructuredSummary};
pub use synth::{synth_boundary, synth_config, synth_sweep, synth_train, train_config, BoundarySummary, SweepSummary};

use crate::config::RunConfig;
use crate::error::{HarnessError, Result};
use crate::io::{read_jsonl, write_jsonl};
use crate::metrics::{CellKey, MetricRecord};

/// Worker count: explicit flag, then `SQD_WORKERS`, then the config file,
/// then the number of available cores.
pub fn resolve_workers(flag: Option<usize>, env: Option<&str>, cfg: Option<usize>) -> Result<usize> {
    if let Some(w) = flag {
        return nonzero(w);
    }
    if let Some(e) = env.filter(|e| !e.trim().is_empty()) {
        let w: usize = e.trim().parse().map_err(|_| HarnessError::Config(format!("SQD_WORKERS must be a positive integer, got `{e}`")))?;
        return nonzero(w);
    }
    if let Some(w) = cfg {
        return nonzero(w);
    }
    Ok(std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn nonzero(w: usize) -> Result<usize> {
    if w == 0 {
        return Err(HarnessError::Config("worker count must be at least 1".into()));
    }
    Ok(w)
}

pub(crate) fn metrics_path(cfg: &RunConfig) -> PathBuf {
    cfg.out.join("metrics.jsonl")
}

/// Cells already present in a metrics file for `task`.
pub(crate) fn completed_cells(path: &Path, task: &str) -> Result<BTreeSet<CellKey>> {
    if !path.exists() {
        return Ok(BTreeSet::new());
    }
    Ok(read_jsonl::<MetricRecord>(path)?.into_iter().filter(|r| r.task == task).map(|r| r.cell_key()).collect())
}

/// Runs `f` over `cells` on `workers` threads, handing each chunk's outputs
/// to `sink` in input order.
pub(crate) fn run_chunked<C, T, F, S>(cells: &[C], workers: usize, f: F, mut sink: S) -> Result<()>
where
    C: Sync,
    T: Send,
    F: Fn(&C) -> Result<T> + Sync,
    S: FnMut(Vec<T>) -> Result<()>,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Config(format!("cannot start {workers} workers: {e}")))?;
    for chunk in cells.chunks(workers.max(1)) {
        let out: Vec<Result<T>> = pool.install(|| chunk.par_iter().map(&f).collect());
        sink(out.into_iter().collect::<Result<Vec<T>>>()?)?;
    }
    Ok(())
}

/// Stamps wall time on a cell's records when timing was requested.
pub(crate) fn timed<F: FnOnce() -> Result<Vec<MetricRecord>>>(record_timing: bool, f: F) -> Result<Vec<MetricRecord>> {
    let t0 = Instant::now();
    let mut recs = f()?;
    if record_timing {
        let ms = t0.elapsed().as_millis() as u64;
        recs.iter_mut().for_each(|r| r.wall_ms = ms);
    }
    Ok(recs)
}

pub(crate) fn append_metrics(cfg: &RunConfig, recs: &[MetricRecord]) -> Result<()> {
    write_jsonl(&metrics_path(cfg), recs, true)
}

pub(crate) fn tau_label(t: Option<f64>) -> String {
    t.map_or_else(|| "na".into(), |v| v.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worker_precedence() {
        assert_eq!(resolve_workers(Some(3), Some("5"), Some(7)).unwrap(), 3);
        assert_eq!(resolve_workers(None, Some("5"), Some(7)).unwrap(), 5);
        assert_eq!(resolve_workers(None, None, Some(7)).unwrap(), 7);
        assert!(resolve_workers(None, None, None).unwrap() >= 1);
        assert!(resolve_workers(None, Some("x"), None).is_err());
        assert!(resolve_workers(Some(0), None, None).is_err());
    }

    #[test]
    fn chunked_output_keeps_order() {
        let cells: Vec<u32> = (0..10).collect();
        let mut seen = Vec::new();
        run_chunked(&cells, 3, |&c| Ok(c * 2), |v| {
            seen.extend(v);
            Ok(())
        })
        .unwrap();
        assert_eq!(seen, (0..10).map(|c| c * 2).collect::<Vec<_>>());
    }
}
