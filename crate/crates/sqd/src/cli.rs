//! Command-line front end. Flags override values from `--config`.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{default_tau, parse_objectives, RunConfig, Task};
use crate::error::Result;
use crate::io::read_jsonl;
use crate::metrics::MetricRecord;
use crate::report::aggregate;
use crate::run;

#[derive(Debug, Parser)]
#[command(name = "sqd", version, about = "RAML and SQDML experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train each objective once on the synthetic task.
    SynthTrain(Common),
    /// Temperature sweep on the synthetic task.
    SynthSweep(Common),
    /// Decision-boundary grids on the synthetic task.
    SynthBoundary(Common),
    /// Linear-chain CRF training.
    CrfTrain(Common),
    /// Dependency tree model training.
    TreeTrain(Common),
    /// Candidate sets for sampled RAML and SQDML targets.
    SampleBuild(Common),
    /// Check the KL bound between the softmax Q-distribution and its
    /// approximation.
    BoundCheck(Common),
    /// Aggregate a metrics file into report.csv and report.txt.
    Report(ReportArgs),
}

#[derive(Debug, Default, Args)]
pub struct Common {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// `start:stop:step` or a comma list.
    #[arg(long)]
    pub tau: Option<String>,
    /// `ml`, `raml`, `sqdml`, a comma list or `all`.
    #[arg(long)]
    pub objective: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `token-acc`, `uas`, `sbleu`, `neg-hamming` or `matrix:<path>`.
    #[arg(long)]
    pub reward: Option<String>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub dev: Option<PathBuf>,
    #[arg(long)]
    pub test: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Defaults to `<out>/metrics.jsonl`.
    #[arg(long)]
    pub metrics: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

/// Config for `task`: the file if given, then flag overrides.
pub fn build_config(task: Task, c: &Common) -> Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(p) => {
            let mut cfg = RunConfig::load(p)?;
            if cfg.task != task {
                cfg.task = task;
            }
            cfg
        }
        None => RunConfig::new(task),
    };
    if let Some(t) = &c.tau {
        cfg.tau = t.parse()?;
    } else if c.config.is_none() {
        cfg.tau = default_tau(task);
    }
    if let Some(o) = &c.objective {
        cfg.objectives = parse_objectives(o)?;
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(o) = &c.out {
        cfg.out = o.clone();
    }
    if let Some(r) = &c.reward {
        cfg.reward = Some(r.parse()?);
    }
    if let Some(e) = c.epochs {
        cfg.optimizer.epochs = Some(e);
    }
    if let Some(w) = c.workers {
        cfg.workers = Some(w);
    }
    if let Some(r) = c.reps {
        cfg.reps = r;
    }
    for (dst, src) in [(&mut cfg.train, &c.train), (&mut cfg.dev, &c.dev), (&mut cfg.test, &c.test)] {
        if src.is_some() {
            dst.clone_from(src);
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn workers(c: &Common, cfg: &RunConfig) -> Result<usize> {
    let env = std::env::var("SQD_WORKERS").ok();
    run::resolve_workers(c.workers, env.as_deref(), cfg.workers)
}

/// Runs one command and returns a short summary for stdout.
pub fn execute(cli: &Cli) -> Result<String> {
    let mut msg = String::new();
    match &cli.command {
        Command::SynthTrain(c) => {
            let cfg = build_config(Task::Synth, c)?;
            for r in run::synth_train(&cfg, workers(c, &cfg)?)? {
                let _ = writeln!(msg, "{} tau={} {} {} = {:.6}", r.objective, tau(r.tau), r.split, r.metric, r.value);
            }
        }
        Command::SynthSweep(c) => {
            let cfg = build_config(Task::Synth, c)?;
            let s = run::synth_sweep(&cfg, workers(c, &cfg)?)?;
            let _ = writeln!(msg, "ran {} cells, skipped {} completed", s.cells_run, s.cells_skipped);
        }
        Command::SynthBoundary(c) => {
            let cfg = build_config(Task::Synth, c)?;
            let s = run::synth_boundary(&cfg, workers(c, &cfg)?)?;
            for (o, a) in &s.agreement {
                let _ = writeln!(msg, "{o}: agrees with the Bayes rule on {:.2}% of cells", 100.0 * a);
            }
        }
        Command::CrfTrain(c) => {
            let cfg = build_config(Task::Chain, c)?;
            let s = run::chain_train(&cfg, workers(c, &cfg)?)?;
            let _ = writeln!(msg, "ran {} cells, skipped {} completed", s.cells_run, s.cells_skipped);
        }
        Command::TreeTrain(c) => {
            let cfg = build_config(Task::Tree, c)?;
            let s = run::tree_train(&cfg, workers(c, &cfg)?)?;
            let _ = writeln!(msg, "ran {} cells, skipped {} completed", s.cells_run, s.cells_skipped);
        }
        Command::SampleBuild(c) => {
            let cfg = build_config(Task::SampleBuild, c)?;
            let s = run::sample_build(&cfg)?;
            let _ = writeln!(msg, "{} sources: {} RAML and {} SQDML candidates", s.sources, s.raml_candidates, s.sqdml_candidates);
        }
        Command::BoundCheck(c) => {
            let cfg = build_config(Task::BoundCheck, c)?;
            let s = run::bound_check(&cfg)?;
            let worst = s.rows.iter().map(|r| r.kl / r.bound).fold(0.0, f64::max);
            let _ = writeln!(msg, "{} checks hold; largest kl/bound ratio {worst:.4}", s.rows.len());
            let _ = writeln!(
                msg,
                "{} margin instances hold the log bound; {} exceed 1/(1 + exp(c b)) plus slack",
                s.margin_rows.len(),
                s.stated_violations
            );
        }
        Command::Report(a) => {
            let path = a.metrics.clone().unwrap_or_else(|| a.out.join("metrics.jsonl"));
            let recs: Vec<MetricRecord> = read_jsonl(&path)?;
            let r = aggregate(&recs)?;
            run::write_text(&a.out.join("report.csv"), &r.to_csv())?;
            let text = r.to_text();
            run::write_text(&a.out.join("report.txt"), &text)?;
            msg = text;
        }
    }
    Ok(msg)
}

fn tau(t: Option<f64>) -> String {
    t.map_or_else(|| "-".into(), |v| v.to_string())
}
