//! Flat `key = value` run configuration with `[task]`, `[optimizer]` and
//! `[sampling]` sections.
//!
//! ```text
//! [task]
//! task = synth
//! objective = all
//! tau = 0.1:3.0:0.1
//! seed = 7
//!
//! [optimizer]
//! learning_rate = 0.1
//! ```
//!
//! `#` starts a comment. Optimizer keys left unset fall back to the
//! defaults of the task being run.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sqd_core::distributions::Temperature;
use sqd_core::Objective;

use crate::error::{HarnessError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Synth,
    Chain,
    Tree,
    SampleBuild,
    BoundCheck,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Synth => "synth",
            Task::Chain => "chain",
            Task::Tree => "tree",
            Task::SampleBuild => "sample-build",
            Task::BoundCheck => "bound-check",
        }
    }
}

impl FromStr for Task {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        [Task::Synth, Task::Chain, Task::Tree, Task::SampleBuild, Task::BoundCheck]
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| HarnessError::Config(format!("unknown task `{s}`")))
    }
}

/// `start:stop:step` (inclusive) or a comma-separated list.
#[derive(Clone, Debug, PartialEq)]
pub enum TauGrid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl TauGrid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            TauGrid::List(v) => v.clone(),
            TauGrid::Range { start, stop, step } => {
                let n = ((stop - start) / step + 1e-9).floor() as usize;
                // Rounding keeps 0.1 * 3 printing as 0.3.
                (0..=n).map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9).collect()
            }
        }
    }

    pub fn temperatures(&self) -> Result<Vec<Temperature>> {
        self.values().into_iter().map(|t| Temperature::new(t).map_err(HarnessError::from)).collect()
    }
}

impl FromStr for TauGrid {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        let num = |x: &str| -> Result<f64> {
            let v: f64 = x.trim().parse().map_err(|_| HarnessError::Config(format!("bad temperature `{x}`")))?;
            if !(v > 0.0 && v.is_finite()) {
                return Err(HarnessError::Config(format!("temperature must be positive, got {v}")));
            }
            Ok(v)
        };
        let parts: Vec<&str> = s.split(':').collect();
        match parts.len() {
            1 => Ok(TauGrid::List(s.split(',').map(num).collect::<Result<_>>()?)),
            3 => {
                let (start, stop, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
                if stop < start {
                    return Err(HarnessError::Config(format!("empty temperature range `{s}`")));
                }
                Ok(TauGrid::Range { start, stop, step })
            }
            _ => Err(HarnessError::Config(format!("bad temperature grid `{s}`"))),
        }
    }
}

impl fmt::Display for TauGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TauGrid::List(v) => {
                let s: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                f.write_str(&s.join(","))
            }
            TauGrid::Range { start, stop, step } => write!(f, "{start}:{stop}:{step}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RewardSpec {
    TokenAccuracy,
    Uas,
    SentenceBleu,
    NegHamming,
    Matrix(PathBuf),
}

impl FromStr for RewardSpec {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "token-acc" => RewardSpec::TokenAccuracy,
            "uas" => RewardSpec::Uas,
            "sbleu" => RewardSpec::SentenceBleu,
            "neg-hamming" => RewardSpec::NegHamming,
            _ => match s.strip_prefix("matrix:") {
                Some(p) if !p.is_empty() => RewardSpec::Matrix(PathBuf::from(p)),
                _ => return Err(HarnessError::Config(format!("unknown reward `{s}`"))),
            },
        })
    }
}

impl fmt::Display for RewardSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RewardSpec::TokenAccuracy => f.write_str("token-acc"),
            RewardSpec::Uas => f.write_str("uas"),
            RewardSpec::SentenceBleu => f.write_str("sbleu"),
            RewardSpec::NegHamming => f.write_str("neg-hamming"),
            RewardSpec::Matrix(p) => write!(f, "matrix:{}", p.display()),
        }
    }
}

/// Objectives to run: one of them or `all`.
pub fn parse_objectives(s: &str) -> Result<Vec<Objective>> {
    if s == "all" {
        return Ok(Objective::ALL.to_vec());
    }
    s.split(',')
        .map(|o| Objective::parse(o.trim()).ok_or_else(|| HarnessError::Config(format!("unknown objective `{o}`"))))
        .collect()
}

fn objectives_string(o: &[Objective]) -> String {
    if o == Objective::ALL {
        return "all".into();
    }
    o.iter().map(|x| x.name()).collect::<Vec<_>>().join(",")
}

/// Temperatures used when none are configured: the bound-check grid for
/// `bound-check`, `1` otherwise.
pub fn default_tau(task: Task) -> TauGrid {
    match task {
        Task::BoundCheck => TauGrid::List(vec![0.05, 0.1, 1.0, 10.0, 100.0]),
        _ => TauGrid::List(vec![1.0]),
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct OptimizerConfig {
    pub learning_rate: Option<f64>,
    pub momentum: Option<f64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub patience: Option<usize>,
    pub l2: Option<f64>,
    pub decay: Option<f64>,
    pub init_range: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Proposal {
    Ngram,
    Hamming,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplingConfig {
    /// `ngram` replacement or `hamming` stratified sampling.
    pub proposal: Proposal,
    pub hamming_rescale: bool,
    pub ngram_max: usize,
    pub exclude_original: bool,
    pub dedup: bool,
    pub raml_size: usize,
    pub sqdml_size: usize,
    pub raml_batch: usize,
    pub sqdml_batch: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            proposal: Proposal::Ngram,
            hamming_rescale: false,
            ngram_max: 4,
            exclude_original: false,
            dedup: false,
            raml_size: 100,
            sqdml_size: 500,
            raml_batch: 10,
            sqdml_batch: 50,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub task: Task,
    pub objectives: Vec<Objective>,
    pub tau: TauGrid,
    pub reward: Option<RewardSpec>,
    pub train: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    pub reps: usize,
    pub workers: Option<usize>,
    pub multi_root: bool,
    pub record_timing: bool,
    /// Synthetic corpus sizes, also used when no data files are given.
    pub n_inputs: usize,
    pub replicates: usize,
    pub n_valid: usize,
    pub n_test: usize,
    pub grid_resolution: usize,
    pub sentences: usize,
    /// Random instances drawn by `bound-check`.
    pub instances: usize,
    pub optimizer: OptimizerConfig,
    pub sampling: SamplingConfig,
}

impl RunConfig {
    pub fn new(task: Task) -> Self {
        RunConfig {
            task,
            objectives: Objective::ALL.to_vec(),
            tau: default_tau(task),
            reward: None,
            train: None,
            dev: None,
            test: None,
            out: PathBuf::from("out"),
            seed: 0,
            reps: 1,
            workers: None,
            multi_root: false,
            record_timing: false,
            n_inputs: 20_000,
            replicates: 10,
            n_valid: 20_000,
            n_test: 100_000,
            grid_resolution: 200,
            sentences: 500,
            instances: 1000,
            optimizer: OptimizerConfig::default(),
            sampling: SamplingConfig::default(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            HarnessError::Config(m) => HarnessError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::new(Task::Synth);
        let mut section = String::new();
        let mut tau_set = false;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |m: String| HarnessError::Config(format!("line {}: {m}", i + 1));
            if let Some(s) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                if !["task", "optimizer", "sampling"].contains(&s) {
                    return Err(err(format!("unknown section [{s}]")));
                }
                section = s.to_string();
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            if section.is_empty() {
                return Err(err("key outside of a section".into()));
            }
            cfg.set(&section, k.trim(), v.trim()).map_err(|e| match e {
                HarnessError::Config(m) => err(m),
                other => other,
            })?;
            tau_set |= section == "task" && k.trim() == "tau";
        }
        if !tau_set {
            cfg.tau = default_tau(cfg.task);
        }
        Ok(cfg)
    }

    /// Sets one key; `section` is `task`, `optimizer` or `sampling`.
    pub fn set(&mut self, section: &str, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| HarnessError::Config(format!("bad value `{v}` for `{key}`")))
        }
        fn flag(key: &str, v: &str) -> Result<bool> {
            match v {
                "true" => Ok(true),
                "false" => Ok(false),
                _ => Err(HarnessError::Config(format!("`{key}` must be true or false"))),
            }
        }
        let o = &mut self.optimizer;
        let s = &mut self.sampling;
        match (section, key) {
            ("task", "task") => self.task = value.parse()?,
            ("task", "objective") => self.objectives = parse_objectives(value)?,
            ("task", "tau") => self.tau = value.parse()?,
            ("task", "reward") => self.reward = Some(value.parse()?),
            ("task", "train") => self.train = Some(value.into()),
            ("task", "dev") => self.dev = Some(value.into()),
            ("task", "test") => self.test = Some(value.into()),
            ("task", "out") => self.out = value.into(),
            ("task", "seed") => self.seed = num(key, value)?,
            ("task", "reps") => self.reps = num(key, value)?,
            ("task", "workers") => self.workers = Some(num(key, value)?),
            ("task", "root") => {
                self.multi_root = match value {
                    "single" => false,
                    "multi" => true,
                    _ => return Err(HarnessError::Config("root must be single or multi".into())),
                }
            }
            ("task", "record_timing") => self.record_timing = flag(key, value)?,
            ("task", "n_inputs") => self.n_inputs = num(key, value)?,
            ("task", "replicates") => self.replicates = num(key, value)?,
            ("task", "n_valid") => self.n_valid = num(key, value)?,
            ("task", "n_test") => self.n_test = num(key, value)?,
            ("task", "grid_resolution") => self.grid_resolution = num(key, value)?,
            ("task", "sentences") => self.sentences = num(key, value)?,
            ("task", "instances") => self.instances = num(key, value)?,
            ("optimizer", "learning_rate") => o.learning_rate = Some(num(key, value)?),
            ("optimizer", "momentum") => o.momentum = Some(num(key, value)?),
            ("optimizer", "epochs") => o.epochs = Some(num(key, value)?),
            ("optimizer", "batch_size") => o.batch_size = Some(num(key, value)?),
            ("optimizer", "patience") => o.patience = Some(num(key, value)?),
            ("optimizer", "l2") => o.l2 = Some(num(key, value)?),
            ("optimizer", "decay") => o.decay = Some(num(key, value)?),
            ("optimizer", "init_range") => o.init_range = Some(num(key, value)?),
            ("sampling", "proposal") => {
                s.proposal = match value {
                    "ngram" => Proposal::Ngram,
                    "hamming" => Proposal::Hamming,
                    _ => return Err(HarnessError::Config("proposal must be ngram or hamming".into())),
                }
            }
            ("sampling", "hamming_rescale") => s.hamming_rescale = flag(key, value)?,
            ("sampling", "ngram_max") => s.ngram_max = num(key, value)?,
            ("sampling", "exclude_original") => s.exclude_original = flag(key, value)?,
            ("sampling", "dedup") => s.dedup = flag(key, value)?,
            ("sampling", "raml_size") => s.raml_size = num(key, value)?,
            ("sampling", "sqdml_size") => s.sqdml_size = num(key, value)?,
            ("sampling", "raml_batch") => s.raml_batch = num(key, value)?,
            ("sampling", "sqdml_batch") => s.sqdml_batch = num(key, value)?,
            _ => return Err(HarnessError::Config(format!("unknown key `{key}` in [{section}]"))),
        }
        Ok(())
    }

    /// Serializes every field; [`RunConfig::parse`] reads it back unchanged.
    pub fn to_text(&self) -> String {
        let mut t = String::from("[task]\n");
        let kv = |t: &mut String, k: &str, v: &dyn fmt::Display| {
            let _ = writeln!(t, "{k} = {v}");
        };
        kv(&mut t, "task", &self.task.name());
        kv(&mut t, "objective", &objectives_string(&self.objectives));
        kv(&mut t, "tau", &self.tau);
        if let Some(r) = &self.reward {
            kv(&mut t, "reward", r);
        }
        for (k, p) in [("train", &self.train), ("dev", &self.dev), ("test", &self.test)] {
            if let Some(p) = p {
                kv(&mut t, k, &p.display());
            }
        }
        kv(&mut t, "out", &self.out.display());
        kv(&mut t, "seed", &self.seed);
        kv(&mut t, "reps", &self.reps);
        if let Some(w) = self.workers {
            kv(&mut t, "workers", &w);
        }
        kv(&mut t, "root", &if self.multi_root { "multi" } else { "single" });
        kv(&mut t, "record_timing", &self.record_timing);
        kv(&mut t, "n_inputs", &self.n_inputs);
        kv(&mut t, "replicates", &self.replicates);
        kv(&mut t, "n_valid", &self.n_valid);
        kv(&mut t, "n_test", &self.n_test);
        kv(&mut t, "grid_resolution", &self.grid_resolution);
        kv(&mut t, "sentences", &self.sentences);
        kv(&mut t, "instances", &self.instances);
        t.push_str("\n[optimizer]\n");
        let o = &self.optimizer;
        let opt: [(&str, Option<&dyn fmt::Display>); 8] = [
            ("learning_rate", o.learning_rate.as_ref().map(|v| v as _)),
            ("momentum", o.momentum.as_ref().map(|v| v as _)),
            ("epochs", o.epochs.as_ref().map(|v| v as _)),
            ("batch_size", o.batch_size.as_ref().map(|v| v as _)),
            ("patience", o.patience.as_ref().map(|v| v as _)),
            ("l2", o.l2.as_ref().map(|v| v as _)),
            ("decay", o.decay.as_ref().map(|v| v as _)),
            ("init_range", o.init_range.as_ref().map(|v| v as _)),
        ];
        for (k, v) in opt {
            if let Some(v) = v {
                kv(&mut t, k, v);
            }
        }
        t.push_str("\n[sampling]\n");
        let s = &self.sampling;
        kv(&mut t, "proposal", &match s.proposal {
            Proposal::Ngram => "ngram",
            Proposal::Hamming => "hamming",
        });
        kv(&mut t, "hamming_rescale", &s.hamming_rescale);
        kv(&mut t, "ngram_max", &s.ngram_max);
        kv(&mut t, "exclude_original", &s.exclude_original);
        kv(&mut t, "dedup", &s.dedup);
        kv(&mut t, "raml_size", &s.raml_size);
        kv(&mut t, "sqdml_size", &s.sqdml_size);
        kv(&mut t, "raml_batch", &s.raml_batch);
        kv(&mut t, "sqdml_batch", &s.sqdml_batch);
        t
    }

    /// Checks value ranges and that every referenced file exists.
    pub fn validate(&self) -> Result<()> {
        self.tau.temperatures()?;
        if self.objectives.is_empty() {
            return Err(HarnessError::Config("no objective selected".into()));
        }
        if self.reps == 0 {
            return Err(HarnessError::Config("reps must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(HarnessError::Config("workers must be at least 1".into()));
        }
        let mut paths: Vec<&PathBuf> = [&self.train, &self.dev, &self.test].into_iter().flatten().collect();
        if let Some(RewardSpec::Matrix(p)) = &self.reward {
            paths.push(p);
        }
        for p in paths {
            if !p.exists() {
                return Err(HarnessError::Config(format!("file not found: {}", p.display())));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_syntax() {
        let g: TauGrid = "0.1:3.0:0.1".parse().unwrap();
        let v = g.values();
        assert_eq!(v.len(), 30);
        assert_eq!(v[2], 0.3);
        assert_eq!(*v.last().unwrap(), 3.0);
        assert_eq!("0.5, 1,1e4".parse::<TauGrid>().unwrap().values(), vec![0.5, 1.0, 1e4]);
        assert!("0:1:0.1".parse::<TauGrid>().is_err());
        assert!("1:2".parse::<TauGrid>().is_err());
    }

    #[test]
    fn round_trip() {
        let text = "[task]\ntask = tree\nobjective = ml,raml\ntau = 0.5:2:0.5\nreward = matrix:r.txt\nseed = 3\nroot = multi\n\n[optimizer]\nepochs = 4 # short\nl2 = 0.001\n\n[sampling]\nhamming_rescale = true\n";
        let a = RunConfig::parse(text).unwrap();
        assert_eq!(a.task, Task::Tree);
        assert_eq!(a.optimizer.epochs, Some(4));
        assert!(a.multi_root && a.sampling.hamming_rescale);
        let b = RunConfig::parse(&a.to_text()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = RunConfig::parse("[task]\nseed = 1\nbogus = 2\n").unwrap_err();
        assert!(e.to_string().contains("line 3"), "{e}");
        assert_eq!(e.exit_code(), 2);
        assert!(RunConfig::parse("seed = 1").is_err());
        assert!(RunConfig::parse("[task]\ntau = -1").is_err());
    }

    #[test]
    fn missing_files_fail_validation() {
        let mut c = RunConfig::new(Task::Chain);
        c.train = Some("/nonexistent/train.txt".into());
        assert_eq!(c.validate().unwrap_err().exit_code(), 2);
    }
}
