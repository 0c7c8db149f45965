//! Aggregation of metric records across seeds.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use sqd_core::stats::{mean, std_dev};

use crate::error::{HarnessError, Result};
use crate::metrics::MetricRecord;

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub task: String,
    pub objective: String,
    pub tau: Option<f64>,
    pub split: String,
    pub metric: String,
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation; zero for a single seed.
    pub std: f64,
    pub best: bool,
}

/// Best temperature per (task, objective, metric), chosen on the
/// development split and reported on test.
#[derive(Clone, Debug, PartialEq)]
pub struct BestTau {
    pub task: String,
    pub objective: String,
    pub metric: String,
    pub tau: Option<f64>,
    pub dev_mean: f64,
    pub test_mean: Option<f64>,
    pub test_std: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub rows: Vec<ReportRow>,
    pub best: Vec<BestTau>,
}

fn is_dev(split: &str) -> bool {
    split == "dev" || split == "valid"
}

type Key = (String, String, String, Option<u64>, String);

pub fn aggregate(records: &[MetricRecord]) -> Result<Report> {
    if records.is_empty() {
        return Err(HarnessError::Data("no metric records to report".into()));
    }
    // Positive floats order like their bit patterns.
    let mut groups: BTreeMap<Key, Vec<f64>> = BTreeMap::new();
    for r in records {
        let key = (r.task.clone(), r.objective.clone(), r.metric.clone(), r.tau.map(f64::to_bits), r.split.clone());
        groups.entry(key).or_default().push(r.value);
    }
    let mut rows: Vec<ReportRow> = groups
        .iter()
        .map(|((task, objective, metric, tau, split), v)| ReportRow {
            task: task.clone(),
            objective: objective.clone(),
            tau: tau.map(f64::from_bits),
            split: split.clone(),
            metric: metric.clone(),
            n: v.len(),
            mean: mean(v),
            std: if v.len() > 1 { std_dev(v) } else { 0.0 },
            best: false,
        })
        .collect();

    let mut best = Vec::new();
    let mut chosen: BTreeMap<(String, String, String), (Option<u64>, f64)> = BTreeMap::new();
    for r in rows.iter().filter(|r| is_dev(&r.split)) {
        let k = (r.task.clone(), r.objective.clone(), r.metric.clone());
        let tau = r.tau.map(f64::to_bits);
        match chosen.get(&k) {
            Some(&(_, m)) if m >= r.mean => {}
            _ => {
                chosen.insert(k, (tau, r.mean));
            }
        }
    }
    for ((task, objective, metric), (tau, dev_mean)) in chosen {
        let test = rows
            .iter()
            .find(|r| r.task == task && r.objective == objective && r.metric == metric && r.split == "test" && r.tau.map(f64::to_bits) == tau)
            .map(|t| (t.mean, t.std));
        for r in rows.iter_mut() {
            if r.task == task && r.objective == objective && r.metric == metric && r.tau.map(f64::to_bits) == tau {
                r.best = true;
            }
        }
        let (test_mean, test_std) = (test.map(|t| t.0), test.map(|t| t.1));
        best.push(BestTau { task, objective, metric, tau: tau.map(f64::from_bits), dev_mean, test_mean, test_std });
    }
    Ok(Report { rows, best })
}

fn tau_str(t: Option<f64>) -> String {
    t.map_or_else(|| "-".into(), |v| v.to_string())
}

impl Report {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("task,objective,tau,split,metric,n,mean,std,best\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                r.task,
                r.objective,
                r.tau.map_or_else(String::new, |v| v.to_string()),
                r.split,
                r.metric,
                r.n,
                r.mean,
                r.std,
                r.best
            );
        }
        s
    }

    /// Fixed-width table; `*` marks rows at the dev-selected temperature.
    pub fn to_text(&self) -> String {
        let mut s = format!("{:<12} {:<7} {:>8} {:<6} {:<14} {:>3} {:>22}\n", "task", "obj", "tau", "split", "metric", "n", "mean ± std");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<12} {:<7} {:>8} {:<6} {:<14} {:>3} {:>10.4} ± {:<9.4}{}",
                r.task,
                r.objective,
                tau_str(r.tau),
                r.split,
                r.metric,
                r.n,
                r.mean,
                r.std,
                if r.best { " *" } else { "" }
            );
        }
        if !self.best.is_empty() {
            s.push_str("\nbest tau by dev, reported on test\n");
            for b in &self.best {
                let test = match (b.test_mean, b.test_std) {
                    (Some(m), Some(sd)) => format!("{m:.4} ± {sd:.4}"),
                    _ => "n/a".into(),
                };
                let _ = writeln!(s, "{} {} {}: tau {} dev {:.4} test {}", b.task, b.objective, b.metric, tau_str(b.tau), b.dev_mean, test);
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(obj: &str, tau: Option<f64>, seed: u64, split: &str, v: f64) -> MetricRecord {
        MetricRecord::new("synth", obj, tau, seed, split, "avg_reward", v, None).unwrap()
    }

    #[test]
    fn single_record() {
        let r = aggregate(&[rec("ml", None, 0, "test", 2.5)]).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!((r.rows[0].mean, r.rows[0].std), (2.5, 0.0));
        assert!(aggregate(&[]).is_err());
    }

    #[test]
    fn five_seed_fixture() {
        let v = [2.0, 4.0, 4.0, 4.0, 6.0];
        let recs: Vec<_> = v.iter().enumerate().map(|(i, &x)| rec("raml", Some(0.5), i as u64, "test", x)).collect();
        let r = aggregate(&recs).unwrap();
        // Squared deviations sum to 8; over n - 1 = 4 that is a variance of 2.
        assert_eq!(r.rows[0].mean, 4.0);
        assert!((r.rows[0].std - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn best_tau_is_chosen_on_dev_and_reported_on_test() {
        let recs = vec![
            rec("sqdml", Some(0.5), 0, "valid", 2.0),
            rec("sqdml", Some(0.5), 0, "test", 1.0),
            rec("sqdml", Some(1.0), 0, "valid", 3.0),
            rec("sqdml", Some(1.0), 0, "test", 0.5),
        ];
        let r = aggregate(&recs).unwrap();
        assert_eq!(r.best.len(), 1);
        assert_eq!(r.best[0].tau, Some(1.0));
        assert_eq!(r.best[0].test_mean, Some(0.5));
        assert_eq!(r.rows.iter().filter(|x| x.best).count(), 2);
        assert!(r.to_text().contains("tau 1 dev 3.0000 test 0.5000"));
        assert!(r.to_csv().lines().count() == 5);
    }
}
