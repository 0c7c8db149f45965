//! `SQD-CKPT v1` text checkpoints: a header line naming the model kind,
//! `#key<TAB>value...` metadata lines, then one `feature<TAB>weight` line
//! per nonzero weight. Weights are printed in shortest round-trip form, so
//! a reload reproduces the model exactly.

use std::io::Write;
use std::path::Path;

use sqd_core::chain::{ChainCrf, LabelSet};
use sqd_core::tree::{RootMode, TreeModel};

use crate::error::{HarnessError, Result};

const MAGIC: &str = "SQD-CKPT v1";

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub kind: String,
    pub meta: Vec<(String, Vec<String>)>,
    pub weights: Vec<(String, f64)>,
}

impl Checkpoint {
    pub fn meta(&self, key: &str) -> Option<&[String]> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_slice())
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{MAGIC} {}\n", self.kind);
        for (k, v) in &self.meta {
            s.push('#');
            s.push_str(k);
            for x in v {
                s.push('\t');
                s.push_str(x);
            }
            s.push('\n');
        }
        for (name, w) in &self.weights {
            s.push_str(&format!("{name}\t{w}\n"));
        }
        s
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut it = text.lines().enumerate();
        let kind = it
            .next()
            .and_then(|(_, l)| l.strip_prefix(MAGIC))
            .map(|k| k.trim().to_string())
            .filter(|k| !k.is_empty())
            .ok_or_else(|| HarnessError::parse(path, 1, format!("missing `{MAGIC} <kind>` header")))?;
        let (mut meta, mut weights) = (Vec::new(), Vec::new());
        for (i, line) in it {
            if line.is_empty() {
                continue;
            }
            if let Some(m) = line.strip_prefix('#') {
                let mut parts = m.split('\t');
                let k = parts.next().unwrap_or("").to_string();
                meta.push((k, parts.map(String::from).collect()));
                continue;
            }
            let (name, w) = line
                .rsplit_once('\t')
                .ok_or_else(|| HarnessError::parse(path, i + 1, "expected `feature<TAB>weight`"))?;
            let w: f64 = w.parse().map_err(|_| HarnessError::parse(path, i + 1, format!("bad weight `{w}`")))?;
            if !w.is_finite() {
                return Err(HarnessError::parse(path, i + 1, "weight is not finite"));
            }
            weights.push((name.to_string(), w));
        }
        Ok(Checkpoint { kind, meta, weights })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        }
        let mut f = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
        f.write_all(self.to_text().as_bytes()).map_err(|e| HarnessError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::parse(&text, path)
    }
}

pub fn chain_checkpoint(crf: &ChainCrf) -> Checkpoint {
    Checkpoint {
        kind: "chain_crf".into(),
        meta: vec![("labels".into(), crf.labels.names().to_vec())],
        weights: crf.named_weights(),
    }
}

pub fn chain_from_checkpoint(c: &Checkpoint) -> Result<ChainCrf> {
    if c.kind != "chain_crf" {
        return Err(HarnessError::Data(format!("expected a chain_crf checkpoint, got {}", c.kind)));
    }
    let labels = c.meta("labels").ok_or_else(|| HarnessError::Data("checkpoint has no #labels line".into()))?;
    let labels = LabelSet::new(labels.to_vec())?;
    Ok(ChainCrf::from_named_weights(labels, c.weights.iter().map(|(n, w)| (n.as_str(), *w)))?)
}

pub fn tree_checkpoint(model: &TreeModel) -> Checkpoint {
    let root = match model.root_mode {
        RootMode::Single => "single",
        RootMode::Multi => "multi",
    };
    Checkpoint {
        kind: "tree_crf".into(),
        meta: vec![("root".into(), vec![root.into()])],
        weights: model.named_weights(),
    }
}

pub fn tree_from_checkpoint(c: &Checkpoint) -> Result<TreeModel> {
    if c.kind != "tree_crf" {
        return Err(HarnessError::Data(format!("expected a tree_crf checkpoint, got {}", c.kind)));
    }
    let mode = match c.meta("root").and_then(|v| v.first()).map(String::as_str) {
        None | Some("single") => RootMode::Single,
        Some("multi") => RootMode::Multi,
        Some(o) => return Err(HarnessError::Data(format!("unknown root mode `{o}`"))),
    };
    Ok(TreeModel::from_named_weights(mode, c.weights.iter().map(|(n, w)| (n.as_str(), *w)))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let c = Checkpoint {
            kind: "chain_crf".into(),
            meta: vec![("labels".into(), vec!["O".into(), "B-PER".into()])],
            weights: vec![("T|O|O".into(), 0.1 + 0.2), ("E|O|w=a|b".into(), -1e-300)],
        };
        let p = Path::new("x");
        assert_eq!(Checkpoint::parse(&c.to_text(), p).unwrap(), c);
        assert!(c.to_text().starts_with("SQD-CKPT v1 chain_crf\n"));
        assert!(Checkpoint::parse("garbage\n", p).is_err());
        assert!(matches!(Checkpoint::parse("SQD-CKPT v1 tree_crf\nf\tnan\n", p), Err(HarnessError::Parse { line: 2, .. })));
    }
}
