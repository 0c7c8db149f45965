//! Corpus readers and writers, plot-ready CSV and JSON-lines helpers.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sqd_core::chain::iob1_to_bio;
use sqd_core::synthetic::GridCell;

use crate::error::{HarnessError, Result};

/// A tagged sentence: tokens and one tag per token.
pub type Tagged = (Vec<String>, Vec<String>);
/// A parsed sentence: forms and 1-based heads, `0` for the root.
pub type Parsed = (Vec<String>, Vec<usize>);

fn lines(path: &Path) -> Result<impl Iterator<Item = (usize, Result<String>)> + '_> {
    let f = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    Ok(BufReader::new(f)
        .lines()
        .enumerate()
        .map(move |(i, l)| (i + 1, l.map_err(|e| HarnessError::io(path, e)))))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| HarnessError::io(path, e))?))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| HarnessError::io(path, e))
}

/// CoNLL 2003 columns: token first, tag last, blank lines between sentences
/// and `-DOCSTART-` lines skipped. IOB1 tags are rewritten to BIO.
pub fn read_conll2003(path: &Path) -> Result<Vec<Tagged>> {
    let mut out = Vec::new();
    let (mut toks, mut tags) = (Vec::new(), Vec::new());
    let mut flush = |toks: &mut Vec<String>, tags: &mut Vec<String>| {
        if !toks.is_empty() {
            out.push((std::mem::take(toks), iob1_to_bio(&std::mem::take(tags))));
        }
    };
    for (n, line) in lines(path)? {
        let line = line?;
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.is_empty() {
            flush(&mut toks, &mut tags);
            continue;
        }
        if cols[0] == "-DOCSTART-" {
            continue;
        }
        if cols.len() < 2 {
            return Err(HarnessError::parse(path, n, "expected a token and a tag"));
        }
        toks.push(cols[0].to_string());
        tags.push(cols[cols.len() - 1].to_string());
    }
    flush(&mut toks, &mut tags);
    Ok(out)
}

pub fn write_conll(path: &Path, data: &[Tagged]) -> Result<()> {
    let mut w = create(path)?;
    for (toks, tags) in data {
        for (t, g) in toks.iter().zip(tags) {
            writeln!(w, "{t} {g}").map_err(|e| HarnessError::io(path, e))?;
        }
        writeln!(w).map_err(|e| HarnessError::io(path, e))?;
    }
    finish(w, path)
}

/// Dependency trees, either `index<TAB>form<TAB>head` or CoNLL-X (id, form
/// and head in columns 1, 2 and 7). Lines starting with `#` are skipped.
pub fn read_treebank(path: &Path) -> Result<Vec<Parsed>> {
    let mut out = Vec::new();
    let (mut forms, mut heads) = (Vec::new(), Vec::new());
    for (n, line) in lines(path)? {
        let line = line?;
        if line.trim().is_empty() {
            if !forms.is_empty() {
                out.push((std::mem::take(&mut forms), std::mem::take(&mut heads)));
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let head_col = match cols.len() {
            3 => 2,
            c if c >= 7 => 6,
            c => return Err(HarnessError::parse(path, n, format!("expected 3 or at least 7 tab-separated columns, got {c}"))),
        };
        let idx: usize = cols[0].parse().map_err(|_| HarnessError::parse(path, n, format!("bad token index `{}`", cols[0])))?;
        if idx != forms.len() + 1 {
            return Err(HarnessError::parse(path, n, format!("expected token index {}, got {idx}", forms.len() + 1)));
        }
        let head: usize = cols[head_col]
            .parse()
            .map_err(|_| HarnessError::parse(path, n, format!("bad head `{}`", cols[head_col])))?;
        forms.push(cols[1].to_string());
        heads.push(head);
    }
    if !forms.is_empty() {
        out.push((forms, heads));
    }
    for (i, (f, h)) in out.iter().enumerate() {
        if let Some(&bad) = h.iter().find(|&&x| x > f.len()) {
            return Err(HarnessError::Data(format!("{}: sentence {}: head {bad} out of range", path.display(), i + 1)));
        }
    }
    Ok(out)
}

pub fn write_treebank(path: &Path, data: &[Parsed]) -> Result<()> {
    let mut w = create(path)?;
    for (forms, heads) in data {
        for (i, (f, h)) in forms.iter().zip(heads).enumerate() {
            writeln!(w, "{}\t{f}\t{h}", i + 1).map_err(|e| HarnessError::io(path, e))?;
        }
        writeln!(w).map_err(|e| HarnessError::io(path, e))?;
    }
    finish(w, path)
}

/// Reference sentences grouped per source. Without blank lines every line is
/// its own group; otherwise blank lines separate groups.
pub fn read_references(path: &Path) -> Result<Vec<Vec<Vec<String>>>> {
    let all: Vec<String> = lines(path)?.map(|(_, l)| l).collect::<Result<_>>()?;
    let end = all.iter().rposition(|l| !l.trim().is_empty()).map_or(0, |i| i + 1);
    let body = &all[..end];
    let tok = |l: &String| l.split_whitespace().map(String::from).collect::<Vec<_>>();
    let groups: Vec<Vec<Vec<String>>> = if body.iter().any(|l| l.trim().is_empty()) {
        body.split(|l| l.trim().is_empty()).filter(|g| !g.is_empty()).map(|g| g.iter().map(tok).collect()).collect()
    } else {
        body.iter().map(|l| vec![tok(l)]).collect()
    };
    if groups.is_empty() {
        return Err(HarnessError::Data(format!("{}: no references", path.display())));
    }
    Ok(groups)
}

pub fn write_grid_csv(path: &Path, cells: &[GridCell]) -> Result<()> {
    let mut w = create(path)?;
    let e = |e| HarnessError::io(path, e);
    writeln!(w, "x1,x2,label").map_err(e)?;
    for c in cells {
        writeln!(w, "{},{},{}", c.x1, c.x2, c.label).map_err(e)?;
    }
    finish(w, path)
}

/// Writes records as JSON lines, appending when `append` is set.
pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T], append: bool) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    let f = OpenOptions::new()
        .create(true)
        .write(true)
        .append(append)
        .truncate(!append)
        .open(path)
        .map_err(|e| HarnessError::io(path, e))?;
    let mut w = BufWriter::new(f);
    for r in records {
        let s = serde_json::to_string(r).map_err(|e| HarnessError::Data(e.to_string()))?;
        writeln!(w, "{s}").map_err(|e| HarnessError::io(path, e))?;
    }
    finish(w, path)
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (n, line) in lines(path)? {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| HarnessError::parse(path, n, e.to_string()))?);
    }
    Ok(out)
}

/// One line of a candidate dump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub source_index: usize,
    pub provenance: String,
    pub tokens: Vec<String>,
    pub reward: f64,
    pub weight: f64,
}

/// One line of a synthetic sweep dump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub objective: String,
    pub tau: Option<f64>,
    pub seed: u64,
    pub split: String,
    pub avg_reward: f64,
    pub epochs_ran: usize,
}
