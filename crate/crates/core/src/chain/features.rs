use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::linear::FeatureIndex;

/// Collapsed character shape: `Xx` for "Paris", `d` for "1999", `x-x` for
/// "well-known".
fn shape(word: &str) -> String {
    let mut out = String::new();
    for ch in word.chars() {
        let c = if ch.is_uppercase() {
            'X'
        } else if ch.is_lowercase() {
            'x'
        } else if ch.is_numeric() {
            'd'
        } else {
            ch
        };
        if !out.ends_with(c) {
            out.push(c);
        }
    }
    out
}

fn prefix(w: &str, n: usize) -> Option<&str> {
    w.char_indices().nth(n).map(|(i, _)| &w[..i]).or_else(|| (w.chars().count() == n).then_some(w))
}

fn suffix(w: &str, n: usize) -> Option<&str> {
    let count = w.chars().count();
    if count < n {
        return None;
    }
    w.char_indices().nth(count - n).map(|(i, _)| &w[i..])
}

/// Observation features of position `i`: bias, word, lowercased word,
/// prefixes and suffixes up to length 3, shape, capitalization and digit
/// flags, and the neighbouring words.
pub fn token_features(tokens: &[String], i: usize) -> Vec<String> {
    let w = tokens[i].as_str();
    let lower = w.to_lowercase();
    let mut f = Vec::with_capacity(16);
    f.push(String::from("bias"));
    f.push(format!("w={w}"));
    f.push(format!("lw={lower}"));
    for n in 1..=3 {
        if let Some(p) = prefix(&lower, n) {
            f.push(format!("p{n}={p}"));
        }
        if let Some(s) = suffix(&lower, n) {
            f.push(format!("s{n}={s}"));
        }
    }
    f.push(format!("shape={}", shape(w)));
    if w.chars().next().is_some_and(char::is_uppercase) {
        f.push(String::from("cap"));
    }
    if w.chars().any(|c| c.is_ascii_digit()) {
        f.push(String::from("digit"));
    }
    let prev = if i == 0 { "<S>".into() } else { tokens[i - 1].to_lowercase() };
    let next = tokens.get(i + 1).map_or_else(|| "</S>".into(), |t| t.to_lowercase());
    f.push(format!("pw={prev}"));
    f.push(format!("nw={next}"));
    f
}

/// Maps token sequences to observation-feature ids.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ChainFeaturizer {
    pub index: FeatureIndex,
}

impl ChainFeaturizer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Feature ids per position. New features are registered unless the
    /// index is frozen, in which case they are dropped.
    pub fn featurize(&mut self, tokens: &[String]) -> Vec<Vec<usize>> {
        (0..tokens.len())
            .map(|i| {
                token_features(tokens, i)
                    .iter()
                    .filter_map(|name| self.index.intern(name))
                    .collect()
            })
            .collect()
    }

    /// Like [`featurize`](Self::featurize) but never registers.
    pub fn featurize_frozen(&self, tokens: &[String]) -> Vec<Vec<usize>> {
        (0..tokens.len())
            .map(|i| {
                token_features(tokens, i)
                    .iter()
                    .filter_map(|name| self.index.get(name))
                    .collect()
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn templates() {
        let toks: Vec<String> = vec!["The".into(), "EU".into(), "1999".into()];
        let f = token_features(&toks, 1);
        for want in ["w=EU", "lw=eu", "p1=e", "p2=eu", "s2=eu", "shape=X", "cap", "pw=the", "nw=1999"] {
            assert!(f.iter().any(|x| x == want), "{want} missing from {f:?}");
        }
        assert!(!f.iter().any(|x| x.starts_with("p3=")));
        assert!(token_features(&toks, 2).iter().any(|x| x == "digit"));
        assert_eq!(shape("well-Known"), "x-Xx");
    }

    #[test]
    fn frozen_index_drops_unknown() {
        let mut fz = ChainFeaturizer::new();
        let a = fz.featurize(&["a".into()]);
        fz.index.freeze();
        let b = fz.featurize(&["b".into()]);
        assert!(b[0].len() < a[0].len());
        assert_eq!(fz.featurize_frozen(&["a".into()]), a);
    }
}
