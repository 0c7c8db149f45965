use alloc::vec::Vec;

use rand::Rng as _;

use super::TokenSequence;
use crate::rng::Rng;
use crate::{Error, Result};

/// Settings for uniform n-gram replacement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NgramConfig {
    /// Largest replaced n-gram; `n` is uniform in `1..=n_max`.
    pub n_max: usize,
    /// Never draw the token already at a position.
    pub exclude_original: bool,
}

impl Default for NgramConfig {
    fn default() -> Self {
        NgramConfig { n_max: 4, exclude_original: false }
    }
}

/// `count` perturbations of `y_star`, each replacing one contiguous n-gram
/// with uniformly drawn tokens. `n` is capped at the sequence length, so
/// every output keeps the length of `y_star`.
pub fn ngram_replace(
    y_star: &[u32],
    cfg: &NgramConfig,
    count: usize,
    vocab_size: usize,
    rng: &mut Rng,
) -> Result<Vec<TokenSequence>> {
    let len = y_star.len();
    if len == 0 {
        return Err(Error::InvalidArgument("empty reference".into()));
    }
    if cfg.n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be at least 1".into()));
    }
    if vocab_size < 2 {
        return Err(Error::InvalidArgument("vocabulary needs at least two tokens".into()));
    }
    let n_max = cfg.n_max.min(len);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let n = rng.random_range(1..=n_max);
        let start = rng.random_range(0..=len - n);
        let mut y = y_star.to_vec();
        for t in &mut y[start..start + n] {
            *t = if cfg.exclude_original {
                let mut v = rng.random_range(0..vocab_size as u32 - 1);
                if v >= *t {
                    v += 1;
                }
                v
            } else {
                rng.random_range(0..vocab_size as u32)
            };
        }
        out.push(y);
    }
    Ok(out)
}

/// Removes repeated sequences, keeping first occurrences in order.
pub fn dedup_sequences(seqs: Vec<TokenSequence>) -> Vec<TokenSequence> {
    let mut seen = alloc::collections::BTreeSet::new();
    seqs.into_iter().filter(|s| seen.insert(s.clone())).collect()
}
