use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::rng::Rng;

/// Generator for a sequence-labeling corpus with correlated label noise.
///
/// Sentences consist of one or more two-token blocks `a_i b_j` separated by
/// filler tokens tagged `O`. Each block's labels are drawn jointly from
/// `outcomes`, by default `(X, Y)` with 0.4, `(Y, X)` with 0.3 and `(Y, Y)`
/// with 0.3. The most likely joint labeling `(X, Y)` differs from the
/// per-position most likely labels `(Y, Y)`, so maximizing exact match and
/// maximizing token accuracy call for different predictions.
#[derive(Clone, Debug, PartialEq)]
pub struct PairCorpusConfig {
    pub sentences: usize,
    pub max_blocks: usize,
    pub a_words: usize,
    pub b_words: usize,
    pub fillers: usize,
    pub outcomes: Vec<((&'static str, &'static str), f64)>,
}

impl Default for PairCorpusConfig {
    fn default() -> Self {
        PairCorpusConfig {
            sentences: 500,
            max_blocks: 3,
            a_words: 10,
            b_words: 10,
            fillers: 8,
            outcomes: alloc::vec![(("X", "Y"), 0.4), (("Y", "X"), 0.3), (("Y", "Y"), 0.3)],
        }
    }
}

/// Returns `(tokens, tags)` pairs.
pub fn noisy_pair_corpus(cfg: &PairCorpusConfig, rng: &mut Rng) -> Vec<(Vec<String>, Vec<String>)> {
    let total: f64 = cfg.outcomes.iter().map(|o| o.1).sum();
    let mut out = Vec::with_capacity(cfg.sentences);
    for _ in 0..cfg.sentences {
        let blocks = rng.random_range(1..=cfg.max_blocks.max(1));
        let (mut toks, mut tags) = (Vec::new(), Vec::new());
        for b in 0..=blocks {
            let fill = if b == 0 || b == blocks { rng.random_range(0..=1) } else { rng.random_range(1..=2) };
            for _ in 0..fill {
                toks.push(format!("f{}", rng.random_range(0..cfg.fillers)));
                tags.push(String::from("O"));
            }
            if b == blocks {
                break;
            }
            toks.push(format!("a{}", rng.random_range(0..cfg.a_words)));
            toks.push(format!("b{}", rng.random_range(0..cfg.b_words)));
            let mut u = rng.random::<f64>() * total;
            let mut pick = cfg.outcomes[cfg.outcomes.len() - 1].0;
            for &(o, p) in &cfg.outcomes {
                if u < p {
                    pick = o;
                    break;
                }
                u -= p;
            }
            tags.push(String::from(pick.0));
            tags.push(String::from(pick.1));
        }
        out.push((toks, tags));
    }
    out
}
