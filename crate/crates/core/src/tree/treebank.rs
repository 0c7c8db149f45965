use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::rng::Rng;

/// Generator for a dependency corpus with correlated attachment noise.
///
/// Each sentence has one verb `v*` attached to the root, filler words `f*`
/// attached to the verb, and one or more adjacent pairs `p* q*` whose heads
/// are drawn jointly from `outcomes`: `Vp` (p -> verb, q -> p) with 0.4,
/// `qV` (p -> q, q -> verb) with 0.3 and `VV` (both -> verb) with 0.3. The
/// most likely joint attachment `Vp` differs from the per-word most likely
/// heads `VV`.
#[derive(Clone, Debug, PartialEq)]
pub struct TreebankConfig {
    pub sentences: usize,
    pub max_blocks: usize,
    pub verbs: usize,
    pub p_words: usize,
    pub q_words: usize,
    pub fillers: usize,
    pub outcomes: Vec<(&'static str, f64)>,
}

impl Default for TreebankConfig {
    fn default() -> Self {
        TreebankConfig {
            sentences: 500,
            max_blocks: 3,
            verbs: 4,
            p_words: 10,
            q_words: 10,
            fillers: 8,
            outcomes: alloc::vec![("Vp", 0.4), ("qV", 0.3), ("VV", 0.3)],
        }
    }
}

enum Unit {
    Filler,
    Verb,
    Pair(&'static str),
}

/// Returns `(forms, heads)` pairs.
pub fn synthetic_treebank(cfg: &TreebankConfig, rng: &mut Rng) -> Vec<(Vec<String>, Vec<usize>)> {
    let total: f64 = cfg.outcomes.iter().map(|o| o.1).sum();
    let mut out = Vec::with_capacity(cfg.sentences);
    for _ in 0..cfg.sentences {
        let blocks = rng.random_range(1..=cfg.max_blocks.max(1));
        let mut units = Vec::new();
        for b in 0..blocks {
            let fill = if b == 0 { rng.random_range(0..=1) } else { rng.random_range(1..=2) };
            units.extend((0..fill).map(|_| Unit::Filler));
            let mut u = rng.random::<f64>() * total;
            let mut pick = cfg.outcomes[cfg.outcomes.len() - 1].0;
            for &(o, p) in &cfg.outcomes {
                if u < p {
                    pick = o;
                    break;
                }
                u -= p;
            }
            units.push(Unit::Pair(pick));
        }
        let at = rng.random_range(0..=units.len());
        units.insert(at, Unit::Verb);
        let mut verb_pos = 0;
        let mut pos = 1;
        for u in &units {
            match u {
                Unit::Verb => verb_pos = pos,
                Unit::Pair(_) => pos += 1,
                Unit::Filler => {}
            }
            pos += 1;
        }
        let (mut forms, mut heads) = (Vec::new(), Vec::new());
        for u in &units {
            let here = forms.len() + 1;
            match u {
                Unit::Verb => {
                    forms.push(format!("v{}", rng.random_range(0..cfg.verbs)));
                    heads.push(0);
                }
                Unit::Filler => {
                    forms.push(format!("f{}", rng.random_range(0..cfg.fillers)));
                    heads.push(verb_pos);
                }
                Unit::Pair(kind) => {
                    forms.push(format!("p{}", rng.random_range(0..cfg.p_words)));
                    forms.push(format!("q{}", rng.random_range(0..cfg.q_words)));
                    let (hp, hq) = match *kind {
                        "Vp" => (verb_pos, here),
                        "qV" => (here + 1, verb_pos),
                        _ => (verb_pos, verb_pos),
                    };
                    heads.push(hp);
                    heads.push(hq);
                }
            }
        }
        out.push((forms, heads));
    }
    out
}
