//! Smoothed sentence-level BLEU-4.
//!
//! For `n = 1..=4` let `m_n` be the clipped n-gram match count and
//! `t_n = max(0, c - n + 1)` the number of candidate n-grams, where `c` and
//! `r` are the candidate and reference lengths. Precisions are
//!
//! * `p_n = m_n / t_n` when `m_n > 0`;
//! * `p_n = 1 / (2^k * max(t_n, 1))` when `m_n = 0`, where `k` counts the
//!   zero-match orders seen so far including this one (`k = 1` for the first).
//!
//! Zero-match orders always form a suffix of `1..=4`. The brevity penalty is
//! `1` if `c > r` and `exp(1 - r/c)` otherwise, and
//! `BLEU = BP * exp(Σ_n ln(p_n) / 4)`.
//!
//! An empty candidate scores 0. Unlike some reference implementations, a
//! candidate without any unigram match still receives the smoothed value,
//! which is strictly positive.

use alloc::collections::BTreeMap;

use crate::math::{exp, ln};
use crate::reward::RewardFunction;

fn ngram_counts<T: Ord>(s: &[T], n: usize) -> BTreeMap<&[T], usize> {
    let mut m = BTreeMap::new();
    if s.len() >= n {
        for w in s.windows(n) {
            *m.entry(w).or_insert(0) += 1;
        }
    }
    m
}

/// Smoothed BLEU-4 of `candidate` against a single `reference`.
pub fn sentence_bleu<T: Ord>(candidate: &[T], reference: &[T]) -> f64 {
    let (c, r) = (candidate.len(), reference.len());
    if c == 0 {
        return 0.0;
    }
    let mut log_sum = 0.0;
    let mut k = 0;
    for n in 1..=4 {
        let cand = ngram_counts(candidate, n);
        let refc = ngram_counts(reference, n);
        let matches: usize = cand.iter().map(|(g, &cnt)| cnt.min(*refc.get(g).unwrap_or(&0))).sum();
        let total = c.saturating_sub(n - 1);
        let p = if matches > 0 {
            matches as f64 / total as f64
        } else {
            k += 1;
            1.0 / ((1u64 << k) as f64 * total.max(1) as f64)
        };
        log_sum += ln(p);
    }
    let bp = if c > r { 1.0 } else { exp(1.0 - r as f64 / c as f64) };
    bp * exp(log_sum / 4.0)
}

/// [`sentence_bleu`] as a reward with upper bound 1.
#[derive(Clone, Copy, Debug, Default)]
pub struct SentenceBleu;

impl<T: Ord> RewardFunction<[T]> for SentenceBleu {
    fn reward(&self, candidate: &[T], reference: &[T]) -> f64 {
        sentence_bleu(candidate, reference)
    }

    fn upper_bound(&self) -> f64 {
        1.0
    }
}

impl<T: Ord> RewardFunction<alloc::vec::Vec<T>> for SentenceBleu {
    fn reward(&self, candidate: &alloc::vec::Vec<T>, reference: &alloc::vec::Vec<T>) -> f64 {
        sentence_bleu(candidate, reference)
    }

    fn upper_bound(&self) -> f64 {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    fn w(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    #[test]
    fn identical_is_one() {
        let s = w("the quick brown fox jumps");
        assert!((sentence_bleu(&s, &s) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn no_overlap_floor() {
        let r = w("a b c d e f g h i j");
        let c = w("k l m n o p q r s t");
        let want = (1.0f64 / (20.0 * 36.0 * 64.0 * 112.0)).powf(0.25);
        let got = sentence_bleu(&c, &r);
        assert!((got - want).abs() < 1e-15);
        assert!(got > 0.0 && got < 0.05);
        assert!((got - 0.020981).abs() < 1e-6);
    }

    #[test]
    fn matches_nltk_method3() {
        // Values from nltk.translate.bleu_score.sentence_bleu with
        // SmoothingFunction().method3.
        let cases = [
            ("the cat sat on the mat today", "the cat is on the mat", 0.3215935109119012),
            ("there is a cat on the mat", "the cat the cat on the mat", 0.41113361690051975),
            ("a b c", "a b", 0.36064528799877893),
            ("a b c d e", "a b c d e f g", 0.6147881529512643),
        ];
        for (r, c, want) in cases {
            let got = sentence_bleu(&w(c), &w(r));
            assert!((got - want).abs() < 1e-12, "{c} vs {r}: {got}");
        }
    }

    #[test]
    fn empty_candidate_scores_zero() {
        assert_eq!(sentence_bleu::<u32>(&[], &[1, 2]), 0.0);
    }
}
