use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::{Error, Result};

/// Labeled span `[start, end)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub kind: String,
}

fn split_tag(tag: &str) -> Option<(char, &str)> {
    let mut it = tag.splitn(2, '-');
    let (p, t) = (it.next()?, it.next()?);
    match p {
        "B" | "I" => Some((p.chars().next()?, t)),
        _ => None,
    }
}

/// Spans of a BIO sequence. An `I-T` that does not continue a `T` span
/// opens a new one; tags without a `B-`/`I-` prefix are outside.
pub fn bio_spans<S: AsRef<str>>(tags: &[S]) -> Vec<Span> {
    let mut spans = Vec::new();
    let mut open: Option<(usize, &str)> = None;
    for (i, tag) in tags.iter().enumerate() {
        let parsed = split_tag(tag.as_ref());
        let continues = matches!((parsed, open), (Some(('I', t)), Some((_, o))) if t == o);
        if continues {
            continue;
        }
        if let Some((s, t)) = open.take() {
            spans.push(Span { start: s, end: i, kind: t.to_string() });
        }
        if let Some((_, t)) = parsed {
            open = Some((i, t));
        }
    }
    if let Some((s, t)) = open {
        spans.push(Span { start: s, end: tags.len(), kind: t.to_string() });
    }
    spans
}

/// Rewrites IOB1 (where `B-` only separates adjacent same-type chunks) as
/// BIO.
pub fn iob1_to_bio<S: AsRef<str>>(tags: &[S]) -> Vec<String> {
    let mut out: Vec<String> = Vec::with_capacity(tags.len());
    for (i, tag) in tags.iter().enumerate() {
        let tag = tag.as_ref();
        match split_tag(tag) {
            Some(('I', t)) => {
                let prev = if i == 0 { None } else { split_tag(tags[i - 1].as_ref()) };
                if prev.is_some_and(|(_, pt)| pt == t) {
                    out.push(tag.to_string());
                } else {
                    out.push(alloc::format!("B-{t}"));
                }
            }
            _ => out.push(tag.to_string()),
        }
    }
    out
}

/// Corpus-level sequence labeling counts.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SequenceMetrics {
    pub tokens: usize,
    pub tokens_correct: usize,
    pub sentences: usize,
    pub exact: usize,
    pub spans_gold: usize,
    pub spans_pred: usize,
    pub spans_correct: usize,
}

impl SequenceMetrics {
    pub fn add(&mut self, other: &SequenceMetrics) {
        self.tokens += other.tokens;
        self.tokens_correct += other.tokens_correct;
        self.sentences += other.sentences;
        self.exact += other.exact;
        self.spans_gold += other.spans_gold;
        self.spans_pred += other.spans_pred;
        self.spans_correct += other.spans_correct;
    }

    pub fn token_accuracy(&self) -> f64 {
        self.tokens_correct as f64 / self.tokens as f64
    }

    pub fn exact_match(&self) -> f64 {
        self.exact as f64 / self.sentences as f64
    }

    /// Micro span F1; 1 when neither side has spans.
    pub fn span_f1(&self) -> f64 {
        if self.spans_gold == 0 && self.spans_pred == 0 {
            return 1.0;
        }
        let denom = (self.spans_gold + self.spans_pred) as f64;
        2.0 * self.spans_correct as f64 / denom
    }
}

/// Counts for one predicted sequence against its gold sequence.
pub fn metrics_sequence<S: AsRef<str>, T: AsRef<str>>(pred: &[S], gold: &[T]) -> Result<SequenceMetrics> {
    if pred.len() != gold.len() {
        return Err(Error::LengthMismatch(pred.len(), gold.len()));
    }
    let correct = pred.iter().zip(gold).filter(|(p, g)| p.as_ref() == g.as_ref()).count();
    let (ps, gs) = (bio_spans(pred), bio_spans(gold));
    let hit = ps.iter().filter(|s| gs.contains(s)).count();
    Ok(SequenceMetrics {
        tokens: gold.len(),
        tokens_correct: correct,
        sentences: 1,
        exact: usize::from(correct == gold.len()),
        spans_gold: gs.len(),
        spans_pred: ps.len(),
        spans_correct: hit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_is_perfect() {
        let g = ["B-PER", "I-PER", "O", "B-LOC"];
        let m = metrics_sequence(&g, &g).unwrap();
        assert_eq!((m.token_accuracy(), m.span_f1(), m.exact_match()), (1.0, 1.0, 1.0));
    }

    #[test]
    fn all_outside_prediction() {
        let g = ["O", "B-ORG", "I-ORG", "O", "O"];
        let p = ["O"; 5];
        let m = metrics_sequence(&p, &g).unwrap();
        assert_eq!(m.span_f1(), 0.0);
        assert_eq!(m.token_accuracy(), 3.0 / 5.0);
        assert_eq!(m.exact_match(), 0.0);
    }

    #[test]
    fn boundary_error() {
        let g = ["B-PER", "I-PER", "O"];
        let p = ["B-PER", "O", "O"];
        let m = metrics_sequence(&p, &g).unwrap();
        assert_eq!(m.span_f1(), 0.0);
        assert_eq!(m.token_accuracy(), 2.0 / 3.0);
        assert!(metrics_sequence(&p[..2], &g).is_err());
    }

    #[test]
    fn spans_and_iob1() {
        let s = bio_spans(&["I-LOC", "I-LOC", "I-PER", "B-PER", "O"]);
        assert_eq!(s.len(), 3);
        assert_eq!((s[0].start, s[0].end), (0, 2));
        assert_eq!(iob1_to_bio(&["I-LOC", "I-LOC", "B-LOC", "O", "I-PER"]), ["B-LOC", "I-LOC", "B-LOC", "O", "B-PER"]);
    }
}
