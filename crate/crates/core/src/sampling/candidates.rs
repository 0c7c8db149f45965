use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::index::sample as sample_indices;

use super::ngram::{ngram_replace, NgramConfig};
use super::TokenSequence;
use crate::distributions::{Categorical, Temperature};
use crate::reward::RewardFunction;
use crate::rng::Rng;
use crate::{Error, Result};

/// Surface forms for token ids; id 0 is the unknown token.
#[derive(Clone, Debug, PartialEq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    ids: BTreeMap<String, u32>,
}

impl Vocabulary {
    pub const UNK: &'static str = "<unk>";

    pub fn new() -> Self {
        let mut v = Vocabulary { tokens: Vec::new(), ids: BTreeMap::new() };
        v.add(Self::UNK);
        v
    }

    pub fn add(&mut self, token: &str) -> u32 {
        if let Some(&id) = self.ids.get(token) {
            return id;
        }
        let id = self.tokens.len() as u32;
        self.tokens.push(token.to_string());
        self.ids.insert(token.to_string(), id);
        id
    }

    pub fn from_sentences<'a, I: IntoIterator<Item = &'a str>>(sentences: I) -> Self {
        let mut v = Self::new();
        for s in sentences {
            for w in s.split_whitespace() {
                v.add(w);
            }
        }
        v
    }

    /// Whitespace tokenization; unseen words map to the unknown id.
    pub fn encode(&self, sentence: &str) -> TokenSequence {
        sentence.split_whitespace().map(|w| self.ids.get(w).copied().unwrap_or(0)).collect()
    }

    pub fn decode(&self, ids: &[u32]) -> Vec<&str> {
        ids.iter().map(|&i| self.tokens.get(i as usize).map_or(Self::UNK, String::as_str)).collect()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::new()
    }
}

/// Where a candidate came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Provenance {
    Reference,
    NgramReplaced,
    HammingSampled,
}

impl Provenance {
    pub fn name(self) -> &'static str {
        match self {
            Provenance::Reference => "reference",
            Provenance::NgramReplaced => "ngram-replaced",
            Provenance::HammingSampled => "hamming-sampled",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "reference" => Some(Provenance::Reference),
            "ngram-replaced" => Some(Provenance::NgramReplaced),
            "hamming-sampled" => Some(Provenance::HammingSampled),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub tokens: TokenSequence,
    pub provenance: Provenance,
    /// `r(y, y*)` for RAML; mean reward over the references for SQDML.
    pub reward: f64,
    pub weight: f64,
}

/// Finite candidate set `S` with normalized target weights.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateSet {
    candidates: Vec<Candidate>,
}

impl CandidateSet {
    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn weights(&self) -> Vec<f64> {
        self.candidates.iter().map(|c| c.weight).collect()
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    /// Replaces the target weights, e.g. with importance weights for
    /// candidates drawn from a proposal.
    pub fn reweighted(mut self, weights: &[f64]) -> Result<Self> {
        if weights.len() != self.candidates.len() {
            return Err(Error::LengthMismatch(weights.len(), self.candidates.len()));
        }
        let w = Categorical::from_probs(weights.to_vec())?;
        for (c, &p) in self.candidates.iter_mut().zip(w.probs()) {
            c.weight = p;
        }
        Ok(self)
    }
}

fn with_references(mut s: Vec<(TokenSequence, Provenance)>, refs: &[TokenSequence]) -> Vec<(TokenSequence, Provenance)> {
    let mut missing: Vec<(TokenSequence, Provenance)> = Vec::new();
    for r in refs {
        if !s.iter().any(|(c, _)| c == r) && !missing.iter().any(|(c, _)| c == r) {
            missing.push((r.clone(), Provenance::Reference));
        }
    }
    missing.append(&mut s);
    missing
}

fn weigh(s: Vec<(TokenSequence, Provenance)>, rewards: Vec<f64>, tau: Temperature) -> Result<CandidateSet> {
    if let Some(i) = rewards.iter().position(|r| !r.is_finite()) {
        return Err(Error::InvalidReward { value: rewards[i], candidate: i, reference: 0 });
    }
    let dist = Categorical::from_log_weights(rewards.iter().map(|r| r / tau.value()).collect())?;
    let candidates = s
        .into_iter()
        .zip(rewards)
        .zip(dist.probs())
        .map(|(((tokens, provenance), reward), &weight)| Candidate { tokens, provenance, reward, weight })
        .collect();
    Ok(CandidateSet { candidates })
}

/// RAML weights restricted to `S`: `w(y) ∝ exp(r(y, y*)/tau)` over `S`.
/// `y*` is added to `S` if absent.
pub fn sampled_raml_weights<R: RewardFunction<[u32]> + ?Sized>(
    candidates: Vec<(TokenSequence, Provenance)>,
    y_star: &[u32],
    tau: Temperature,
    r: &R,
) -> Result<CandidateSet> {
    if candidates.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let s = with_references(candidates, &[y_star.to_vec()]);
    let rewards = s.iter().map(|(y, _)| r.reward(y, y_star)).collect();
    weigh(s, rewards, tau)
}

/// SQDML weights restricted to `S`:
/// `w(y) ∝ exp(mean_{y*} r(y, y*) / tau)`. Missing references are added.
pub fn sampled_sqdml_weights<R: RewardFunction<[u32]> + ?Sized>(
    candidates: Vec<(TokenSequence, Provenance)>,
    references: &[TokenSequence],
    tau: Temperature,
    r: &R,
) -> Result<CandidateSet> {
    if references.is_empty() || candidates.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let s = with_references(candidates, references);
    let k = references.len() as f64;
    let rewards = s
        .iter()
        .map(|(y, _)| references.iter().map(|rf| r.reward(y, rf)).sum::<f64>() / k)
        .collect();
    weigh(s, rewards, tau)
}

/// Candidate-set sizes and per-update subsample sizes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SetSizes {
    pub sqdml: usize,
    pub raml: usize,
    pub sqdml_batch: usize,
    pub raml_batch: usize,
}

impl Default for SetSizes {
    fn default() -> Self {
        SetSizes { sqdml: 500, raml: 100, sqdml_batch: 50, raml_batch: 10 }
    }
}

/// One RAML candidate set per reference, each with `size - 1` n-gram
/// replacements of that reference plus the reference itself.
pub fn build_raml_sets<R: RewardFunction<[u32]> + ?Sized>(
    references: &[TokenSequence],
    size: usize,
    ngram: &NgramConfig,
    vocab_size: usize,
    tau: Temperature,
    r: &R,
    rng: &mut Rng,
) -> Result<Vec<CandidateSet>> {
    references
        .iter()
        .map(|y| {
            let mut s = alloc::vec![(y.clone(), Provenance::Reference)];
            for c in ngram_replace(y, ngram, size.saturating_sub(1), vocab_size, rng)? {
                s.push((c, Provenance::NgramReplaced));
            }
            sampled_raml_weights(s, y, tau, r)
        })
        .collect()
}

/// One SQDML candidate set for a source with several references: all
/// references plus `size - |refs|` n-gram replacements spread evenly over
/// the references.
pub fn build_sqdml_set<R: RewardFunction<[u32]> + ?Sized>(
    references: &[TokenSequence],
    size: usize,
    ngram: &NgramConfig,
    vocab_size: usize,
    tau: Temperature,
    r: &R,
    rng: &mut Rng,
) -> Result<CandidateSet> {
    if references.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut s: Vec<(TokenSequence, Provenance)> = references.iter().map(|y| (y.clone(), Provenance::Reference)).collect();
    let extra = size.saturating_sub(references.len());
    let k = references.len();
    for (i, y) in references.iter().enumerate() {
        let count = extra / k + usize::from(i < extra % k);
        for c in ngram_replace(y, ngram, count, vocab_size, rng)? {
            s.push((c, Provenance::NgramReplaced));
        }
    }
    sampled_sqdml_weights(s, references, tau, r)
}

/// `k` candidates drawn uniformly without replacement, returned as
/// `(index, |S|/k * weight)`. Summing `scaled_weight * grad log p` over the
/// subsample is an unbiased estimate of the full weighted gradient.
pub fn subsample(set: &CandidateSet, k: usize, rng: &mut Rng) -> Vec<(usize, f64)> {
    let n = set.len();
    let k = k.min(n);
    if k == 0 {
        return Vec::new();
    }
    let scale = n as f64 / k as f64;
    let mut idx = sample_indices(rng, n, k).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| (i, scale * set.candidates[i].weight)).collect()
}
