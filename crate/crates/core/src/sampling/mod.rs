//! Sampled-target approximations of RAML and SQDML for sequence outputs.
//!
//! The output space of a sequence task is exponential, so targets are
//! restricted to a finite candidate set `S` that always contains the
//! references. Candidates come from uniform n-gram replacement or from the
//! stratified Hamming proposal; the latter is combined with self-normalized
//! importance weights when the task reward is sentence BLEU.

mod bleu;
mod candidates;
mod hamming;
mod ngram;

pub use bleu::{sentence_bleu, SentenceBleu};
pub use candidates::{
    build_raml_sets, build_sqdml_set, sampled_raml_weights, sampled_sqdml_weights, subsample, Candidate, CandidateSet,
    Provenance, SetSizes, Vocabulary,
};
pub use hamming::{
    hamming_count, hamming_log_normalizer, hamming_payoff_log_prob, hamming_payoff_prob, importance_weights,
    stratified_hamming_sample, stratum_weights, HammingProposal,
};
pub use ngram::{dedup_sequences, ngram_replace, NgramConfig};

/// A tokenized sequence of vocabulary ids.
pub type TokenSequence = alloc::vec::Vec<u32>;
