//! Linear-chain CRF for sequence labeling, trained with ML or RAML under
//! the token-accuracy reward.
//!
//! Token accuracy factorizes over positions, so the exponentiated payoff
//! distribution is a product of per-position distributions
//! `q_i(a) ∝ exp(1[a = gold_i]/tau)` and the RAML gradient only needs unary
//! and pairwise marginals of the model and of `q`.

mod corpus;
mod features;
mod inference;
mod metrics;
mod model;

pub use corpus::{noisy_pair_corpus, PairCorpusConfig};
pub use features::{token_features, ChainFeaturizer};
pub use inference::{
    enumerate_sequences, forward_backward, token_accuracy_payoff_marginals, viterbi, ChainMarginals,
    ChainPotentials,
};
pub use metrics::{bio_spans, iob1_to_bio, metrics_sequence, SequenceMetrics, Span};
pub use model::{ChainCrf, LabelSet, TaggedSequence};
