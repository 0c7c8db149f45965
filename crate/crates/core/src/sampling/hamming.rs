use alloc::vec::Vec;

use num_bigint::BigUint;
use rand::seq::index::sample as sample_indices;
use rand::Rng as _;

use super::TokenSequence;
use crate::distributions::{Categorical, Temperature};
use crate::math::{exp, ln, ln_choose, log_sum_exp};
use crate::reward::{hamming_distance, RewardFunction};
use crate::rng::Rng;
use crate::{Error, Result};

/// Number of length-`len` sequences over `vocab` symbols at Hamming distance
/// exactly `d` from a fixed sequence: `C(len, d) * (vocab - 1)^d`.
pub fn hamming_count(d: usize, len: usize, vocab: usize) -> Result<BigUint> {
    if d > len {
        return Err(Error::InvalidArgument(alloc::format!("distance {d} exceeds length {len}")));
    }
    let mut c = BigUint::from(1u32);
    for i in 0..d {
        c *= BigUint::from(len - i);
    }
    for i in 1..=d {
        c /= BigUint::from(i);
    }
    Ok(c * BigUint::from(vocab.saturating_sub(1)).pow(d as u32))
}

/// Substitution-only Hamming proposal over sequences of a fixed length.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HammingProposal {
    pub vocab_size: usize,
    /// Divide `tau` by `1 + ln(V - 1)` before use.
    pub rescale: bool,
}

impl HammingProposal {
    pub fn new(vocab_size: usize) -> Self {
        HammingProposal { vocab_size, rescale: false }
    }

    /// Temperature actually used by the proposal.
    pub fn effective_tau(&self, tau: Temperature) -> f64 {
        if self.rescale && self.vocab_size > 2 {
            tau.value() / (1.0 + ln((self.vocab_size - 1) as f64))
        } else {
            tau.value()
        }
    }
}

fn ln_count(d: usize, len: usize, vocab: usize) -> f64 {
    if d == 0 {
        return 0.0;
    }
    if vocab < 2 {
        return f64::NEG_INFINITY;
    }
    ln_choose(len, d) + d as f64 * ln((vocab - 1) as f64)
}

/// Probabilities of the distance strata, `∝ c(d, L) exp(-d/tau)`.
pub fn stratum_weights(len: usize, tau: Temperature, proposal: &HammingProposal) -> Result<Categorical> {
    let t = proposal.effective_tau(tau);
    Categorical::from_log_weights((0..=len).map(|d| ln_count(d, len, proposal.vocab_size) - d as f64 / t).collect())
}

/// `ln Σ_d c(d, L) exp(-d/tau)`.
pub fn hamming_log_normalizer(len: usize, tau: Temperature, proposal: &HammingProposal) -> f64 {
    let t = proposal.effective_tau(tau);
    let terms: Vec<f64> = (0..=len).map(|d| ln_count(d, len, proposal.vocab_size) - d as f64 / t).collect();
    log_sum_exp(&terms)
}

/// `ln q_hm(y | y*)` with `q_hm ∝ exp(-hamming(y, y*)/tau)`.
pub fn hamming_payoff_log_prob(y: &[u32], y_star: &[u32], tau: Temperature, proposal: &HammingProposal) -> Result<f64> {
    let d = hamming_distance(y, y_star)?;
    let t = proposal.effective_tau(tau);
    Ok(-(d as f64) / t - hamming_log_normalizer(y_star.len(), tau, proposal))
}

pub fn hamming_payoff_prob(y: &[u32], y_star: &[u32], tau: Temperature, proposal: &HammingProposal) -> Result<f64> {
    hamming_payoff_log_prob(y, y_star, tau, proposal).map(exp)
}

/// Draws from `q_hm(·|y*)`: a distance `d` from the strata, then `d`
/// distinct positions, each replaced by a uniformly chosen different token.
pub fn stratified_hamming_sample(
    y_star: &[u32],
    tau: Temperature,
    proposal: &HammingProposal,
    rng: &mut Rng,
) -> Result<TokenSequence> {
    let len = y_star.len();
    let v = proposal.vocab_size;
    if len == 0 {
        return Err(Error::InvalidArgument("empty reference".into()));
    }
    if v < 2 {
        return Err(Error::InvalidArgument("vocabulary needs at least two tokens".into()));
    }
    let strata = stratum_weights(len, tau, proposal)?;
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut d = len;
    for (i, &p) in strata.probs().iter().enumerate() {
        acc += p;
        if u < acc {
            d = i;
            break;
        }
    }
    let mut out = y_star.to_vec();
    for pos in sample_indices(rng, len, d) {
        let orig = out[pos];
        let mut t = rng.random_range(0..(v - 1) as u32);
        if t >= orig {
            t += 1;
        }
        out[pos] = t;
    }
    Ok(out)
}

/// Self-normalized importance weights for targeting
/// `exp(r(y, y*)/tau)` with samples drawn from the Hamming proposal:
/// `w ∝ exp(r(y, y*)/tau) / exp(-hamming(y, y*)/tau_p)`, where `tau_p` is
/// the proposal's effective temperature.
pub fn importance_weights<R: RewardFunction<[u32]> + ?Sized>(
    samples: &[TokenSequence],
    y_star: &[u32],
    tau: Temperature,
    proposal: &HammingProposal,
    reward: &R,
) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let tp = proposal.effective_tau(tau);
    let mut logw = Vec::with_capacity(samples.len());
    for (i, s) in samples.iter().enumerate() {
        let d = hamming_distance(s, y_star)?;
        let r = reward.reward(s, y_star);
        if !r.is_finite() {
            return Err(Error::InvalidReward { value: r, candidate: i, reference: 0 });
        }
        logw.push(r / tau.value() + d as f64 / tp);
    }
    Ok(Categorical::from_log_weights(logw)?.probs().to_vec())
}
