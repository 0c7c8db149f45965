use alloc::vec;
use alloc::vec::Vec;

use crate::distributions::{Categorical, Temperature};
use crate::math::{exp, log_sum_exp};
use crate::{Error, Result};

/// Log-potentials of a chain with `len` positions and `k` labels.
///
/// `pairwise(i, a, b)` scores label `a` at position `i - 1` followed by `b`
/// at position `i`, for `i >= 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainPotentials {
    len: usize,
    k: usize,
    unary: Vec<f64>,
    pairwise: Vec<f64>,
}

impl ChainPotentials {
    pub fn new(len: usize, k: usize, unary: Vec<f64>, pairwise: Vec<f64>) -> Result<Self> {
        if len == 0 || k == 0 {
            return Err(Error::InvalidArgument("chain needs at least one position and one label".into()));
        }
        if unary.len() != len * k {
            return Err(Error::LengthMismatch(unary.len(), len * k));
        }
        if pairwise.len() != (len - 1) * k * k {
            return Err(Error::LengthMismatch(pairwise.len(), (len - 1) * k * k));
        }
        if let Some(i) = unary.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinitePotential(i));
        }
        if let Some(i) = pairwise.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinitePotential(unary.len() + i));
        }
        Ok(ChainPotentials { len, k, unary, pairwise })
    }

    pub fn zeros(len: usize, k: usize) -> Self {
        Self::new(len, k, vec![0.0; len * k], vec![0.0; (len - 1) * k * k]).expect("valid shape")
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn num_labels(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn unary(&self, i: usize, a: usize) -> f64 {
        self.unary[i * self.k + a]
    }

    #[inline]
    pub fn pairwise(&self, i: usize, a: usize, b: usize) -> f64 {
        self.pairwise[((i - 1) * self.k + a) * self.k + b]
    }

    /// Unnormalized log-score of a labeling.
    pub fn score(&self, labels: &[usize]) -> f64 {
        let mut s = 0.0;
        for (i, &y) in labels.iter().enumerate() {
            s += self.unary(i, y);
            if i > 0 {
                s += self.pairwise(i, labels[i - 1], y);
            }
        }
        s
    }
}

/// Log-partition function and marginals of a chain.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainMarginals {
    pub log_z: f64,
    len: usize,
    k: usize,
    unary: Vec<f64>,
    pairwise: Vec<f64>,
}

impl ChainMarginals {
    #[inline]
    pub fn unary(&self, i: usize, a: usize) -> f64 {
        self.unary[i * self.k + a]
    }

    /// `P(y_{i-1} = a, y_i = b)` for `i >= 1`.
    #[inline]
    pub fn pairwise(&self, i: usize, a: usize, b: usize) -> f64 {
        self.pairwise[((i - 1) * self.k + a) * self.k + b]
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn num_labels(&self) -> usize {
        self.k
    }
}

/// Forward-backward in log space.
pub fn forward_backward(pot: &ChainPotentials) -> Result<ChainMarginals> {
    let (n, k) = (pot.len, pot.k);
    if let Some(i) = pot.unary.iter().chain(&pot.pairwise).position(|v| !v.is_finite()) {
        return Err(Error::NonFinitePotential(i));
    }
    let mut alpha = vec![0.0; n * k];
    let mut beta = vec![0.0; n * k];
    let mut buf = vec![0.0; k];
    alpha[..k].copy_from_slice(&pot.unary[..k]);
    for i in 1..n {
        for b in 0..k {
            for a in 0..k {
                buf[a] = alpha[(i - 1) * k + a] + pot.pairwise(i, a, b);
            }
            alpha[i * k + b] = log_sum_exp(&buf) + pot.unary(i, b);
        }
    }
    for i in (0..n - 1).rev() {
        for a in 0..k {
            for b in 0..k {
                buf[b] = pot.pairwise(i + 1, a, b) + pot.unary(i + 1, b) + beta[(i + 1) * k + b];
            }
            beta[i * k + a] = log_sum_exp(&buf);
        }
    }
    let log_z = log_sum_exp(&alpha[(n - 1) * k..]);
    let unary = (0..n * k).map(|j| exp(alpha[j] + beta[j] - log_z)).collect();
    let mut pairwise = vec![0.0; (n.saturating_sub(1)) * k * k];
    for i in 1..n {
        for a in 0..k {
            for b in 0..k {
                let l = alpha[(i - 1) * k + a] + pot.pairwise(i, a, b) + pot.unary(i, b) + beta[i * k + b];
                pairwise[((i - 1) * k + a) * k + b] = exp(l - log_z);
            }
        }
    }
    Ok(ChainMarginals {
        log_z,
        len: n,
        k,
        unary,
        pairwise,
    })
}

/// MAP labeling. Ties go to the lexicographically smallest sequence: the
/// best suffix scores are computed right to left and labels are then chosen
/// left to right, lowest id first.
pub fn viterbi(pot: &ChainPotentials) -> Vec<usize> {
    let (n, k) = (pot.len, pot.k);
    // best[i][a]: best score of positions i..n given y_i = a
    let mut best = vec![0.0; n * k];
    for a in 0..k {
        best[(n - 1) * k + a] = pot.unary(n - 1, a);
    }
    for i in (0..n - 1).rev() {
        for a in 0..k {
            let mut m = f64::NEG_INFINITY;
            for b in 0..k {
                m = m.max(pot.pairwise(i + 1, a, b) + best[(i + 1) * k + b]);
            }
            best[i * k + a] = pot.unary(i, a) + m;
        }
    }
    let mut out = Vec::with_capacity(n);
    out.push(crate::math::argmax(&best[..k]));
    for i in 1..n {
        let prev = out[i - 1];
        let scores: Vec<f64> = (0..k).map(|b| pot.pairwise(i, prev, b) + best[i * k + b]).collect();
        out.push(crate::math::argmax(&scores));
    }
    out
}

/// Per-position payoff distributions of the token-accuracy reward:
/// `q_i(a) ∝ exp(1[a = gold_i]/tau)`. Their product is the payoff
/// distribution over whole labelings.
pub fn token_accuracy_payoff_marginals(gold: &[usize], tau: Temperature, k: usize) -> Result<Vec<Categorical>> {
    let inv = 1.0 / tau.value();
    gold.iter()
        .map(|&g| {
            if g >= k {
                return Err(Error::NotInSpace);
            }
            Categorical::from_log_weights((0..k).map(|a| if a == g { inv } else { 0.0 }).collect())
        })
        .collect()
}

/// All `k^len` labelings in lexicographic order.
pub fn enumerate_sequences(len: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; len];
    loop {
        out.push(cur.clone());
        let mut i = len;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            cur[i] += 1;
            if cur[i] < k {
                break;
            }
            cur[i] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    fn random_pot(seed: u64, len: usize, k: usize) -> ChainPotentials {
        let mut g = rng_from_seed(seed);
        let u = (0..len * k).map(|_| g.random_range(-2.0..2.0)).collect();
        let p = (0..(len - 1) * k * k).map(|_| g.random_range(-2.0..2.0)).collect();
        ChainPotentials::new(len, k, u, p).unwrap()
    }

    #[test]
    fn single_position_is_softmax() {
        let pot = ChainPotentials::new(1, 3, vec![0.1, 1.0, -0.5], vec![]).unwrap();
        let m = forward_backward(&pot).unwrap();
        let s = crate::math::softmax(&[0.1, 1.0, -0.5]);
        for a in 0..3 {
            assert!((m.unary(0, a) - s[a]).abs() < 1e-14);
        }
        assert_eq!(viterbi(&pot), vec![1]);
    }

    #[test]
    fn zero_potentials_are_uniform() {
        let m = forward_backward(&ChainPotentials::zeros(4, 3)).unwrap();
        assert!((m.log_z - 4.0 * crate::math::ln(3.0)).abs() < 1e-12);
        for i in 0..4 {
            for a in 0..3 {
                assert!((m.unary(i, a) - 1.0 / 3.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn matches_enumeration() {
        for seed in 0..20 {
            let (len, k) = (1 + seed as usize % 5, 1 + seed as usize % 4);
            let pot = random_pot(seed, len, k);
            let m = forward_backward(&pot).unwrap();
            let seqs = enumerate_sequences(len, k);
            let scores: Vec<f64> = seqs.iter().map(|s| pot.score(s)).collect();
            let log_z = log_sum_exp(&scores);
            assert!((m.log_z - log_z).abs() < 1e-10);
            let mut marg = vec![0.0; len * k];
            for (s, &sc) in seqs.iter().zip(&scores) {
                for (i, &y) in s.iter().enumerate() {
                    marg[i * k + y] += exp(sc - log_z);
                }
            }
            for i in 0..len {
                for a in 0..k {
                    assert!((m.unary(i, a) - marg[i * k + a]).abs() < 1e-10);
                }
            }
            let best = crate::math::argmax(&scores);
            assert_eq!(viterbi(&pot), seqs[best]);
        }
    }

    #[test]
    fn non_finite_potential_is_rejected() {
        assert!(ChainPotentials::new(1, 2, vec![0.0, f64::NAN], vec![]).is_err());
    }

    #[test]
    fn payoff_marginals_two_labels() {
        let q = token_accuracy_payoff_marginals(&[0, 1], Temperature::new(1.0).unwrap(), 2).unwrap();
        let e = core::f64::consts::E;
        assert!((q[0].prob(0) - e / (e + 1.0)).abs() < 1e-14);
        assert!((q[1].prob(1) - e / (e + 1.0)).abs() < 1e-14);
        let q = token_accuracy_payoff_marginals(&[2], Temperature::new(1e-8).unwrap(), 3).unwrap();
        assert_eq!(q[0].probs(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn enumerate_counts() {
        assert_eq!(enumerate_sequences(3, 2).len(), 8);
        assert_eq!(enumerate_sequences(2, 3)[5], vec![1, 2]);
    }
}
