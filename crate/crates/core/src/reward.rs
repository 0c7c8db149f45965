//! Task rewards `r(candidate, reference)` with a declared upper bound `R`.

use alloc::vec::Vec;

use crate::{Error, Result};

/// A bounded task reward `0 <= r(y, y*) <= R`.
///
/// `upper_bound` is the declared `R`; it enters the approximation bound of
/// [`crate::distributions::verify_theorem1`].
pub trait RewardFunction<Y: ?Sized> {
    fn reward(&self, candidate: &Y, reference: &Y) -> f64;
    fn upper_bound(&self) -> f64;
}

impl<Y: ?Sized, R: RewardFunction<Y> + ?Sized> RewardFunction<Y> for &R {
    fn reward(&self, candidate: &Y, reference: &Y) -> f64 {
        (**self).reward(candidate, reference)
    }

    fn upper_bound(&self) -> f64 {
        (**self).upper_bound()
    }
}

/// Explicit reward table over outputs `0..n`, stored row-major as
/// `r(candidate, reference) = values[candidate * n + reference]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RewardMatrix {
    n: usize,
    values: Vec<f64>,
    bound: f64,
}

impl RewardMatrix {
    /// Builds a table whose bound is its largest entry.
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        let bound = values.iter().copied().fold(0.0, f64::max);
        Self::with_bound(n, values, bound)
    }

    pub fn with_bound(n: usize, values: Vec<f64>, bound: f64) -> Result<Self> {
        if n == 0 || values.len() != n * n {
            return Err(Error::LengthMismatch(values.len(), n * n));
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::InvalidReward {
                    value: v,
                    candidate: i / n,
                    reference: i % n,
                });
            }
            if v < 0.0 || v > bound {
                return Err(Error::InvalidArgument(alloc::format!(
                    "reward {v} at ({}, {}) outside [0, {bound}]",
                    i / n,
                    i % n
                )));
            }
        }
        Ok(RewardMatrix { n, values, bound })
    }

    /// `r(y, y*) = 1` if `y == y*`, else 0.
    pub fn identity(n: usize) -> Self {
        Self::diagonal(&alloc::vec![1.0; n]).expect("identity reward is valid")
    }

    /// Reward `diag[y]` for a correct prediction of class `y`, zero otherwise.
    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        let mut values = alloc::vec![0.0; n * n];
        for (i, &d) in diag.iter().enumerate() {
            values[i * n + i] = d;
        }
        Self::new(n, values)
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, candidate: usize, reference: usize) -> f64 {
        self.values[candidate * self.n + reference]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl RewardFunction<usize> for RewardMatrix {
    fn reward(&self, candidate: &usize, reference: &usize) -> f64 {
        self.get(*candidate, *reference)
    }

    fn upper_bound(&self) -> f64 {
        self.bound
    }
}

/// Number of positions where two equal-length sequences agree.
///
/// Used as the token-accuracy reward for sequence labeling and as the UAS
/// reward for head sequences; both factorize over positions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatchCount {
    /// Sequence length, which is the reward's upper bound.
    pub len: usize,
}

pub type TokenAccuracy = MatchCount;
pub type AttachmentScore = MatchCount;

impl MatchCount {
    pub fn new(len: usize) -> Self {
        MatchCount { len }
    }
}

impl<S: AsRef<[usize]> + ?Sized> RewardFunction<S> for MatchCount {
    fn reward(&self, candidate: &S, reference: &S) -> f64 {
        let (c, r) = (candidate.as_ref(), reference.as_ref());
        if c.len() != r.len() {
            return f64::NAN;
        }
        c.iter().zip(r).filter(|(a, b)| a == b).count() as f64
    }

    fn upper_bound(&self) -> f64 {
        self.len as f64
    }
}

/// Number of positions at which two equal-length sequences differ.
pub fn hamming_distance<T: PartialEq>(a: &[T], b: &[T]) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    Ok(a.iter().zip(b).filter(|(x, y)| x != y).count())
}

/// Negative Hamming distance, `-hamming(y, y*)`.
///
/// With `shifted` the reward is `len - hamming(y, y*)`, which lies in
/// `[0, len]` and differs from the unshifted one by a constant, so payoff
/// distributions are unchanged.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NegHamming {
    pub len: usize,
    pub shifted: bool,
}

impl NegHamming {
    pub fn new(len: usize) -> Self {
        NegHamming { len, shifted: false }
    }

    pub fn shifted(len: usize) -> Self {
        NegHamming { len, shifted: true }
    }
}

impl NegHamming {
    fn eval<T: PartialEq>(&self, candidate: &[T], reference: &[T]) -> f64 {
        match hamming_distance(candidate, reference) {
            Ok(d) if self.shifted => self.len as f64 - d as f64,
            Ok(d) => -(d as f64),
            Err(_) => f64::NAN,
        }
    }

    fn bound(&self) -> f64 {
        if self.shifted {
            self.len as f64
        } else {
            0.0
        }
    }
}

impl<T: PartialEq> RewardFunction<[T]> for NegHamming {
    fn reward(&self, candidate: &[T], reference: &[T]) -> f64 {
        self.eval(candidate, reference)
    }

    fn upper_bound(&self) -> f64 {
        self.bound()
    }
}

impl<T: PartialEq> RewardFunction<Vec<T>> for NegHamming {
    fn reward(&self, candidate: &Vec<T>, reference: &Vec<T>) -> f64 {
        self.eval(candidate, reference)
    }

    fn upper_bound(&self) -> f64 {
        self.bound()
    }
}

/// Always zero.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroReward;

impl<Y: ?Sized> RewardFunction<Y> for ZeroReward {
    fn reward(&self, _: &Y, _: &Y) -> f64 {
        0.0
    }

    fn upper_bound(&self) -> f64 {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_rejects_out_of_range() {
        assert!(RewardMatrix::with_bound(2, alloc::vec![0.0, 2.0, 0.0, 0.0], 1.0).is_err());
        assert!(RewardMatrix::new(2, alloc::vec![0.0, f64::NAN, 0.0, 0.0]).is_err());
        assert!(RewardMatrix::new(2, alloc::vec![0.0; 3]).is_err());
    }

    #[test]
    fn neg_hamming_values() {
        let r = NegHamming::new(3);
        assert_eq!(r.reward(&[1u32, 2, 3][..], &[1u32, 2, 3][..]), 0.0);
        assert_eq!(r.reward(&[1u32, 2, 3][..], &[4u32, 5, 6][..]), -3.0);
        let s = NegHamming::shifted(3);
        assert_eq!(s.reward(&[1u32, 2, 3][..], &[4u32, 5, 6][..]), 0.0);
        assert_eq!(s.reward(&[1u32, 2, 3][..], &[1u32, 2, 3][..]), 3.0);
        assert!(r.reward(&[1u32][..], &[1u32, 2][..]).is_nan());
    }

    #[test]
    fn match_count_counts() {
        let r = MatchCount::new(3);
        assert_eq!(r.reward(&[0usize, 1, 2][..], &[0usize, 2, 2][..]), 2.0);
        assert_eq!(RewardFunction::<[usize]>::upper_bound(&r), 3.0);
    }
}
