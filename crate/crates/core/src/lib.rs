//! Reward-augmented maximum likelihood (RAML) and softmax Q-distribution
//! maximum likelihood (SQDML) for structured prediction.
//!
//! The crate is `no_std` and only needs `alloc`. Everything here is pure
//! computation: exact target distributions over enumerable output spaces,
//! dynamic programs for chain and tree log-linear models, sampled-target
//! approximations for sequence spaces, and the synthetic cost-sensitive
//! classification experiment. File formats, the CLI and parallel sweeps
//! live in the `sqd` crate.
//!
//! ```
//! use sqd_core::distributions::{payoff_distribution, OutputSpace, Temperature};
//! use sqd_core::reward::RewardMatrix;
//!
//! let space = OutputSpace::indices(2);
//! let reward = RewardMatrix::identity(2);
//! let q = payoff_distribution(&0, Temperature::new(1.0).unwrap(), &space, &reward).unwrap();
//! assert!((q.prob(0) - 0.7310585786300049).abs() < 1e-12);
//! ```
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod chain;
pub mod distributions;
mod error;
pub mod linear;
pub mod math;
pub mod reward;
pub mod rng;
pub mod sampling;
pub mod stats;
pub mod synthetic;
pub mod tree;

pub use error::{Error, Result};

/// Training objective shared by every model family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Objective {
    /// Maximum likelihood on the observed outputs.
    Ml,
    /// Reward-augmented maximum likelihood: targets are exponentiated payoff
    /// distributions around each reference.
    Raml,
    /// Softmax Q-distribution maximum likelihood: targets are softmaxes of
    /// the empirical conditional reward.
    Sqdml,
}

impl Objective {
    pub const ALL: [Objective; 3] = [Objective::Ml, Objective::Raml, Objective::Sqdml];

    pub fn name(self) -> &'static str {
        match self {
            Objective::Ml => "ml",
            Objective::Raml => "raml",
            Objective::Sqdml => "sqdml",
        }
    }

    pub fn parse(s: &str) -> Option<Objective> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ml" => Some(Objective::Ml),
            "raml" => Some(Objective::Raml),
            "sqdml" => Some(Objective::Sqdml),
            _ => None,
        }
    }
}

impl core::fmt::Display for Objective {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}
