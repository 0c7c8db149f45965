//! Exact target distributions over finite output spaces.
//!
//! Every quantity here is a [`Categorical`] over an [`OutputSpace`]: the data
//! conditional `P(Y|x)`, the exponentiated payoff distribution
//! `q(y|y*; tau) ∝ exp(r(y, y*)/tau)`, the softmax Q-distribution
//! `Q(z|x) ∝ exp(E_{P(Y|x)}[r(z, Y)]/tau)` and its mixture approximation
//! `Q'(z|x) = E_{P(Y|x)}[q(z|Y; tau)]`, together with their empirical
//! counterparts built from a labeled dataset.
//!
//! All normalization is done on log-weights with max subtraction; a
//! `Categorical` keeps both probabilities and log-probabilities so that KL
//! divergences stay exact when probabilities underflow at small `tau`.
//!
//! Argmax ties are broken towards the lowest index in space order.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::math::{self, exp, ln};
use crate::reward::RewardFunction;
use crate::{Error, Result};

/// Softmax temperature, strictly positive and finite.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Temperature(f64);

impl Temperature {
    pub fn new(tau: f64) -> Result<Self> {
        if tau > 0.0 && tau.is_finite() {
            Ok(Temperature(tau))
        } else {
            Err(Error::InvalidTemperature(tau))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Ordered finite set of distinct outputs.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputSpace<Y> {
    elements: Vec<Y>,
}

impl<Y: PartialEq> OutputSpace<Y> {
    pub fn new(elements: Vec<Y>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidSpace("output space is empty".into()));
        }
        for i in 0..elements.len() {
            if elements[..i].contains(&elements[i]) {
                return Err(Error::InvalidSpace(format!("duplicate element at {i}")));
            }
        }
        Ok(OutputSpace { elements })
    }

    pub fn index_of(&self, y: &Y) -> Option<usize> {
        self.elements.iter().position(|e| e == y)
    }
}

impl<Y> OutputSpace<Y> {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn get(&self, i: usize) -> &Y {
        &self.elements[i]
    }

    pub fn elements(&self) -> &[Y] {
        &self.elements
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Y> {
        self.elements.iter()
    }
}

impl OutputSpace<usize> {
    /// The space `{0, 1, ..., n-1}`.
    pub fn indices(n: usize) -> Self {
        assert!(n > 0, "output space must be non-empty");
        OutputSpace {
            elements: (0..n).collect(),
        }
    }
}

/// Probability table over an output space.
#[derive(Clone, Debug, PartialEq)]
pub struct Categorical {
    probs: Vec<f64>,
    log_probs: Vec<f64>,
}

impl Categorical {
    /// Validates and stores `probs`. Entries must be finite and nonnegative
    /// and sum to one within `1e-9`; the table is then rescaled to sum
    /// exactly to one up to rounding.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty probability table".into()));
        }
        if let Some(i) = probs.iter().position(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "entry {i} is {}",
                probs[i]
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {sum}")));
        }
        let probs: Vec<f64> = probs.into_iter().map(|p| p / sum).collect();
        let log_probs = probs.iter().map(|&p| ln(p)).collect();
        Ok(Categorical { probs, log_probs })
    }

    /// Normalizes unnormalized log-weights (`-inf` allowed for zeros).
    pub fn from_log_weights(mut log_weights: Vec<f64>) -> Result<Self> {
        if log_weights.is_empty() {
            return Err(Error::InvalidDistribution("empty probability table".into()));
        }
        if let Some(i) = log_weights
            .iter()
            .position(|w| w.is_nan() || *w == f64::INFINITY)
        {
            return Err(Error::InvalidDistribution(format!(
                "log-weight {i} is {}",
                log_weights[i]
            )));
        }
        let z = math::log_normalize(&mut log_weights);
        if !z.is_finite() {
            return Err(Error::InvalidDistribution("all weights are zero".into()));
        }
        let probs = log_weights.iter().map(|&l| exp(l)).collect();
        Ok(Categorical {
            probs,
            log_probs: log_weights,
        })
    }

    pub fn point_mass(n: usize, index: usize) -> Self {
        assert!(index < n);
        let mut probs = alloc::vec![0.0; n];
        probs[index] = 1.0;
        let log_probs = probs.iter().map(|&p| ln(p)).collect();
        Categorical { probs, log_probs }
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0);
        let p = 1.0 / n as f64;
        Categorical {
            probs: alloc::vec![p; n],
            log_probs: alloc::vec![-ln(n as f64); n],
        }
    }

    /// `Σ_k w_k p_k` for nonnegative weights summing to one.
    pub fn mixture(components: &[(f64, &Categorical)]) -> Result<Self> {
        let n = components
            .first()
            .map(|(_, c)| c.len())
            .ok_or_else(|| Error::InvalidDistribution("empty mixture".into()))?;
        let mut log_weights = alloc::vec![f64::NEG_INFINITY; n];
        for (w, c) in components {
            if c.len() != n {
                return Err(Error::SpaceMismatch(n, c.len()));
            }
            if *w <= 0.0 {
                continue;
            }
            let lw = ln(*w);
            for (acc, &lp) in log_weights.iter_mut().zip(&c.log_probs) {
                *acc = math::log_add_exp(*acc, lw + lp);
            }
        }
        Self::from_log_weights(log_weights)
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    #[inline]
    pub fn prob(&self, i: usize) -> f64 {
        self.probs[i]
    }

    #[inline]
    pub fn log_prob(&self, i: usize) -> f64 {
        self.log_probs[i]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn log_probs(&self) -> &[f64] {
        &self.log_probs
    }

    /// Most probable index, lowest index on ties.
    pub fn argmax(&self) -> usize {
        math::argmax(&self.log_probs)
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        self.probs
            .iter()
            .zip(&self.log_probs)
            .filter(|(p, _)| **p > 0.0)
            .map(|(p, lp)| -p * lp)
            .sum()
    }
}

/// `n x n` table of `r(space[candidate], space[reference])`, row-major by
/// candidate.
fn reward_table<Y, R: RewardFunction<Y> + ?Sized>(
    space: &OutputSpace<Y>,
    r: &R,
) -> Result<Vec<f64>> {
    let n = space.len();
    let mut table = Vec::with_capacity(n * n);
    for (c, cand) in space.iter().enumerate() {
        for (s, reference) in space.iter().enumerate() {
            let v = r.reward(cand, reference);
            if !v.is_finite() {
                return Err(Error::InvalidReward {
                    value: v,
                    candidate: c,
                    reference: s,
                });
            }
            table.push(v);
        }
    }
    Ok(table)
}

fn check_len<Y>(space: &OutputSpace<Y>, cond: &Categorical) -> Result<()> {
    if space.len() != cond.len() {
        return Err(Error::SpaceMismatch(space.len(), cond.len()));
    }
    Ok(())
}

fn payoff_from_column(table: &[f64], n: usize, reference: usize, tau: Temperature) -> Result<Categorical> {
    let t = tau.value();
    Categorical::from_log_weights((0..n).map(|c| table[c * n + reference] / t).collect())
}

/// Exponentiated payoff distribution `q(y|y*; tau) ∝ exp(r(y, y*)/tau)`.
pub fn payoff_distribution<Y: PartialEq, R: RewardFunction<Y> + ?Sized>(
    y_star: &Y,
    tau: Temperature,
    space: &OutputSpace<Y>,
    r: &R,
) -> Result<Categorical> {
    space.index_of(y_star).ok_or(Error::NotInSpace)?;
    let t = tau.value();
    let mut log_weights = Vec::with_capacity(space.len());
    for (c, y) in space.iter().enumerate() {
        let v = r.reward(y, y_star);
        if !v.is_finite() {
            return Err(Error::InvalidReward {
                value: v,
                candidate: c,
                reference: space.index_of(y_star).unwrap_or(0),
            });
        }
        log_weights.push(v / t);
    }
    Categorical::from_log_weights(log_weights)
}

/// Conditional reward `R(z|x) = Σ_y cond(y) r(z, y)`.
pub fn conditional_reward<Y: PartialEq, R: RewardFunction<Y> + ?Sized>(
    z: &Y,
    space: &OutputSpace<Y>,
    cond: &Categorical,
    r: &R,
) -> Result<f64> {
    check_len(space, cond)?;
    space.index_of(z).ok_or(Error::NotInSpace)?;
    let mut total = 0.0;
    for (i, y) in space.iter().enumerate() {
        let p = cond.prob(i);
        if p == 0.0 {
            continue;
        }
        let v = r.reward(z, y);
        if !v.is_finite() {
            return Err(Error::InvalidReward {
                value: v,
                candidate: space.index_of(z).unwrap_or(0),
                reference: i,
            });
        }
        total += p * v;
    }
    Ok(total)
}

fn conditional_rewards_from_table(table: &[f64], cond: &Categorical) -> Vec<f64> {
    let n = cond.len();
    (0..n)
        .map(|z| {
            (0..n)
                .filter(|&y| cond.prob(y) > 0.0)
                .map(|y| cond.prob(y) * table[z * n + y])
                .sum()
        })
        .collect()
}

/// Softmax Q-distribution `Q(z) ∝ exp(E_{Y~cond}[r(z, Y)]/tau)`.
pub fn softmax_q<Y, R: RewardFunction<Y> + ?Sized>(
    space: &OutputSpace<Y>,
    cond: &Categorical,
    tau: Temperature,
    r: &R,
) -> Result<Categorical> {
    check_len(space, cond)?;
    let table = reward_table(space, r)?;
    let t = tau.value();
    let log_weights = conditional_rewards_from_table(&table, cond)
        .into_iter()
        .map(|v| v / t)
        .collect();
    Categorical::from_log_weights(log_weights)
}

/// Mixture approximation `Q'(z) = Σ_y cond(y) q(z|y; tau)`.
pub fn q_prime<Y, R: RewardFunction<Y> + ?Sized>(
    space: &OutputSpace<Y>,
    cond: &Categorical,
    tau: Temperature,
    r: &R,
) -> Result<Categorical> {
    check_len(space, cond)?;
    let n = space.len();
    let table = reward_table(space, r)?;
    let mut log_q = alloc::vec![f64::NEG_INFINITY; n];
    for y in (0..n).filter(|&y| cond.prob(y) > 0.0) {
        let payoff = payoff_from_column(&table, n, y, tau)?;
        let lw = cond.log_prob(y);
        for (acc, &lp) in log_q.iter_mut().zip(payoff.log_probs()) {
            *acc = math::log_add_exp(*acc, lw + lp);
        }
    }
    Categorical::from_log_weights(log_q)
}

/// Bayes decision rule: `argmax_z R(z|x)`, lowest index on ties.
pub fn bayes_decision<Y, R: RewardFunction<Y> + ?Sized>(
    space: &OutputSpace<Y>,
    cond: &Categorical,
    r: &R,
) -> Result<usize> {
    check_len(space, cond)?;
    let table = reward_table(space, r)?;
    Ok(math::argmax(&conditional_rewards_from_table(&table, cond)))
}

/// Bayes classifier: the most probable output, lowest index on ties.
pub fn bayes_classifier(cond: &Categorical) -> usize {
    math::argmax(cond.probs())
}

/// Decodes the softmax Q-distribution. Equal to [`bayes_decision`] for every
/// temperature whenever the conditional-reward maximizer is unique.
pub fn decode_q_argmax<Y, R: RewardFunction<Y> + ?Sized>(
    space: &OutputSpace<Y>,
    cond: &Categorical,
    r: &R,
    tau: Temperature,
) -> Result<usize> {
    Ok(softmax_q(space, cond, tau, r)?.argmax())
}

/// Observed `(input, output index)` pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset<X> {
    pairs: Vec<(X, usize)>,
    space_size: usize,
}

impl<X> LabeledDataset<X> {
    pub fn new(pairs: Vec<(X, usize)>, space_size: usize) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if pairs.iter().any(|(_, y)| *y >= space_size) {
            return Err(Error::NotInSpace);
        }
        Ok(LabeledDataset { pairs, space_size })
    }

    pub fn pairs(&self) -> &[(X, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn space_size(&self) -> usize {
        self.space_size
    }
}

/// Unsmoothed empirical conditionals `P~(y|x) = count(x, y) / count(x)`.
pub fn empirical_conditionals<X: Ord + Clone>(
    data: &LabeledDataset<X>,
) -> Result<BTreeMap<X, Categorical>> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = data.space_size();
    let mut counts: BTreeMap<X, Vec<usize>> = BTreeMap::new();
    for (x, y) in data.pairs() {
        counts.entry(x.clone()).or_insert_with(|| alloc::vec![0; n])[*y] += 1;
    }
    counts
        .into_iter()
        .map(|(x, c)| {
            let total: usize = c.iter().sum();
            let log_weights = c
                .iter()
                .map(|&k| if k == 0 { f64::NEG_INFINITY } else { ln(k as f64) - ln(total as f64) })
                .collect();
            Categorical::from_log_weights(log_weights).map(|cat| (x, cat))
        })
        .collect()
}

fn empirical_conditional_at<X: Ord + Clone>(x: &X, data: &LabeledDataset<X>) -> Result<Categorical> {
    let n = data.space_size();
    let mut counts = alloc::vec![0usize; n];
    for (xi, y) in data.pairs() {
        if xi == x {
            counts[*y] += 1;
        }
    }
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(Error::UnseenInput);
    }
    Categorical::from_probs(counts.iter().map(|&k| k as f64 / total as f64).collect())
}

/// Empirical softmax Q-distribution `Q~(·|x)`: [`softmax_q`] applied to the
/// empirical conditional of `x`.
pub fn sqdml_target<X: Ord + Clone, Y, R: RewardFunction<Y> + ?Sized>(
    x: &X,
    data: &LabeledDataset<X>,
    space: &OutputSpace<Y>,
    tau: Temperature,
    r: &R,
) -> Result<Categorical> {
    let cond = empirical_conditional_at(x, data)?;
    softmax_q(space, &cond, tau, r)
}

/// Empirical RAML target `Q~'(·|x)`: the frequency-weighted mixture of the
/// payoff distributions of the references observed with `x`.
pub fn raml_target<X: Ord + Clone, Y, R: RewardFunction<Y> + ?Sized>(
    x: &X,
    data: &LabeledDataset<X>,
    space: &OutputSpace<Y>,
    tau: Temperature,
    r: &R,
) -> Result<Categorical> {
    let cond = empirical_conditional_at(x, data)?;
    q_prime(space, &cond, tau, r)
}

/// `KL(p || q) = Σ p log(p/q)` with `0 log 0 = 0`.
pub fn kl(p: &Categorical, q: &Categorical) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::SpaceMismatch(p.len(), q.len()));
    }
    let mut total = 0.0;
    for i in 0..p.len() {
        let pi = p.prob(i);
        if pi == 0.0 {
            continue;
        }
        let lq = q.log_prob(i);
        if lq == f64::NEG_INFINITY {
            return Err(Error::SupportViolation(i));
        }
        total += pi * (p.log_prob(i) - lq);
    }
    // Rounding can leave a tiny negative value for p == q.
    Ok(total.max(0.0))
}

/// Outcome of checking `KL(Q || Q') <= 2R/tau` on one conditional.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Theorem1Report {
    pub kl: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Evaluates `KL(Q(·|x) || Q'(·|x))` against `2R/tau`.
///
/// The joint divergence is the `P(X)`-average of these per-input values, so
/// a per-input check implies the joint bound.
pub fn verify_theorem1<Y, R: RewardFunction<Y> + ?Sized>(
    space: &OutputSpace<Y>,
    cond: &Categorical,
    r: &R,
    tau: Temperature,
) -> Result<Theorem1Report> {
    let q = softmax_q(space, cond, tau, r)?;
    let qp = q_prime(space, cond, tau, r)?;
    let kl = kl(&q, &qp)?;
    let bound = 2.0 * r.upper_bound() / tau.value();
    Ok(Theorem1Report {
        kl,
        bound,
        holds: kl <= bound,
    })
}

/// `KL(Q || Q')` and `2R/tau` along a temperature grid.
pub fn kl_profile<Y, R: RewardFunction<Y> + ?Sized>(
    space: &OutputSpace<Y>,
    cond: &Categorical,
    r: &R,
    taus: &[Temperature],
) -> Result<Vec<(f64, Theorem1Report)>> {
    taus.iter()
        .map(|&t| verify_theorem1(space, cond, r, t).map(|rep| (t.value(), rep)))
        .collect()
}

/// Margin `gamma` and tail constant `c` of the small-temperature bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MarginAssumption {
    gamma: f64,
    c: f64,
    b: f64,
}

impl MarginAssumption {
    pub fn new(gamma: f64, c: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::InvalidArgument(format!("gamma must lie in (0, 1), got {gamma}")));
        }
        if !(c > 0.0) || c.is_nan() {
            return Err(Error::InvalidArgument(format!("tail constant must be positive, got {c}")));
        }
        let b = gamma * gamma / ((1.0 - gamma) * (1.0 - gamma));
        Ok(MarginAssumption { gamma, c, b })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// `gamma^2 / (1 - gamma)^2`.
    pub fn b(&self) -> f64 {
        self.b
    }

    /// `1 / (1 + exp(c b))`.
    pub fn bound(&self) -> f64 {
        1.0 / (1.0 + exp(self.c * self.b))
    }

    /// `-ln(1 - exp(-c b))`, the limit the derivation of [`Self::bound`]
    /// passes through before relaxing it. It can exceed [`Self::bound`]:
    /// the relaxation `x / (1 - x)` with `x = exp(-c b)` equals
    /// `1 / (exp(c b) - 1)`, not `1 / (1 + exp(c b))`.
    pub fn log_bound(&self) -> f64 {
        -math::ln_1p(-exp(-self.c * self.b))
    }
}

/// Settings for [`verify_theorem2`].
#[derive(Clone, Debug, PartialEq)]
pub struct Theorem2Options {
    /// Additive slack on the asymptotic bound.
    pub slack: f64,
    /// Largest temperature accepted as "small".
    pub tau_max: f64,
    /// Values of `t` in `[0, 1)` at which the tail inequality is checked.
    pub t_grid: Vec<f64>,
}

impl Default for Theorem2Options {
    fn default() -> Self {
        Theorem2Options {
            slack: 1e-3,
            tau_max: 1e-2,
            t_grid: (0..1000).map(|i| i as f64 / 1000.0).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Theorem2Report {
    pub kl: f64,
    pub bound: f64,
    /// Mode of the conditional, used as `y*` in the tail inequality.
    pub y_star: usize,
    pub margin_ok: bool,
    pub tail_ok: bool,
    pub tau_ok: bool,
    /// `kl <= bound + slack`. Only meaningful when the three preconditions
    /// hold; otherwise the comparison is advisory.
    pub holds: bool,
    pub log_bound: f64,
    /// `kl <= log_bound + slack`.
    pub log_holds: bool,
}

/// Checks `r(y, y) - r(y', y) >= gamma R` for all `y' != y`.
pub fn margin_holds<Y, R: RewardFunction<Y> + ?Sized>(
    space: &OutputSpace<Y>,
    r: &R,
    gamma: f64,
) -> Result<bool> {
    let n = space.len();
    let table = reward_table(space, r)?;
    let need = gamma * r.upper_bound();
    for y in 0..n {
        for c in (0..n).filter(|&c| c != y) {
            if table[y * n + y] - table[c * n + y] < need - 1e-12 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Tail probability `P(r(y*, y*) - r(Y, y*) >= t R)` under `cond`.
pub fn tail_probability<Y, R: RewardFunction<Y> + ?Sized>(
    space: &OutputSpace<Y>,
    cond: &Categorical,
    r: &R,
    y_star: usize,
    t: f64,
) -> Result<f64> {
    check_len(space, cond)?;
    let (ys, big_r) = (space.get(y_star), r.upper_bound());
    let top = r.reward(ys, ys);
    let mut p = 0.0;
    for (i, y) in space.iter().enumerate() {
        if top - r.reward(y, ys) >= t * big_r - 1e-12 {
            p += cond.prob(i);
        }
    }
    Ok(p)
}

/// Checks `P(gap >= tR) <= exp(-c t^2/(1-t)^2)` at every grid point.
pub fn tail_bound_holds<Y, R: RewardFunction<Y> + ?Sized>(
    space: &OutputSpace<Y>,
    cond: &Categorical,
    r: &R,
    y_star: usize,
    c: f64,
    t_grid: &[f64],
) -> Result<bool> {
    for &t in t_grid.iter().filter(|t| (0.0..1.0).contains(*t)) {
        let p = tail_probability(space, cond, r, y_star, t)?;
        let limit = exp(-c * t * t / ((1.0 - t) * (1.0 - t)));
        if p > limit * (1.0 + 1e-12) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Largest `c` for which the tail inequality holds for every `t` in
/// `[0, 1)`.
///
/// The tail probability is a step function of `t` that only drops just
/// after each attained gap `g_k = (r(y*, y*) - r(y, y*))/R`, so the binding
/// constraints are at `t = g_k`. Returns `None` when some output other than
/// `y*` with positive probability has gap `>= 1`, in which case no `c > 0`
/// works.
pub fn fit_tail_constant<Y, R: RewardFunction<Y> + ?Sized>(
    space: &OutputSpace<Y>,
    cond: &Categorical,
    r: &R,
    y_star: usize,
) -> Result<Option<f64>> {
    check_len(space, cond)?;
    let big_r = r.upper_bound();
    let ys = space.get(y_star);
    let top = r.reward(ys, ys);
    let mut best = f64::INFINITY;
    for (i, y) in space.iter().enumerate() {
        if i == y_star || cond.prob(i) == 0.0 {
            continue;
        }
        let g = (top - r.reward(y, ys)) / big_r;
        if g <= 0.0 {
            continue;
        }
        if g >= 1.0 {
            return Ok(None);
        }
        let p = tail_probability(space, cond, r, y_star, g)?;
        if p >= 1.0 {
            return Ok(None);
        }
        let c = -ln(p) * (1.0 - g) * (1.0 - g) / (g * g);
        best = best.min(c);
    }
    Ok(best.is_finite().then_some(best))
}

/// Small-temperature check of `KL(Q || Q') <= 1/(1 + exp(c b))`.
///
/// The bound is a `tau -> 0` limit, so the comparison is made at a finite
/// `tau <= options.tau_max` with additive slack. Failed preconditions are
/// reported rather than raised.
pub fn verify_theorem2<Y, R: RewardFunction<Y> + ?Sized>(
    assumption: &MarginAssumption,
    space: &OutputSpace<Y>,
    cond: &Categorical,
    r: &R,
    tau: Temperature,
    options: &Theorem2Options,
) -> Result<Theorem2Report> {
    let y_star = bayes_classifier(cond);
    let margin_ok = margin_holds(space, r, assumption.gamma())?;
    let tail_ok = tail_bound_holds(space, cond, r, y_star, assumption.c(), &options.t_grid)?;
    let q = softmax_q(space, cond, tau, r)?;
    let qp = q_prime(space, cond, tau, r)?;
    let kl = kl(&q, &qp)?;
    let bound = assumption.bound();
    let log_bound = assumption.log_bound();
    Ok(Theorem2Report {
        log_bound,
        log_holds: kl <= log_bound + options.slack,
        kl,
        bound,
        y_star,
        margin_ok,
        tail_ok,
        tau_ok: tau.value() <= options.tau_max,
        holds: kl <= bound + options.slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reward::{RewardMatrix, ZeroReward};
    use alloc::vec;

    fn tau(t: f64) -> Temperature {
        Temperature::new(t).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn temperature_must_be_positive() {
        assert!(Temperature::new(0.0).is_err());
        assert!(Temperature::new(-1.0).is_err());
        assert!(Temperature::new(f64::INFINITY).is_err());
        assert!(Temperature::new(1e-9).is_ok());
    }

    #[test]
    fn output_space_rejects_duplicates() {
        assert!(OutputSpace::new(vec!['a', 'b', 'a']).is_err());
        assert!(OutputSpace::<char>::new(vec![]).is_err());
    }

    #[test]
    fn categorical_validation() {
        assert!(Categorical::from_probs(vec![0.5, 0.6]).is_err());
        assert!(Categorical::from_probs(vec![-0.1, 1.1]).is_err());
        assert!(Categorical::from_log_weights(vec![f64::NEG_INFINITY; 2]).is_err());
        let c = Categorical::from_log_weights(vec![0.0, f64::NEG_INFINITY]).unwrap();
        assert_eq!(c.probs(), &[1.0, 0.0]);
    }

    #[test]
    fn payoff_two_outputs() {
        let space = OutputSpace::new(vec!['a', 'b']).unwrap();
        let r = |c: &char, s: &char| if c == s { 1.0 } else { 0.0 };
        let r = FnReward(r, 1.0);
        let q = payoff_distribution(&'a', tau(1.0), &space, &r).unwrap();
        let e = core::f64::consts::E;
        assert!(close(q.probs(), &[e / (e + 1.0), 1.0 / (e + 1.0)], 1e-12));
        assert!(close(q.probs(), &[0.7311, 0.2689], 1e-4));
        assert!(payoff_distribution(&'z', tau(1.0), &space, &r).is_err());
    }

    #[test]
    fn payoff_large_tau_is_uniform() {
        let space = OutputSpace::indices(5);
        let r = RewardMatrix::diagonal(&[3.0, 1.0, 2.0, 5.0, 0.5]).unwrap();
        for y in 0..5 {
            let q = payoff_distribution(&y, tau(1e9), &space, &r).unwrap();
            assert!(q.probs().iter().all(|p| (p - 0.2).abs() < 1e-6));
        }
    }

    #[test]
    fn payoff_synthetic_reward_matrix() {
        let diag = [exp(2.0), exp(1.6), exp(1.2), exp(1.1)];
        let r = RewardMatrix::diagonal(&diag).unwrap();
        let q = payoff_distribution(&0, tau(1.0), &OutputSpace::indices(4), &r).unwrap();
        let top = exp(exp(2.0));
        let z = top + 3.0;
        assert!(close(q.probs(), &[top / z, 1.0 / z, 1.0 / z, 1.0 / z], 1e-12));
    }

    #[test]
    fn payoff_rejects_non_finite_reward() {
        let space = OutputSpace::indices(2);
        let r = FnReward(|c: &usize, _: &usize| if *c == 1 { f64::NAN } else { 0.0 }, 1.0);
        assert!(matches!(
            payoff_distribution(&0, tau(1.0), &space, &r),
            Err(Error::InvalidReward { .. })
        ));
    }

    #[test]
    fn softmax_q_point_mass_equals_payoff() {
        let space = OutputSpace::indices(3);
        let r = RewardMatrix::new(3, vec![1.0, 0.2, 0.3, 0.1, 0.9, 0.0, 0.4, 0.5, 0.7]).unwrap();
        for y in 0..3 {
            let cond = Categorical::point_mass(3, y);
            let q = softmax_q(&space, &cond, tau(0.7), &r).unwrap();
            let p = payoff_distribution(&y, tau(0.7), &space, &r).unwrap();
            assert!(close(q.probs(), p.probs(), 1e-12));
            let qp = q_prime(&space, &cond, tau(0.7), &r).unwrap();
            assert!(close(qp.probs(), p.probs(), 1e-12));
        }
    }

    #[test]
    fn symmetric_conditionals_give_uniform() {
        let space = OutputSpace::indices(2);
        let r = RewardMatrix::identity(2);
        let cond = Categorical::uniform(2);
        let q = softmax_q(&space, &cond, tau(1.0), &r).unwrap();
        assert!(close(q.probs(), &[0.5, 0.5], 1e-15));
        let qp = q_prime(&space, &cond, tau(1.0), &r).unwrap();
        assert!(close(qp.probs(), &[0.5, 0.5], 1e-15));
    }

    #[test]
    fn conditional_reward_cases() {
        let space = OutputSpace::indices(3);
        let r = RewardMatrix::new(3, vec![1.0, 0.2, 0.3, 0.1, 0.9, 0.0, 0.4, 0.5, 0.7]).unwrap();
        let cond = Categorical::point_mass(3, 2);
        assert_eq!(conditional_reward(&0, &space, &cond, &r).unwrap(), 0.3);
        let zero = ZeroReward;
        let cond = Categorical::from_probs(vec![0.2, 0.5, 0.3]).unwrap();
        for z in 0..3 {
            assert_eq!(conditional_reward(&z, &space, &cond, &zero).unwrap(), 0.0);
        }
    }

    #[test]
    fn bayes_classifier_ties_and_argmax() {
        assert_eq!(bayes_classifier(&Categorical::point_mass(4, 2)), 2);
        assert_eq!(bayes_classifier(&Categorical::from_probs(vec![0.2, 0.5, 0.3]).unwrap()), 1);
        assert_eq!(bayes_classifier(&Categorical::uniform(4)), 0);
    }

    #[test]
    fn bayes_decision_identity_reward_is_classifier() {
        let space = OutputSpace::indices(3);
        let r = RewardMatrix::identity(3);
        let cond = Categorical::from_probs(vec![0.2, 0.5, 0.3]).unwrap();
        assert_eq!(bayes_decision(&space, &cond, &r).unwrap(), 1);
        assert_eq!(decode_q_argmax(&space, &cond, &r, tau(0.3)).unwrap(), 1);
        let single = OutputSpace::indices(1);
        let c1 = Categorical::uniform(1);
        assert_eq!(decode_q_argmax(&single, &c1, &RewardMatrix::identity(1), tau(5.0)).unwrap(), 0);
    }

    #[test]
    fn uniform_conditional_picks_highest_diagonal() {
        let diag = [exp(2.0), exp(1.6), exp(1.2), exp(1.1)];
        let r = RewardMatrix::diagonal(&diag).unwrap();
        let cond = Categorical::uniform(4);
        assert_eq!(bayes_decision(&OutputSpace::indices(4), &cond, &r).unwrap(), 0);
    }

    #[test]
    fn empirical_conditionals_count() {
        let data = LabeledDataset::new(vec![("x", 0), ("x", 0), ("x", 1), ("w", 1)], 2).unwrap();
        let conds = empirical_conditionals(&data).unwrap();
        assert!(close(conds["x"].probs(), &[2.0 / 3.0, 1.0 / 3.0], 1e-15));
        assert_eq!(conds["w"].probs(), &[0.0, 1.0]);
        assert!(LabeledDataset::<u8>::new(vec![], 2).is_err());
        assert!(LabeledDataset::new(vec![(0u8, 5)], 2).is_err());
    }

    #[test]
    fn sqdml_target_two_references() {
        let space = OutputSpace::indices(2);
        let r = RewardMatrix::identity(2);
        let data = LabeledDataset::new(vec![(7, 0), (7, 0), (7, 1)], 2).unwrap();
        let q = sqdml_target(&7, &data, &space, tau(1.0), &r).unwrap();
        let (a, b) = (exp(2.0 / 3.0), exp(1.0 / 3.0));
        assert!(close(q.probs(), &[a / (a + b), b / (a + b)], 1e-12));
        assert_eq!(sqdml_target(&8, &data, &space, tau(1.0), &r), Err(Error::UnseenInput));
        assert_eq!(raml_target(&8, &data, &space, tau(1.0), &r), Err(Error::UnseenInput));
    }

    #[test]
    fn raml_target_equal_counts_averages_payoffs() {
        let space = OutputSpace::indices(3);
        let r = RewardMatrix::identity(3);
        let data = LabeledDataset::new(vec![(1, 0), (1, 2)], 3).unwrap();
        let got = raml_target(&1, &data, &space, tau(0.5), &r).unwrap();
        let p0 = payoff_distribution(&0, tau(0.5), &space, &r).unwrap();
        let p2 = payoff_distribution(&2, tau(0.5), &space, &r).unwrap();
        let want: Vec<f64> = (0..3).map(|i| 0.5 * (p0.prob(i) + p2.prob(i))).collect();
        assert!(close(got.probs(), &want, 1e-15));
    }

    #[test]
    fn kl_cases() {
        let p = Categorical::from_probs(vec![0.1, 0.6, 0.3]).unwrap();
        assert_eq!(kl(&p, &p).unwrap(), 0.0);
        let a = Categorical::point_mass(2, 0);
        let u = Categorical::uniform(2);
        assert!((kl(&a, &u).unwrap() - ln(2.0)).abs() < 1e-15);
        assert_eq!(kl(&u, &a), Err(Error::SupportViolation(1)));
        assert!(kl(&p, &u).is_err());
    }

    #[test]
    fn theorem1_examples() {
        let space = OutputSpace::indices(2);
        let r = RewardMatrix::identity(2);
        let rep = verify_theorem1(&space, &Categorical::uniform(2), &r, tau(1.0)).unwrap();
        assert!(rep.kl.abs() < 1e-15 && rep.bound == 2.0 && rep.holds);
        let r3 = RewardMatrix::new(3, vec![1.0, 0.2, 0.3, 0.1, 0.9, 0.0, 0.4, 0.5, 0.7]).unwrap();
        let rep = verify_theorem1(&OutputSpace::indices(3), &Categorical::point_mass(3, 1), &r3, tau(0.1)).unwrap();
        assert!(rep.kl < 1e-12);
    }

    #[test]
    fn margin_assumption_b() {
        assert!((MarginAssumption::new(0.5, 1.0).unwrap().b() - 1.0).abs() < 1e-12);
        assert!((MarginAssumption::new(0.9, 1.0).unwrap().b() - 81.0).abs() < 1e-9);
        assert!(MarginAssumption::new(1.0, 1.0).is_err());
        assert!(MarginAssumption::new(0.5, 0.0).is_err());
    }

    #[test]
    fn tail_constant_identity_reward_has_no_fit() {
        // Gaps equal R, so the tail inequality fails near t = 1 for any c.
        let space = OutputSpace::indices(3);
        let r = RewardMatrix::identity(3);
        let cond = Categorical::from_probs(vec![0.99, 0.005, 0.005]).unwrap();
        assert_eq!(fit_tail_constant(&space, &cond, &r, 0).unwrap(), None);
    }

    #[test]
    fn theorem2_constructed_instance() {
        // r(y, y) = 1, r(y', y) = 0.5: margin gamma = 0.5, every gap is 0.5.
        let n = 4;
        let mut v = vec![0.5; n * n];
        for i in 0..n {
            v[i * n + i] = 1.0;
        }
        let r = RewardMatrix::new(n, v).unwrap();
        let space = OutputSpace::indices(n);
        let cond = Categorical::from_probs(vec![0.99, 0.005, 0.003, 0.002]).unwrap();
        let c = fit_tail_constant(&space, &cond, &r, 0).unwrap().unwrap();
        assert!((c - (-ln(0.01))).abs() < 1e-9);
        let a = MarginAssumption::new(0.5, c).unwrap();
        let rep = verify_theorem2(&a, &space, &cond, &r, tau(1e-3), &Theorem2Options::default()).unwrap();
        assert!(rep.margin_ok && rep.tail_ok && rep.tau_ok, "{rep:?}");
        assert!(rep.holds, "{rep:?}");
        assert!(rep.kl <= a.bound() + 1e-3);
    }

    #[test]
    fn stated_small_tau_bound_can_fail_where_the_log_bound_holds() {
        // Margin one half and mode mass m: KL -> -ln m, log_bound = -ln m,
        // bound = (1 - m)/(2 - m).
        let n = 3;
        let mut v = vec![0.5; n * n];
        for i in 0..n {
            v[i * n + i] = 1.0;
        }
        let r = RewardMatrix::new(n, v).unwrap();
        let space = OutputSpace::indices(n);
        let cond = Categorical::from_probs(vec![0.9, 0.06, 0.04]).unwrap();
        let c = fit_tail_constant(&space, &cond, &r, 0).unwrap().unwrap();
        let a = MarginAssumption::new(0.5, c).unwrap();
        assert!((a.log_bound() + ln(0.9)).abs() < 1e-12);
        assert!((a.bound() - 0.1 / 1.1).abs() < 1e-12);
        let rep = verify_theorem2(&a, &space, &cond, &r, tau(1e-3), &Theorem2Options::default()).unwrap();
        assert!(rep.margin_ok && rep.tail_ok && rep.tau_ok);
        assert!((rep.kl + ln(0.9)).abs() < 1e-9, "{rep:?}");
        assert!(rep.log_holds);
        assert!(!rep.holds);
    }

    struct FnReward<F>(F, f64);

    impl<Y, F: Fn(&Y, &Y) -> f64> RewardFunction<Y> for FnReward<F> {
        fn reward(&self, c: &Y, r: &Y) -> f64 {
            (self.0)(c, r)
        }
        fn upper_bound(&self) -> f64 {
            self.1
        }
    }
}
