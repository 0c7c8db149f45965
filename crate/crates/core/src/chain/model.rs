use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::features::ChainFeaturizer;
use super::metrics::{metrics_sequence, SequenceMetrics};
use super::inference::{forward_backward, token_accuracy_payoff_marginals, viterbi, ChainPotentials};
use crate::distributions::Temperature;
use crate::linear::{train_sgd, LinearModelParams, SgdConfig, SparseVector, TrainLog};
use crate::{Error, Objective, Result};

/// Closed label inventory.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LabelSet {
    names: Vec<String>,
}

impl LabelSet {
    /// Labels in first-seen order.
    pub fn from_sequences<'a, I, S>(seqs: I) -> Self
    where
        I: IntoIterator<Item = &'a [S]>,
        S: AsRef<str> + 'a,
    {
        let mut names: Vec<String> = Vec::new();
        for seq in seqs {
            for t in seq {
                if !names.iter().any(|n| n == t.as_ref()) {
                    names.push(t.as_ref().to_string());
                }
            }
        }
        LabelSet { names }
    }

    pub fn new(names: Vec<String>) -> Result<Self> {
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(Error::InvalidArgument(format!("duplicate label `{n}`")));
            }
        }
        Ok(LabelSet { names })
    }

    pub fn id(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownLabel(name.to_string()))
    }

    pub fn name(&self, id: usize) -> &str {
        &self.names[id]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// A featurized sentence; `obs[i]` lists the observation-feature ids firing
/// at position `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct TaggedSequence {
    pub tokens: Vec<String>,
    pub labels: Option<Vec<usize>>,
    pub obs: Vec<Vec<usize>>,
}

impl TaggedSequence {
    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }
}

/// Linear-chain CRF. Weight layout: `K*K` transition weights
/// (`a * K + b`), then emission weights at `K*K + obs * K + label`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainCrf {
    pub labels: LabelSet,
    pub features: ChainFeaturizer,
    pub params: LinearModelParams,
}

impl ChainCrf {
    pub fn new(labels: LabelSet) -> Self {
        let k = labels.len();
        ChainCrf {
            labels,
            features: ChainFeaturizer::new(),
            params: LinearModelParams::zeros(k * k),
        }
    }

    pub fn num_labels(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn transition_index(&self, a: usize, b: usize) -> usize {
        a * self.num_labels() + b
    }

    #[inline]
    pub fn emission_index(&self, obs: usize, label: usize) -> usize {
        let k = self.num_labels();
        k * k + obs * k + label
    }

    pub fn dim(&self) -> usize {
        let k = self.num_labels();
        k * k + self.features.len() * k
    }

    /// Featurizes a sentence, growing the feature set unless it is frozen.
    pub fn prepare<S: AsRef<str>>(&mut self, tokens: &[String], tags: Option<&[S]>) -> Result<TaggedSequence> {
        let labels = self.map_labels(tokens, tags)?;
        let obs = self.features.featurize(tokens);
        self.params.resize(self.dim());
        Ok(TaggedSequence {
            tokens: tokens.to_vec(),
            labels,
            obs,
        })
    }

    /// Featurizes without registering new features.
    pub fn prepare_frozen<S: AsRef<str>>(&self, tokens: &[String], tags: Option<&[S]>) -> Result<TaggedSequence> {
        let labels = self.map_labels(tokens, tags)?;
        Ok(TaggedSequence {
            tokens: tokens.to_vec(),
            labels,
            obs: self.features.featurize_frozen(tokens),
        })
    }

    fn map_labels<S: AsRef<str>>(&self, tokens: &[String], tags: Option<&[S]>) -> Result<Option<Vec<usize>>> {
        match tags {
            None => Ok(None),
            Some(t) if t.len() != tokens.len() => Err(Error::LengthMismatch(t.len(), tokens.len())),
            Some(t) => t.iter().map(|s| self.labels.id(s.as_ref())).collect::<Result<Vec<_>>>().map(Some),
        }
    }

    pub fn potentials(&self, seq: &TaggedSequence) -> Result<ChainPotentials> {
        self.potentials_with(&self.params, seq)
    }

    pub fn potentials_with(&self, params: &LinearModelParams, seq: &TaggedSequence) -> Result<ChainPotentials> {
        let (n, k) = (seq.len(), self.num_labels());
        if n == 0 {
            return Err(Error::InvalidArgument("empty sentence".into()));
        }
        let mut unary = vec![0.0; n * k];
        let mut ids = Vec::new();
        for (i, feats) in seq.obs.iter().enumerate() {
            for a in 0..k {
                ids.clear();
                ids.extend(feats.iter().map(|&f| self.emission_index(f, a)));
                unary[i * k + a] = params.dot_ids(&ids);
            }
        }
        let trans: Vec<f64> = (0..k * k).map(|j| params.get(j)).collect();
        let mut pairwise = Vec::with_capacity((n - 1) * k * k);
        for _ in 1..n {
            pairwise.extend_from_slice(&trans);
        }
        ChainPotentials::new(n, k, unary, pairwise)
    }

    pub fn predict(&self, seq: &TaggedSequence) -> Result<Vec<usize>> {
        Ok(viterbi(&self.potentials(seq)?))
    }

    /// Per-sentence loss `log Z - E_q[theta . phi]` and its gradient
    /// `E_p[phi] - E_q[phi]`, where `q` is the gold indicator for ML and
    /// the token-accuracy payoff distribution for RAML.
    ///
    /// Sentences are unique inputs, so the SQDML target coincides with the
    /// RAML one and `Objective::Sqdml` is handled as RAML.
    pub fn loss_and_gradient(
        &self,
        params: &LinearModelParams,
        seq: &TaggedSequence,
        objective: Objective,
        tau: Temperature,
    ) -> Result<(f64, SparseVector)> {
        let gold = seq
            .labels
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("sentence has no gold labels".into()))?;
        let (n, k) = (seq.len(), self.num_labels());
        let pot = self.potentials_with(params, seq)?;
        let m = forward_backward(&pot)?;
        let q: Vec<f64> = match objective {
            Objective::Ml => {
                let mut q = vec![0.0; n * k];
                for (i, &g) in gold.iter().enumerate() {
                    q[i * k + g] = 1.0;
                }
                q
            }
            Objective::Raml | Objective::Sqdml => token_accuracy_payoff_marginals(gold, tau, k)?
                .iter()
                .flat_map(|c| c.probs().iter().copied())
                .collect(),
        };
        let mut expected_score = 0.0;
        let mut grad = SparseVector::new();
        for i in 0..n {
            for a in 0..k {
                let qa = q[i * k + a];
                expected_score += qa * pot.unary(i, a);
                let d = m.unary(i, a) - qa;
                if d != 0.0 {
                    for &f in &seq.obs[i] {
                        grad.add(self.emission_index(f, a), d);
                    }
                }
            }
        }
        let mut tgrad = vec![0.0; k * k];
        for i in 1..n {
            for a in 0..k {
                for b in 0..k {
                    let qab = q[(i - 1) * k + a] * q[i * k + b];
                    expected_score += qab * pot.pairwise(i, a, b);
                    tgrad[a * k + b] += m.pairwise(i, a, b) - qab;
                }
            }
        }
        for (j, &v) in tgrad.iter().enumerate() {
            grad.add(j, v);
        }
        grad.compact();
        Ok((m.log_z - expected_score, grad))
    }

    /// SGD over `data` (sentences must carry gold labels).
    pub fn train(&mut self, data: &[TaggedSequence], objective: Objective, tau: Temperature, cfg: &SgdConfig) -> Result<TrainLog> {
        self.params.resize(self.dim());
        let mut params = core::mem::replace(&mut self.params, LinearModelParams::zeros(0));
        let log = train_sgd(&mut params, data.len(), cfg, |i, p| self.loss_and_gradient(p, &data[i], objective, tau));
        self.params = params;
        log
    }

    /// Decodes every sentence and scores it against its gold labels.
    pub fn evaluate(&self, data: &[TaggedSequence]) -> Result<SequenceMetrics> {
        let mut acc = SequenceMetrics::default();
        for seq in data {
            let gold = seq.labels.as_ref().ok_or_else(|| Error::InvalidArgument("missing gold labels".into()))?;
            let pred = self.predict(seq)?;
            let names = |ids: &[usize]| ids.iter().map(|&i| self.labels.name(i)).collect::<Vec<_>>();
            acc.add(&metrics_sequence(&names(&pred), &names(gold))?);
        }
        Ok(acc)
    }

    /// Nonzero weights as `(name, value)`, names `T|a|b` for transitions and
    /// `E|label|feature` for emissions.
    pub fn named_weights(&self) -> Vec<(String, f64)> {
        let k = self.num_labels();
        let mut out = Vec::new();
        for a in 0..k {
            for b in 0..k {
                let w = self.params.get(self.transition_index(a, b));
                if w != 0.0 {
                    out.push((format!("T|{}|{}", self.labels.name(a), self.labels.name(b)), w));
                }
            }
        }
        for f in 0..self.features.len() {
            for a in 0..k {
                let w = self.params.get(self.emission_index(f, a));
                if w != 0.0 {
                    out.push((format!("E|{}|{}", self.labels.name(a), self.features.index.name(f)), w));
                }
            }
        }
        out
    }

    /// Rebuilds a model from [`named_weights`](Self::named_weights) output.
    /// The feature index is frozen afterwards.
    pub fn from_named_weights<I, S>(labels: LabelSet, weights: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: AsRef<str>,
    {
        let mut model = ChainCrf::new(labels);
        let mut entries = Vec::new();
        for (name, w) in weights {
            let name = name.as_ref();
            let mut parts = name.splitn(3, '|');
            let (kind, a, rest) = (parts.next(), parts.next(), parts.next());
            match (kind, a, rest) {
                (Some("T"), Some(a), Some(b)) => {
                    let (a, b) = (model.labels.id(a)?, model.labels.id(b)?);
                    entries.push((model.transition_index(a, b), w));
                }
                (Some("E"), Some(a), Some(feat)) => {
                    let a = model.labels.id(a)?;
                    let f = model.features.index.intern(feat).expect("index not frozen");
                    let k = model.num_labels();
                    entries.push((k * k + f * k + a, w));
                }
                _ => return Err(Error::InvalidArgument(format!("bad weight name `{name}`"))),
            }
        }
        model.features.index.freeze();
        let mut weights = vec![0.0; model.dim()];
        for (i, w) in entries {
            weights[i] = w;
        }
        model.params = LinearModelParams::from_weights(weights)?;
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn ml_gradient_at_zero_is_uniform_minus_gold() {
        let labels = LabelSet::new(vec!["A".into(), "B".into(), "C".into()]).unwrap();
        let mut crf = ChainCrf::new(labels);
        let seq = crf.prepare(&toks("w"), Some(&["B"][..])).unwrap();
        let p = crf.params.clone();
        let (loss, g) = crf.loss_and_gradient(&p, &seq, Objective::Ml, Temperature::new(1.0).unwrap()).unwrap();
        assert!((loss - crate::math::ln(3.0)).abs() < 1e-12);
        let d = g.to_dense(crf.dim());
        for &f in &seq.obs[0] {
            assert!((d[crf.emission_index(f, 0)] - 1.0 / 3.0).abs() < 1e-12);
            assert!((d[crf.emission_index(f, 1)] + 2.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn overfits_single_sentence() {
        let labels = LabelSet::new(vec!["O".into(), "B-PER".into(), "I-PER".into()]).unwrap();
        let mut crf = ChainCrf::new(labels);
        let tags = ["O", "B-PER", "I-PER", "O"];
        let seq = crf.prepare(&toks("yesterday John Smith left"), Some(&tags[..])).unwrap();
        let cfg = SgdConfig { learning_rate: 0.5, epochs: 30, ..SgdConfig::default() };
        crf.train(core::slice::from_ref(&seq), Objective::Ml, Temperature::new(1.0).unwrap(), &cfg).unwrap();
        assert_eq!(crf.predict(&seq).unwrap(), seq.labels.clone().unwrap());
    }

    #[test]
    fn unknown_label_is_an_error() {
        let mut crf = ChainCrf::new(LabelSet::new(vec!["O".into()]).unwrap());
        assert!(matches!(crf.prepare(&toks("a"), Some(&["X"][..])), Err(Error::UnknownLabel(_))));
    }

    #[test]
    fn named_weights_round_trip() {
        let labels = LabelSet::new(vec!["O".into(), "X".into()]).unwrap();
        let mut crf = ChainCrf::new(labels.clone());
        let seq = crf.prepare(&toks("a b|c"), Some(&["O", "X"][..])).unwrap();
        let cfg = SgdConfig { epochs: 3, ..SgdConfig::default() };
        crf.train(core::slice::from_ref(&seq), Objective::Raml, Temperature::new(0.5).unwrap(), &cfg).unwrap();
        let back = ChainCrf::from_named_weights(labels, crf.named_weights()).unwrap();
        let seq2 = back.prepare_frozen(&seq.tokens, Some(&["O", "X"][..])).unwrap();
        let (a, b) = (crf.potentials(&seq).unwrap(), back.potentials(&seq2).unwrap());
        for i in 0..2 {
            for l in 0..2 {
                assert!((a.unary(i, l) - b.unary(i, l)).abs() < 1e-12);
            }
        }
    }
}
