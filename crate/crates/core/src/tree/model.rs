use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::decode::decode_tree;
use super::matrix_tree::{is_valid_tree, tree_partition_marginals, uas_payoff_edge_marginals, EdgePotentials, RootMode};
use crate::distributions::Temperature;
use crate::linear::{train_sgd, FeatureIndex, LinearModelParams, SgdConfig, SparseVector, TrainLog};
use crate::{Error, Objective, Result};

const ROOT: &str = "<ROOT>";

fn distance_bin(d: usize) -> &'static str {
    match d {
        0..=1 => "1",
        2 => "2",
        3 => "3",
        4..=5 => "4-5",
        6..=10 => "6-10",
        _ => "11+",
    }
}

fn coarse(w: &str) -> &str {
    w.char_indices().nth(1).map_or(w, |(i, _)| &w[..i])
}

/// Feature names of edge `h -> m` (`forms[0]` is the first word; head 0 is
/// the root): head and modifier words and their first characters, attachment
/// direction, binned distance and their conjunctions.
pub fn edge_feature_names(forms: &[String], h: usize, m: usize) -> Vec<String> {
    let hw = if h == 0 { ROOT } else { forms[h - 1].as_str() };
    let mw = forms[m - 1].as_str();
    let (hc, mc) = (if h == 0 { ROOT } else { coarse(hw) }, coarse(mw));
    let dir = if h < m { "R" } else { "L" };
    let dist = distance_bin(h.abs_diff(m));
    vec![
        String::from("bias"),
        format!("hw={hw}"),
        format!("mw={mw}"),
        format!("hw,mw={hw}|{mw}|{dir}"),
        format!("hc,mc={hc}|{mc}|{dir}"),
        format!("hw,dir={hw}|{dir}"),
        format!("mw,dir={mw}|{dir}"),
        format!("hc,mc,dist={hc}|{mc}|{dir}|{dist}"),
        format!("hw,mc,dist={hw}|{mc}|{dir}|{dist}"),
        format!("dir,dist={dir}|{dist}"),
    ]
}

/// A featurized sentence. `heads[j]` is the head of word `j + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct DepSentence {
    pub forms: Vec<String>,
    pub heads: Option<Vec<usize>>,
    /// Feature ids of edge `h -> m` at `h * (n + 1) + m`.
    pub edges: Vec<Vec<usize>>,
}

impl DepSentence {
    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }

    #[inline]
    pub fn edge(&self, h: usize, m: usize) -> &[usize] {
        &self.edges[h * (self.len() + 1) + m]
    }
}

/// Attachment counts over a corpus.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TreeMetrics {
    pub words: usize,
    pub correct: usize,
    pub sentences: usize,
    pub exact: usize,
}

impl TreeMetrics {
    pub fn of(pred: &[usize], gold: &[usize]) -> Result<Self> {
        if pred.len() != gold.len() {
            return Err(Error::LengthMismatch(pred.len(), gold.len()));
        }
        let correct = pred.iter().zip(gold).filter(|(a, b)| a == b).count();
        Ok(TreeMetrics {
            words: gold.len(),
            correct,
            sentences: 1,
            exact: usize::from(correct == gold.len()),
        })
    }

    pub fn add(&mut self, o: &TreeMetrics) {
        self.words += o.words;
        self.correct += o.correct;
        self.sentences += o.sentences;
        self.exact += o.exact;
    }

    pub fn uas(&self) -> f64 {
        self.correct as f64 / self.words as f64
    }

    pub fn exact_match(&self) -> f64 {
        self.exact as f64 / self.sentences as f64
    }
}

fn build<F>(forms: &[String], heads: Option<&[usize]>, mode: RootMode, mut lookup: F) -> Result<DepSentence>
where
    F: FnMut(&str) -> Option<usize>,
{
    let n = forms.len();
    if n == 0 {
        return Err(Error::InvalidArgument("empty sentence".into()));
    }
    if let Some(h) = heads {
        if h.len() != n {
            return Err(Error::LengthMismatch(h.len(), n));
        }
        if !is_valid_tree(h, mode) {
            return Err(Error::InvalidTree(format!("{h:?}")));
        }
    }
    let w = n + 1;
    let mut edges = vec![Vec::new(); w * w];
    for h in 0..=n {
        for m in (1..=n).filter(|&m| m != h) {
            edges[h * w + m] = edge_feature_names(forms, h, m).iter().filter_map(|f| lookup(f)).collect();
        }
    }
    Ok(DepSentence {
        forms: forms.to_vec(),
        heads: heads.map(<[usize]>::to_vec),
        edges,
    })
}

/// Edge-factored log-linear dependency model.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeModel {
    pub features: FeatureIndex,
    pub params: LinearModelParams,
    pub root_mode: RootMode,
}

impl Default for TreeModel {
    fn default() -> Self {
        Self::new(RootMode::Single)
    }
}

impl TreeModel {
    pub fn new(root_mode: RootMode) -> Self {
        TreeModel {
            features: FeatureIndex::new(),
            params: LinearModelParams::zeros(0),
            root_mode,
        }
    }

    /// Featurizes a sentence, registering new features unless the index is
    /// frozen.
    pub fn prepare(&mut self, forms: &[String], heads: Option<&[usize]>) -> Result<DepSentence> {
        let index = &mut self.features;
        let s = build(forms, heads, self.root_mode, |f| index.intern(f))?;
        self.params.resize(self.features.len());
        Ok(s)
    }

    /// Featurizes without registering new features.
    pub fn prepare_frozen(&self, forms: &[String], heads: Option<&[usize]>) -> Result<DepSentence> {
        build(forms, heads, self.root_mode, |f| self.features.get(f))
    }

    pub fn potentials_with(&self, params: &LinearModelParams, s: &DepSentence) -> Result<EdgePotentials> {
        EdgePotentials::from_fn(s.len(), |h, m| params.dot_ids(s.edge(h, m)))
    }

    pub fn potentials(&self, s: &DepSentence) -> Result<EdgePotentials> {
        self.potentials_with(&self.params, s)
    }

    pub fn predict(&self, s: &DepSentence) -> Result<Vec<usize>> {
        Ok(decode_tree(&self.potentials(s)?, self.root_mode))
    }

    /// Loss `log Z - E_q[theta . phi]` and gradient
    /// `Σ_e phi_e (mu_model(e) - mu_q(e))`. `q` is the gold tree for ML and
    /// the attachment-reward payoff distribution for RAML (and SQDML, which
    /// coincides with RAML for unique sentences).
    pub fn loss_and_gradient(
        &self,
        params: &LinearModelParams,
        s: &DepSentence,
        objective: Objective,
        tau: Temperature,
    ) -> Result<(f64, SparseVector)> {
        let gold = s
            .heads
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("sentence has no gold heads".into()))?;
        let n = s.len();
        let pot = self.potentials_with(params, s)?;
        let model = tree_partition_marginals(&pot, self.root_mode)?;
        let payoff = match objective {
            Objective::Ml => None,
            Objective::Raml | Objective::Sqdml => Some(uas_payoff_edge_marginals(gold, tau, self.root_mode)?),
        };
        let mut expected = 0.0;
        let mut grad = SparseVector::new();
        for m in 1..=n {
            for h in (0..=n).filter(|&h| h != m) {
                let q = match &payoff {
                    None => f64::from(u8::from(gold[m - 1] == h)),
                    Some(p) => p.get(h, m),
                };
                expected += q * pot.get(h, m);
                let d = model.get(h, m) - q;
                if d != 0.0 {
                    for &f in s.edge(h, m) {
                        grad.add(f, d);
                    }
                }
            }
        }
        grad.compact();
        Ok((model.log_z - expected, grad))
    }

    pub fn train(&mut self, data: &[DepSentence], objective: Objective, tau: Temperature, cfg: &SgdConfig) -> Result<TrainLog> {
        self.params.resize(self.features.len());
        let mut params = core::mem::replace(&mut self.params, LinearModelParams::zeros(0));
        let log = train_sgd(&mut params, data.len(), cfg, |i, p| self.loss_and_gradient(p, &data[i], objective, tau));
        self.params = params;
        log
    }

    pub fn evaluate(&self, data: &[DepSentence]) -> Result<TreeMetrics> {
        let mut acc = TreeMetrics::default();
        for s in data {
            let gold = s.heads.as_ref().ok_or_else(|| Error::InvalidArgument("missing gold heads".into()))?;
            acc.add(&TreeMetrics::of(&self.predict(s)?, gold)?);
        }
        Ok(acc)
    }

    /// Nonzero weights by feature name.
    pub fn named_weights(&self) -> Vec<(String, f64)> {
        (0..self.features.len())
            .filter_map(|i| {
                let w = self.params.get(i);
                (w != 0.0).then(|| (String::from(self.features.name(i)), w))
            })
            .collect()
    }

    pub fn from_named_weights<I, S>(root_mode: RootMode, weights: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: AsRef<str>,
    {
        let mut model = TreeModel::new(root_mode);
        let mut w = Vec::new();
        for (name, v) in weights {
            let id = model.features.intern(name.as_ref()).expect("not frozen");
            if id == w.len() {
                w.push(v);
            } else {
                w[id] = v;
            }
        }
        model.features.freeze();
        model.params = LinearModelParams::from_weights(w)?;
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn distance_bins() {
        let b: Vec<&str> = [1, 2, 3, 4, 5, 6, 10, 11].iter().map(|&d| distance_bin(d)).collect();
        assert_eq!(b, ["1", "2", "3", "4-5", "4-5", "6-10", "6-10", "11+"]);
    }

    #[test]
    fn ml_gradient_two_words_at_zero() {
        // Two single-root trees: [0, 1] and [2, 0], each with probability 1/2.
        let mut model = TreeModel::new(RootMode::Single);
        let s = model.prepare(&words("a b"), Some(&[0, 1])).unwrap();
        let (loss, g) = model
            .loss_and_gradient(&model.params, &s, Objective::Ml, Temperature::new(1.0).unwrap())
            .unwrap();
        assert!((loss - crate::math::ln(2.0)).abs() < 1e-12);
        let d = g.to_dense(model.features.len());
        let id = model.features.get("hw,mw=<ROOT>|b|R").unwrap();
        assert!((d[id] - 0.5).abs() < 1e-12);
        let id = model.features.get("hw,mw=a|b|R").unwrap();
        assert!((d[id] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn overfits_single_sentence() {
        let mut model = TreeModel::new(RootMode::Single);
        let s = model.prepare(&words("the dog barked loudly"), Some(&[2, 3, 0, 3])).unwrap();
        let cfg = SgdConfig { learning_rate: 0.5, epochs: 30, ..SgdConfig::default() };
        model.train(core::slice::from_ref(&s), Objective::Ml, Temperature::new(1.0).unwrap(), &cfg).unwrap();
        assert_eq!(model.predict(&s).unwrap(), vec![2, 3, 0, 3]);
        let back = TreeModel::from_named_weights(RootMode::Single, model.named_weights()).unwrap();
        let s2 = back.prepare_frozen(&s.forms, None).unwrap();
        assert_eq!(back.predict(&s2).unwrap(), vec![2, 3, 0, 3]);
    }

    #[test]
    fn invalid_gold_rejected() {
        let mut model = TreeModel::default();
        assert!(matches!(model.prepare(&words("a b"), Some(&[2, 1])), Err(Error::InvalidTree(_))));
    }
}
