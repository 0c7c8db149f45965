use sqd_core::distributions::Temperature;
use sqd_core::reward::{NegHamming, RewardFunction};
use sqd_core::rng::{derive, derive_str, rng_from_seed, Rng};
use sqd_core::sampling::{
    dedup_sequences, importance_weights, ngram_replace, sampled_raml_weights, sampled_sqdml_weights, stratified_hamming_sample,
    CandidateSet, HammingProposal, NgramConfig, Provenance, SentenceBleu, TokenSequence, Vocabulary,
};

use crate::config::{Proposal, RewardSpec, RunConfig};
use crate::error::{HarnessError, Result};
use crate::io::{read_references, write_jsonl, CandidateRecord};

#[derive(Clone, Debug, PartialEq)]
pub struct SampleSummary {
    pub sources: usize,
    pub raml_candidates: usize,
    pub sqdml_candidates: usize,
}

type Reward = dyn RewardFunction<[u32]> + Sync;

fn reward(spec: Option<&RewardSpec>) -> Result<Box<Reward>> {
    match spec {
        None | Some(RewardSpec::SentenceBleu) => Ok(Box::new(SentenceBleu)),
        Some(RewardSpec::NegHamming) => Ok(Box::new(NegHamming::new(0))),
        Some(other) => Err(HarnessError::Config(format!("sample-build supports sbleu and neg-hamming, not {other}"))),
    }
}

struct Sampler<'a> {
    cfg: &'a RunConfig,
    vocab_size: usize,
    tau: Temperature,
    reward: &'a Reward,
}

impl Sampler<'_> {
    fn perturb(&self, y: &[u32], count: usize, rng: &mut Rng) -> Result<(Vec<TokenSequence>, Provenance)> {
        let s = &self.cfg.sampling;
        let (seqs, prov) = match s.proposal {
            Proposal::Ngram => {
                let ng = NgramConfig { n_max: s.ngram_max, exclude_original: s.exclude_original };
                (ngram_replace(y, &ng, count, self.vocab_size, rng)?, Provenance::NgramReplaced)
            }
            Proposal::Hamming => {
                let hp = self.proposal();
                let seqs = (0..count).map(|_| stratified_hamming_sample(y, self.tau, &hp, rng)).collect::<sqd_core::Result<_>>()?;
                (seqs, Provenance::HammingSampled)
            }
        };
        Ok((if s.dedup { dedup_sequences(seqs) } else { seqs }, prov))
    }

    fn proposal(&self) -> HammingProposal {
        HammingProposal { vocab_size: self.vocab_size, rescale: self.cfg.sampling.hamming_rescale }
    }

    /// Reference followed by perturbations of it. Hamming samples carry
    /// importance weights, with the reference treated as one more draw.
    fn raml(&self, y: &TokenSequence, rng: &mut Rng) -> Result<CandidateSet> {
        let (seqs, prov) = self.perturb(y, self.cfg.sampling.raml_size.saturating_sub(1), rng)?;
        let mut s = vec![(y.clone(), Provenance::Reference)];
        s.extend(seqs.into_iter().map(|c| (c, prov)));
        let set = sampled_raml_weights(s, y, self.tau, self.reward)?;
        if self.cfg.sampling.proposal == Proposal::Ngram {
            return Ok(set);
        }
        let seqs: Vec<TokenSequence> = set.candidates().iter().map(|c| c.tokens.clone()).collect();
        let w = importance_weights(&seqs, y, self.tau, &self.proposal(), self.reward)?;
        Ok(set.reweighted(&w)?)
    }

    /// All references plus perturbations spread evenly over them.
    fn sqdml(&self, refs: &[TokenSequence], rng: &mut Rng) -> Result<CandidateSet> {
        let mut s: Vec<(TokenSequence, Provenance)> = refs.iter().map(|y| (y.clone(), Provenance::Reference)).collect();
        let extra = self.cfg.sampling.sqdml_size.saturating_sub(refs.len());
        let k = refs.len();
        for (i, y) in refs.iter().enumerate() {
            let (seqs, prov) = self.perturb(y, extra / k + usize::from(i < extra % k), rng)?;
            s.extend(seqs.into_iter().map(|c| (c, prov)));
        }
        Ok(sampled_sqdml_weights(s, refs, self.tau, self.reward)?)
    }
}

fn records(set: &CandidateSet, source: usize, vocab: &Vocabulary) -> Vec<CandidateRecord> {
    set.candidates()
        .iter()
        .map(|c| CandidateRecord {
            source_index: source,
            provenance: c.provenance.name().into(),
            tokens: vocab.decode(&c.tokens).into_iter().map(String::from).collect(),
            reward: c.reward,
            weight: c.weight,
        })
        .collect()
}

/// Builds candidate sets for the references in `cfg.train` at the first
/// configured temperature: one RAML set per reference and one SQDML set per
/// reference group. Writes `candidates_raml.jsonl` and
/// `candidates_sqdml.jsonl`.
pub fn sample_build(cfg: &RunConfig) -> Result<SampleSummary> {
    let path = cfg.train.as_ref().ok_or_else(|| HarnessError::Config("sample-build needs a reference file (train)".into()))?;
    let groups = read_references(path)?;
    let reward = reward(cfg.reward.as_ref())?;
    let neg_hamming = matches!(cfg.reward, Some(RewardSpec::NegHamming));
    for (i, g) in groups.iter().enumerate() {
        if g.iter().any(Vec::is_empty) {
            return Err(HarnessError::Data(format!("{}: source {}: empty reference", path.display(), i + 1)));
        }
        if (neg_hamming || cfg.sampling.proposal == Proposal::Hamming) && g.iter().any(|r| r.len() != g[0].len()) {
            return Err(HarnessError::Config(format!("source {}: references differ in length, which Hamming distance requires", i + 1)));
        }
    }
    let vocab = Vocabulary::from_sentences(groups.iter().flatten().map(|r| r.join(" ")).collect::<Vec<_>>().iter().map(String::as_str));
    let sampler = Sampler { cfg, vocab_size: vocab.len(), tau: cfg.tau.temperatures()?[0], reward: reward.as_ref() };
    let root = derive_str(cfg.seed, "sample-build");
    let (mut raml, mut sqdml) = (Vec::new(), Vec::new());
    for (i, g) in groups.iter().enumerate() {
        let refs: Vec<TokenSequence> = g.iter().map(|r| vocab.encode(&r.join(" "))).collect();
        let mut rng = rng_from_seed(derive(root, i as u64));
        for y in &refs {
            raml.extend(records(&sampler.raml(y, &mut rng)?, i, &vocab));
        }
        sqdml.extend(records(&sampler.sqdml(&refs, &mut rng)?, i, &vocab));
    }
    write_jsonl(&cfg.out.join("candidates_raml.jsonl"), &raml, false)?;
    write_jsonl(&cfg.out.join("candidates_sqdml.jsonl"), &sqdml, false)?;
    Ok(SampleSummary { sources: groups.len(), raml_candidates: raml.len(), sqdml_candidates: sqdml.len() })
}
