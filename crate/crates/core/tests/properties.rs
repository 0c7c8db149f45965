use proptest::prelude::*;

use sqd_core::chain::{enumerate_sequences, forward_backward, token_accuracy_payoff_marginals, viterbi, ChainPotentials};
use sqd_core::distributions::*;
use sqd_core::reward::{MatchCount, NegHamming, RewardFunction, RewardMatrix};
use sqd_core::sampling::{hamming_count, importance_weights, sentence_bleu, stratified_hamming_sample, HammingProposal};
use sqd_core::tree::{decode_tree, enumerate_trees, tree_partition_marginals, uas_payoff_edge_marginals, EdgePotentials, RootMode};
use sqd_core::rng::rng_from_seed;

fn tau(t: f64) -> Temperature {
    Temperature::new(t).unwrap()
}

/// A random reward table scaled into `[0, bound]` with a random conditional.
fn instance() -> impl Strategy<Value = (usize, Vec<f64>, Vec<f64>)> {
    (2usize..=8).prop_flat_map(|n| {
        (
            Just(n),
            prop::collection::vec(0.0f64..1.0, n * n),
            prop::collection::vec(0.0f64..1.0, n),
        )
    })
}

fn build(n: usize, bound: f64, raw: &[f64], w: &[f64]) -> (OutputSpace<usize>, RewardMatrix, Categorical) {
    let values = raw.iter().map(|v| v * bound).collect();
    let r = RewardMatrix::with_bound(n, values, bound).unwrap();
    let total: f64 = w.iter().sum::<f64>() + 1e-3 * n as f64;
    let cond = Categorical::from_probs(w.iter().map(|x| (x + 1e-3) / total).collect()).unwrap();
    (OutputSpace::indices(n), r, cond)
}

fn unique_max(v: &[f64], margin: f64) -> bool {
    let best = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    v.iter().filter(|&&x| x > best - margin).count() == 1
}

fn cond_rewards(space: &OutputSpace<usize>, cond: &Categorical, r: &RewardMatrix) -> Vec<f64> {
    space.iter().map(|z| conditional_reward(z, space, cond, r).unwrap()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn categoricals_are_normalized((n, raw, w) in instance(), t in 0.01f64..100.0) {
        let (space, r, cond) = build(n, 5.0, &raw, &w);
        for c in [
            softmax_q(&space, &cond, tau(t), &r).unwrap(),
            q_prime(&space, &cond, tau(t), &r).unwrap(),
            payoff_distribution(&0, tau(t), &space, &r).unwrap(),
        ] {
            prop_assert!((c.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(c.probs().iter().all(|&p| p >= 0.0));
        }
    }

    #[test]
    fn q_prime_of_point_mass_is_payoff((n, raw, _w) in instance(), y in 0usize..8, t in 0.01f64..100.0) {
        let y = y % n;
        let (space, r, _) = build(n, 1.0, &raw, &vec![1.0; n]);
        let qp = q_prime(&space, &Categorical::point_mass(n, y), tau(t), &r).unwrap();
        let q = payoff_distribution(&y, tau(t), &space, &r).unwrap();
        for (a, b) in qp.probs().iter().zip(q.probs()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn q_argmax_is_bayes_decision((n, raw, w) in instance(), t in prop::sample::select(vec![0.01, 1.0, 100.0])) {
        let (space, r, cond) = build(n, 1.0, &raw, &w);
        prop_assume!(unique_max(&cond_rewards(&space, &cond, &r), 1e-9));
        prop_assert_eq!(
            decode_q_argmax(&space, &cond, &r, tau(t)).unwrap(),
            bayes_decision(&space, &cond, &r).unwrap()
        );
    }

    #[test]
    fn temperature_limits((n, raw, w) in instance(), bound in prop::sample::select(vec![0.5, 1.0, 5.0])) {
        let (space, r, cond) = build(n, bound, &raw, &w);
        let hot = softmax_q(&space, &cond, tau(1e9), &r).unwrap();
        prop_assert!(hot.probs().iter().all(|p| (p - 1.0 / n as f64).abs() < 1e-6));
        if unique_max(&cond_rewards(&space, &cond, &r), 0.01 * bound) {
            let cold = softmax_q(&space, &cond, tau(1e-6), &r).unwrap();
            prop_assert!(cold.prob(bayes_decision(&space, &cond, &r).unwrap()) >= 1.0 - 1e-4);
        }
    }

    #[test]
    fn theorem1_bound_holds_along_grid(
        (n, raw, w) in instance(),
        bound in prop::sample::select(vec![0.5, 1.0, 5.0]),
    ) {
        let (space, r, cond) = build(n, bound, &raw, &w);
        let grid: Vec<_> = [0.05, 0.1, 1.0, 10.0, 100.0].iter().map(|&t| tau(t)).collect();
        for (_, rep) in kl_profile(&space, &cond, &r, &grid).unwrap() {
            prop_assert!(rep.holds, "kl {} > bound {}", rep.kl, rep.bound);
        }
    }

    #[test]
    fn unique_inputs_make_targets_agree(
        (n, raw, _w) in instance(),
        ys in prop::collection::vec(0usize..8, 1..20),
        t in 0.01f64..100.0,
    ) {
        let (space, r, _) = build(n, 1.0, &raw, &vec![1.0; n]);
        let pairs: Vec<(usize, usize)> = ys.iter().enumerate().map(|(i, &y)| (i, y % n)).collect();
        let data = LabeledDataset::new(pairs, n).unwrap();
        for x in 0..ys.len() {
            let a = sqdml_target(&x, &data, &space, tau(t), &r).unwrap();
            let b = raml_target(&x, &data, &space, tau(t), &r).unwrap();
            for (p, q) in a.probs().iter().zip(b.probs()) {
                prop_assert!((p - q).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn kl_is_nonnegative_and_zero_on_self(a in prop::collection::vec(-5.0f64..5.0, 2..8), shift in 0.1f64..1.0) {
        let p = Categorical::from_log_weights(a.clone()).unwrap();
        let mut b = a.clone();
        b[0] += shift;
        let q = Categorical::from_log_weights(b).unwrap();
        prop_assert!(kl(&p, &p).unwrap() < 1e-12);
        prop_assert!(kl(&p, &q).unwrap() > 0.0);
    }

    #[test]
    fn margin_constant_b(gamma in 0.01f64..0.99, c in 0.01f64..10.0) {
        let m = MarginAssumption::new(gamma, c).unwrap();
        prop_assert!((m.b() - gamma * gamma / ((1.0 - gamma) * (1.0 - gamma))).abs() <= 1e-12 * m.b().max(1.0));
    }
}

fn chain(len: usize, k: usize) -> impl Strategy<Value = ChainPotentials> {
    (
        prop::collection::vec(-3.0f64..3.0, len * k),
        prop::collection::vec(-3.0f64..3.0, (len - 1) * k * k),
    )
        .prop_map(move |(u, p)| ChainPotentials::new(len, k, u, p).unwrap())
}

fn chain_any() -> impl Strategy<Value = ChainPotentials> {
    (1usize..=5, 1usize..=3).prop_flat_map(|(l, k)| chain(l, k))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn forward_backward_matches_enumeration(pot in chain_any()) {
        let (l, k) = (pot.len(), pot.num_labels());
        let m = forward_backward(&pot).unwrap();
        let seqs = enumerate_sequences(l, k);
        let scores: Vec<f64> = seqs.iter().map(|s| pot.score(s)).collect();
        let lz = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lz = lz + scores.iter().map(|s| (s - lz).exp()).sum::<f64>().ln();
        prop_assert!((m.log_z - lz).abs() < 1e-8);
        for i in 0..l {
            let mut row = 0.0;
            for a in 0..k {
                let brute: f64 = seqs.iter().zip(&scores).filter(|(s, _)| s[i] == a).map(|(_, sc)| (sc - lz).exp()).sum();
                prop_assert!((m.unary(i, a) - brute).abs() < 1e-8);
                row += m.unary(i, a);
                if i > 0 {
                    let col: f64 = (0..k).map(|b| m.pairwise(i, b, a)).sum();
                    prop_assert!((col - m.unary(i, a)).abs() < 1e-8);
                    let next: f64 = (0..k).map(|b| m.pairwise(i, a, b)).sum();
                    prop_assert!((next - m.unary(i - 1, a)).abs() < 1e-8);
                }
            }
            prop_assert!((row - 1.0).abs() < 1e-8);
        }
        let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!((pot.score(&viterbi(&pot)) - best).abs() < 1e-9);
    }

    #[test]
    fn payoff_factorizes(gold in (1usize..=4, 2usize..=3).prop_flat_map(|(l, k)| (prop::collection::vec(0..k, l), Just(k))), t in 0.1f64..5.0) {
        let (gold, k) = gold;
        let seqs = enumerate_sequences(gold.len(), k);
        let space = OutputSpace::new(seqs.clone()).unwrap();
        let exact = payoff_distribution(&gold, tau(t), &space, &MatchCount::new(gold.len())).unwrap();
        let per = token_accuracy_payoff_marginals(&gold, tau(t), k).unwrap();
        for (s, &p) in seqs.iter().zip(exact.probs()) {
            let prod: f64 = s.iter().enumerate().map(|(i, &a)| per[i].prob(a)).product();
            prop_assert!((prod - p).abs() < 1e-10);
        }
    }
}

fn edges(n: usize) -> impl Strategy<Value = EdgePotentials> {
    prop::collection::vec(-3.0f64..3.0, (n + 1) * (n + 1))
        .prop_map(move |v| EdgePotentials::from_fn(n, |h, m| v[h * (n + 1) + m]).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matrix_tree_matches_enumeration(
        pot in (1usize..=4).prop_flat_map(edges),
        multi in any::<bool>(),
    ) {
        let mode = if multi { RootMode::Multi } else { RootMode::Single };
        let n = pot.len();
        let m = tree_partition_marginals(&pot, mode).unwrap();
        let trees = enumerate_trees(n, mode);
        let scores: Vec<f64> = trees.iter().map(|t| pot.score(t)).collect();
        let mx = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lz = mx + scores.iter().map(|s| (s - mx).exp()).sum::<f64>().ln();
        prop_assert!((m.log_z - lz).abs() < 1e-7);
        for d in 1..=n {
            let mut incoming = 0.0;
            for h in (0..=n).filter(|&h| h != d) {
                let brute: f64 = trees.iter().zip(&scores).filter(|(t, _)| t[d - 1] == h).map(|(_, s)| (s - lz).exp()).sum();
                prop_assert!((m.get(h, d) - brute).abs() < 1e-7);
                incoming += m.get(h, d);
            }
            prop_assert!((incoming - 1.0).abs() < 1e-7);
        }
        prop_assert!((pot.score(&decode_tree(&pot, mode)) - mx).abs() < 1e-9);
    }

    #[test]
    fn expected_attachment_identity(n in 1usize..=4, pick in any::<prop::sample::Index>(), t in 0.1f64..5.0) {
        let trees = enumerate_trees(n, RootMode::Single);
        let gold = trees[pick.index(trees.len())].clone();
        let r = MatchCount::new(n);
        let space = OutputSpace::new(trees.clone()).unwrap();
        let q = payoff_distribution(&gold, tau(t), &space, &r).unwrap();
        let exact: f64 = trees.iter().zip(q.probs()).map(|(y, p)| p * r.reward(y, &gold)).sum();
        let marg = uas_payoff_edge_marginals(&gold, tau(t), RootMode::Single).unwrap();
        let via_edges: f64 = (1..=n).map(|m| marg.get(gold[m - 1], m)).sum();
        prop_assert!((exact - via_edges).abs() < 1e-7);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn bleu_is_bounded(a in prop::collection::vec(0u32..6, 0..12), b in prop::collection::vec(0u32..6, 1..12)) {
        let s = sentence_bleu(&a, &b);
        prop_assert!((0.0..=1.0).contains(&s));
        // Every order has a candidate n-gram only from length 4 on.
        if b.len() >= 4 {
            prop_assert!((sentence_bleu(&b, &b) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn hamming_counts_match_enumeration(len in 1usize..=4, v in 2usize..=3) {
        let seqs = enumerate_sequences(len, v);
        let reference = vec![0usize; len];
        for d in 0..=len {
            let brute = seqs.iter().filter(|s| s.iter().zip(&reference).filter(|(a, b)| a != b).count() == d).count();
            prop_assert_eq!(hamming_count(d, len, v).unwrap(), brute.into());
        }
    }

    #[test]
    fn importance_weights_sum_to_one(seed in any::<u64>(), t in 0.2f64..3.0, rescale in any::<bool>()) {
        let y_star = vec![0u32, 1, 2, 1];
        let proposal = HammingProposal { vocab_size: 4, rescale };
        let mut g = rng_from_seed(seed);
        let samples: Vec<_> = (0..20).map(|_| stratified_hamming_sample(&y_star, tau(t), &proposal, &mut g).unwrap()).collect();
        let w = importance_weights(&samples, &y_star, tau(t), &proposal, &NegHamming::shifted(4)).unwrap();
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(samples.iter().all(|s| s.len() == 4 && s.iter().all(|&x| x < 4)));
    }
}
