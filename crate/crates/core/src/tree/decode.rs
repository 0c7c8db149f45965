use alloc::vec;
use alloc::vec::Vec;

use super::matrix_tree::{EdgePotentials, RootMode};

/// Chu-Liu/Edmonds on a dense score matrix over nodes `0..N` with root 0.
/// `score[u][v]` is the weight of edge `u -> v`; `-inf` marks a missing
/// edge. Returns the head of every node (entry 0 is unused).
pub fn max_arborescence(score: &[Vec<f64>]) -> Vec<usize> {
    let n = score.len();
    let mut head = vec![0usize; n];
    for v in 1..n {
        let mut best = f64::NEG_INFINITY;
        for u in (0..n).filter(|&u| u != v) {
            if score[u][v] > best {
                best = score[u][v];
                head[v] = u;
            }
        }
    }
    let Some(cycle) = find_cycle(&head) else {
        return head;
    };
    let mut in_cycle = vec![false; n];
    for &v in &cycle {
        in_cycle[v] = true;
    }
    // contracted ids: non-cycle nodes keep their order, the cycle is last
    let mut id = vec![usize::MAX; n];
    let mut orig = Vec::new();
    for v in 0..n {
        if !in_cycle[v] {
            id[v] = orig.len();
            orig.push(v);
        }
    }
    let c = orig.len();
    let k = c + 1;
    let mut s2 = vec![vec![f64::NEG_INFINITY; k]; k];
    let mut enter = vec![usize::MAX; k];
    let mut exit = vec![usize::MAX; k];
    for u in 0..n {
        if in_cycle[u] {
            continue;
        }
        for v in 1..n {
            if u == v {
                continue;
            }
            if in_cycle[v] {
                let val = score[u][v] - score[head[v]][v];
                if val > s2[id[u]][c] {
                    s2[id[u]][c] = val;
                    enter[id[u]] = v;
                }
            } else {
                s2[id[u]][id[v]] = score[u][v];
            }
        }
    }
    for v in 1..n {
        if in_cycle[v] {
            continue;
        }
        for &u in &cycle {
            if score[u][v] > s2[c][id[v]] {
                s2[c][id[v]] = score[u][v];
                exit[id[v]] = u;
            }
        }
    }
    let h2 = max_arborescence(&s2);
    let mut out = head.clone();
    for v in 1..n {
        if !in_cycle[v] {
            let hv = h2[id[v]];
            out[v] = if hv == c { exit[id[v]] } else { orig[hv] };
        }
    }
    let u = h2[c];
    out[enter[u]] = orig[u];
    out
}

fn find_cycle(head: &[usize]) -> Option<Vec<usize>> {
    let n = head.len();
    let mut color = vec![0u8; n]; // 0 new, 1 on current walk, 2 done
    color[0] = 2;
    for start in 1..n {
        let mut path = Vec::new();
        let mut v = start;
        while color[v] == 0 {
            color[v] = 1;
            path.push(v);
            v = head[v];
        }
        if color[v] == 1 {
            let pos = path.iter().position(|&p| p == v).expect("on path");
            return Some(path[pos..].to_vec());
        }
        for p in path {
            color[p] = 2;
        }
    }
    None
}

/// Highest-scoring arborescence. In single-root mode every choice of root
/// child is decoded separately and the best is kept, lowest child on ties.
pub fn decode_tree(pot: &EdgePotentials, mode: RootMode) -> Vec<usize> {
    let n = pot.len();
    let matrix = |root_child: Option<usize>| -> Vec<Vec<f64>> {
        let mut s = vec![vec![f64::NEG_INFINITY; n + 1]; n + 1];
        for h in 0..=n {
            for m in 1..=n {
                if h != m && (h != 0 || root_child.is_none_or(|r| r == m)) {
                    s[h][m] = pot.get(h, m);
                }
            }
        }
        s
    };
    match mode {
        RootMode::Multi => max_arborescence(&matrix(None))[1..].to_vec(),
        RootMode::Single => {
            let mut best: Option<(f64, Vec<usize>)> = None;
            for r in 1..=n {
                let heads = max_arborescence(&matrix(Some(r)))[1..].to_vec();
                let s = pot.score(&heads);
                if best.as_ref().is_none_or(|(b, _)| s > *b) {
                    best = Some((s, heads));
                }
            }
            best.expect("n >= 1").1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::matrix_tree::{enumerate_trees, is_valid_tree};
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    #[test]
    fn matches_enumeration() {
        for seed in 0..200u64 {
            let n = 1 + seed as usize % 6;
            let mut g = rng_from_seed(seed);
            let pot = EdgePotentials::from_fn(n, |_, _| g.random_range(-3.0..3.0)).unwrap();
            for mode in [RootMode::Single, RootMode::Multi] {
                let got = decode_tree(&pot, mode);
                assert!(is_valid_tree(&got, mode));
                let best = enumerate_trees(n, mode)
                    .into_iter()
                    .map(|t| pot.score(&t))
                    .fold(f64::NEG_INFINITY, f64::max);
                assert!((pot.score(&got) - best).abs() < 1e-9, "seed {seed} {mode:?}");
            }
        }
    }

    #[test]
    fn single_word_attaches_to_root() {
        assert_eq!(decode_tree(&EdgePotentials::zeros(1), RootMode::Single), vec![0]);
    }
}
