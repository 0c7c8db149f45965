use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::distributions::Temperature;
use crate::math::{exp, ln};
use crate::{Error, Result};

/// Whether the artificial root may have several children.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RootMode {
    /// Exactly one word attaches to the root.
    #[default]
    Single,
    Multi,
}

/// Log-potentials `s(h, m)` for heads `h in 0..=n` (0 is the root) and
/// modifiers `m in 1..=n`, `h != m`.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgePotentials {
    n: usize,
    scores: Vec<f64>,
}

impl EdgePotentials {
    pub fn from_fn<F: FnMut(usize, usize) -> f64>(n: usize, mut f: F) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("sentence must have at least one word".into()));
        }
        let w = n + 1;
        let mut scores = vec![0.0; w * w];
        for h in 0..=n {
            for m in 1..=n {
                if h != m {
                    let s = f(h, m);
                    if !s.is_finite() {
                        return Err(Error::NonFinitePotential(h * w + m));
                    }
                    scores[h * w + m] = s;
                }
            }
        }
        Ok(EdgePotentials { n, scores })
    }

    pub fn zeros(n: usize) -> Self {
        Self::from_fn(n, |_, _| 0.0).expect("valid")
    }

    /// Number of words.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, h: usize, m: usize) -> f64 {
        self.scores[h * (self.n + 1) + m]
    }

    /// Sum of edge scores of a head vector (`heads[j]` is the head of word
    /// `j + 1`).
    pub fn score(&self, heads: &[usize]) -> f64 {
        heads.iter().enumerate().map(|(j, &h)| self.get(h, j + 1)).sum()
    }
}

/// Log-partition and edge marginals `mu(h, m)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeMarginals {
    pub log_z: f64,
    n: usize,
    marg: Vec<f64>,
}

impl TreeMarginals {
    #[inline]
    pub fn get(&self, h: usize, m: usize) -> f64 {
        self.marg[h * (self.n + 1) + m]
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

/// LU factorization with partial pivoting of a row-major `d x d` matrix.
struct Lu {
    d: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
    sign: f64,
}

impl Lu {
    fn factor(mut a: Vec<f64>, d: usize) -> Result<Lu> {
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let mut perm: Vec<usize> = (0..d).collect();
        let mut sign = 1.0;
        for k in 0..d {
            let mut p = k;
            for i in k + 1..d {
                if a[i * d + k].abs() > a[p * d + k].abs() {
                    p = i;
                }
            }
            let pivot = a[p * d + k];
            if !(pivot.abs() > 1e-14 * scale) {
                return Err(Error::SingularLaplacian { pivot, column: k });
            }
            if p != k {
                for j in 0..d {
                    a.swap(k * d + j, p * d + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            for i in k + 1..d {
                let f = a[i * d + k] / pivot;
                a[i * d + k] = f;
                if f != 0.0 {
                    for j in k + 1..d {
                        a[i * d + j] -= f * a[k * d + j];
                    }
                }
            }
        }
        Ok(Lu { d, lu: a, perm, sign })
    }

    /// `(sign, log|det|)`.
    fn log_det(&self) -> (f64, f64) {
        let mut s = self.sign;
        let mut l = 0.0;
        for k in 0..self.d {
            let v = self.lu[k * self.d + k];
            if v < 0.0 {
                s = -s;
            }
            l += ln(v.abs());
        }
        (s, l)
    }

    fn inverse(&self) -> Vec<f64> {
        let d = self.d;
        let mut inv = vec![0.0; d * d];
        let mut x = vec![0.0; d];
        for col in 0..d {
            for i in 0..d {
                x[i] = if self.perm[i] == col { 1.0 } else { 0.0 };
            }
            for i in 0..d {
                let mut s = x[i];
                for j in 0..i {
                    s -= self.lu[i * d + j] * x[j];
                }
                x[i] = s;
            }
            for i in (0..d).rev() {
                let mut s = x[i];
                for j in i + 1..d {
                    s -= self.lu[i * d + j] * x[j];
                }
                x[i] = s / self.lu[i * d + i];
            }
            for i in 0..d {
                inv[i * d + col] = x[i];
            }
        }
        inv
    }
}

/// Partition function and edge marginals via the matrix-tree theorem.
///
/// Each modifier column is scaled by `exp(-max_h s(h, m))` before
/// exponentiation; the scales are added back to `log Z`. For the single-root
/// mode the first row of the Laplacian is replaced by the root weights.
pub fn tree_partition_marginals(pot: &EdgePotentials, mode: RootMode) -> Result<TreeMarginals> {
    let n = pot.n;
    let w = n + 1;
    let mut col_max = vec![f64::NEG_INFINITY; w];
    for m in 1..=n {
        for h in (0..=n).filter(|&h| h != m) {
            col_max[m] = col_max[m].max(pot.get(h, m));
        }
    }
    // a[h * w + m] = exp(s(h, m) - col_max[m])
    let mut a = vec![0.0; w * w];
    for m in 1..=n {
        for h in (0..=n).filter(|&h| h != m) {
            a[h * w + m] = exp(pot.get(h, m) - col_max[m]);
        }
    }
    // Laplacian over words, index j = m - 1.
    let mut lap = vec![0.0; n * n];
    for m in 1..=n {
        let j = m - 1;
        let mut incoming = 0.0;
        for h in 1..=n {
            if h != m {
                lap[(h - 1) * n + j] = -a[h * w + m];
                incoming += a[h * w + m];
            }
        }
        lap[j * n + j] = incoming;
        match mode {
            RootMode::Multi => lap[j * n + j] += a[m],
            RootMode::Single => {}
        }
    }
    if mode == RootMode::Single {
        for m in 1..=n {
            lap[m - 1] = a[m];
        }
    }
    let lu = Lu::factor(lap, n)?;
    let (sign, log_det) = lu.log_det();
    if sign <= 0.0 {
        return Err(Error::SingularLaplacian {
            pivot: f64::NAN,
            column: 0,
        });
    }
    let log_z = log_det + col_max[1..].iter().sum::<f64>();
    let inv = lu.inverse();
    let mut marg = vec![0.0; w * w];
    for m in 1..=n {
        let j = m - 1;
        match mode {
            RootMode::Single => {
                marg[m] = a[m] * inv[j * n];
                for h in (1..=n).filter(|&h| h != m) {
                    let diag = if j != 0 { inv[j * n + j] } else { 0.0 };
                    let off = if h != 1 { inv[j * n + h - 1] } else { 0.0 };
                    marg[h * w + m] = a[h * w + m] * (diag - off);
                }
            }
            RootMode::Multi => {
                marg[m] = a[m] * inv[j * n + j];
                for h in (1..=n).filter(|&h| h != m) {
                    marg[h * w + m] = a[h * w + m] * (inv[j * n + j] - inv[j * n + h - 1]);
                }
            }
        }
    }
    Ok(TreeMarginals { log_z, n, marg })
}

/// Checks that `heads` (1-based, 0 = root) forms an arborescence rooted at
/// 0, with exactly one root child in single-root mode.
pub fn is_valid_tree(heads: &[usize], mode: RootMode) -> bool {
    let n = heads.len();
    if n == 0 || heads.iter().enumerate().any(|(j, &h)| h > n || h == j + 1) {
        return false;
    }
    if mode == RootMode::Single && heads.iter().filter(|&&h| h == 0).count() != 1 {
        return false;
    }
    // every word must reach the root within n steps
    for start in 1..=n {
        let mut v = start;
        let mut steps = 0;
        while v != 0 {
            v = heads[v - 1];
            steps += 1;
            if steps > n {
                return false;
            }
        }
    }
    true
}

/// All valid head vectors for `n` words.
pub fn enumerate_trees(n: usize, mode: RootMode) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; n];
    loop {
        if is_valid_tree(&cur, mode) {
            out.push(cur.clone());
        }
        let mut i = n;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            cur[i] += 1;
            if cur[i] <= n {
                break;
            }
            cur[i] = 0;
        }
    }
}

/// Edge marginals of the attachment-reward payoff distribution
/// `q(y|y*) ∝ exp(UAS(y, y*)/tau)`.
pub fn uas_payoff_edge_marginals(gold: &[usize], tau: Temperature, mode: RootMode) -> Result<TreeMarginals> {
    if !is_valid_tree(gold, mode) {
        return Err(Error::InvalidTree(format!("{gold:?}")));
    }
    let inv = 1.0 / tau.value();
    let pot = EdgePotentials::from_fn(gold.len(), |h, m| if gold[m - 1] == h { inv } else { 0.0 })?;
    tree_partition_marginals(&pot, mode)
}
