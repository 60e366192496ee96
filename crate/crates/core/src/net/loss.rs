//! Categorical cross-entropy and the clustering-oriented pair terms.
//!
//! The pair terms use cosine distance `d(a, b) = (1 - cos(a, b)) / 2`:
//! the attractive term is the mean distance over same-chain pairs and the
//! repulsive term is one minus the mean distance over different-chain pairs.
//! Both are computed from the Gram matrix of the row-normalised embeddings.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Lower clamp applied to probabilities before taking logs.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    /// 1 for the CCE-bearing variants, 0 for pair terms only.
    pub cce: f64,
    pub lambda1: f64,
    pub lambda2: f64,
}

impl LossWeights {
    pub fn new(lambda1: f64, lambda2: f64) -> Self {
        LossWeights {
            cce: 1.0,
            lambda1,
            lambda2,
        }
    }

    pub fn pair_terms_only(lambda1: f64, lambda2: f64) -> Self {
        LossWeights {
            cce: 0.0,
            lambda1,
            lambda2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub total: f64,
    pub cce: f64,
    pub attract: f64,
    pub repulse: f64,
    pub weights: LossWeights,
}

impl LossBreakdown {
    pub fn combine(cce: f64, attract: f64, repulse: f64, weights: LossWeights) -> Self {
        LossBreakdown {
            total: weights.cce * cce + weights.lambda1 * attract + weights.lambda2 * repulse,
            cce,
            attract,
            repulse,
            weights,
        }
    }

    pub fn is_finite(&self) -> bool {
        [self.total, self.cce, self.attract, self.repulse]
            .iter()
            .all(|x| x.is_finite())
    }
}

pub fn loss_cce<T: Real>(probs: ArrayView2<T>, labels: &[usize]) -> T {
    let floor = T::from_f64_lossy(PROB_FLOOR);
    let n = T::from_usize_lossy(labels.len().max(1));
    let sum = labels
        .iter()
        .enumerate()
        .fold(T::zero(), |acc, (i, &c)| acc - probs[[i, c]].max(floor).ln());
    sum / n
}

pub fn cosine_similarity<T: Real>(a: &[T], b: &[T]) -> T {
    let dot = a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y);
    let na = a.iter().fold(T::zero(), |s, &x| s + x * x).sqrt();
    let nb = b.iter().fold(T::zero(), |s, &x| s + x * x).sqrt();
    if na == T::zero() || nb == T::zero() {
        T::zero()
    } else {
        dot / (na * nb)
    }
}

/// In `[0, 1]`; a zero vector is at distance ½ from everything.
pub fn cosine_distance<T: Real>(a: &[T], b: &[T]) -> T {
    let half = T::from_f64_lossy(0.5);
    half * (T::one() - cosine_similarity(a, b))
}

/// Rows scaled to unit norm (zero rows stay zero) and the original norms.
pub fn normalize_rows<T: Real>(e: ArrayView2<T>) -> (Array2<T>, Vec<T>) {
    let mut u = e.to_owned();
    let mut norms = Vec::with_capacity(e.nrows());
    for mut row in u.rows_mut() {
        let n = row.iter().fold(T::zero(), |s, &x| s + x * x).sqrt();
        if n > T::zero() {
            row.mapv_inplace(|x| x / n);
        }
        norms.push(n);
    }
    (u, norms)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairTerms<T> {
    pub attract: T,
    pub repulse: T,
    pub same_pairs: usize,
    pub diff_pairs: usize,
}

/// Attract/repulse values through one `U Uᵀ` product.
pub fn pair_terms<T: Real>(embeddings: ArrayView2<T>, chains: &[usize]) -> PairTerms<T> {
    let (u, _) = normalize_rows(embeddings);
    let cos = u.dot(&u.t());
    let half = T::from_f64_lossy(0.5);
    let (mut same, mut diff) = (T::zero(), T::zero());
    let (mut ns, mut nd) = (0usize, 0usize);
    let n = chains.len();
    for i in 0..n {
        for j in i + 1..n {
            let d = half * (T::one() - cos[[i, j]]);
            if chains[i] == chains[j] {
                same += d;
                ns += 1;
            } else {
                diff += d;
                nd += 1;
            }
        }
    }
    let attract = if ns == 0 {
        log::warn!("batch has no same-chain pair; attractive term set to 0");
        T::zero()
    } else {
        same / T::from_usize_lossy(ns)
    };
    let repulse = if nd == 0 {
        log::warn!("batch has no different-chain pair; repulsive term set to 0");
        T::zero()
    } else {
        T::one() - diff / T::from_usize_lossy(nd)
    };
    PairTerms {
        attract,
        repulse,
        same_pairs: ns,
        diff_pairs: nd,
    }
}

pub fn loss_attract<T: Real>(embeddings: ArrayView2<T>, chains: &[usize]) -> T {
    pair_terms(embeddings, chains).attract
}

pub fn loss_repulse<T: Real>(embeddings: ArrayView2<T>, chains: &[usize]) -> T {
    pair_terms(embeddings, chains).repulse
}

pub fn loss_total<T: Real>(
    probs: ArrayView2<T>,
    embeddings: ArrayView2<T>,
    labels: &[usize],
    chains: &[usize],
    weights: LossWeights,
) -> LossBreakdown {
    let cce = loss_cce(probs, labels).to_f64_lossy();
    let pt = pair_terms(embeddings, chains);
    LossBreakdown::combine(cce, pt.attract.to_f64_lossy(), pt.repulse.to_f64_lossy(), weights)
}

/// Gradient of `λ1·attract + λ2·repulse` with respect to the embeddings.
///
/// With `u_i = e_i / |e_i|` and pair weights `w_ij` (`-λ1 / 2|S|` for
/// same-chain, `+λ2 / 2|D|` for different-chain), `∂/∂u_i = Σ_j w_ij u_j`,
/// which is projected onto the tangent space of `u_i` and divided by
/// `|e_i|`. Zero-norm rows receive zero gradient.
pub fn pair_gradient<T: Real>(
    embeddings: ArrayView2<T>,
    chains: &[usize],
    lambda1: f64,
    lambda2: f64,
) -> Array2<T> {
    let n = chains.len();
    let mut grad = Array2::zeros(embeddings.raw_dim());
    if lambda1 == 0.0 && lambda2 == 0.0 {
        return grad;
    }
    let mut ns = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            if chains[i] == chains[j] {
                ns += 1;
            }
        }
    }
    let nd = n * n.saturating_sub(1) / 2 - ns;
    let w_same = if ns == 0 { 0.0 } else { -lambda1 / (2.0 * ns as f64) };
    let w_diff = if nd == 0 { 0.0 } else { lambda2 / (2.0 * nd as f64) };
    let weights = Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j {
            T::zero()
        } else if chains[i] == chains[j] {
            T::from_f64_lossy(w_same)
        } else {
            T::from_f64_lossy(w_diff)
        }
    });
    let (u, norms) = normalize_rows(embeddings);
    let g = weights.dot(&u);
    for i in 0..n {
        if norms[i] == T::zero() {
            continue;
        }
        let gi = g.row(i);
        let ui = u.row(i);
        let radial = gi.dot(&ui);
        for k in 0..gi.len() {
            grad[[i, k]] = (gi[k] - radial * ui[k]) / norms[i];
        }
    }
    grad
}
