//! Single-linkage agglomerative clustering with a cosine stop threshold,
//! lemma-δ initialisation and threshold tuning.

pub mod chains_file;
pub mod lemma;
pub mod tuning;

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::corpus::Clustering;
use crate::scalar::Real;

pub use chains_file::{parse_chains, read_chains, write_chains};
pub use lemma::{lemma_delta_init, lemma_partition};
pub use tuning::{tune_delta, tune_delta_with_embeddings, tune_tau, DeltaChoice, TauChoice};

/// Which mentions may end up in one chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pooling {
    /// Every mention of the split is one pool.
    #[default]
    Global,
    /// Mentions of different topics never merge.
    PerTopic,
}

/// A partition of `0..n` as index groups.
pub type Partition = Vec<Vec<usize>>;

/// Symmetric `n × n` similarity matrix. The diagonal is ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    values: Array2<f64>,
}

impl SimilarityMatrix {
    pub fn from_array(values: Array2<f64>) -> Self {
        assert_eq!(values.nrows(), values.ncols(), "similarity matrix must be square");
        SimilarityMatrix { values }
    }

    /// Cosine similarity of every pair of rows. Zero rows have similarity 0
    /// to everything.
    pub fn cosine<T: Real>(rows: ArrayView2<T>) -> Self {
        let mut unit = rows.mapv(|x| x.to_f64_lossy());
        for mut row in unit.axis_iter_mut(Axis(0)) {
            let norm = row.dot(&row).sqrt();
            if norm > 0.0 {
                row /= norm;
            }
        }
        let mut values = unit.dot(&unit.t());
        values.mapv_inplace(|x| x.clamp(-1.0, 1.0));
        for i in 0..values.nrows() {
            values[[i, i]] = 1.0;
        }
        SimilarityMatrix { values }
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[[i, j]]
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    /// Forbids merges between rows whose keys differ.
    pub fn restrict_to_groups<K: PartialEq>(&mut self, keys: &[K]) {
        assert_eq!(keys.len(), self.len());
        for i in 0..keys.len() {
            for j in 0..keys.len() {
                if keys[i] != keys[j] {
                    self.values[[i, j]] = f64::NEG_INFINITY;
                }
            }
        }
    }

    pub fn max_off_diagonal(&self) -> f64 {
        let n = self.len();
        let mut best = f64::NEG_INFINITY;
        for i in 0..n {
            for j in i + 1..n {
                best = best.max(self.values[[i, j]]);
            }
        }
        best
    }
}

/// One merge of two clusters, identified by their index in the normalised
/// initial partition. The merged cluster keeps the lower index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub similarity: f64,
}

/// Full merge history from an initial partition. Single-linkage merge
/// similarities never increase, so cutting at `tau` gives exactly the result
/// of stopping the agglomeration at `tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    pub initial: Partition,
    pub merges: Vec<Merge>,
}

impl Dendrogram {
    pub fn num_points(&self) -> usize {
        self.initial.iter().map(Vec::len).sum()
    }

    /// Number of merges with similarity at least `tau`.
    pub fn merges_above(&self, tau: f64) -> usize {
        self.merges.partition_point(|m| m.similarity >= tau)
    }

    /// Cluster label of every point after the merges with similarity ≥ `tau`.
    pub fn labels_at(&self, tau: f64) -> Vec<usize> {
        let k = self.initial.len();
        let mut owner: Vec<usize> = (0..k).collect();
        for m in &self.merges[..self.merges_above(tau)] {
            let (l, r) = (find(&mut owner, m.left), find(&mut owner, m.right));
            owner[r] = l;
        }
        let mut labels = vec![0; self.num_points()];
        for (c, members) in self.initial.iter().enumerate() {
            let root = find(&mut owner, c);
            for &p in members {
                labels[p] = root;
            }
        }
        labels
    }

    pub fn cut(&self, tau: f64) -> Partition {
        partition_from_labels(&self.labels_at(tau))
    }
}

fn find(owner: &mut [usize], mut x: usize) -> usize {
    while owner[x] != x {
        owner[x] = owner[owner[x]];
        x = owner[x];
    }
    x
}

/// Groups points by label; groups ordered by smallest member.
pub fn partition_from_labels(labels: &[usize]) -> Partition {
    let mut slot = std::collections::HashMap::new();
    let mut groups: Partition = Vec::new();
    for (p, &l) in labels.iter().enumerate() {
        let g = *slot.entry(l).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(p);
    }
    groups
}

/// Sorts members and orders clusters by smallest member. Panics unless `init`
/// partitions `0..n`.
pub fn normalize_partition(init: &[Vec<usize>], n: usize) -> Partition {
    let mut seen = vec![false; n];
    let mut out: Partition = init
        .iter()
        .filter(|c| !c.is_empty())
        .map(|c| {
            let mut c = c.clone();
            c.sort_unstable();
            for &p in &c {
                assert!(p < n && !seen[p], "initial clusters must partition 0..{n}");
                seen[p] = true;
            }
            c
        })
        .collect();
    assert!(seen.iter().all(|&s| s), "initial clusters must cover 0..{n}");
    out.sort_unstable_by_key(|c| c[0]);
    out
}

/// Runs single linkage to completion (until no finite similarity is left)
/// and records every merge.
///
/// Each step merges the most similar pair of clusters; among equal
/// similarities the lexicographically lowest index pair wins. A cached
/// nearest neighbour per cluster keeps the whole run at `O(k²)` for `k`
/// initial clusters.
pub fn dendrogram(sims: &SimilarityMatrix, init: Option<&[Vec<usize>]>) -> Dendrogram {
    let n = sims.len();
    let initial = match init {
        Some(p) => normalize_partition(p, n),
        None => (0..n).map(|i| vec![i]).collect(),
    };
    let k = initial.len();
    let mut s = vec![f64::NEG_INFINITY; k * k];
    for a in 0..k {
        for b in a + 1..k {
            let mut best = f64::NEG_INFINITY;
            for &i in &initial[a] {
                for &j in &initial[b] {
                    best = best.max(sims.get(i, j));
                }
            }
            s[a * k + b] = best;
            s[b * k + a] = best;
        }
    }

    let mut active = vec![true; k];
    let mut nn = vec![usize::MAX; k];
    let mut nn_sim = vec![f64::NEG_INFINITY; k];
    let nearest = |c: usize, s: &[f64], active: &[bool]| -> (usize, f64) {
        let mut best = (usize::MAX, f64::NEG_INFINITY);
        for d in 0..k {
            if d != c && active[d] && (best.0 == usize::MAX || s[c * k + d] > best.1) {
                best = (d, s[c * k + d]);
            }
        }
        best
    };
    for c in 0..k {
        (nn[c], nn_sim[c]) = nearest(c, &s, &active);
    }

    let mut merges = Vec::with_capacity(k.saturating_sub(1));
    loop {
        let mut pick: Option<usize> = None;
        for c in 0..k {
            if active[c] && nn[c] != usize::MAX && nn_sim[c].is_finite() {
                if pick.is_none_or(|p| nn_sim[c] > nn_sim[p]) {
                    pick = Some(c);
                }
            }
        }
        let Some(a) = pick else { break };
        let b = nn[a];
        let (a, b) = (a.min(b), a.max(b));
        merges.push(Merge {
            left: a,
            right: b,
            similarity: s[a * k + b],
        });
        active[b] = false;
        for d in 0..k {
            if active[d] && d != a {
                let v = s[a * k + d].max(s[b * k + d]);
                s[a * k + d] = v;
                s[d * k + a] = v;
            }
        }
        for d in 0..k {
            if !active[d] {
                continue;
            }
            if d == a || nn[d] == a || nn[d] == b {
                (nn[d], nn_sim[d]) = nearest(d, &s, &active);
            } else {
                let v = s[d * k + a];
                if v > nn_sim[d] || (v == nn_sim[d] && a < nn[d]) {
                    nn[d] = a;
                    nn_sim[d] = v;
                }
            }
        }
    }
    Dendrogram { initial, merges }
}

/// Merges the most similar clusters while their similarity is at least `tau`.
pub fn agglomerate(sims: &SimilarityMatrix, tau: f64, init: Option<&[Vec<usize>]>) -> Partition {
    dendrogram(sims, init).cut(tau)
}

/// [`agglomerate`] with the groups mapped back to mention ids.
pub fn agglomerate_ids(
    sims: &SimilarityMatrix,
    ids: &[String],
    tau: f64,
    init: Option<&[Vec<usize>]>,
) -> Clustering {
    assert_eq!(ids.len(), sims.len());
    Clustering::from_groups(ids, &agglomerate(sims, tau, init))
}
