//! Grid searches for the stop threshold τ and the lemma-δ threshold, both
//! maximising B³ F1 against validation gold.

use serde::{Deserialize, Serialize};

use super::lemma::{lemma_delta_with, DocSimilarity};
use super::{dendrogram, Dendrogram, Partition, Pooling, SimilarityMatrix};
use crate::corpus::Corpus;
use crate::scoring::{b_cubed, LabelPair};

pub const TAU_STEPS: usize = 20;
pub const DELTA_STEPS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauChoice {
    pub tau: f64,
    pub b3_f1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaChoice {
    pub delta: f64,
    /// Set when agglomeration continued after the lemma-δ partition.
    pub tau: Option<f64>,
    pub b3_f1: f64,
}

/// `steps` evenly spaced values from `lo` to `hi`, both included.
pub fn linspace(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..steps)
            .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
            .collect(),
    }
}

pub fn partition_labels(p: &Partition, n: usize) -> Vec<usize> {
    let mut labels = vec![usize::MAX; n];
    for (c, g) in p.iter().enumerate() {
        for &i in g {
            labels[i] = c;
        }
    }
    labels
}

fn b3_of(gold: &[usize], sys: Vec<usize>) -> f64 {
    b_cubed(&LabelPair::new(gold.to_vec(), sys)).f1
}

/// Two passes over τ on an existing merge history. Pass 1 tries `i/19` for
/// `i = 0..20`; pass 2 tries 20 evenly spaced values between the neighbours
/// of the pass-1 winner. The best value over both passes wins, ties going to
/// the larger τ.
pub fn tune_tau_on(tree: &Dendrogram, gold: &[usize]) -> TauChoice {
    let eval = |tau: f64| TauChoice {
        tau,
        b3_f1: b3_of(gold, tree.labels_at(tau)),
    };
    let better = |c: &TauChoice, best: &TauChoice| {
        c.b3_f1 > best.b3_f1 || (c.b3_f1 == best.b3_f1 && c.tau > best.tau)
    };
    let coarse = linspace(0.0, 1.0, TAU_STEPS);
    let mut best = eval(coarse[0]);
    let mut best_idx = 0;
    for (i, &tau) in coarse.iter().enumerate().skip(1) {
        let c = eval(tau);
        if better(&c, &best) {
            best = c;
            best_idx = i;
        }
    }
    let lo = coarse[best_idx.saturating_sub(1)];
    let hi = coarse[(best_idx + 1).min(TAU_STEPS - 1)];
    for tau in linspace(lo, hi, TAU_STEPS) {
        let c = eval(tau.clamp(0.0, 1.0));
        if better(&c, &best) {
            best = c;
        }
    }
    best
}

pub fn tune_tau(sims: &SimilarityMatrix, gold: &[usize], init: Option<&[Vec<usize>]>) -> TauChoice {
    assert_eq!(sims.len(), gold.len());
    tune_tau_on(&dendrogram(sims, init), gold)
}

/// δ grid `i/99` for the lemma-δ baseline alone. Ties go to the larger δ.
pub fn tune_delta(corpus: &Corpus, docs: &DocSimilarity, gold: &[usize], pooling: Pooling) -> DeltaChoice {
    let n = corpus.mention_count();
    let mut best = DeltaChoice {
        delta: 0.0,
        tau: None,
        b3_f1: f64::NEG_INFINITY,
    };
    for delta in linspace(0.0, 1.0, DELTA_STEPS) {
        let p = lemma_delta_with(corpus, docs, delta, pooling);
        let f1 = b3_of(gold, partition_labels(&p, n));
        if f1 >= best.b3_f1 {
            best = DeltaChoice {
                delta,
                tau: None,
                b3_f1: f1,
            };
        }
    }
    best
}

/// For each δ, agglomerates from the lemma-δ partition with embedding
/// similarities at the τ tuned for that δ. Ties go to the larger δ.
pub fn tune_delta_with_embeddings(
    corpus: &Corpus,
    docs: &DocSimilarity,
    sims: &SimilarityMatrix,
    gold: &[usize],
    pooling: Pooling,
) -> DeltaChoice {
    let mut best = DeltaChoice {
        delta: 0.0,
        tau: None,
        b3_f1: f64::NEG_INFINITY,
    };
    let mut last: Option<(Partition, TauChoice)> = None;
    for delta in linspace(0.0, 1.0, DELTA_STEPS) {
        let init = lemma_delta_with(corpus, docs, delta, pooling);
        let choice = match &last {
            Some((p, c)) if *p == init => *c,
            _ => tune_tau(sims, gold, Some(&init)),
        };
        if choice.b3_f1 >= best.b3_f1 {
            best = DeltaChoice {
                delta,
                tau: Some(choice.tau),
                b3_f1: choice.b3_f1,
            };
        }
        last = Some((init, choice));
    }
    best
}
