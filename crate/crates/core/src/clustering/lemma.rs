//! Head-lemma baselines and the lemma-δ initial partition.

use std::collections::BTreeMap;

use super::{Partition, Pooling};
use crate::corpus::Corpus;
use crate::features::tfidf::{sparse_cosine, SparseVec, TfidfModel};

/// Mentions of `corpus`, in corpus order, grouped by head lemma (and topic
/// under per-topic pooling).
pub fn lemma_partition(corpus: &Corpus, pooling: Pooling) -> Partition {
    let mut groups: BTreeMap<(&str, &str), Vec<usize>> = BTreeMap::new();
    for (row, (doc, m)) in corpus.mentions().enumerate() {
        let topic = match pooling {
            Pooling::Global => "",
            Pooling::PerTopic => doc.topic_id.as_str(),
        };
        groups.entry((topic, doc.head_lemma(m))).or_default().push(row);
    }
    let mut out: Partition = groups.into_values().collect();
    out.sort_unstable_by_key(|g| g[0]);
    out
}

/// Per-document TF-IDF vectors, cached once per corpus so that every δ of a
/// grid reuses them.
pub struct DocSimilarity {
    doc_of_row: Vec<usize>,
    sims: Vec<Vec<f64>>,
}

impl DocSimilarity {
    pub fn new(corpus: &Corpus, tfidf: &TfidfModel) -> Self {
        let vecs: Vec<SparseVec> = corpus
            .documents
            .iter()
            .map(|d| tfidf.transform_sparse(d))
            .collect();
        let nd = vecs.len();
        let mut sims = vec![vec![0.0; nd]; nd];
        for a in 0..nd {
            sims[a][a] = 1.0;
            for b in a + 1..nd {
                let v = sparse_cosine(&vecs[a], &vecs[b]);
                sims[a][b] = v;
                sims[b][a] = v;
            }
        }
        let doc_of_row = corpus
            .documents
            .iter()
            .enumerate()
            .flat_map(|(i, d)| std::iter::repeat_n(i, d.mentions.len()))
            .collect();
        DocSimilarity { doc_of_row, sims }
    }

    pub fn between_rows(&self, a: usize, b: usize) -> f64 {
        let (da, db) = (self.doc_of_row[a], self.doc_of_row[b]);
        if da == db {
            1.0
        } else {
            self.sims[da][db]
        }
    }
}

/// Transitive closure of "same head lemma and document cosine above `delta`".
/// Mentions of one document count as similarity 1, so they always merge on a
/// shared head lemma.
pub fn lemma_delta_init(
    corpus: &Corpus,
    tfidf: &TfidfModel,
    delta: f64,
    pooling: Pooling,
) -> Partition {
    lemma_delta_with(corpus, &DocSimilarity::new(corpus, tfidf), delta, pooling)
}

pub fn lemma_delta_with(
    corpus: &Corpus,
    docs: &DocSimilarity,
    delta: f64,
    pooling: Pooling,
) -> Partition {
    let n = corpus.mention_count();
    let mut parent: Vec<usize> = (0..n).collect();
    for group in lemma_partition(corpus, pooling) {
        for (x, &a) in group.iter().enumerate() {
            for &b in &group[x + 1..] {
                let same_doc = docs.doc_of_row[a] == docs.doc_of_row[b];
                if same_doc || docs.between_rows(a, b) > delta {
                    let (ra, rb) = (super::find(&mut parent, a), super::find(&mut parent, b));
                    if ra != rb {
                        parent[ra.max(rb)] = ra.min(rb);
                    }
                }
            }
        }
    }
    let labels: Vec<usize> = (0..n).map(|i| super::find(&mut parent, i)).collect();
    super::partition_from_labels(&labels)
}
