use std::collections::{BTreeMap, HashMap};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Document};

/// Sorted `(column, value)` pairs.
pub type SparseVec = Vec<(usize, f64)>;

/// Lemma TF-IDF with log-normalised term frequency `1 + ln f` and smoothed
/// inverse document frequency `ln(1 + N / n_t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfModel {
    pub lemma_index: BTreeMap<String, usize>,
    pub idf: Vec<f64>,
    pub num_docs: usize,
}

impl TfidfModel {
    pub fn fit(train: &Corpus) -> Self {
        let mut doc_freq: BTreeMap<&str, usize> = BTreeMap::new();
        for doc in &train.documents {
            for lemma in term_counts(doc).into_keys() {
                *doc_freq.entry(lemma).or_default() += 1;
            }
        }
        let n = train.documents.len() as f64;
        let mut lemma_index = BTreeMap::new();
        let mut idf = Vec::with_capacity(doc_freq.len());
        for (col, (lemma, df)) in doc_freq.into_iter().enumerate() {
            lemma_index.insert(lemma.to_string(), col);
            idf.push((1.0 + n / df as f64).ln());
        }
        TfidfModel {
            lemma_index,
            idf,
            num_docs: train.documents.len(),
        }
    }

    pub fn vocabulary_size(&self) -> usize {
        self.idf.len()
    }

    /// Lemmas unseen in training are ignored.
    pub fn transform_sparse(&self, doc: &Document) -> SparseVec {
        let mut v: SparseVec = term_counts(doc)
            .into_iter()
            .filter_map(|(lemma, f)| {
                let col = *self.lemma_index.get(lemma)?;
                Some((col, (1.0 + (f as f64).ln()) * self.idf[col]))
            })
            .collect();
        v.sort_by_key(|&(c, _)| c);
        v
    }

    pub fn transform_dense(&self, doc: &Document) -> Vec<f64> {
        let mut out = vec![0.0; self.vocabulary_size()];
        for (c, x) in self.transform_sparse(doc) {
            out[c] = x;
        }
        out
    }

    /// One dense row per document.
    pub fn transform_matrix(&self, corpus: &Corpus) -> Array2<f64> {
        let mut m = Array2::zeros((corpus.documents.len(), self.vocabulary_size()));
        for (row, doc) in corpus.documents.iter().enumerate() {
            for (c, x) in self.transform_sparse(doc) {
                m[[row, c]] = x;
            }
        }
        m
    }
}

pub fn fit_tfidf(train: &Corpus) -> TfidfModel {
    TfidfModel::fit(train)
}

fn term_counts(doc: &Document) -> HashMap<&str, usize> {
    let mut counts = HashMap::new();
    for t in &doc.tokens {
        *counts.entry(t.lemma.as_str()).or_default() += 1;
    }
    counts
}

/// Cosine similarity of two sparse vectors; 0 when either is all-zero.
pub fn sparse_cosine(a: &SparseVec, b: &SparseVec) -> f64 {
    let (mut i, mut j, mut dot) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                dot += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    let na = a.iter().map(|(_, x)| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|(_, x)| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}
