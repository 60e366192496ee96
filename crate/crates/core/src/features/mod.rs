//! Fixed-length mention feature vectors.
//!
//! Layout of one row, for word vectors of dimension `E`:
//!
//! | block        | width          |
//! |--------------|----------------|
//! | contextual   | `8 * (E + 500)`|
//! | document     | 100            |
//! | position     | 3              |
//! | overlap      | 4              |

pub mod comparative;
pub mod contextual;
pub mod matrix_file;
pub mod pca;
pub mod tfidf;
pub mod wordvec;

use std::collections::BTreeMap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

pub use comparative::{comparative_features, harmonic_similarity, SpanBag};
pub use contextual::{build_lemma_vocab, contextual_features, LemmaVocab, LEMMA_SLOTS};
pub use matrix_file::{read_matrix, write_matrix};
pub use pca::{fit_pca, PcaModel, DOC_COMPONENTS};
pub use tfidf::{fit_tfidf, TfidfModel};
pub use wordvec::WordVectors;

use crate::clustering::Pooling;
use crate::corpus::Corpus;
use crate::error::{Error, Result};

/// Feature width for word vectors of dimension `embedding_dim`.
pub fn feature_dim(embedding_dim: usize) -> usize {
    contextual::contextual_width(embedding_dim) + DOC_COMPONENTS + comparative::COMPARATIVE_WIDTH
}

/// Models fitted on the training split only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModels {
    pub vocab: LemmaVocab,
    pub tfidf: TfidfModel,
    pub pca: PcaModel,
}

impl FittedModels {
    pub fn fit(train: &Corpus) -> Result<Self> {
        if train.documents.is_empty() {
            return Err(Error::Fit("training split has no documents".into()));
        }
        let vocab = build_lemma_vocab(train);
        let tfidf = fit_tfidf(train);
        let pca = fit_pca(tfidf.transform_matrix(train).view())?;
        Ok(FittedModels { vocab, tfidf, pca })
    }
}

/// Feature rows plus the identity of each row's mention.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub matrix: Array2<f64>,
    pub mention_ids: Vec<String>,
    pub doc_ids: Vec<String>,
    pub topic_ids: Vec<String>,
    pub chain_ids: Vec<String>,
}

impl FeatureSet {
    pub fn len(&self) -> usize {
        self.mention_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mention_ids.is_empty()
    }
}

pub struct FeatureExtractor<'a> {
    pub word_vectors: &'a WordVectors,
    pub models: &'a FittedModels,
}

impl<'a> FeatureExtractor<'a> {
    pub fn new(word_vectors: &'a WordVectors, models: &'a FittedModels) -> Self {
        FeatureExtractor {
            word_vectors,
            models,
        }
    }

    pub fn dim(&self) -> usize {
        feature_dim(self.word_vectors.dim())
    }

    /// Projects a document's TF-IDF vector through the fitted PCA.
    pub fn doc_features(&self, doc: &crate::corpus::Document) -> Vec<f64> {
        let sparse = self.models.tfidf.transform_sparse(doc);
        self.models.pca.transform_sparse(&sparse)
    }

    /// Concatenates the blocks of one mention and checks the final width.
    pub fn assemble(
        &self,
        contextual: Vec<f64>,
        document: &[f64],
        comparative: &[f64; comparative::COMPARATIVE_WIDTH],
    ) -> Result<Vec<f64>> {
        let mut row = contextual;
        row.extend_from_slice(document);
        row.extend_from_slice(comparative);
        if row.len() != self.dim() {
            return Err(Error::Shape(format!(
                "assembled {} features, expected {}",
                row.len(),
                self.dim()
            )));
        }
        Ok(row)
    }

    /// Features for every mention of `corpus`, in corpus order. The overlap
    /// pool is the whole corpus or each topic, per `pooling`.
    pub fn extract(&self, corpus: &Corpus, pooling: Pooling) -> Result<FeatureSet> {
        let mut bags = Vec::new();
        let mut doc_groups: Vec<Vec<usize>> = Vec::new();
        let mut pools: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        let mut ids = FeatureSet {
            matrix: Array2::zeros((0, 0)),
            mention_ids: Vec::new(),
            doc_ids: Vec::new(),
            topic_ids: Vec::new(),
            chain_ids: Vec::new(),
        };
        for doc in &corpus.documents {
            let mut group = Vec::new();
            for m in &doc.mentions {
                let row = bags.len();
                bags.push(SpanBag::new(m, doc));
                group.push(row);
                let pool_key = match pooling {
                    Pooling::Global => "",
                    Pooling::PerTopic => doc.topic_id.as_str(),
                };
                pools.entry(pool_key).or_default().push(row);
                ids.mention_ids.push(m.id.clone());
                ids.doc_ids.push(doc.doc_id.clone());
                ids.topic_ids.push(doc.topic_id.clone());
                ids.chain_ids.push(m.gold_chain.clone());
            }
            doc_groups.push(group);
        }

        let dim = self.dim();
        let mut matrix = Array2::<f64>::zeros((bags.len(), dim));
        for (doc, group) in corpus.documents.iter().zip(&doc_groups) {
            if group.is_empty() {
                continue;
            }
            let doc_vec = self.doc_features(doc);
            let pool_key = match pooling {
                Pooling::Global => "",
                Pooling::PerTopic => doc.topic_id.as_str(),
            };
            let pool = &pools[pool_key];
            for (rank0, (m, &row)) in doc.mentions.iter().zip(group).enumerate() {
                let ctx = contextual_features(m, doc, self.word_vectors, &self.models.vocab);
                let cmp = comparative_features(&bags, row, rank0 + 1, group.len(), group, pool);
                let features = self.assemble(ctx, &doc_vec, &cmp)?;
                matrix.row_mut(row).assign(&ndarray::ArrayView1::from(&features));
            }
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(Error::Integrity("non-finite feature value".into()));
        }
        ids.matrix = matrix;
        Ok(ids)
    }
}
