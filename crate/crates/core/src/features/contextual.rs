use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::wordvec::WordVectors;
use crate::corpus::{Corpus, Document, Mention, Token};

/// Width of a lemma count block; the last slot is the out-of-vocabulary bucket.
pub const LEMMA_SLOTS: usize = 500;
pub const OOV_SLOT: usize = LEMMA_SLOTS - 1;
/// Number of token sets summarised per mention.
pub const CONTEXT_SETS: usize = 8;

/// The 499 most frequent training lemmas, each with a fixed slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LemmaVocab {
    pub index_of: BTreeMap<String, usize>,
}

impl LemmaVocab {
    /// Frequency ties go to the lexicographically smaller lemma.
    pub fn build(train: &Corpus) -> Self {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for doc in &train.documents {
            for t in &doc.tokens {
                *counts.entry(t.lemma.as_str()).or_default() += 1;
            }
        }
        let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let index_of = ranked
            .into_iter()
            .take(OOV_SLOT)
            .enumerate()
            .map(|(slot, (lemma, _))| (lemma.to_string(), slot))
            .collect();
        LemmaVocab { index_of }
    }

    pub fn slot(&self, lemma: &str) -> usize {
        self.index_of.get(lemma).copied().unwrap_or(OOV_SLOT)
    }

    pub fn len(&self) -> usize {
        self.index_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index_of.is_empty()
    }
}

pub fn build_lemma_vocab(train: &Corpus) -> LemmaVocab {
    LemmaVocab::build(train)
}

pub fn contextual_width(embedding_dim: usize) -> usize {
    CONTEXT_SETS * (embedding_dim + LEMMA_SLOTS)
}

/// The eight token sets, in output order: first token, last token, whole
/// span, two preceding, two following, five preceding, five following, and
/// the sentence of the first token.
pub fn context_token_sets(mention: &Mention, doc: &Document) -> [Vec<usize>; CONTEXT_SETS] {
    let first = mention.first_token();
    let last = mention.last_token();
    let n = doc.tokens.len();
    let before = |k: usize| (first.saturating_sub(k)..first).collect::<Vec<_>>();
    let after = |k: usize| (last + 1..(last + 1 + k).min(n)).collect::<Vec<_>>();
    let sentence = doc.tokens[first].sentence_id;
    let sentence_tokens = doc
        .tokens
        .iter()
        .filter(|t| t.sentence_id == sentence)
        .map(|t| t.index)
        .collect();
    [
        vec![first],
        vec![last],
        mention.token_indices.clone(),
        before(2),
        after(2),
        before(5),
        after(5),
        sentence_tokens,
    ]
}

/// Per token set: mean word vector (OOV words count as zeros) followed by
/// the lemma count vector.
pub fn contextual_features(
    mention: &Mention,
    doc: &Document,
    wv: &WordVectors,
    vocab: &LemmaVocab,
) -> Vec<f64> {
    let dim = wv.dim();
    let mut out = Vec::with_capacity(contextual_width(dim));
    for set in context_token_sets(mention, doc) {
        let tokens: Vec<&Token> = set.iter().map(|&i| &doc.tokens[i]).collect();
        let mut mean = vec![0.0; dim];
        for t in &tokens {
            if let Some(v) = wv.get(&t.word) {
                mean.iter_mut().zip(v).for_each(|(m, x)| *m += x);
            }
        }
        if !tokens.is_empty() {
            let n = tokens.len() as f64;
            mean.iter_mut().for_each(|m| *m /= n);
        }
        let mut counts = vec![0.0; LEMMA_SLOTS];
        for t in &tokens {
            counts[vocab.slot(&t.lemma)] += 1.0;
        }
        out.extend(mean);
        out.extend(counts);
    }
    out
}
