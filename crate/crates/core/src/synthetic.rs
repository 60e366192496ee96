//! Synthetic data with a known chain structure, for tests, demos and the
//! end-to-end checks that cannot use a real annotated corpus.
//!
//! Feature rows mix a chain signal with topic and document nuisance, so raw
//! cosine similarity groups mentions by topic more than by chain. A learner
//! that finds the signal dimensions clusters far better than the raw rows.

use std::fmt::Write as _;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::corpus::{Corpus, Document, Mention, Token};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub documents: usize,
    pub mentions: usize,
    pub chains: usize,
    pub topics: usize,
    /// Chains with a single mention.
    pub singletons: usize,
    pub signal_dims: usize,
    pub nuisance_dims: usize,
    /// Spread of a mention around its chain centre.
    pub signal_noise: f64,
    /// Scale of the direction shared by all mentions of a topic.
    pub topic_scale: f64,
    /// Scale of the direction shared by all mentions of a document.
    pub doc_scale: f64,
    /// Per-mention noise on the nuisance dimensions.
    pub mention_noise: f64,
}

impl SyntheticSpec {
    /// 60 documents, 300 mentions, 40 chains over 10 topics.
    pub fn desk_scale() -> Self {
        SyntheticSpec {
            documents: 60,
            mentions: 300,
            chains: 40,
            topics: 10,
            singletons: 6,
            signal_dims: 12,
            nuisance_dims: 48,
            signal_noise: 0.55,
            topic_scale: 1.3,
            doc_scale: 0.6,
            mention_noise: 0.5,
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.signal_dims + self.nuisance_dims
    }
}

/// Feature rows with their gold structure. Row order groups mentions by
/// document; documents are ordered by topic.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub features: Array2<f64>,
    pub chains: Vec<usize>,
    pub topics: Vec<usize>,
    pub docs: Vec<usize>,
}

impl SyntheticData {
    pub fn len(&self) -> usize {
        self.chains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chains.is_empty()
    }

    /// Rows whose topic satisfies `keep`, with chain ids left as they are.
    pub fn select_topics(&self, keep: impl Fn(usize) -> bool) -> SyntheticData {
        let rows: Vec<usize> = (0..self.len()).filter(|&i| keep(self.topics[i])).collect();
        SyntheticData {
            features: self.features.select(ndarray::Axis(0), &rows),
            chains: rows.iter().map(|&i| self.chains[i]).collect(),
            topics: rows.iter().map(|&i| self.topics[i]).collect(),
            docs: rows.iter().map(|&i| self.docs[i]).collect(),
        }
    }
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            scale * z
        })
        .collect()
}

/// Assigns every mention to `(topic, document, chain)`. Chains are spread
/// round-robin over topics and documents `documents / topics` per topic.
fn layout(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> Vec<(usize, usize, usize)> {
    assert!(spec.topics > 0 && spec.documents >= spec.topics);
    assert!(spec.chains > spec.singletons && spec.singletons < spec.mentions);
    let multi = spec.chains - spec.singletons;
    assert!(spec.mentions >= spec.singletons + 2 * multi, "too few mentions for the chains");
    let docs_per_topic = spec.documents / spec.topics;

    let mut sizes = vec![2usize; multi];
    let mut rest = spec.mentions - spec.singletons - 2 * multi;
    while rest > 0 {
        sizes[rng.random_range(0..multi)] += 1;
        rest -= 1;
    }
    sizes.extend(std::iter::repeat_n(1, spec.singletons));
    sizes.shuffle(rng);

    let mut out = Vec::with_capacity(spec.mentions);
    for (chain, &size) in sizes.iter().enumerate() {
        let topic = chain % spec.topics;
        for _ in 0..size {
            let doc = topic * docs_per_topic + rng.random_range(0..docs_per_topic);
            out.push((topic, doc, chain));
        }
    }
    out.sort_by_key(|&(t, d, c)| (t, d, c));
    out
}

/// Feature rows for `spec`, deterministic in `seed`.
pub fn synthetic_features(spec: &SyntheticSpec, seed: u64) -> SyntheticData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = layout(spec, &mut rng);
    let centres: Vec<Vec<f64>> = (0..spec.chains)
        .map(|_| gaussian(&mut rng, spec.signal_dims, 1.0))
        .collect();
    let topic_dirs: Vec<Vec<f64>> = (0..spec.topics)
        .map(|_| gaussian(&mut rng, spec.nuisance_dims, spec.topic_scale))
        .collect();
    let doc_dirs: Vec<Vec<f64>> = (0..spec.documents)
        .map(|_| gaussian(&mut rng, spec.nuisance_dims, spec.doc_scale))
        .collect();

    let d = spec.feature_dim();
    let mut features = Array2::zeros((rows.len(), d));
    for (i, &(t, doc, c)) in rows.iter().enumerate() {
        let noise = gaussian(&mut rng, d, 1.0);
        for k in 0..spec.signal_dims {
            features[[i, k]] = centres[c][k] + spec.signal_noise * noise[k];
        }
        for k in 0..spec.nuisance_dims {
            let j = spec.signal_dims + k;
            features[[i, j]] = topic_dirs[t][k] + doc_dirs[doc][k] + spec.mention_noise * noise[j];
        }
    }
    SyntheticData {
        features,
        chains: rows.iter().map(|r| r.2).collect(),
        topics: rows.iter().map(|r| r.0).collect(),
        docs: rows.iter().map(|r| r.1).collect(),
    }
}

/// A text corpus with the same layout plus a matching word-vector file.
///
/// Each mention is one sentence `subject trigger object`. Triggers come from
/// a small per-chain lemma set that overlaps across chains, so head-lemma
/// grouping is informative but imperfect. Topic ids are `1..=topics`.
pub fn synthetic_corpus(spec: &SyntheticSpec, seed: u64, vector_dim: usize) -> Result<(Corpus, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = layout(spec, &mut rng);
    let trigger_pool = (spec.chains * 2 / 3).max(1);
    let chain_lemmas: Vec<[usize; 2]> = (0..spec.chains)
        .map(|_| [rng.random_range(0..trigger_pool), rng.random_range(0..trigger_pool)])
        .collect();
    let docs_per_topic = spec.documents / spec.topics;

    let mut documents: Vec<Document> = (0..spec.topics * docs_per_topic)
        .map(|d| Document {
            doc_id: format!("t{}d{}", d / docs_per_topic + 1, d % docs_per_topic),
            topic_id: (d / docs_per_topic + 1).to_string(),
            tokens: Vec::new(),
            mentions: Vec::new(),
        })
        .collect();
    let mut words = std::collections::BTreeSet::new();
    for (i, &(t, d, c)) in rows.iter().enumerate() {
        let doc = &mut documents[d];
        let sentence = doc.tokens.last().map_or(0, |tok| tok.sentence_id + 1);
        let trigger = chain_lemmas[c][usize::from(rng.random_bool(0.3))];
        let subject = format!("actor{}", t * 3 + rng.random_range(0..3));
        let object = format!("thing{}", rng.random_range(0..2 * spec.topics));
        let lemma = format!("act{trigger}");
        let forms = [
            (subject.clone(), subject),
            (format!("{lemma}ed"), lemma),
            (object.clone(), object),
        ];
        for (word, lemma) in forms {
            words.insert(word.clone());
            let index = doc.tokens.len();
            doc.tokens.push(Token {
                index,
                sentence_id: sentence,
                word,
                lemma,
            });
        }
        let trigger_index = doc.tokens.len() - 2;
        doc.mentions.push(Mention {
            id: format!("m{i}"),
            doc_id: doc.doc_id.clone(),
            token_indices: vec![trigger_index],
            gold_chain: format!("c{c}"),
        });
    }
    let corpus = Corpus::new(documents)?;

    let mut vectors = format!("{} {vector_dim}\n", words.len());
    for w in &words {
        let v = gaussian(&mut rng, vector_dim, 1.0);
        let _ = write!(vectors, "{w}");
        for x in v {
            let _ = write!(vectors, " {x:.6}");
        }
        vectors.push('\n');
    }
    Ok((corpus, vectors))
}
