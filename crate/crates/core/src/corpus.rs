//! Mention-annotated corpus: loading, topic splits, gold chains and the
//! training label scheme.
//!
//! The on-disk format is line-delimited and tab-separated:
//!
//! ```text
//! # comment
//! DOC	doc_id	topic_id
//! TOK	index	sentence_id	word	lemma
//! MEN	mention_id	chain_id	idx1[,idx2,...]
//! ```
//!
//! `TOK` and `MEN` records attach to the most recent `DOC` record.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub index: usize,
    pub sentence_id: usize,
    pub word: String,
    pub lemma: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mention {
    pub id: String,
    pub doc_id: String,
    /// The action span, ascending token positions.
    pub token_indices: Vec<usize>,
    pub gold_chain: String,
}

impl Mention {
    pub fn first_token(&self) -> usize {
        self.token_indices[0]
    }

    pub fn last_token(&self) -> usize {
        *self.token_indices.last().expect("mention spans are nonempty")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub topic_id: String,
    pub tokens: Vec<Token>,
    /// Mentions in document order (by first token).
    pub mentions: Vec<Mention>,
}

impl Document {
    pub fn mention_tokens<'a>(&'a self, mention: &'a Mention) -> impl Iterator<Item = &'a Token> {
        mention.token_indices.iter().map(move |&i| &self.tokens[i])
    }

    /// Lemma of the final token of the span.
    pub fn head_lemma(&self, mention: &Mention) -> &str {
        &self.tokens[mention.last_token()].lemma
    }
}

/// Which on-disk corpus encoding to read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CorpusFormat {
    /// The tab-separated `DOC`/`TOK`/`MEN` record format.
    #[default]
    Lines,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Corpus {
    pub documents: Vec<Document>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub topics: usize,
    pub documents: usize,
    pub tokens: usize,
    pub mentions: usize,
    pub chains: usize,
    pub singleton_chains: usize,
}

impl Corpus {
    pub fn new(documents: Vec<Document>) -> Result<Self> {
        let corpus = Corpus { documents };
        corpus.validate()?;
        Ok(corpus)
    }

    pub fn mentions(&self) -> impl Iterator<Item = (&Document, &Mention)> {
        self.documents
            .iter()
            .flat_map(|d| d.mentions.iter().map(move |m| (d, m)))
    }

    pub fn mention_count(&self) -> usize {
        self.documents.iter().map(|d| d.mentions.len()).sum()
    }

    pub fn document(&self, doc_id: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.doc_id == doc_id)
    }

    /// Map from mention id to the id of its document.
    pub fn doc_of_mention(&self) -> HashMap<String, String> {
        self.mentions()
            .map(|(d, m)| (m.id.clone(), d.doc_id.clone()))
            .collect()
    }

    pub fn topic_ids(&self) -> BTreeSet<&str> {
        self.documents.iter().map(|d| d.topic_id.as_str()).collect()
    }

    pub fn summary(&self) -> CorpusSummary {
        let mut chain_sizes: HashMap<&str, usize> = HashMap::new();
        for (_, m) in self.mentions() {
            *chain_sizes.entry(m.gold_chain.as_str()).or_default() += 1;
        }
        CorpusSummary {
            topics: self.topic_ids().len(),
            documents: self.documents.len(),
            tokens: self.documents.iter().map(|d| d.tokens.len()).sum(),
            mentions: self.mention_count(),
            chains: chain_sizes.len(),
            singleton_chains: chain_sizes.values().filter(|&&n| n == 1).count(),
        }
    }

    /// Checks every type invariant; the loader calls this after parsing.
    pub fn validate(&self) -> Result<()> {
        let mut doc_ids = HashSet::new();
        let mut mention_ids = HashSet::new();
        for doc in &self.documents {
            if !doc_ids.insert(doc.doc_id.as_str()) {
                return Err(Error::Integrity(format!("duplicate document id {}", doc.doc_id)));
            }
            if doc.topic_id.is_empty() {
                return Err(Error::Integrity(format!("document {} has an empty topic id", doc.doc_id)));
            }
            for (pos, tok) in doc.tokens.iter().enumerate() {
                if tok.index != pos {
                    return Err(Error::Integrity(format!(
                        "document {}: token index {} at position {pos}",
                        doc.doc_id, tok.index
                    )));
                }
                if tok.lemma.is_empty() {
                    return Err(Error::Integrity(format!(
                        "document {}: token {pos} has an empty lemma",
                        doc.doc_id
                    )));
                }
            }
            let mut prev_first = 0;
            for m in &doc.mentions {
                check_mention(doc, m)?;
                if !mention_ids.insert(m.id.as_str()) {
                    return Err(Error::Integrity(format!("duplicate mention id {}", m.id)));
                }
                if m.first_token() < prev_first {
                    return Err(Error::Integrity(format!(
                        "document {}: mentions out of document order at {}",
                        doc.doc_id, m.id
                    )));
                }
                prev_first = m.first_token();
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for doc in &self.documents {
            let _ = writeln!(out, "DOC\t{}\t{}", doc.doc_id, doc.topic_id);
            for t in &doc.tokens {
                let _ = writeln!(out, "TOK\t{}\t{}\t{}\t{}", t.index, t.sentence_id, t.word, t.lemma);
            }
            for m in &doc.mentions {
                let idx: Vec<String> = m.token_indices.iter().map(usize::to_string).collect();
                let _ = writeln!(out, "MEN\t{}\t{}\t{}", m.id, m.gold_chain, idx.join(","));
            }
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

fn check_mention(doc: &Document, m: &Mention) -> Result<()> {
    if m.token_indices.is_empty() {
        return Err(Error::Integrity(format!("mention {} has an empty span", m.id)));
    }
    if m.doc_id != doc.doc_id {
        return Err(Error::Integrity(format!(
            "mention {} claims document {} but is stored in {}",
            m.id, m.doc_id, doc.doc_id
        )));
    }
    if m.token_indices.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Integrity(format!("mention {} token indices are not ascending", m.id)));
    }
    if let Some(&bad) = m.token_indices.iter().find(|&&i| i >= doc.tokens.len()) {
        return Err(Error::Integrity(format!(
            "mention {} references token {bad} but document {} has {} tokens",
            m.id,
            doc.doc_id,
            doc.tokens.len()
        )));
    }
    Ok(())
}

pub fn load_corpus(path: impl AsRef<Path>, format: CorpusFormat) -> Result<Corpus> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match format {
        CorpusFormat::Lines => parse_corpus(&text),
    }
}

pub fn parse_corpus(text: &str) -> Result<Corpus> {
    let mut documents: Vec<Document> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        match fields[0] {
            "DOC" => {
                let [_, doc_id, topic_id] = fields[..] else {
                    return Err(Error::parse(line_no, "DOC expects 2 fields: doc_id topic_id"));
                };
                if doc_id.is_empty() || topic_id.is_empty() {
                    return Err(Error::parse(line_no, "empty doc_id or topic_id"));
                }
                documents.push(Document {
                    doc_id: doc_id.to_string(),
                    topic_id: topic_id.to_string(),
                    tokens: Vec::new(),
                    mentions: Vec::new(),
                });
            }
            "TOK" => {
                let [_, index, sentence, word, lemma] = fields[..] else {
                    return Err(Error::parse(line_no, "TOK expects 4 fields: index sentence_id word lemma"));
                };
                let doc = documents
                    .last_mut()
                    .ok_or_else(|| Error::parse(line_no, "TOK before any DOC"))?;
                let index: usize = parse_num(index, line_no, "token index")?;
                let sentence_id: usize = parse_num(sentence, line_no, "sentence id")?;
                if index != doc.tokens.len() {
                    return Err(Error::parse(
                        line_no,
                        format!("token index {index}, expected {}", doc.tokens.len()),
                    ));
                }
                if lemma.is_empty() {
                    return Err(Error::parse(line_no, "empty lemma"));
                }
                doc.tokens.push(Token {
                    index,
                    sentence_id,
                    word: word.to_string(),
                    lemma: lemma.to_string(),
                });
            }
            "MEN" => {
                let [_, id, chain, span] = fields[..] else {
                    return Err(Error::parse(line_no, "MEN expects 3 fields: mention_id chain_id indices"));
                };
                let doc = documents
                    .last_mut()
                    .ok_or_else(|| Error::parse(line_no, "MEN before any DOC"))?;
                if id.is_empty() || chain.is_empty() {
                    return Err(Error::parse(line_no, "empty mention or chain id"));
                }
                let token_indices = span
                    .split(',')
                    .map(|s| parse_num(s.trim(), line_no, "mention token index"))
                    .collect::<Result<Vec<usize>>>()?;
                doc.mentions.push(Mention {
                    id: id.to_string(),
                    doc_id: doc.doc_id.clone(),
                    token_indices,
                    gold_chain: chain.to_string(),
                });
            }
            other => return Err(Error::parse(line_no, format!("unknown record kind {other:?}"))),
        }
    }
    for doc in &mut documents {
        doc.mentions.sort_by_key(|m| m.token_indices.first().copied().unwrap_or(0));
    }
    Corpus::new(documents)
}

fn parse_num(s: &str, line: usize, what: &str) -> Result<usize> {
    s.parse()
        .map_err(|_| Error::parse(line, format!("{what} {s:?} is not a nonnegative integer")))
}

/// Topic-id sets for the train / validation / test split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: BTreeSet<String>,
    pub validation: BTreeSet<String>,
    pub test: BTreeSet<String>,
}

/// Validation topics held out of the ECB+ training topics.
pub const ECB_VALIDATION_TOPICS: [u32; 8] = [2, 5, 12, 18, 21, 23, 34, 35];

impl SplitSpec {
    /// ECB+ split: train = topics 1-35 minus validation, test = topics 36-45.
    pub fn ecb_plus() -> Self {
        let validation: BTreeSet<String> =
            ECB_VALIDATION_TOPICS.iter().map(|t| t.to_string()).collect();
        let train = (1..=35)
            .map(|t: u32| t.to_string())
            .filter(|t| !validation.contains(t))
            .collect();
        let test = (36..=45).map(|t: u32| t.to_string()).collect();
        SplitSpec {
            train,
            validation,
            test,
        }
    }

    pub fn check_disjoint(&self) -> Result<()> {
        let pairs = [
            ("train", &self.train, "validation", &self.validation),
            ("train", &self.train, "test", &self.test),
            ("validation", &self.validation, "test", &self.test),
        ];
        for (na, a, nb, b) in pairs {
            if let Some(t) = a.intersection(b).next() {
                return Err(Error::Config(format!("topic {t} is in both {na} and {nb}")));
            }
        }
        Ok(())
    }
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self::ecb_plus()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Splits {
    pub train: Corpus,
    pub validation: Corpus,
    pub test: Corpus,
}

/// Documents whose topic is in none of the three sets are dropped.
pub fn split_by_topics(corpus: &Corpus, spec: &SplitSpec) -> Result<Splits> {
    spec.check_disjoint()?;
    let pick = |topics: &BTreeSet<String>| Corpus {
        documents: corpus
            .documents
            .iter()
            .filter(|d| topics.contains(&d.topic_id))
            .cloned()
            .collect(),
    };
    Ok(Splits {
        train: pick(&spec.train),
        validation: pick(&spec.validation),
        test: pick(&spec.test),
    })
}

/// Maps training chains to classifier outputs: one class per multi-mention
/// chain, plus one shared class for all singletons.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelScheme {
    pub class_of_chain: BTreeMap<String, usize>,
    /// Number of multi-mention chains; also the singleton class index.
    pub num_chain_classes: usize,
}

impl LabelScheme {
    pub fn build(train: &Corpus) -> Self {
        Self::from_chain_ids(train.mentions().map(|(_, m)| m.gold_chain.as_str()))
    }

    /// Same as [`LabelScheme::build`], from the gold chain id of every
    /// training mention.
    pub fn from_chain_ids<'a>(ids: impl IntoIterator<Item = &'a str>) -> Self {
        let mut sizes: BTreeMap<&str, usize> = BTreeMap::new();
        for id in ids {
            *sizes.entry(id).or_default() += 1;
        }
        let class_of_chain: BTreeMap<String, usize> = sizes
            .into_iter()
            .filter(|&(_, n)| n >= 2)
            .enumerate()
            .map(|(class, (chain, _))| (chain.to_string(), class))
            .collect();
        let num_chain_classes = class_of_chain.len();
        LabelScheme {
            class_of_chain,
            num_chain_classes,
        }
    }

    pub fn singleton_class(&self) -> usize {
        self.num_chain_classes
    }

    /// Total output classes, `C + 1`.
    pub fn num_classes(&self) -> usize {
        self.num_chain_classes + 1
    }

    pub fn class_of(&self, chain: &str) -> usize {
        self.class_of_chain
            .get(chain)
            .copied()
            .unwrap_or(self.num_chain_classes)
    }
}

pub fn build_label_scheme(train: &Corpus) -> LabelScheme {
    LabelScheme::build(train)
}

/// A partition of a mention set into chains of mention ids.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Clustering {
    pub chains: Vec<Vec<String>>,
}

impl Clustering {
    pub fn new(chains: Vec<Vec<String>>) -> Self {
        Clustering { chains }
    }

    pub fn len(&self) -> usize {
        self.chains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chains.is_empty()
    }

    pub fn mention_count(&self) -> usize {
        self.chains.iter().map(Vec::len).sum()
    }

    pub fn mention_ids(&self) -> impl Iterator<Item = &str> {
        self.chains.iter().flatten().map(String::as_str)
    }

    /// Errors on empty chains or a mention appearing twice.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for chain in &self.chains {
            if chain.is_empty() {
                return Err(Error::Integrity("clustering contains an empty chain".into()));
            }
            for id in chain {
                if !seen.insert(id.as_str()) {
                    return Err(Error::Integrity(format!("mention {id} appears in two chains")));
                }
            }
        }
        Ok(())
    }

    /// Members sorted within each chain, chains sorted by smallest member.
    pub fn canonical(&self) -> Clustering {
        let mut chains: Vec<Vec<String>> = self
            .chains
            .iter()
            .map(|c| {
                let mut c = c.clone();
                c.sort();
                c
            })
            .collect();
        chains.sort();
        Clustering { chains }
    }

    /// Chain index for each mention id.
    pub fn chain_of(&self) -> HashMap<&str, usize> {
        self.chains
            .iter()
            .enumerate()
            .flat_map(|(k, c)| c.iter().map(move |id| (id.as_str(), k)))
            .collect()
    }

    /// Builds a clustering from index groups over `ids`.
    pub fn from_groups(ids: &[String], groups: &[Vec<usize>]) -> Clustering {
        Clustering {
            chains: groups
                .iter()
                .map(|g| g.iter().map(|&i| ids[i].clone()).collect())
                .collect(),
        }
    }
}

/// One chain per distinct gold chain id, in first-appearance order.
pub fn gold_clustering(corpus: &Corpus) -> Clustering {
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut chains: Vec<Vec<String>> = Vec::new();
    for (_, m) in corpus.mentions() {
        let k = *index.entry(m.gold_chain.as_str()).or_insert_with(|| {
            chains.push(Vec::new());
            chains.len() - 1
        });
        chains[k].push(m.id.clone());
    }
    Clustering { chains }
}
