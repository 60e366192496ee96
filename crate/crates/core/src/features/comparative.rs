//! Position-in-document and overlap features relating a mention to the other
//! mentions of its document and of the comparison pool.

use crate::corpus::{Document, Mention};

pub const COMPARATIVE_WIDTH: usize = 7;

/// Sorted word and lemma multisets of a mention's span.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpanBag {
    pub words: Vec<String>,
    pub lemmas: Vec<String>,
}

impl SpanBag {
    pub fn new(mention: &Mention, doc: &Document) -> Self {
        let mut words: Vec<String> = doc.mention_tokens(mention).map(|t| t.word.clone()).collect();
        let mut lemmas: Vec<String> = doc.mention_tokens(mention).map(|t| t.lemma.clone()).collect();
        words.sort();
        lemmas.sort();
        SpanBag { words, lemmas }
    }
}

/// Harmonic (Dice) similarity of two sorted multisets: `2|A∩B| / (|A|+|B|)`.
pub fn harmonic_similarity(a: &[String], b: &[String]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    let (mut i, mut j, mut common) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    2.0 * common as f64 / (a.len() + b.len()) as f64
}

/// `[is_first, rank / n, is_last]` with a 1-based rank.
pub fn position_block(rank: usize, n: usize) -> [f64; 3] {
    let first = if rank == 1 { 1.0 } else { 0.0 };
    let last = if rank == n { 1.0 } else { 0.0 };
    [first, rank as f64 / n as f64, last]
}

/// Average word and lemma overlap of `bags[me]` against `others`, skipping
/// `me` itself; zero when there is nothing to compare with.
pub fn average_overlap(bags: &[SpanBag], me: usize, others: &[usize]) -> [f64; 2] {
    let mut sum = [0.0, 0.0];
    let mut count = 0usize;
    for &o in others.iter().filter(|&&o| o != me) {
        sum[0] += harmonic_similarity(&bags[me].words, &bags[o].words);
        sum[1] += harmonic_similarity(&bags[me].lemmas, &bags[o].lemmas);
        count += 1;
    }
    if count == 0 {
        [0.0, 0.0]
    } else {
        [sum[0] / count as f64, sum[1] / count as f64]
    }
}

/// The seven comparative entries for mention `me`: position block, then
/// word/lemma overlap against its document, then against the pool.
///
/// `rank` is 1-based within the document of `doc_size` mentions.
pub fn comparative_features(
    bags: &[SpanBag],
    me: usize,
    rank: usize,
    doc_size: usize,
    same_doc: &[usize],
    pool: &[usize],
) -> [f64; COMPARATIVE_WIDTH] {
    let [a, b, c] = position_block(rank, doc_size);
    let [dw, dl] = average_overlap(bags, me, same_doc);
    let [pw, pl] = average_overlap(bags, me, pool);
    [a, b, c, dw, dl, pw, pl]
}
