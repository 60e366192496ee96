//! Coreference scorers: MUC, B³, CEAF-M, CEAF-E, BLANC and CoNLL.
//!
//! All scorers assume gold mentions, so the system and gold partitions must
//! cover exactly the same mention ids. Empty denominators score 0.

pub mod assignment;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::{Clustering, Corpus};
use crate::error::{Error, Result};
pub use assignment::max_weight_assignment;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Prf {
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
}

impl Prf {
    pub fn new(recall: f64, precision: f64) -> Self {
        Prf {
            recall,
            precision,
            f1: f_measure(recall, precision),
        }
    }
}

pub fn f_measure(recall: f64, precision: f64) -> f64 {
    if recall + precision == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Gold and system partitions as chain labels over a shared mention index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelPair {
    pub gold: Vec<usize>,
    pub sys: Vec<usize>,
}

impl LabelPair {
    /// Fails with the offending ids when the mention sets differ.
    pub fn align(gold: &Clustering, sys: &Clustering) -> Result<Self> {
        gold.validate()?;
        sys.validate()?;
        let gold_of = gold.chain_of();
        let sys_of = sys.chain_of();
        let mut offending: BTreeSet<&str> = BTreeSet::new();
        offending.extend(gold_of.keys().filter(|id| !sys_of.contains_key(*id)));
        offending.extend(sys_of.keys().filter(|id| !gold_of.contains_key(*id)));
        if !offending.is_empty() {
            return Err(Error::MentionMismatch(
                offending.into_iter().map(str::to_string).collect(),
            ));
        }
        let ids: Vec<&str> = gold.mention_ids().collect();
        Ok(LabelPair {
            gold: ids.iter().map(|id| gold_of[id]).collect(),
            sys: ids.iter().map(|id| sys_of[id]).collect(),
        })
    }

    pub fn new(gold: Vec<usize>, sys: Vec<usize>) -> Self {
        assert_eq!(gold.len(), sys.len(), "label vectors must cover the same mentions");
        LabelPair { gold, sys }
    }

    pub fn len(&self) -> usize {
        self.gold.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gold.is_empty()
    }

    pub fn swapped(&self) -> Self {
        LabelPair {
            gold: self.sys.clone(),
            sys: self.gold.clone(),
        }
    }

    fn contingency(&self) -> Contingency {
        let mut cells: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut gold_sizes: BTreeMap<usize, usize> = BTreeMap::new();
        let mut sys_sizes: BTreeMap<usize, usize> = BTreeMap::new();
        for (&g, &s) in self.gold.iter().zip(&self.sys) {
            *cells.entry((g, s)).or_default() += 1;
            *gold_sizes.entry(g).or_default() += 1;
            *sys_sizes.entry(s).or_default() += 1;
        }
        Contingency {
            cells,
            gold_sizes,
            sys_sizes,
        }
    }
}

struct Contingency {
    cells: BTreeMap<(usize, usize), usize>,
    gold_sizes: BTreeMap<usize, usize>,
    sys_sizes: BTreeMap<usize, usize>,
}

/// Link-based MUC over label vectors.
pub fn muc(labels: &LabelPair) -> Prf {
    let t = labels.contingency();
    let side = |key_sizes: &BTreeMap<usize, usize>, by_key: &dyn Fn(&(usize, usize)) -> usize| {
        let mut parts: BTreeMap<usize, usize> = BTreeMap::new();
        for cell in t.cells.keys() {
            *parts.entry(by_key(cell)).or_default() += 1;
        }
        let num: usize = key_sizes.iter().map(|(k, &n)| n - parts[k]).sum();
        let den: usize = key_sizes.values().map(|&n| n - 1).sum();
        ratio(num as f64, den as f64)
    };
    let recall = side(&t.gold_sizes, &|&(g, _)| g);
    let precision = side(&t.sys_sizes, &|&(_, s)| s);
    Prf::new(recall, precision)
}

/// Mention-based B³ over label vectors.
pub fn b_cubed(labels: &LabelPair) -> Prf {
    let t = labels.contingency();
    let n = labels.len() as f64;
    let (mut r, mut p) = (0.0, 0.0);
    for (&(g, s), &c) in &t.cells {
        let c = c as f64;
        r += c * c / t.gold_sizes[&g] as f64;
        p += c * c / t.sys_sizes[&s] as f64;
    }
    Prf::new(ratio(r, n), ratio(p, n))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CeafVariant {
    /// `φ(K, S) = |K ∩ S|`
    Mention,
    /// `φ(K, S) = 2|K ∩ S| / (|K| + |S|)`
    Entity,
}

/// CEAF with the optimal one-to-one chain alignment. The bipartite overlap
/// graph is split into connected components, each solved separately, since
/// non-overlapping chains contribute zero similarity.
pub fn ceaf(labels: &LabelPair, variant: CeafVariant) -> Prf {
    let t = labels.contingency();
    let phi = |overlap: usize, g: usize, s: usize| match variant {
        CeafVariant::Mention => overlap as f64,
        CeafVariant::Entity => 2.0 * overlap as f64 / (g + s) as f64,
    };
    let self_sim = |n: usize| match variant {
        CeafVariant::Mention => n as f64,
        CeafVariant::Entity => 1.0,
    };
    let gold_total: f64 = t.gold_sizes.values().map(|&n| self_sim(n)).sum();
    let sys_total: f64 = t.sys_sizes.values().map(|&n| self_sim(n)).sum();

    // union-find over gold chains (by label) and sys chains (offset)
    let gold_keys: Vec<usize> = t.gold_sizes.keys().copied().collect();
    let sys_keys: Vec<usize> = t.sys_sizes.keys().copied().collect();
    let gi: BTreeMap<usize, usize> = gold_keys.iter().enumerate().map(|(i, &k)| (k, i)).collect();
    let si: BTreeMap<usize, usize> = sys_keys.iter().enumerate().map(|(i, &k)| (k, i)).collect();
    let mut uf = UnionFind::new(gold_keys.len() + sys_keys.len());
    for &(g, s) in t.cells.keys() {
        uf.union(gi[&g], gold_keys.len() + si[&s]);
    }
    let mut components: BTreeMap<usize, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for (i, &g) in gold_keys.iter().enumerate() {
        components.entry(uf.find(i)).or_default().0.push(g);
    }
    for (j, &s) in sys_keys.iter().enumerate() {
        components.entry(uf.find(gold_keys.len() + j)).or_default().1.push(s);
    }
    let mut best = 0.0;
    for (gs, ss) in components.values() {
        let w: Vec<Vec<f64>> = gs
            .iter()
            .map(|g| {
                ss.iter()
                    .map(|s| {
                        let overlap = t.cells.get(&(*g, *s)).copied().unwrap_or(0);
                        phi(overlap, t.gold_sizes[g], t.sys_sizes[s])
                    })
                    .collect()
            })
            .collect();
        best += max_weight_assignment(&w).0;
    }
    Prf::new(ratio(best, gold_total), ratio(best, sys_total))
}

/// Pairwise link counts used by BLANC.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinkCounts {
    pub gold_coref: u64,
    pub sys_coref: u64,
    pub both_coref: u64,
    pub total_pairs: u64,
}

impl LinkCounts {
    pub fn from_labels(labels: &LabelPair) -> Self {
        let t = labels.contingency();
        let pairs = |n: usize| (n as u64) * (n as u64).saturating_sub(1) / 2;
        LinkCounts {
            gold_coref: t.gold_sizes.values().map(|&n| pairs(n)).sum(),
            sys_coref: t.sys_sizes.values().map(|&n| pairs(n)).sum(),
            both_coref: t.cells.values().map(|&n| pairs(n)).sum(),
            total_pairs: pairs(labels.len()),
        }
    }

    pub fn gold_noncoref(&self) -> u64 {
        self.total_pairs - self.gold_coref
    }

    pub fn sys_noncoref(&self) -> u64 {
        self.total_pairs - self.sys_coref
    }

    pub fn both_noncoref(&self) -> u64 {
        self.total_pairs + self.both_coref - self.gold_coref - self.sys_coref
    }
}

/// BLANC: mean of the coreference-link and non-coreference-link scores. A
/// link type absent from both gold and system is left out of the mean.
pub fn blanc(labels: &LabelPair) -> Prf {
    let c = LinkCounts::from_labels(labels);
    let mut parts = Vec::with_capacity(2);
    if c.gold_coref > 0 || c.sys_coref > 0 {
        parts.push(Prf::new(
            ratio(c.both_coref as f64, c.gold_coref as f64),
            ratio(c.both_coref as f64, c.sys_coref as f64),
        ));
    }
    if c.gold_noncoref() > 0 || c.sys_noncoref() > 0 {
        parts.push(Prf::new(
            ratio(c.both_noncoref() as f64, c.gold_noncoref() as f64),
            ratio(c.both_noncoref() as f64, c.sys_noncoref() as f64),
        ));
    }
    if parts.is_empty() {
        return Prf::default();
    }
    let k = parts.len() as f64;
    Prf {
        recall: parts.iter().map(|p| p.recall).sum::<f64>() / k,
        precision: parts.iter().map(|p| p.precision).sum::<f64>() / k,
        f1: parts.iter().map(|p| p.f1).sum::<f64>() / k,
    }
}

pub fn score_muc(gold: &Clustering, sys: &Clustering) -> Result<Prf> {
    Ok(muc(&LabelPair::align(gold, sys)?))
}

pub fn score_b3(gold: &Clustering, sys: &Clustering) -> Result<Prf> {
    Ok(b_cubed(&LabelPair::align(gold, sys)?))
}

pub fn score_ceaf(gold: &Clustering, sys: &Clustering, variant: CeafVariant) -> Result<Prf> {
    Ok(ceaf(&LabelPair::align(gold, sys)?, variant))
}

pub fn score_blanc(gold: &Clustering, sys: &Clustering) -> Result<Prf> {
    Ok(blanc(&LabelPair::align(gold, sys)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub muc: Prf,
    pub b3: Prf,
    pub ceaf_m: Prf,
    pub ceaf_e: Prf,
    pub blanc: Prf,
    pub conll: f64,
}

impl MetricReport {
    pub fn from_labels(labels: &LabelPair) -> Self {
        let muc = muc(labels);
        let b3 = b_cubed(labels);
        let ceaf_e = ceaf(labels, CeafVariant::Entity);
        MetricReport {
            muc,
            b3,
            ceaf_m: ceaf(labels, CeafVariant::Mention),
            ceaf_e,
            blanc: blanc(labels),
            conll: (muc.f1 + b3.f1 + ceaf_e.f1) / 3.0,
        }
    }

    pub fn rows(&self) -> [(&'static str, Prf); 5] {
        [
            ("MUC", self.muc),
            ("B3", self.b3),
            ("CEAF-M", self.ceaf_m),
            ("CEAF-E", self.ceaf_e),
            ("BLANC", self.blanc),
        ]
    }

    /// Machine-readable report: one row per measure, columns R, P, F, four
    /// decimals.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("measure\tR\tP\tF\n");
        for (name, p) in self.rows() {
            let _ = writeln!(out, "{name}\t{:.4}\t{:.4}\t{:.4}", p.recall, p.precision, p.f1);
        }
        let _ = writeln!(out, "CoNLL\t-\t-\t{:.4}", self.conll);
        out
    }

    /// Human-readable percentages, rounded to integers.
    pub fn to_table(&self) -> String {
        let mut out = format!("{:<8}{:>5}{:>5}{:>5}\n", "", "R", "P", "F");
        let pct = |x: f64| (100.0 * x).round() as i64;
        for (name, p) in self.rows() {
            let _ = writeln!(
                out,
                "{name:<8}{:>5}{:>5}{:>5}",
                pct(p.recall),
                pct(p.precision),
                pct(p.f1)
            );
        }
        let _ = writeln!(out, "{:<8}{:>5}{:>5}{:>5}", "CoNLL", "", "", pct(self.conll));
        out
    }
}

pub fn report(gold: &Clustering, sys: &Clustering) -> Result<MetricReport> {
    Ok(MetricReport::from_labels(&LabelPair::align(gold, sys)?))
}

/// Splits every chain by document, keeping first-appearance order.
pub fn project_within_doc(c: &Clustering, doc_of: &HashMap<String, String>) -> Result<Clustering> {
    let mut chains = Vec::new();
    for chain in &c.chains {
        let mut order: Vec<&str> = Vec::new();
        let mut parts: BTreeMap<&str, Vec<String>> = BTreeMap::new();
        for id in chain {
            let doc = doc_of
                .get(id)
                .ok_or_else(|| Error::Integrity(format!("mention {id} has no document")))?;
            let part = parts.entry(doc.as_str()).or_insert_with(|| {
                order.push(doc);
                Vec::new()
            });
            part.push(id.clone());
        }
        chains.extend(order.into_iter().map(|d| parts.remove(d).unwrap()));
    }
    Ok(Clustering { chains })
}

pub fn within_doc_projection(c: &Clustering, corpus: &Corpus) -> Result<Clustering> {
    project_within_doc(c, &corpus.doc_of_mention())
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clustering(chains: &[&[&str]]) -> Clustering {
        Clustering::new(
            chains
                .iter()
                .map(|c| c.iter().map(|s| s.to_string()).collect())
                .collect(),
        )
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn identical_partitions_score_one() {
        let g = clustering(&[&["a", "b", "c"], &["d", "e"], &["f"]]);
        let r = report(&g, &g).unwrap();
        for (_, p) in r.rows() {
            assert_eq!((p.recall, p.precision, p.f1), (1.0, 1.0, 1.0));
        }
        assert_eq!(r.conll, 1.0);
    }

    #[test]
    fn muc_examples() {
        let g = clustering(&[&["a", "b", "c"], &["d"]]);
        let s = clustering(&[&["a", "b"], &["c", "d"]]);
        let p = score_muc(&g, &s).unwrap();
        assert!(close(p.recall, 0.5) && close(p.precision, 0.5) && close(p.f1, 0.5));
        let singletons = clustering(&[&["a"], &["b"]]);
        let p = score_muc(&singletons, &singletons).unwrap();
        assert_eq!(p.recall, 0.0);
    }

    #[test]
    fn b3_examples() {
        let g = clustering(&[&["a", "b", "c", "d"]]);
        let s = clustering(&[&["a"], &["b"], &["c"], &["d"]]);
        let p = score_b3(&g, &s).unwrap();
        assert!(close(p.precision, 1.0) && close(p.recall, 0.25));
        let g = clustering(&[&["a", "b"], &["c"]]);
        let s = clustering(&[&["a", "b", "c"]]);
        let p = score_b3(&g, &s).unwrap();
        assert!(close(p.precision, 5.0 / 9.0) && close(p.recall, 1.0));
    }

    #[test]
    fn ceaf_examples() {
        let g = clustering(&[&["a", "b"], &["c", "d"]]);
        let s = clustering(&[&["a", "c"], &["b", "d"]]);
        let p = score_ceaf(&g, &s, CeafVariant::Mention).unwrap();
        assert!(close(p.recall, 0.5) && close(p.precision, 0.5) && close(p.f1, 0.5));
        // entity variant: each aligned pair has φ4 = 2·1/4
        let p = score_ceaf(&g, &s, CeafVariant::Entity).unwrap();
        assert!(close(p.recall, 0.5) && close(p.precision, 0.5));
    }

    #[test]
    fn blanc_examples() {
        let g = clustering(&[&["a", "b"], &["c"]]);
        let s = clustering(&[&["a"], &["b"], &["c"]]);
        let c = LinkCounts::from_labels(&LabelPair::align(&g, &s).unwrap());
        assert_eq!((c.gold_coref, c.sys_coref, c.both_coref), (1, 0, 0));
        assert_eq!((c.gold_noncoref(), c.sys_noncoref(), c.both_noncoref()), (2, 3, 2));
        let p = score_blanc(&g, &s).unwrap();
        // coref R=P=F=0; non-coref R=1, P=2/3, F=0.8
        assert!(close(p.recall, 0.5));
        assert!(close(p.precision, 1.0 / 3.0));
        assert!(close(p.f1, 0.4));
        // only the non-coreference link type exists
        let g = clustering(&[&["a"], &["b"]]);
        let p = score_blanc(&g, &g).unwrap();
        assert_eq!((p.recall, p.precision, p.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn mismatch_lists_ids() {
        let g = clustering(&[&["a", "b"]]);
        let s = clustering(&[&["a", "z"]]);
        match score_b3(&g, &s) {
            Err(Error::MentionMismatch(ids)) => assert_eq!(ids, ["b", "z"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn projection_splits_by_document() {
        let c = clustering(&[&["a1", "a2", "b1"], &["c1"]]);
        let doc_of: HashMap<String, String> = [("a1", "A"), ("a2", "A"), ("b1", "B"), ("c1", "C")]
            .iter()
            .map(|(m, d)| (m.to_string(), d.to_string()))
            .collect();
        let p = project_within_doc(&c, &doc_of).unwrap();
        assert_eq!(p, clustering(&[&["a1", "a2"], &["b1"], &["c1"]]));
        assert_eq!(project_within_doc(&p, &doc_of).unwrap(), p);
    }

    #[test]
    fn tsv_layout() {
        let g = clustering(&[&["a", "b"], &["c"]]);
        let tsv = report(&g, &g).unwrap().to_tsv();
        let lines: Vec<&str> = tsv.lines().collect();
        assert_eq!(lines[0], "measure\tR\tP\tF");
        assert_eq!(lines[2], "B3\t1.0000\t1.0000\t1.0000");
        assert_eq!(lines.len(), 7);
    }

    fn ceaf_brute(labels: &LabelPair, variant: CeafVariant) -> f64 {
        let t = labels.contingency();
        let gk: Vec<usize> = t.gold_sizes.keys().copied().collect();
        let sk: Vec<usize> = t.sys_sizes.keys().copied().collect();
        let w: Vec<Vec<f64>> = gk
            .iter()
            .map(|g| {
                sk.iter()
                    .map(|s| {
                        let o = t.cells.get(&(*g, *s)).copied().unwrap_or(0) as f64;
                        match variant {
                            CeafVariant::Mention => o,
                            CeafVariant::Entity => {
                                2.0 * o / (t.gold_sizes[g] + t.sys_sizes[s]) as f64
                            }
                        }
                    })
                    .collect()
            })
            .collect();
        assignment::tests::brute_force(&w)
    }

    fn labels_strategy() -> impl Strategy<Value = LabelPair> {
        (1usize..12).prop_flat_map(|n| {
            (
                proptest::collection::vec(0usize..5, n),
                proptest::collection::vec(0usize..5, n),
            )
                .prop_map(|(g, s)| LabelPair::new(g, s))
        })
    }

    use proptest::prelude::*;

    proptest! {
        #[test]
        fn swapping_sides_swaps_recall_and_precision(l in labels_strategy()) {
            let w = l.swapped();
            for (a, b) in [
                (muc(&l), muc(&w)),
                (b_cubed(&l), b_cubed(&w)),
                (ceaf(&l, CeafVariant::Mention), ceaf(&w, CeafVariant::Mention)),
                (ceaf(&l, CeafVariant::Entity), ceaf(&w, CeafVariant::Entity)),
            ] {
                prop_assert!((a.recall - b.precision).abs() < 1e-12);
                prop_assert!((a.precision - b.recall).abs() < 1e-12);
            }
        }

        #[test]
        fn scores_are_bounded_and_conll_is_the_mean(l in labels_strategy()) {
            let r = MetricReport::from_labels(&l);
            for (_, p) in r.rows() {
                for x in [p.recall, p.precision, p.f1] {
                    prop_assert!((0.0..=1.0 + 1e-12).contains(&x));
                }
            }
            prop_assert_eq!(r.conll, (r.muc.f1 + r.b3.f1 + r.ceaf_e.f1) / 3.0);
            prop_assert_eq!(r.ceaf_m.recall, r.ceaf_m.precision);
        }

        #[test]
        fn component_ceaf_matches_brute_force(l in labels_strategy()) {
            for v in [CeafVariant::Mention, CeafVariant::Entity] {
                let t = l.contingency();
                let got = ceaf(&l, v);
                let total: f64 = match v {
                    CeafVariant::Mention => l.len() as f64,
                    CeafVariant::Entity => t.gold_sizes.len() as f64,
                };
                prop_assert!((got.recall * total - ceaf_brute(&l, v)).abs() < 1e-9);
            }
        }
    }
}
