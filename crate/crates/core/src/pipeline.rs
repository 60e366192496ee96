//! The four pipeline stages with file handoffs inside the output directory.
//!
//! | stage      | writes                                                        |
//! |------------|---------------------------------------------------------------|
//! | features   | `{split}.fmat`, `{split}.meta.json`, `models.json`, `gold_{split}.chains` |
//! | train      | `checkpoint.bin`, `train_log.tsv`, `train_summary.json`       |
//! | cluster    | `{variant}_{split}.chains`                                    |
//! | score      | `{variant}_{split}_{mode}.tsv`                                |
//!
//! Every artifact records the config hash and the seed.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ndarray::Array2;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::clustering::lemma::{lemma_delta_with, lemma_partition, DocSimilarity};
use crate::clustering::tuning::{tune_delta, tune_delta_with_embeddings, tune_tau};
use crate::clustering::{agglomerate, read_chains, write_chains, Partition, Pooling, SimilarityMatrix};
use crate::config::{RunConfig, Variant};
use crate::corpus::{gold_clustering, load_corpus, split_by_topics, Clustering, Corpus, CorpusFormat, LabelScheme, Splits};
use crate::error::{Error, Result};
use crate::features::{read_matrix, write_matrix, FeatureExtractor, FittedModels, WordVectors};
use crate::net::{embed, train, Checkpoint, EpochLog, NetParams, TrainSet, ValidationScore, Validator};
use crate::scoring::{project_within_doc, MetricReport, LabelPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Validation,
    Test,
}

impl SplitName {
    pub const ALL: [SplitName; 3] = [SplitName::Train, SplitName::Validation, SplitName::Test];

    pub fn name(self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::Validation => "validation",
            SplitName::Test => "test",
        }
    }

    pub fn pick(self, splits: &Splits) -> &Corpus {
        match self {
            SplitName::Train => &splits.train,
            SplitName::Validation => &splits.validation,
            SplitName::Test => &splits.test,
        }
    }
}

impl fmt::Display for SplitName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SplitName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(SplitName::Train),
            "validation" | "val" | "dev" => Ok(SplitName::Validation),
            "test" => Ok(SplitName::Test),
            _ => Err(Error::Config(format!("unknown split {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreMode {
    #[default]
    Combined,
    /// Cross-document links cut on both sides before scoring.
    WithinDoc,
}

impl ScoreMode {
    pub fn name(self) -> &'static str {
        match self {
            ScoreMode::Combined => "combined",
            ScoreMode::WithinDoc => "within-doc",
        }
    }
}

impl FromStr for ScoreMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "combined" => Ok(ScoreMode::Combined),
            "within-doc" | "within_doc" | "within" => Ok(ScoreMode::WithinDoc),
            _ => Err(Error::Config(format!("unknown score mode {s:?}"))),
        }
    }
}

/// Artifact locations inside the output directory.
#[derive(Debug, Clone)]
pub struct Workspace {
    pub dir: PathBuf,
}

impl Workspace {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Workspace { dir: dir.into() }
    }

    pub fn features(&self, split: SplitName) -> PathBuf {
        self.dir.join(format!("{split}.fmat"))
    }

    pub fn meta(&self, split: SplitName) -> PathBuf {
        self.dir.join(format!("{split}.meta.json"))
    }

    pub fn models(&self) -> PathBuf {
        self.dir.join("models.json")
    }

    pub fn gold(&self, split: SplitName) -> PathBuf {
        self.dir.join(format!("gold_{split}.chains"))
    }

    pub fn checkpoint(&self) -> PathBuf {
        self.dir.join("checkpoint.bin")
    }

    pub fn train_log(&self) -> PathBuf {
        self.dir.join("train_log.tsv")
    }

    pub fn train_summary(&self) -> PathBuf {
        self.dir.join("train_summary.json")
    }

    pub fn chains(&self, variant: Variant, split: SplitName) -> PathBuf {
        self.dir.join(format!("{}_{split}.chains", variant.slug()))
    }

    pub fn report(&self, variant: Variant, split: SplitName, mode: ScoreMode) -> PathBuf {
        self.dir
            .join(format!("{}_{split}_{}.tsv", variant.slug(), mode.name()))
    }
}

/// Row identities of a feature matrix file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMeta {
    pub config_hash: String,
    pub seed: u64,
    pub split: SplitName,
    pub pooling: Pooling,
    pub word_vector_dim: usize,
    pub feature_dim: usize,
    pub mention_ids: Vec<String>,
    pub doc_ids: Vec<String>,
    pub topic_ids: Vec<String>,
    pub chain_ids: Vec<String>,
}

impl FeatureMeta {
    pub fn gold(&self) -> Clustering {
        let mut index: HashMap<&str, usize> = HashMap::new();
        let mut groups: Partition = Vec::new();
        for (row, chain) in self.chain_ids.iter().enumerate() {
            let k = *index.entry(chain).or_insert_with(|| {
                groups.push(Vec::new());
                groups.len() - 1
            });
            groups[k].push(row);
        }
        Clustering::from_groups(&self.mention_ids, &groups)
    }

    /// Dense chain index per row; singletons get their own index.
    pub fn chain_labels(&self) -> Vec<usize> {
        let mut index: HashMap<&str, usize> = HashMap::new();
        self.chain_ids
            .iter()
            .map(|c| {
                let next = index.len();
                *index.entry(c).or_insert(next)
            })
            .collect()
    }

    pub fn doc_map(&self) -> HashMap<String, String> {
        self.mention_ids
            .iter()
            .cloned()
            .zip(self.doc_ids.iter().cloned())
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Stamped<T> {
    config_hash: String,
    seed: u64,
    #[serde(flatten)]
    body: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub variant: Variant,
    pub config_hash: String,
    pub seed: u64,
    pub best_epoch: usize,
    pub validation: Option<ValidationScore>,
    pub num_classes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub variant: Variant,
    pub split: SplitName,
    pub tau: Option<f64>,
    pub delta: Option<f64>,
    /// Validation B³ F1 of the chosen thresholds, when they were tuned.
    pub validation_b3: Option<f64>,
    pub chains: usize,
    pub path: PathBuf,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

fn header(cfg: &RunConfig) -> Vec<(&'static str, String)> {
    vec![
        ("config_hash", cfg.hash()),
        ("seed", cfg.seed().to_string()),
        ("variant", cfg.variant.to_string()),
    ]
}

fn load_splits(cfg: &RunConfig) -> Result<Splits> {
    let corpus = load_corpus(&cfg.paths.corpus, CorpusFormat::Lines)?;
    split_by_topics(&corpus, &cfg.split)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Fits vocabulary, TF-IDF and PCA on the train split and writes a feature
/// matrix for each split.
pub fn cmd_features(cfg: &RunConfig) -> Result<Vec<FeatureMeta>> {
    let ws = Workspace::new(&cfg.paths.output_dir);
    let splits = load_splits(cfg)?;
    let word_vectors = WordVectors::load(&cfg.paths.word_vectors)?;
    ensure_dir(&ws.dir)?;
    let models = FittedModels::fit(&splits.train)?;
    write_json(
        &ws.models(),
        &Stamped {
            config_hash: cfg.hash(),
            seed: cfg.seed(),
            body: models.clone(),
        },
    )?;
    let fx = FeatureExtractor::new(&word_vectors, &models);
    let mut metas = Vec::new();
    for split in SplitName::ALL {
        let corpus = split.pick(&splits);
        let fs = fx.extract(corpus, cfg.pooling)?;
        log::info!("{split}: {} mentions x {} features", fs.len(), fx.dim());
        write_matrix(ws.features(split), &fs.matrix)?;
        let meta = FeatureMeta {
            config_hash: cfg.hash(),
            seed: cfg.seed(),
            split,
            pooling: cfg.pooling,
            word_vector_dim: word_vectors.dim(),
            feature_dim: fx.dim(),
            mention_ids: fs.mention_ids,
            doc_ids: fs.doc_ids,
            topic_ids: fs.topic_ids,
            chain_ids: fs.chain_ids,
        };
        write_json(&ws.meta(split), &meta)?;
        write_chains(ws.gold(split), &gold_clustering(corpus), &header(cfg))?;
        metas.push(meta);
    }
    Ok(metas)
}

/// Feature matrix and row identities of one split.
pub fn load_features(ws: &Workspace, split: SplitName) -> Result<(Array2<f64>, FeatureMeta)> {
    let matrix = read_matrix(ws.features(split))?;
    let meta: FeatureMeta = read_json(&ws.meta(split))?;
    if matrix.nrows() != meta.mention_ids.len() || matrix.ncols() != meta.feature_dim {
        return Err(Error::Shape(format!(
            "{split} matrix is {}x{} but its metadata lists {} mentions of width {}",
            matrix.nrows(),
            matrix.ncols(),
            meta.mention_ids.len(),
            meta.feature_dim
        )));
    }
    Ok((matrix, meta))
}

fn similarity(rows: &Array2<f64>, meta: &FeatureMeta, pooling: Pooling) -> SimilarityMatrix {
    let mut sims = SimilarityMatrix::cosine(rows.view());
    if pooling == Pooling::PerTopic {
        sims.restrict_to_groups(&meta.topic_ids);
    }
    sims
}

/// Trains the variant's network, keeping the epoch with the best validation
/// B³ at its tuned τ.
pub fn cmd_train(cfg: &RunConfig) -> Result<TrainSummary> {
    let Some(tcfg) = cfg.variant.train_config(&cfg.train) else {
        return Err(Error::Config(format!("{} has nothing to train", cfg.variant)));
    };
    let ws = Workspace::new(&cfg.paths.output_dir);
    let (x_train, m_train) = load_features(&ws, SplitName::Train)?;
    let (x_val, m_val) = load_features(&ws, SplitName::Validation)?;
    if m_train.config_hash != cfg.hash() {
        log::warn!("features were written under config {}, training under {}", m_train.config_hash, cfg.hash());
    }
    let scheme = LabelScheme::from_chain_ids(m_train.chain_ids.iter().map(String::as_str));
    let classes: Vec<usize> = m_train.chain_ids.iter().map(|c| scheme.class_of(c)).collect();
    let chains = m_train.chain_labels();
    let val_gold = m_val.chain_labels();

    let pooling = cfg.pooling;
    let mut validate = |p: &NetParams<f64>| -> Result<ValidationScore> {
        let e = embed(p, x_val.view())?;
        let c = tune_tau(&similarity(&e, &m_val, pooling), &val_gold, None);
        Ok(ValidationScore {
            b3_f1: c.b3_f1,
            tau: c.tau,
        })
    };
    let validator: Option<&mut Validator<'_, f64>> = if m_val.mention_ids.is_empty() {
        log::warn!("validation split is empty; keeping the last epoch");
        None
    } else {
        Some(&mut validate)
    };
    let outcome = train(
        TrainSet {
            inputs: x_train.view(),
            classes: &classes,
            chains: &chains,
            num_classes: scheme.num_classes(),
        },
        &tcfg,
        validator,
    )?;

    Checkpoint {
        params: outcome.best.clone(),
        adam: outcome.best_adam.clone(),
        epoch: outcome.best_epoch as u64,
        seed: cfg.seed(),
        config_hash: cfg.hash(),
    }
    .save(ws.checkpoint())?;
    write_train_log(&ws.train_log(), cfg, &outcome.log)?;
    let summary = TrainSummary {
        variant: cfg.variant,
        config_hash: cfg.hash(),
        seed: cfg.seed(),
        best_epoch: outcome.best_epoch,
        validation: outcome
            .log
            .iter()
            .find(|l| l.epoch == outcome.best_epoch)
            .and_then(|l| l.validation),
        num_classes: scheme.num_classes(),
    };
    write_json(&ws.train_summary(), &summary)?;
    Ok(summary)
}

fn write_train_log(path: &Path, cfg: &RunConfig, log: &[EpochLog]) -> Result<()> {
    let mut out = String::new();
    for (k, v) in header(cfg) {
        let _ = writeln!(out, "# {k}: {v}");
    }
    out.push_str("epoch\ttotal\tcce\tattract\trepulse\tval_b3_f1\tval_tau\n");
    for l in log {
        let (f, t) = l
            .validation
            .map_or(("-".into(), "-".into()), |v| (format!("{:.6}", v.b3_f1), format!("{:.6}", v.tau)));
        let _ = writeln!(
            out,
            "{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{f}\t{t}",
            l.epoch, l.loss.total, l.loss.cce, l.loss.attract, l.loss.repulse
        );
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Loads the checkpoint and checks it against the feature width.
pub fn load_network(ws: &Workspace, feature_dim: usize) -> Result<NetParams<f64>> {
    let ckpt = Checkpoint::<f64>::load(ws.checkpoint())?;
    let input = ckpt.params.sizes().input;
    if input != feature_dim {
        return Err(Error::Shape(format!(
            "checkpoint expects {input} input features, feature files have {feature_dim}"
        )));
    }
    Ok(ckpt.params)
}

fn check_rows(corpus: &Corpus, meta: &FeatureMeta) -> Result<()> {
    let same = corpus.mention_count() == meta.mention_ids.len()
        && corpus
            .mentions()
            .zip(&meta.mention_ids)
            .all(|((_, m), id)| &m.id == id);
    if same {
        Ok(())
    } else {
        Err(Error::Integrity(format!(
            "{} features do not match the corpus; re-run the features stage",
            meta.split
        )))
    }
}

/// Produces system chains for `split` and writes them to the chains file.
/// Thresholds missing from the config are tuned on the validation split.
pub fn cmd_cluster(cfg: &RunConfig, split: SplitName) -> Result<ClusterSummary> {
    let ws = Workspace::new(&cfg.paths.output_dir);
    let (x, meta) = load_features(&ws, split)?;
    let (x_val, m_val) = load_features(&ws, SplitName::Validation)?;
    let val_gold = m_val.chain_labels();
    let variant = cfg.variant;
    let pooling = cfg.pooling;

    let needs_corpus = matches!(variant, Variant::Lemma | Variant::LemmaDelta | Variant::CoreCceLemma);
    let splits = if needs_corpus { Some(load_splits(cfg)?) } else { None };
    let models: Option<FittedModels> = if variant.uses_lemma_delta() {
        let stamped: Stamped<FittedModels> = read_json(&ws.models())?;
        Some(stamped.body)
    } else {
        None
    };

    let (rows_of, rows_val) = if variant.is_learned() {
        let net = load_network(&ws, x.ncols())?;
        (embed(&net, x.view())?, embed(&net, x_val.view())?)
    } else {
        (x, x_val)
    };

    let mut tau = cfg.cluster.tau;
    let mut delta = cfg.cluster.delta;
    let mut validation_b3 = None;
    let partition: Partition = match variant {
        Variant::Lemma => {
            let corpus = split.pick(splits.as_ref().unwrap());
            check_rows(corpus, &meta)?;
            lemma_partition(corpus, pooling)
        }
        Variant::LemmaDelta => {
            let splits = splits.as_ref().unwrap();
            let tfidf = &models.as_ref().unwrap().tfidf;
            if delta.is_none() {
                let val = &splits.validation;
                check_rows(val, &m_val)?;
                let choice = tune_delta(val, &DocSimilarity::new(val, tfidf), &val_gold, pooling);
                delta = Some(choice.delta);
                validation_b3 = Some(choice.b3_f1);
            }
            let corpus = split.pick(splits);
            check_rows(corpus, &meta)?;
            lemma_delta_with(corpus, &DocSimilarity::new(corpus, tfidf), delta.unwrap(), pooling)
        }
        Variant::CoreCceLemma => {
            let splits = splits.as_ref().unwrap();
            let tfidf = &models.as_ref().unwrap().tfidf;
            let val = &splits.validation;
            let val_sims = similarity(&rows_val, &m_val, pooling);
            let val_docs = DocSimilarity::new(val, tfidf);
            match (delta, tau) {
                (None, _) => {
                    check_rows(val, &m_val)?;
                    let choice = tune_delta_with_embeddings(val, &val_docs, &val_sims, &val_gold, pooling);
                    delta = Some(choice.delta);
                    tau = tau.or(choice.tau);
                    validation_b3 = Some(choice.b3_f1);
                }
                (Some(d), None) => {
                    check_rows(val, &m_val)?;
                    let init = lemma_delta_with(val, &val_docs, d, pooling);
                    let choice = tune_tau(&val_sims, &val_gold, Some(&init));
                    tau = Some(choice.tau);
                    validation_b3 = Some(choice.b3_f1);
                }
                (Some(_), Some(_)) => {}
            }
            let corpus = split.pick(splits);
            check_rows(corpus, &meta)?;
            let init = lemma_delta_with(corpus, &DocSimilarity::new(corpus, tfidf), delta.unwrap(), pooling);
            agglomerate(&similarity(&rows_of, &meta, pooling), tau.unwrap(), Some(&init))
        }
        Variant::Cce | Variant::Core | Variant::CoreCce | Variant::Unsupervised => {
            if tau.is_none() {
                let choice = tune_tau(&similarity(&rows_val, &m_val, pooling), &val_gold, None);
                tau = Some(choice.tau);
                validation_b3 = Some(choice.b3_f1);
            }
            agglomerate(&similarity(&rows_of, &meta, pooling), tau.unwrap(), None)
        }
    };
    let clustering = Clustering::from_groups(&meta.mention_ids, &partition);
    let path = ws.chains(variant, split);
    let mut head = header(cfg);
    head.push(("split", split.to_string()));
    if let Some(t) = tau {
        head.push(("tau", format!("{t}")));
    }
    if let Some(d) = delta {
        head.push(("delta", format!("{d}")));
    }
    write_chains(&path, &clustering, &head)?;
    log::info!(
        "{variant} on {split}: {} chains{}{}",
        clustering.len(),
        tau.map(|t| format!(", tau {t:.4}")).unwrap_or_default(),
        delta.map(|d| format!(", delta {d:.4}")).unwrap_or_default()
    );
    Ok(ClusterSummary {
        variant,
        split,
        tau,
        delta,
        validation_b3,
        chains: clustering.len(),
        path,
    })
}

/// Scores `sys` against `gold`. Within-document mode needs the document of
/// every mention.
pub fn score_clusterings(
    gold: &Clustering,
    sys: &Clustering,
    mode: ScoreMode,
    doc_of: Option<&HashMap<String, String>>,
) -> Result<MetricReport> {
    let labels = match mode {
        ScoreMode::Combined => LabelPair::align(gold, sys)?,
        ScoreMode::WithinDoc => {
            let doc_of = doc_of.ok_or_else(|| {
                Error::Config("within-doc scoring needs the mention documents (pass a corpus)".into())
            })?;
            LabelPair::align(&project_within_doc(gold, doc_of)?, &project_within_doc(sys, doc_of)?)?
        }
    };
    Ok(MetricReport::from_labels(&labels))
}

pub fn cmd_score(
    gold_path: &Path,
    sys_path: &Path,
    mode: ScoreMode,
    doc_of: Option<&HashMap<String, String>>,
) -> Result<MetricReport> {
    let gold = read_chains(gold_path)?;
    let sys = read_chains(sys_path)?;
    score_clusterings(&gold, &sys, mode, doc_of)
}

/// Report file: `#` metadata lines, then the tab-separated table.
pub fn write_report(path: &Path, report: &MetricReport, meta: &[(&str, String)]) -> Result<()> {
    let mut out = String::new();
    for (k, v) in meta {
        let _ = writeln!(out, "# {k}: {v}");
    }
    out.push_str(&report.to_tsv());
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutcome {
    pub train: Option<TrainSummary>,
    pub cluster: ClusterSummary,
    pub combined: MetricReport,
    pub within_doc: MetricReport,
}

/// features → train (learned variants) → cluster → score, on `split`.
pub fn run_pipeline(cfg: &RunConfig, split: SplitName) -> Result<PipelineOutcome> {
    let metas = cmd_features(cfg)?;
    let train = if cfg.variant.is_learned() {
        Some(cmd_train(cfg)?)
    } else {
        None
    };
    let cluster = cmd_cluster(cfg, split)?;
    let ws = Workspace::new(&cfg.paths.output_dir);
    let meta = metas
        .iter()
        .find(|m| m.split == split)
        .expect("features stage writes every split");
    let doc_of = meta.doc_map();
    let mut reports = Vec::new();
    for mode in [ScoreMode::Combined, ScoreMode::WithinDoc] {
        let report = cmd_score(&ws.gold(split), &cluster.path, mode, Some(&doc_of))?;
        let mut head = header(cfg);
        head.push(("split", split.to_string()));
        head.push(("mode", mode.name().to_string()));
        write_report(&ws.report(cfg.variant, split, mode), &report, &head)?;
        reports.push(report);
    }
    Ok(PipelineOutcome {
        train,
        cluster,
        combined: reports[0],
        within_doc: reports[1],
    })
}
