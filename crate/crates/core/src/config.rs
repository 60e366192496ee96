//! Run configuration, read from TOML.
//!
//! ```toml
//! variant = "CORE+CCE"
//! pooling = "global"
//!
//! [paths]
//! corpus = "data/ecb.txt"
//! word_vectors = "data/vectors.txt"
//! output_dir = "runs/core-cce"
//!
//! [split]              # optional, defaults to the ECB+ topic split
//! train = ["1", "3"]
//! validation = ["2"]
//! test = ["36"]
//!
//! [train]              # optional, keys of TrainConfig
//! lambda1 = 2.0
//! seed = 7
//!
//! [cluster]            # optional, fixed thresholds instead of tuning
//! tau = 0.84
//! delta = 0.89
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::clustering::Pooling;
use crate::corpus::SplitSpec;
use crate::error::{Error, Result};
use crate::net::TrainConfig;

/// Model variants and baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "CCE")]
    Cce,
    #[serde(rename = "CORE")]
    Core,
    #[serde(rename = "CORE+CCE")]
    CoreCce,
    #[serde(rename = "CORE+CCE+LEMMA")]
    CoreCceLemma,
    #[serde(rename = "LEMMA")]
    Lemma,
    #[serde(rename = "LEMMA-DELTA")]
    LemmaDelta,
    #[serde(rename = "UNSUPERVISED")]
    Unsupervised,
}

impl Variant {
    pub const ALL: [Variant; 7] = [
        Variant::Cce,
        Variant::Core,
        Variant::CoreCce,
        Variant::CoreCceLemma,
        Variant::Lemma,
        Variant::LemmaDelta,
        Variant::Unsupervised,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Cce => "CCE",
            Variant::Core => "CORE",
            Variant::CoreCce => "CORE+CCE",
            Variant::CoreCceLemma => "CORE+CCE+LEMMA",
            Variant::Lemma => "LEMMA",
            Variant::LemmaDelta => "LEMMA-DELTA",
            Variant::Unsupervised => "UNSUPERVISED",
        }
    }

    /// File-name friendly form.
    pub fn slug(self) -> String {
        self.name().to_ascii_lowercase().replace('+', "-")
    }

    pub fn is_learned(self) -> bool {
        matches!(
            self,
            Variant::Cce | Variant::Core | Variant::CoreCce | Variant::CoreCceLemma
        )
    }

    pub fn uses_lemma_delta(self) -> bool {
        matches!(self, Variant::LemmaDelta | Variant::CoreCceLemma)
    }

    /// Effective training settings, or `None` for baselines. CCE drops the
    /// pair terms; CORE drops CCE and uses a tenth of the learning rate.
    pub fn train_config(self, base: &TrainConfig) -> Option<TrainConfig> {
        let mut c = base.clone();
        match self {
            Variant::Cce => {
                c.lambda1 = 0.0;
                c.lambda2 = 0.0;
                c.use_cce = true;
            }
            Variant::Core => {
                c.use_cce = false;
                c.lr *= 0.1;
            }
            Variant::CoreCce | Variant::CoreCceLemma => c.use_cce = true,
            Variant::Lemma | Variant::LemmaDelta | Variant::Unsupervised => return None,
        }
        Some(c)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace('_', "-");
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == norm || v.slug().to_ascii_uppercase() == norm)
            .ok_or_else(|| Error::Config(format!("unknown variant {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub corpus: PathBuf,
    pub word_vectors: PathBuf,
    pub output_dir: PathBuf,
}

/// Fixed thresholds; a missing value is tuned on the validation split.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterConfig {
    pub tau: Option<f64>,
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub variant: Variant,
    /// Comparative-feature pool and clustering pool.
    #[serde(default)]
    pub pooling: Pooling,
    pub paths: Paths,
    #[serde(default)]
    pub split: SplitSpec,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub cluster: ClusterConfig,
}

impl RunConfig {
    pub fn new(variant: Variant, paths: Paths) -> Self {
        RunConfig {
            variant,
            pooling: Pooling::default(),
            paths,
            split: SplitSpec::default(),
            train: TrainConfig::default(),
            cluster: ClusterConfig::default(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let c: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    /// Relative paths in the file are taken relative to the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut c = Self::parse(&text)?;
        if let Some(base) = path.parent() {
            for p in [
                &mut c.paths.corpus,
                &mut c.paths.word_vectors,
                &mut c.paths.output_dir,
            ] {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(c)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.split.check_disjoint()?;
        self.train.validate()?;
        for (name, v) in [("tau", self.cluster.tau), ("delta", self.cluster.delta)] {
            if let Some(v) = v {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::Config(format!("{name} must be in [0, 1], got {v}")));
                }
            }
        }
        if let Some(t) = self.variant.train_config(&self.train) {
            if !t.use_cce && t.lambda1 == 0.0 && t.lambda2 == 0.0 {
                return Err(Error::Config(format!(
                    "{} needs lambda1 or lambda2 above zero",
                    self.variant
                )));
            }
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.train.seed
    }

    /// First 16 hex digits of the SHA-256 of the canonical TOML form.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}
