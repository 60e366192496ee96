use ndarray::{ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{AdamConfig, AdamState};
use super::backward::{loss_and_gradients, BatchView};
use super::forward::{DropoutMasks, Mode};
use super::loss::{LossBreakdown, LossWeights};
use super::params::{LayerSizes, NetParams};
use super::sampler::{BatchSampler, DEFAULT_BATCH_SIZE};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Hyperparameters of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub dropout: f64,
    pub seed: u64,
    /// Width of H1 and H3.
    pub hidden: usize,
    /// Width of the embedding layer.
    pub embedding: usize,
    /// False trains on the pair terms alone.
    pub use_cce: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.00085,
            epochs: 100,
            batch_size: DEFAULT_BATCH_SIZE,
            lambda1: 2.0,
            lambda2: 0.0,
            dropout: 0.25,
            seed: 0,
            hidden: 1000,
            embedding: 250,
            use_cce: true,
        }
    }
}

impl TrainConfig {
    pub fn weights(&self) -> LossWeights {
        if self.use_cce {
            LossWeights::new(self.lambda1, self.lambda2)
        } else {
            LossWeights::pair_terms_only(self.lambda1, self.lambda2)
        }
    }

    pub fn sizes(&self, input: usize, classes: usize) -> LayerSizes {
        LayerSizes::with_hidden(input, self.hidden, self.embedding, classes)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("lr must be positive, got {}", self.lr)));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout must be in [0, 1), got {}", self.dropout)));
        }
        if self.batch_size < 3 || self.hidden == 0 || self.embedding == 0 {
            return Err(Error::Config("batch_size >= 3 and positive layer widths required".into()));
        }
        if self.lambda1 < 0.0 || self.lambda2 < 0.0 {
            return Err(Error::Config("lambda1 and lambda2 must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Training inputs with their classifier targets and gold chain ids.
#[derive(Debug, Clone, Copy)]
pub struct TrainSet<'a, T> {
    pub inputs: ArrayView2<'a, T>,
    pub classes: &'a [usize],
    pub chains: &'a [usize],
    pub num_classes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationScore {
    pub b3_f1: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// Batch-averaged loss terms.
    pub loss: LossBreakdown,
    pub validation: Option<ValidationScore>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    pub best: NetParams<T>,
    pub best_adam: AdamState<T>,
    /// 1-based epoch of `best`.
    pub best_epoch: usize,
    pub last: NetParams<T>,
    pub log: Vec<EpochLog>,
}

pub type Validator<'v, T> = dyn FnMut(&NetParams<T>) -> Result<ValidationScore> + 'v;

/// Runs `config.epochs` epochs of sampled mini-batch Adam. After each epoch
/// `validate` (when given) scores the current parameters and the epoch with
/// the best validation B³ is kept; without it, the last epoch is kept.
pub fn train<T: Real>(
    data: TrainSet<'_, T>,
    config: &TrainConfig,
    mut validate: Option<&mut Validator<'_, T>>,
) -> Result<TrainOutcome<T>> {
    config.validate()?;
    let n = data.inputs.nrows();
    if data.classes.len() != n || data.chains.len() != n {
        return Err(Error::Shape("training labels do not match input rows".into()));
    }
    let sampler = BatchSampler::new(data.chains)?;
    let sizes = config.sizes(data.inputs.ncols(), data.num_classes);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = NetParams::<T>::init(sizes, &mut rng);
    let mut adam = AdamState::new(&params, AdamConfig::default());
    let weights = config.weights();
    let batches = sampler.batches_per_epoch(config.batch_size);

    let mut log = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, usize, NetParams<T>, AdamState<T>)> = None;
    for epoch in 1..=config.epochs {
        let mut sum = [0.0; 4];
        for b in 0..batches {
            let rows = sampler.sample(&mut rng, config.batch_size);
            let inputs = data.inputs.select(Axis(0), &rows);
            let classes: Vec<usize> = rows.iter().map(|&i| data.classes[i]).collect();
            let chains: Vec<usize> = rows.iter().map(|&i| data.chains[i]).collect();
            let masks = DropoutMasks::sample(&mut rng, rows.len(), sizes, config.dropout);
            let batch = BatchView {
                inputs: inputs.view(),
                classes: &classes,
                chains: &chains,
            };
            let (loss, grads) = loss_and_gradients(&params, batch, Mode::Train(&masks), weights)?;
            if !loss.is_finite() || !grads.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    batch: b,
                    detail: format!(
                        "loss total={} cce={} attract={} repulse={}, parameter norm {}",
                        loss.total,
                        loss.cce,
                        loss.attract,
                        loss.repulse,
                        params.norm()
                    ),
                });
            }
            adam.update(&mut params, &grads, config.lr);
            for (s, v) in sum.iter_mut().zip([loss.total, loss.cce, loss.attract, loss.repulse]) {
                *s += v;
            }
        }
        let k = batches as f64;
        let mean = LossBreakdown {
            total: sum[0] / k,
            cce: sum[1] / k,
            attract: sum[2] / k,
            repulse: sum[3] / k,
            weights,
        };
        let validation = match validate.as_mut() {
            Some(f) => Some(f(&params)?),
            None => None,
        };
        log::info!(
            "epoch {epoch}: loss {:.5} (cce {:.5}, attract {:.5}, repulse {:.5}){}",
            mean.total,
            mean.cce,
            mean.attract,
            mean.repulse,
            validation
                .map(|v| format!(", validation B3 {:.4} at tau {:.4}", v.b3_f1, v.tau))
                .unwrap_or_default()
        );
        let score = validation.map_or(f64::NEG_INFINITY, |v| v.b3_f1);
        let improved = match &best {
            None => true,
            Some((s, ..)) => validation.is_none() || score > *s,
        };
        if improved {
            best = Some((score, epoch, params.clone(), adam.clone()));
        }
        log.push(EpochLog {
            epoch,
            loss: mean,
            validation,
        });
    }
    let (best_epoch, best_params, best_adam) = match best {
        Some((_, e, p, a)) => (e, p, a),
        None => (0, params.clone(), adam.clone()),
    };
    Ok(TrainOutcome {
        best: best_params,
        best_adam,
        best_epoch,
        last: params,
        log,
    })
}
