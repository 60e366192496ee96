//! The hourglass representation learner.
//!
//! Four affine layers with ReLU (softmax on the output), trained on
//! cross-entropy over `C + 1` classes plus the attractive and repulsive
//! cosine-distance terms on the embedding layer. Gradients are derived by
//! hand; see the finite-difference checks in the tests.

pub mod adam;
pub mod backward;
pub mod checkpoint;
pub mod forward;
pub mod loss;
pub mod params;
pub mod sampler;
pub mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use backward::{backward, loss_and_gradients, BatchView};
pub use checkpoint::Checkpoint;
pub use forward::{embed, forward, forward_cached, softmax, DropoutMasks, ForwardCache, Mode};
pub use loss::{
    cosine_distance, cosine_similarity, loss_attract, loss_cce, loss_repulse, loss_total, pair_gradient,
    pair_terms, LossBreakdown, LossWeights, PairTerms,
};
pub use params::{Dense, LayerSizes, NetParams};
pub use sampler::{BatchSampler, DEFAULT_BATCH_SIZE};
pub use train::{train, EpochLog, TrainConfig, TrainOutcome, TrainSet, ValidationScore, Validator};
