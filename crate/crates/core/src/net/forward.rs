use ndarray::{Array2, ArrayView2, Axis};
use rand::Rng;

use super::params::{LayerSizes, NetParams};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Inverted-dropout masks for the three hidden layers. Entries are either 0
/// or `1 / (1 - p)`, so they multiply activations directly.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMasks<T> {
    pub masks: [Array2<T>; 3],
}

impl<T: Real> DropoutMasks<T> {
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, rows: usize, sizes: LayerSizes, rate: f64) -> Self {
        let keep = T::from_f64_lossy(1.0 / (1.0 - rate));
        let mut draw = |cols: usize| {
            Array2::from_shape_fn((rows, cols), |_| {
                if rate > 0.0 && rng.random::<f64>() < rate {
                    T::zero()
                } else {
                    keep
                }
            })
        };
        DropoutMasks {
            masks: [draw(sizes.hidden1), draw(sizes.embedding), draw(sizes.hidden3)],
        }
    }

    pub fn ones(rows: usize, sizes: LayerSizes) -> Self {
        DropoutMasks {
            masks: [
                Array2::ones((rows, sizes.hidden1)),
                Array2::ones((rows, sizes.embedding)),
                Array2::ones((rows, sizes.hidden3)),
            ],
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Mode<'a, T> {
    Train(&'a DropoutMasks<T>),
    Infer,
}

/// Every intermediate of one forward pass, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    pub z1: Array2<T>,
    /// H1 activations after dropout.
    pub h1: Array2<T>,
    pub z2: Array2<T>,
    /// Post-ReLU He activations before dropout; these are the embeddings.
    pub embeddings: Array2<T>,
    pub h2: Array2<T>,
    pub z3: Array2<T>,
    pub h3: Array2<T>,
    pub probs: Array2<T>,
}

fn relu<T: Real>(z: &Array2<T>) -> Array2<T> {
    z.mapv(|x| if x > T::zero() { x } else { T::zero() })
}

/// Row-wise softmax with max subtraction.
pub fn softmax<T: Real>(logits: &Array2<T>) -> Array2<T> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.iter().fold(T::neg_infinity(), |m, &x| m.max(x));
        row.mapv_inplace(|x| (x - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|x| x / sum);
    }
    out
}

pub fn forward_cached<T: Real>(
    params: &NetParams<T>,
    inputs: ArrayView2<T>,
    mode: Mode<'_, T>,
) -> Result<ForwardCache<T>> {
    let sizes = params.sizes();
    if inputs.ncols() != sizes.input {
        return Err(Error::Shape(format!(
            "input width {} but network expects {}",
            inputs.ncols(),
            sizes.input
        )));
    }
    if let Mode::Train(m) = mode {
        let rows = inputs.nrows();
        let want = [sizes.hidden1, sizes.embedding, sizes.hidden3];
        for (mask, w) in m.masks.iter().zip(want) {
            if mask.dim() != (rows, w) {
                return Err(Error::Shape(format!(
                    "dropout mask {:?}, expected {:?}",
                    mask.dim(),
                    (rows, w)
                )));
            }
        }
    }
    let [l1, l2, l3, l4] = &params.layers;
    let drop = |a: Array2<T>, k: usize| match mode {
        Mode::Train(m) => a * &m.masks[k],
        Mode::Infer => a,
    };

    let z1 = inputs.dot(&l1.weight) + &l1.bias;
    let h1 = drop(relu(&z1), 0);
    let z2 = h1.dot(&l2.weight) + &l2.bias;
    let embeddings = relu(&z2);
    let h2 = drop(embeddings.clone(), 1);
    let z3 = h2.dot(&l3.weight) + &l3.bias;
    let h3 = drop(relu(&z3), 2);
    let logits = h3.dot(&l4.weight) + &l4.bias;
    let probs = softmax(&logits);
    Ok(ForwardCache {
        z1,
        h1,
        z2,
        embeddings,
        h2,
        z3,
        h3,
        probs,
    })
}

/// Returns `(embeddings, class probabilities)`.
pub fn forward<T: Real>(
    params: &NetParams<T>,
    inputs: ArrayView2<T>,
    mode: Mode<'_, T>,
) -> Result<(Array2<T>, Array2<T>)> {
    let c = forward_cached(params, inputs, mode)?;
    Ok((c.embeddings, c.probs))
}

/// Inference-mode embeddings, computed in chunks of rows.
pub fn embed<T: Real>(params: &NetParams<T>, inputs: ArrayView2<T>) -> Result<Array2<T>> {
    const CHUNK: usize = 512;
    let sizes = params.sizes();
    let mut out = Array2::zeros((inputs.nrows(), sizes.embedding));
    for (k, chunk) in inputs.axis_chunks_iter(Axis(0), CHUNK).enumerate() {
        let (e, _) = forward(params, chunk, Mode::Infer)?;
        out.slice_mut(ndarray::s![k * CHUNK..k * CHUNK + chunk.nrows(), ..])
            .assign(&e);
    }
    Ok(out)
}
