use ndarray::{Array1, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Widths of the hourglass: input → H1 → He (embedding) → H3 → softmax.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSizes {
    pub input: usize,
    pub hidden1: usize,
    pub embedding: usize,
    pub hidden3: usize,
    pub classes: usize,
}

impl LayerSizes {
    /// 1000 / 250 / 1000 hidden units.
    pub fn hourglass(input: usize, classes: usize) -> Self {
        LayerSizes {
            input,
            hidden1: 1000,
            embedding: 250,
            hidden3: 1000,
            classes,
        }
    }

    pub fn with_hidden(input: usize, hidden: usize, embedding: usize, classes: usize) -> Self {
        LayerSizes {
            input,
            hidden1: hidden,
            embedding,
            hidden3: hidden,
            classes,
        }
    }

    /// `(fan_in, fan_out)` of the four affine layers.
    pub fn layer_shapes(&self) -> [(usize, usize); 4] {
        [
            (self.input, self.hidden1),
            (self.hidden1, self.embedding),
            (self.embedding, self.hidden3),
            (self.hidden3, self.classes),
        ]
    }

    pub fn parameter_count(&self) -> usize {
        self.layer_shapes().iter().map(|(i, o)| i * o + o).sum()
    }
}

/// Affine layer; `weight` is `fan_in × fan_out` so a batch maps as `X W + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    pub weight: Array2<T>,
    pub bias: Array1<T>,
}

/// Weights and biases of the four layers. Also used as the gradient and
/// Adam-moment container, since those mirror the parameter shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct NetParams<T> {
    pub layers: [Dense<T>; 4],
}

impl<T: Real> NetParams<T> {
    pub fn zeros(sizes: LayerSizes) -> Self {
        NetParams {
            layers: sizes.layer_shapes().map(|(i, o)| Dense {
                weight: Array2::zeros((i, o)),
                bias: Array1::zeros(o),
            }),
        }
    }

    /// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn init<R: Rng + ?Sized>(sizes: LayerSizes, rng: &mut R) -> Self {
        let mut p = Self::zeros(sizes);
        for layer in &mut p.layers {
            let (i, o) = layer.weight.dim();
            let limit = (6.0 / (i + o) as f64).sqrt();
            layer
                .weight
                .mapv_inplace(|_| T::from_f64_lossy(rng.random_range(-limit..=limit)));
        }
        p
    }

    pub fn sizes(&self) -> LayerSizes {
        let [l1, l2, l3, l4] = &self.layers;
        LayerSizes {
            input: l1.weight.nrows(),
            hidden1: l1.weight.ncols(),
            embedding: l2.weight.ncols(),
            hidden3: l3.weight.ncols(),
            classes: l4.weight.ncols(),
        }
    }

    /// Parameter tensors in a fixed order: W1, b1, W2, b2, W3, b3, W4, b4.
    pub fn slices(&self) -> Vec<&[T]> {
        self.layers
            .iter()
            .flat_map(|l| {
                [
                    l.weight.as_slice().expect("standard layout"),
                    l.bias.as_slice().expect("standard layout"),
                ]
            })
            .collect()
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [T]> {
        self.layers
            .iter_mut()
            .flat_map(|l| {
                [
                    l.weight.as_slice_mut().expect("standard layout"),
                    l.bias.as_slice_mut().expect("standard layout"),
                ]
            })
            .collect()
    }

    pub fn flatten(&self) -> Vec<T> {
        self.slices().concat()
    }

    pub fn len(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|x| x.is_finite()))
    }

    pub fn norm(&self) -> T {
        self.slices()
            .iter()
            .flat_map(|s| s.iter())
            .fold(T::zero(), |acc, &x| acc + x * x)
            .sqrt()
    }

    pub fn cast<U: Real>(&self) -> NetParams<U> {
        NetParams {
            layers: self.layers.clone().map(|l| Dense {
                weight: l.weight.mapv(|x| U::from_f64_lossy(x.to_f64_lossy())),
                bias: l.bias.mapv(|x| U::from_f64_lossy(x.to_f64_lossy())),
            }),
        }
    }
}
