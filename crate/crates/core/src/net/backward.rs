use ndarray::{Array2, ArrayView2, Axis};

use super::forward::{forward_cached, ForwardCache, Mode};
use super::loss::{loss_total, pair_gradient, LossBreakdown, LossWeights, PROB_FLOOR};
use super::params::{Dense, NetParams};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// One labelled mini-batch.
#[derive(Debug, Clone, Copy)]
pub struct BatchView<'a, T> {
    pub inputs: ArrayView2<'a, T>,
    /// Classifier targets in `[0, C]`.
    pub classes: &'a [usize],
    /// Gold chain per row; singletons keep distinct ids.
    pub chains: &'a [usize],
}

fn relu_mask<T: Real>(grad: &mut Array2<T>, z: &Array2<T>) {
    grad.zip_mut_with(z, |g, &z| {
        if z <= T::zero() {
            *g = T::zero();
        }
    });
}

fn dense_grad<T: Real>(input: ArrayView2<T>, dz: &Array2<T>) -> Dense<T> {
    // a product with a transposed view can come back column-major
    let weight = input.t().dot(dz);
    Dense {
        weight: weight.as_standard_layout().into_owned(),
        bias: dz.sum_axis(Axis(0)),
    }
}

/// Loss and exact gradients of `w_cce·CCE + λ1·attract + λ2·repulse`.
pub fn loss_and_gradients<T: Real>(
    params: &NetParams<T>,
    batch: BatchView<'_, T>,
    mode: Mode<'_, T>,
    weights: LossWeights,
) -> Result<(LossBreakdown, NetParams<T>)> {
    let n = batch.inputs.nrows();
    if batch.classes.len() != n || batch.chains.len() != n {
        return Err(Error::Shape(format!(
            "batch has {n} rows, {} classes, {} chain ids",
            batch.classes.len(),
            batch.chains.len()
        )));
    }
    let classes = params.sizes().classes;
    if let Some(&c) = batch.classes.iter().find(|&&c| c >= classes) {
        return Err(Error::Shape(format!("class {c} out of range for {classes} outputs")));
    }
    let cache = forward_cached(params, batch.inputs, mode)?;
    let loss = loss_total(
        cache.probs.view(),
        cache.embeddings.view(),
        batch.classes,
        batch.chains,
        weights,
    );
    let grads = backward(params, &cache, batch, mode, weights);
    Ok((loss, grads))
}

/// Backpropagates through a cached forward pass.
pub fn backward<T: Real>(
    params: &NetParams<T>,
    cache: &ForwardCache<T>,
    batch: BatchView<'_, T>,
    mode: Mode<'_, T>,
    weights: LossWeights,
) -> NetParams<T> {
    let n = batch.inputs.nrows();
    let [_, l2, l3, l4] = &params.layers;
    let scale = T::from_f64_lossy(weights.cce) / T::from_usize_lossy(n.max(1));
    let floor = T::from_f64_lossy(PROB_FLOOR);

    // softmax + clamped log: rows whose target probability sits under the
    // clamp contribute nothing.
    let mut dlogits = cache.probs.clone();
    for (i, &c) in batch.classes.iter().enumerate() {
        let mut row = dlogits.row_mut(i);
        if cache.probs[[i, c]] < floor {
            row.fill(T::zero());
        } else {
            row[c] -= T::one();
            row.mapv_inplace(|x| x * scale);
        }
    }
    let apply_mask = |mut g: Array2<T>, k: usize| {
        if let Mode::Train(m) = mode {
            g *= &m.masks[k];
        }
        g
    };

    let g4 = dense_grad(cache.h3.view(), &dlogits);
    let mut dz3 = apply_mask(dlogits.dot(&l4.weight.t()), 2);
    relu_mask(&mut dz3, &cache.z3);

    let g3 = dense_grad(cache.h2.view(), &dz3);
    let mut dz2 = apply_mask(dz3.dot(&l3.weight.t()), 1);
    dz2 += &pair_gradient(
        cache.embeddings.view(),
        batch.chains,
        weights.lambda1,
        weights.lambda2,
    );
    relu_mask(&mut dz2, &cache.z2);

    let g2 = dense_grad(cache.h1.view(), &dz2);
    let mut dz1 = apply_mask(dz2.dot(&l2.weight.t()), 0);
    relu_mask(&mut dz1, &cache.z1);
    let g1 = dense_grad(batch.inputs, &dz1);
    NetParams {
        layers: [g1, g2, g3, g4],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::forward::DropoutMasks;
    use crate::net::params::LayerSizes;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Plain softmax-CCE backprop written out layer by layer, no dropout.
    fn cce_only_reference(p: &NetParams<f64>, x: &Array2<f64>, classes: &[usize]) -> Vec<f64> {
        let relu = |z: &Array2<f64>| z.mapv(|v| v.max(0.0));
        let step = |z: &Array2<f64>| z.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
        let [l1, l2, l3, l4] = &p.layers;
        let z1 = x.dot(&l1.weight) + &l1.bias;
        let a1 = relu(&z1);
        let z2 = a1.dot(&l2.weight) + &l2.bias;
        let a2 = relu(&z2);
        let z3 = a2.dot(&l3.weight) + &l3.bias;
        let a3 = relu(&z3);
        let z4 = a3.dot(&l4.weight) + &l4.bias;
        let mut y = z4.clone();
        for mut r in y.rows_mut() {
            let m = r.fold(f64::MIN, |a, &b| a.max(b));
            r.mapv_inplace(|v| (v - m).exp());
            let s = r.sum();
            r.mapv_inplace(|v| v / s);
        }
        let n = x.nrows() as f64;
        let mut d4 = y;
        for (i, &c) in classes.iter().enumerate() {
            d4[[i, c]] -= 1.0;
        }
        d4 /= n;
        let d3 = d4.dot(&l4.weight.t()) * step(&z3);
        let d2 = d3.dot(&l3.weight.t()) * step(&z2);
        let d1 = d2.dot(&l2.weight.t()) * step(&z1);
        let mut out = Vec::new();
        for (inp, d) in [(x.clone(), &d1), (a1, &d2), (a2, &d3), (a3, &d4)] {
            out.extend(inp.t().dot(d).iter().copied());
            out.extend(d.sum_axis(Axis(0)).iter().copied());
        }
        out
    }

    fn random_case(rng: &mut ChaCha8Rng) -> (NetParams<f64>, Array2<f64>, Vec<usize>, Vec<usize>) {
        let sizes = LayerSizes {
            input: 5,
            hidden1: 4,
            embedding: 3,
            hidden3: 4,
            classes: 3,
        };
        let mut p = NetParams::init(sizes, rng);
        for l in &mut p.layers {
            l.bias.mapv_inplace(|_| rng.random_range(-0.1..0.3));
        }
        let x = Array2::from_shape_fn((6, 5), |_| rng.random_range(-1.0..1.0));
        let classes = (0..6).map(|_| rng.random_range(0..3)).collect();
        let chains = vec![0, 0, 1, 1, 2, 3];
        (p, x, classes, chains)
    }

    #[test]
    fn zero_lambdas_reduce_to_plain_cce_backprop() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let (p, x, classes, chains) = random_case(&mut rng);
            let batch = BatchView {
                inputs: x.view(),
                classes: &classes,
                chains: &chains,
            };
            let (_, g) = loss_and_gradients(&p, batch, Mode::Infer, LossWeights::new(0.0, 0.0)).unwrap();
            let reference = cce_only_reference(&p, &x, &classes);
            for (a, b) in g.flatten().iter().zip(&reference) {
                assert!((a - b).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn matches_central_differences_with_dropout() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (mut p, x, classes, chains) = random_case(&mut rng);
        let masks = DropoutMasks::sample(&mut rng, 6, p.sizes(), 0.25);
        let w = LossWeights::new(1.0, 1.0);
        let batch = BatchView {
            inputs: x.view(),
            classes: &classes,
            chains: &chains,
        };
        let (_, g) = loss_and_gradients(&p, batch, Mode::Train(&masks), w).unwrap();
        let analytic = g.flatten();
        let h = 1e-6;
        let mut k = 0;
        for s in 0..8 {
            for j in 0..p.slices()[s].len() {
                let orig = p.slices()[s][j];
                p.slices_mut()[s][j] = orig + h;
                let (lp, _) = loss_and_gradients(&p, batch, Mode::Train(&masks), w).unwrap();
                p.slices_mut()[s][j] = orig - h;
                let (lm, _) = loss_and_gradients(&p, batch, Mode::Train(&masks), w).unwrap();
                p.slices_mut()[s][j] = orig;
                let num = (lp.total - lm.total) / (2.0 * h);
                let denom = (num.abs() + analytic[k].abs()).max(1e-8);
                assert!((num - analytic[k]).abs() / denom < 1e-4 || (num - analytic[k]).abs() < 1e-9);
                k += 1;
            }
        }
    }

    #[test]
    fn saturated_correct_logits_give_vanishing_gradient() {
        let sizes = LayerSizes::with_hidden(2, 2, 2, 2);
        let mut p = NetParams::<f64>::zeros(sizes);
        p.layers[0].weight = Array2::eye(2);
        p.layers[1].weight = Array2::eye(2);
        p.layers[2].weight = Array2::eye(2);
        p.layers[3].weight = ndarray::array![[60.0, -60.0], [-60.0, 60.0]];
        // two chains, embeddings identical within each chain
        let x = ndarray::array![[1.0, 0.0], [2.0, 0.0], [0.0, 1.0], [0.0, 3.0]];
        let classes = [0, 0, 1, 1];
        let chains = [0, 0, 1, 1];
        let batch = BatchView {
            inputs: x.view(),
            classes: &classes,
            chains: &chains,
        };
        let (loss, g) = loss_and_gradients(&p, batch, Mode::Infer, LossWeights::new(1.0, 0.0)).unwrap();
        assert!(loss.attract.abs() < 1e-15);
        assert!(g.norm() < 1e-8);
    }

    #[test]
    fn class_out_of_range_is_error() {
        let p = NetParams::<f64>::zeros(LayerSizes::with_hidden(2, 2, 2, 2));
        let x = Array2::zeros((1, 2));
        let batch = BatchView {
            inputs: x.view(),
            classes: &[2],
            chains: &[0],
        };
        assert!(loss_and_gradients(&p, batch, Mode::Infer, LossWeights::new(0.0, 0.0)).is_err());
    }
}
