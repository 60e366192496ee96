use serde::{Deserialize, Serialize};

use super::params::NetParams;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First/second moment estimates mirroring the parameter shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub first: NetParams<T>,
    pub second: NetParams<T>,
    pub step: u64,
    pub config: AdamConfig,
}

impl<T: Real> AdamState<T> {
    pub fn new(params: &NetParams<T>, config: AdamConfig) -> Self {
        AdamState {
            first: NetParams::zeros(params.sizes()),
            second: NetParams::zeros(params.sizes()),
            step: 0,
            config,
        }
    }

    /// One bias-corrected Adam update.
    pub fn update(&mut self, params: &mut NetParams<T>, grads: &NetParams<T>, lr: f64) {
        self.step += 1;
        let AdamConfig {
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = self.step as i32;
        let corr1 = T::from_f64_lossy(1.0 - beta1.powi(t));
        let corr2 = T::from_f64_lossy(1.0 - beta2.powi(t));
        let (b1, b2) = (T::from_f64_lossy(beta1), T::from_f64_lossy(beta2));
        let (lr, eps) = (T::from_f64_lossy(lr), T::from_f64_lossy(epsilon));
        let one = T::one();
        let grads = grads.slices();
        let mut firsts = self.first.slices_mut();
        let mut seconds = self.second.slices_mut();
        for (k, theta) in params.slices_mut().into_iter().enumerate() {
            let (g, m, v) = (grads[k], &mut firsts[k], &mut seconds[k]);
            for i in 0..theta.len() {
                m[i] = b1 * m[i] + (one - b1) * g[i];
                v[i] = b2 * v[i] + (one - b2) * g[i] * g[i];
                let m_hat = m[i] / corr1;
                let v_hat = v[i] / corr2;
                theta[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}

pub fn adam_step<T: Real>(params: &mut NetParams<T>, state: &mut AdamState<T>, grads: &NetParams<T>, lr: f64) {
    state.update(params, grads, lr);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::params::LayerSizes;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (NetParams<f64>, AdamState<f64>) {
        let sizes = LayerSizes::with_hidden(3, 2, 2, 2);
        let p = NetParams::init(sizes, &mut ChaCha8Rng::seed_from_u64(1));
        let s = AdamState::new(&p, AdamConfig::default());
        (p, s)
    }

    fn filled(p: &NetParams<f64>, f: impl Fn(usize) -> f64) -> NetParams<f64> {
        let mut g = NetParams::zeros(p.sizes());
        let mut k = 0;
        for s in g.slices_mut() {
            for x in s.iter_mut() {
                *x = f(k);
                k += 1;
            }
        }
        g
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let (mut p, mut s) = setup();
        let before = p.clone();
        let g = NetParams::zeros(p.sizes());
        for _ in 0..5 {
            adam_step(&mut p, &mut s, &g, 0.1);
        }
        assert_eq!(p, before);
        assert_eq!(s.step, 5);
    }

    #[test]
    fn first_step_closed_form() {
        let (mut p, mut s) = setup();
        let before = p.flatten();
        let g = filled(&p, |k| (k as f64 - 7.0) * 0.3);
        let lr = 0.00085;
        adam_step(&mut p, &mut s, &g, lr);
        for (k, (a, b)) in p.flatten().iter().zip(&before).enumerate() {
            let gk = (k as f64 - 7.0) * 0.3;
            let want = -lr * gk / (gk.abs() + 1e-8);
            assert!((a - b - want).abs() < 1e-15, "{k}");
        }
    }

    #[test]
    fn constant_gradient_steps_approach_lr() {
        let (mut p, mut s) = setup();
        let g = filled(&p, |k| if k % 2 == 0 { 0.37 } else { -12.0 });
        let lr = 0.01;
        let mut prev = p.flatten();
        for _ in 0..500 {
            adam_step(&mut p, &mut s, &g, lr);
            let now = p.flatten();
            for (a, b) in now.iter().zip(&prev) {
                assert!(((a - b).abs() - lr).abs() <= 0.01 * lr);
            }
            prev = now;
        }
    }
}
