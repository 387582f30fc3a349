use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Adam with bias-corrected moments.
#[derive(Clone, Debug)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
}

impl Adam {
    /// Zero moments shaped like `params`, with β₁ = 0.9, β₂ = 0.999, ε = 1e-8.
    pub fn new<'a>(params: impl IntoIterator<Item = &'a Tensor>) -> Self {
        let m: Vec<Tensor> = params.into_iter().map(|p| Tensor::zeros(p.rows(), p.cols())).collect();
        Self { beta1: 0.9, beta2: 0.999, eps: 1e-8, step: 0, v: m.clone(), m }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn first_moments(&self) -> &[Tensor] {
        &self.m
    }

    pub fn second_moments(&self) -> &[Tensor] {
        &self.v
    }

    /// Applies one update. Nothing is modified if any gradient is non-finite.
    pub fn step(&mut self, params: &mut [&mut Tensor], grads: &[Tensor], lr: f64) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::Contract(format!(
                "{} params and {} grads for an optimizer over {} tensors",
                params.len(),
                grads.len(),
                self.m.len()
            )));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.shape() != g.shape() || p.shape() != self.m[i].shape() {
                return Err(Error::dim(
                    "adam_step",
                    format!("tensor {i}: param {:?}, grad {:?}", p.shape(), g.shape()),
                ));
            }
            if let Some(pos) = g.data().iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFinite(format!(
                    "gradient of tensor {i} at flat index {pos} is {}",
                    g.data()[pos]
                )));
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for ((p, g), (m, v)) in params.iter_mut().zip(grads).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            for (((pv, &gv), mv), vv) in p.data_mut().iter_mut().zip(g.data()).zip(m.data_mut()).zip(v.data_mut()) {
                *mv = self.beta1 * *mv + (1.0 - self.beta1) * gv;
                *vv = self.beta2 * *vv + (1.0 - self.beta2) * gv * gv;
                *pv -= lr * (*mv / c1) / ((*vv / c2).sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

/// `lr_min + ½ (lr_max − lr_min)(1 + cos(π · epoch / max_epochs))`.
pub fn cosine_lr(epoch: usize, max_epochs: usize, lr_max: f64, lr_min: f64) -> f64 {
    if max_epochs == 0 {
        return lr_max;
    }
    let frac = epoch.min(max_epochs) as f64 / max_epochs as f64;
    lr_max - 0.5 * (lr_max - lr_min) * (1.0 - (PI * frac).cos())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr_against_sign() {
        let mut p = Tensor::new(1, 3, vec![1.0, 1.0, 1.0]).unwrap();
        let g = Tensor::new(1, 3, vec![2.0, -0.5, 0.0]).unwrap();
        let mut adam = Adam::new([&p]);
        adam.step(&mut [&mut p], &[g], 0.1).unwrap();
        assert!((p.data()[0] - 0.9).abs() < 1e-7);
        assert!((p.data()[1] - 1.1).abs() < 1e-7);
        assert_eq!(p.data()[2], 1.0);
    }

    #[test]
    fn zero_gradient_decays_moments_only() {
        let mut p = Tensor::new(1, 1, vec![3.0]).unwrap();
        let mut adam = Adam::new([&p]);
        adam.step(&mut [&mut p], &[Tensor::new(1, 1, vec![1.0]).unwrap()], 0.01).unwrap();
        let (m0, v0) = (adam.first_moments()[0].data()[0], adam.second_moments()[0].data()[0]);
        let before = p.clone();
        adam.step(&mut [&mut p], &[Tensor::zeros(1, 1)], 0.0).unwrap();
        assert_eq!(p, before);
        assert!((adam.first_moments()[0].data()[0] - 0.9 * m0).abs() < 1e-15);
        assert!((adam.second_moments()[0].data()[0] - 0.999 * v0).abs() < 1e-15);
    }

    #[test]
    fn nan_gradient_aborts_without_update() {
        let mut p = Tensor::zeros(1, 2);
        let mut adam = Adam::new([&p]);
        let g = Tensor::new(1, 2, vec![0.0, f64::NAN]).unwrap();
        assert!(matches!(adam.step(&mut [&mut p], &[g], 0.1), Err(Error::NonFinite(_))));
        assert_eq!(adam.steps(), 0);
    }

    #[test]
    fn quadratic_bowl_converges() {
        // f(x) = Σ (x_i - c_i)², optimum at c.
        let c = [3.0, -2.0, 0.5];
        let mut p = Tensor::zeros(1, 3);
        let mut adam = Adam::new([&p]);
        for epoch in 0..5000 {
            let g = Tensor::new(1, 3, p.data().iter().zip(&c).map(|(x, c)| 2.0 * (x - c)).collect()).unwrap();
            adam.step(&mut [&mut p], &[g], cosine_lr(epoch, 5000, 0.05, 0.0)).unwrap();
        }
        for (x, c) in p.data().iter().zip(&c) {
            assert!((x - c).abs() < 1e-6, "{x} vs {c}");
        }
    }

    #[test]
    fn cosine_endpoints() {
        assert_eq!(cosine_lr(0, 100, 0.01, 0.001), 0.01);
        assert!((cosine_lr(100, 100, 0.01, 0.001) - 0.001).abs() < 1e-18);
        assert!((cosine_lr(50, 100, 0.01, 0.001) - 0.0055).abs() < 1e-15);
    }
}
