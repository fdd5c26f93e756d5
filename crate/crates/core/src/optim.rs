//! Adam with bias correction and no weight decay.

use ndarray::{Array2, Zip};

use crate::error::{Error, Result};

pub const DEFAULT_LR: f64 = 0.01;
pub const DEFAULT_BETA1: f64 = 0.9;
pub const DEFAULT_BETA2: f64 = 0.999;
pub const DEFAULT_EPS: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    /// first and second moment per tensor
    moments: Vec<(Array2<f64>, Array2<f64>)>,
}

impl Adam {
    pub fn new(lr: f64, shapes: &[(usize, usize)]) -> Self {
        Self::with_hyper(lr, DEFAULT_BETA1, DEFAULT_BETA2, DEFAULT_EPS, shapes)
    }

    pub fn with_hyper(
        lr: f64,
        beta1: f64,
        beta2: f64,
        eps: f64,
        shapes: &[(usize, usize)],
    ) -> Self {
        Self {
            lr,
            beta1,
            beta2,
            eps,
            step: 0,
            moments: shapes
                .iter()
                .map(|&s| (Array2::zeros(s), Array2::zeros(s)))
                .collect(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Applies one update to every tensor.
    pub fn step(&mut self, params: &mut [&mut Array2<f64>], grads: &[&Array2<f64>]) -> Result<()> {
        if params.len() != self.moments.len() || grads.len() != self.moments.len() {
            return Err(Error::ShapeMismatch {
                what: "optimizer tensor count",
                expected: (self.moments.len(), 1),
                got: (params.len().min(grads.len()), 1),
            });
        }
        for ((p, g), (m, _)) in params.iter().zip(grads).zip(&self.moments) {
            for (what, shape) in [("parameter", p.dim()), ("gradient", g.dim())] {
                if shape != m.dim() {
                    return Err(Error::ShapeMismatch {
                        what,
                        expected: m.dim(),
                        got: shape,
                    });
                }
            }
        }

        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
        for ((p, g), (m, v)) in params.iter_mut().zip(grads).zip(&mut self.moments) {
            Zip::from(&mut **p)
                .and(*g)
                .and(m)
                .and(v)
                .for_each(|p, &g, m, v| {
                    *m = b1 * *m + (1.0 - b1) * g;
                    *v = b2 * *v + (1.0 - b2) * g * g;
                    let m_hat = *m / c1;
                    let v_hat = *v / c2;
                    *p -= lr * m_hat / (v_hat.sqrt() + eps);
                });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = array![[1.0, -2.0]];
        let mut adam = Adam::new(DEFAULT_LR, &[(1, 2)]);
        adam.step(&mut [&mut p], &[&Array2::zeros((1, 2))]).unwrap();
        assert_eq!(p, array![[1.0, -2.0]]);
        assert_eq!(adam.steps(), 1);
    }

    #[test]
    fn first_step_moves_by_lr() {
        for g in [3.5, -0.002] {
            let mut p = array![[0.0]];
            let mut adam = Adam::new(0.01, &[(1, 1)]);
            adam.step(&mut [&mut p], &[&array![[g]]]).unwrap();
            // m_hat / sqrt(v_hat) = g / |g|
            let expected = -0.01 * g.signum() * g.abs() / (g.abs() + 1e-8);
            assert!((p[[0, 0]] - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn quadratic_descent() {
        let mut p = array![[1.0]];
        let mut adam = Adam::new(0.01, &[(1, 1)]);
        let mut prev = f64::INFINITY;
        for i in 0..100 {
            let g = 2.0 * &p;
            adam.step(&mut [&mut p], &[&g]).unwrap();
            let now = p[[0, 0]].abs();
            if i >= 5 {
                assert!(now < prev, "step {i}: {now} >= {prev}");
            }
            prev = now;
        }
        assert!(prev < 0.5);
    }

    #[test]
    fn shape_mismatch() {
        let mut p = array![[1.0]];
        let mut adam = Adam::new(0.01, &[(1, 1)]);
        assert!(adam.step(&mut [&mut p], &[&Array2::zeros((2, 1))]).is_err());
        assert!(adam.step(&mut [], &[]).is_err());
    }
}
