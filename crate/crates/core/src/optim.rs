//! Flat parameter views and a clipped gradient-descent step.

use crate::error::{Error, Result};

/// Something made of `f64` blocks in a fixed order.
pub trait Parameters {
    fn blocks(&self) -> Vec<&[f64]>;
    fn blocks_mut(&mut self) -> Vec<&mut [f64]>;

    fn parameter_count(&self) -> usize {
        self.blocks().iter().map(|b| b.len()).sum()
    }

    fn to_flat(&self) -> Vec<f64> {
        self.blocks().concat()
    }

    fn l2_norm(&self) -> f64 {
        self.blocks()
            .iter()
            .flat_map(|b| b.iter())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    fn scale_by(&mut self, c: f64) {
        for b in self.blocks_mut() {
            b.iter_mut().for_each(|x| *x *= c);
        }
    }

    fn add_scaled(&mut self, other: &Self, c: f64)
    where
        Self: Sized,
    {
        for (a, b) in self.blocks_mut().into_iter().zip(other.blocks()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += c * y;
            }
        }
    }

    fn is_finite(&self) -> bool {
        self.blocks().iter().all(|b| b.iter().all(|x| x.is_finite()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sgd {
    pub learning_rate: f64,
    /// Gradients with a larger L2 norm are rescaled to this norm.
    pub clip_norm: f64,
}

impl Sgd {
    pub const DEFAULT_CLIP: f64 = 5.0;

    pub fn new(learning_rate: f64) -> Self {
        Sgd {
            learning_rate,
            clip_norm: Self::DEFAULT_CLIP,
        }
    }

    /// `params -= lr * clip(grad)`. Returns the gradient norm before clipping.
    pub fn step<P: Parameters>(&self, params: &mut P, grad: &P) -> Result<f64> {
        let norm = grad.l2_norm();
        if !norm.is_finite() {
            return Err(Error::NonFinite("gradient"));
        }
        let c = if norm > self.clip_norm {
            self.clip_norm / norm
        } else {
            1.0
        };
        params.add_scaled(grad, -self.learning_rate * c);
        Ok(norm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct V(Vec<f64>);

    impl Parameters for V {
        fn blocks(&self) -> Vec<&[f64]> {
            vec![&self.0]
        }
        fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
            vec![&mut self.0]
        }
    }

    #[test]
    fn small_gradients_are_not_clipped() {
        let mut p = V(vec![1.0, 1.0]);
        let g = V(vec![3.0, 4.0]);
        let norm = Sgd::new(0.1).step(&mut p, &g).unwrap();
        assert_eq!(norm, 5.0);
        assert!((p.0[0] - 0.7).abs() < 1e-12 && (p.0[1] - 0.6).abs() < 1e-12);
    }

    #[test]
    fn large_gradients_are_clipped_to_norm() {
        let mut p = V(vec![0.0, 0.0]);
        let g = V(vec![30.0, 40.0]);
        Sgd::new(1.0).step(&mut p, &g).unwrap();
        assert!((V(p.0.clone()).l2_norm() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn non_finite_gradient_is_rejected() {
        let mut p = V(vec![0.0]);
        assert!(Sgd::new(1.0).step(&mut p, &V(vec![f64::NAN])).is_err());
        assert_eq!(p.0, vec![0.0]);
    }
}
