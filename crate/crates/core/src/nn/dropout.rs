use ndarray::Array2;
use rand::Rng;

use super::Mode;
use crate::error::{Error, Result};

/// Inverted dropout: in training each entry survives with probability 1 − p
/// and is rescaled by 1/(1 − p); in evaluation the layer is the identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dropout {
    rate: f64,
}

impl Dropout {
    pub fn new(rate: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::InvalidRate(rate));
        }
        Ok(Dropout { rate })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Returns the output and the keep mask (entries 0 or 1).
    pub fn apply<R: Rng + ?Sized>(
        &self,
        x: &Array2<f64>,
        mode: Mode,
        rng: &mut R,
    ) -> (Array2<f64>, Array2<f64>) {
        if mode == Mode::Eval || self.rate == 0.0 {
            return (x.clone(), Array2::ones(x.dim()));
        }
        let keep = 1.0 - self.rate;
        let mask = Array2::from_shape_fn(x.dim(), |_| f64::from(rng.random::<f64>() < keep));
        let y = x * &mask / keep;
        (y, mask)
    }

    pub fn backward(&self, grad_y: &Array2<f64>, mask: &Array2<f64>) -> Array2<f64> {
        grad_y * mask / (1.0 - self.rate)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rate_validation() {
        assert!(matches!(Dropout::new(1.0), Err(Error::InvalidRate(_))));
        assert!(Dropout::new(-0.1).is_err());
        assert!(Dropout::new(0.0).is_ok());
    }

    #[test]
    fn zero_rate_and_eval_are_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x = Array2::from_shape_fn((3, 4), |(i, j)| (i * 4 + j) as f64 - 5.5);
        let (y, mask) = Dropout::new(0.0).unwrap().apply(&x, Mode::Train, &mut rng);
        assert_eq!(y, x);
        assert!(mask.iter().all(|&m| m == 1.0));
        let (y, _) = Dropout::new(0.7).unwrap().apply(&x, Mode::Eval, &mut rng);
        assert_eq!(y, x);
    }

    #[test]
    fn inverted_scaling_preserves_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let x = Array2::ones((1, 100_000));
        let (y, mask) = Dropout::new(0.5).unwrap().apply(&x, Mode::Train, &mut rng);
        let mean = y.mean().unwrap();
        assert!((0.98..=1.02).contains(&mean), "{mean}");
        assert!(y.iter().all(|&v| v == 0.0 || v == 2.0));
        assert!(mask.iter().all(|&m| m == 0.0 || m == 1.0));
    }
}
