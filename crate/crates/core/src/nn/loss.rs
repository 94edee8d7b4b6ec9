use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Squared reconstruction error ‖x − y‖₂² and its gradient 2(y − x) with
/// respect to the reconstruction `y`.
pub fn mse_loss(x: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>) -> Result<(f64, Array1<f64>)> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    let diff = &y - &x;
    Ok((diff.dot(&diff), diff * 2.0))
}

/// Per-sample squared errors for a batch, and the gradient of their batch
/// mean with respect to `output`.
pub fn mse_batch(
    target: ArrayView2<'_, f64>,
    output: ArrayView2<'_, f64>,
) -> Result<(Array1<f64>, Array2<f64>)> {
    if target.dim() != output.dim() {
        return Err(Error::ShapeMismatch {
            expected: vec![target.nrows(), target.ncols()],
            found: vec![output.nrows(), output.ncols()],
        });
    }
    let diff = &output - &target;
    let per_sample = diff.map_axis(Axis(1), |row| row.dot(&row));
    let scale = 2.0 / target.nrows().max(1) as f64;
    Ok((per_sample, diff * scale))
}

/// λ Σ ‖W‖_F² over the given tensors, with gradients 2λW.
pub fn l2_penalty(params: &[&Array2<f64>], lambda: f64) -> (f64, Vec<Array2<f64>>) {
    let penalty = lambda * params.iter().map(|w| w.iter().map(|v| v * v).sum::<f64>()).sum::<f64>();
    let grads = params.iter().map(|w| *w * (2.0 * lambda)).collect();
    (penalty, grads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / 1f64.max(a.abs() + b.abs())
    }

    #[test]
    fn mse_examples() {
        let x = array![1.0, 0.0];
        let (loss, grad) = mse_loss(x.view(), x.view()).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.iter().all(|&g| g == 0.0));
        let (loss, grad) = mse_loss(x.view(), array![0.0, 0.0].view()).unwrap();
        assert_eq!(loss, 1.0);
        assert_eq!(grad, array![-2.0, 0.0]);
        assert!(mse_loss(x.view(), array![0.0].view()).is_err());
    }

    #[test]
    fn mse_gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = Array1::from_shape_fn(6, |_| rng.random_range(-1.0..1.0));
        let y = Array1::from_shape_fn(6, |_| rng.random_range(-1.0..1.0));
        let (_, grad) = mse_loss(x.view(), y.view()).unwrap();
        let eps = 1e-6;
        for i in 0..6 {
            let mut plus = y.clone();
            plus[i] += eps;
            let mut minus = y.clone();
            minus[i] -= eps;
            let numeric = (mse_loss(x.view(), plus.view()).unwrap().0
                - mse_loss(x.view(), minus.view()).unwrap().0)
                / (2.0 * eps);
            assert!(rel_err(grad[i], numeric) < 1e-8);
        }
    }

    #[test]
    fn batch_mean_gradient() {
        let target = array![[1.0, 2.0], [0.0, -1.0]];
        let output = array![[1.5, 2.0], [0.0, 1.0]];
        let (losses, grad) = mse_batch(target.view(), output.view()).unwrap();
        assert_eq!(losses, array![0.25, 4.0]);
        assert_eq!(grad, array![[0.5, 0.0], [0.0, 2.0]]);
    }

    #[test]
    fn l2_examples() {
        let w = array![[1.0, 2.0]];
        assert_eq!(l2_penalty(&[&w], 0.0).0, 0.0);
        let (p, g) = l2_penalty(&[&w], 0.5);
        assert_eq!(p, 2.5);
        assert_eq!(g[0], array![[1.0, 2.0]]);
    }

    #[test]
    fn l2_gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let w = Array2::from_shape_fn((3, 4), |_| rng.random_range(-2.0..2.0));
        let lambda = 0.37;
        let (_, g) = l2_penalty(&[&w], lambda);
        let eps = 1e-6;
        for idx in [(0, 0), (1, 2), (2, 3)] {
            let mut plus = w.clone();
            plus[idx] += eps;
            let mut minus = w.clone();
            minus[idx] -= eps;
            let numeric = (l2_penalty(&[&plus], lambda).0 - l2_penalty(&[&minus], lambda).0) / (2.0 * eps);
            assert!(rel_err(g[0][idx], numeric) < 1e-8);
        }
    }
}
