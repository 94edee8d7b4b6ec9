use ndarray::{Array1, ArrayView1, ArrayView2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    /// Hinge-loss weight C.
    pub c: f64,
    pub epochs: usize,
    /// Standardize features with training-fold statistics inside
    /// cross-validation.
    pub standardize: bool,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 1.0,
            epochs: 100,
            standardize: true,
        }
    }
}

/// Decision rule sign(wᵀx + b), ties to +1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvmModel {
    pub weights: Array1<f64>,
    pub bias: f64,
    pub c: f64,
    /// Best objective seen after each epoch.
    pub objective_history: Vec<f64>,
}

impl LinearSvmModel {
    pub fn decision(&self, x: ArrayView1<'_, f64>) -> Result<f64> {
        if x.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                found: x.len(),
            });
        }
        Ok(self.weights.dot(&x) + self.bias)
    }

    pub fn predict(&self, x: ArrayView1<'_, f64>) -> Result<i8> {
        Ok(if self.decision(x)? >= 0.0 { 1 } else { -1 })
    }

    pub fn predict_batch(&self, features: ArrayView2<'_, f64>) -> Result<Vec<i8>> {
        features.rows().into_iter().map(|r| self.predict(r)).collect()
    }

    pub fn accuracy(&self, features: ArrayView2<'_, f64>, labels: &[i8]) -> Result<f64> {
        let predicted = self.predict_batch(features)?;
        if predicted.is_empty() {
            return Err(Error::EmptyData);
        }
        let hits = predicted.iter().zip(labels).filter(|(p, l)| p == l).count();
        Ok(hits as f64 / predicted.len() as f64)
    }

    /// ½‖w‖² + C Σ max(0, 1 − y(wᵀx + b)), with b included in the norm.
    pub fn objective(&self, features: ArrayView2<'_, f64>, labels: &[i8]) -> f64 {
        objective(self.weights.view(), self.bias, self.c, features, labels)
    }
}

fn objective(w: ArrayView1<'_, f64>, b: f64, c: f64, features: ArrayView2<'_, f64>, labels: &[i8]) -> f64 {
    let hinge: f64 = features
        .rows()
        .into_iter()
        .zip(labels)
        .map(|(x, &y)| (1.0 - f64::from(y) * (w.dot(&x) + b)).max(0.0))
        .sum();
    0.5 * (w.dot(&w) + b * b) + c * hinge
}

/// Stochastic subgradient descent on the primal with step 1/(λt),
/// λ = 1/(C·m), projected onto the ball of radius 1/√λ. The bias is an extra
/// constant-one feature. Returns the iterate with the lowest objective over
/// the epoch ends.
pub fn svm_train(
    features: ArrayView2<'_, f64>,
    labels: &[i8],
    params: &SvmParams,
    seed: u64,
) -> Result<LinearSvmModel> {
    let (m, dim) = features.dim();
    if m == 0 {
        return Err(Error::EmptyData);
    }
    if labels.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: labels.len(),
        });
    }
    if let Some(&bad) = labels.iter().find(|&&y| y != 1 && y != -1) {
        return Err(Error::InvalidLabel(f64::from(bad)));
    }
    if !labels.contains(&1) || !labels.contains(&-1) {
        return Err(Error::SingleClass);
    }
    if !(params.c > 0.0) {
        return Err(Error::InvalidConfig(format!("SVM C must be positive, got {}", params.c)));
    }
    let lambda = 1.0 / (params.c * m as f64);
    let radius = 1.0 / lambda.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = Array1::<f64>::zeros(dim);
    let mut b = 0.0;
    let mut best = (w.clone(), b, objective(w.view(), b, params.c, features, labels));
    let mut history = Vec::with_capacity(params.epochs);
    let mut order: Vec<usize> = (0..m).collect();
    let mut t = 0usize;
    for _ in 0..params.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let x = features.row(i);
            let y = f64::from(labels[i]);
            let margin = y * (w.dot(&x) + b);
            let decay = 1.0 - eta * lambda;
            w *= decay;
            b *= decay;
            if margin < 1.0 {
                w.scaled_add(eta * y, &x);
                b += eta * y;
            }
            let norm = (w.dot(&w) + b * b).sqrt();
            if norm > radius {
                let s = radius / norm;
                w *= s;
                b *= s;
            }
        }
        let obj = objective(w.view(), b, params.c, features, labels);
        if obj < best.2 {
            best = (w.clone(), b, obj);
        }
        history.push(best.2);
    }
    Ok(LinearSvmModel {
        weights: best.0,
        bias: best.1,
        c: params.c,
        objective_history: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use rand_distr::{Distribution, StandardNormal};

    fn blobs(m: usize, seed: u64) -> (Array2<f64>, Vec<i8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let labels: Vec<i8> = (0..m).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
        let x = Array2::from_shape_fn((m, 2), |(i, j)| {
            let noise: f64 = StandardNormal.sample(&mut rng);
            let centre = if j == 0 { 3.0 * f64::from(labels[i]) } else { 0.0 };
            centre + 0.5 * noise
        });
        (x, labels)
    }

    #[test]
    fn two_points() {
        let x = array![[-1.0], [1.0]];
        let model = svm_train(x.view(), &[-1, 1], &SvmParams::default(), 0).unwrap();
        assert_eq!(model.accuracy(x.view(), &[-1, 1]).unwrap(), 1.0);
    }

    #[test]
    fn separable_gaussians_generalize() {
        let (train, ytrain) = blobs(200, 1);
        let (test, ytest) = blobs(200, 2);
        let model = svm_train(train.view(), &ytrain, &SvmParams::default(), 3).unwrap();
        assert_eq!(model.accuracy(train.view(), &ytrain).unwrap(), 1.0);
        assert!(model.accuracy(test.view(), &ytest).unwrap() > 0.95);
        let h = &model.objective_history;
        assert_eq!(h.len(), 100);
        assert!(h.windows(2).all(|w| w[1] <= w[0]));
        assert!(h[h.len() - 1] <= h[0]);
    }

    #[test]
    fn prediction_rule() {
        let model = LinearSvmModel {
            weights: array![1.0, 0.0],
            bias: 0.0,
            c: 1.0,
            objective_history: vec![],
        };
        assert_eq!(model.predict(array![2.0, 1.0].view()).unwrap(), 1);
        assert_eq!(model.predict(array![-2.0, 1.0].view()).unwrap(), -1);
        assert_eq!(model.predict(array![0.0, 5.0].view()).unwrap(), 1);
        assert!(model.predict(array![1.0].view()).is_err());
    }

    #[test]
    fn positive_rescaling_keeps_predictions() {
        let (x, y) = blobs(50, 4);
        let model = svm_train(x.view(), &y, &SvmParams::default(), 0).unwrap();
        let scaled = LinearSvmModel {
            weights: &model.weights * 7.5,
            bias: model.bias * 7.5,
            ..model.clone()
        };
        assert_eq!(model.predict_batch(x.view()).unwrap(), scaled.predict_batch(x.view()).unwrap());
    }

    #[test]
    fn input_errors() {
        let x = array![[1.0], [2.0]];
        assert!(matches!(svm_train(x.view(), &[1, 1], &SvmParams::default(), 0), Err(Error::SingleClass)));
        assert!(matches!(
            svm_train(Array2::zeros((0, 1)).view(), &[], &SvmParams::default(), 0),
            Err(Error::EmptyData)
        ));
        assert!(matches!(svm_train(x.view(), &[1, 0], &SvmParams::default(), 0), Err(Error::InvalidLabel(_))));
    }

    #[test]
    fn seeded_training_is_reproducible() {
        let (x, y) = blobs(40, 5);
        let a = svm_train(x.view(), &y, &SvmParams::default(), 9).unwrap();
        let b = svm_train(x.view(), &y, &SvmParams::default(), 9).unwrap();
        assert_eq!(a, b);
    }
}
