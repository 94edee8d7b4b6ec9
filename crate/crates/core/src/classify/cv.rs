use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::svm::{svm_train, SvmParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    pub seed: u64,
}

/// Fold index of every sample. Each class is shuffled separately and dealt
/// round-robin, continuing where the previous class stopped, so per-fold
/// class counts differ by at most one.
pub fn stratified_folds(labels: &[i8], k: usize, seed: u64) -> Result<Vec<usize>> {
    let m = labels.len();
    if k < 2 || m < k {
        return Err(Error::TooFewSamples { samples: m, folds: k });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![0; m];
    let mut next = 0;
    for class in [1i8, -1] {
        let mut members: Vec<usize> = (0..m).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        for i in members {
            folds[i] = next % k;
            next += 1;
        }
    }
    Ok(folds)
}

fn standardize(train: &Array2<f64>, test: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
    let mean = train.mean_axis(Axis(0)).expect("nonempty");
    let scale = train
        .std_axis(Axis(0), 0.0)
        .mapv(|s| if s > 0.0 { s } else { 1.0 });
    ((train - &mean) / &scale, (test - &mean) / &scale)
}

/// Stratified k-fold accuracy of a linear SVM. Fold f trains with SVM seed
/// `seed + 1 + f`.
pub fn kfold_evaluate(
    features: ArrayView2<'_, f64>,
    labels: &[i8],
    k: usize,
    params: &SvmParams,
    seed: u64,
) -> Result<CvResult> {
    if features.nrows() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: features.nrows(),
            found: labels.len(),
        });
    }
    let folds = stratified_folds(labels, k, seed)?;
    let mut fold_accuracies = Vec::with_capacity(k);
    for f in 0..k {
        let (test_idx, train_idx): (Vec<usize>, Vec<usize>) = (0..labels.len()).partition(|&i| folds[i] == f);
        let train_labels: Vec<i8> = train_idx.iter().map(|&i| labels[i]).collect();
        if !train_labels.contains(&1) || !train_labels.contains(&-1) {
            return Err(Error::FoldMissingClass(f));
        }
        let test_labels: Vec<i8> = test_idx.iter().map(|&i| labels[i]).collect();
        let mut train = features.select(Axis(0), &train_idx);
        let mut test = features.select(Axis(0), &test_idx);
        if params.standardize {
            (train, test) = standardize(&train, &test);
        }
        let model = svm_train(train.view(), &train_labels, params, seed.wrapping_add(1 + f as u64))?;
        fold_accuracies.push(model.accuracy(test.view(), &test_labels)?);
    }
    let mean_accuracy = fold_accuracies.iter().sum::<f64>() / k as f64;
    Ok(CvResult {
        fold_accuracies,
        mean_accuracy,
        seed,
    })
}
