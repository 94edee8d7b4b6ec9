use ndarray::{s, Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::graph::symmetric_eigendecomposition;

/// Principal axes of a data matrix, largest variance first.
#[derive(Debug, Clone)]
pub struct PcaModel {
    mean: Array1<f64>,
    /// D×n, orthonormal columns.
    components: Array2<f64>,
    /// All D covariance eigenvalues, nonincreasing.
    variances: Array1<f64>,
}

impl PcaModel {
    pub fn mean(&self) -> &Array1<f64> {
        &self.mean
    }

    pub fn components(&self) -> &Array2<f64> {
        &self.components
    }

    /// Variances along the retained components.
    pub fn explained_variance(&self) -> Array1<f64> {
        self.variances.slice(s![..self.components.ncols()]).to_owned()
    }

    /// Variances along every principal axis, including discarded ones.
    pub fn all_variances(&self) -> &Array1<f64> {
        &self.variances
    }

    pub fn transform(&self, data: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if data.ncols() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                found: data.ncols(),
            });
        }
        Ok((&data - &self.mean).dot(&self.components))
    }

    pub fn inverse_transform(&self, scores: ArrayView2<'_, f64>) -> Array2<f64> {
        scores.dot(&self.components.t()) + &self.mean
    }
}

/// Fits PCA from the sample covariance (divisor m − 1, or 1 when m = 1) and
/// returns the model with the centered scores. Each component is signed so
/// that its largest-magnitude entry is positive.
pub fn pca_fit_transform(data: ArrayView2<'_, f64>, n_components: usize) -> Result<(PcaModel, Array2<f64>)> {
    let (m, d) = data.dim();
    if m == 0 || d == 0 {
        return Err(Error::EmptyData);
    }
    let max = m.min(d);
    if n_components > max {
        return Err(Error::TooManyComponents {
            requested: n_components,
            max,
        });
    }
    let mean = data.mean_axis(Axis(0)).expect("nonempty");
    let centered = &data - &mean;
    let mut cov = centered.t().dot(&centered) / (m.saturating_sub(1).max(1)) as f64;
    // Exact symmetry for the eigensolver.
    for i in 0..d {
        for j in (i + 1)..d {
            let v = 0.5 * (cov[[i, j]] + cov[[j, i]]);
            cov[[i, j]] = v;
            cov[[j, i]] = v;
        }
    }
    if cov.diag().iter().all(|&v| v <= 0.0) {
        return Err(Error::DegenerateData);
    }
    let decomp = symmetric_eigendecomposition(&cov)?;
    let variances: Array1<f64> = decomp.eigenvalues().iter().rev().copied().collect();
    let mut components = Array2::zeros((d, n_components));
    for k in 0..n_components {
        let mut v = decomp.eigenvector(d - 1 - k).to_owned();
        let pivot = v
            .iter()
            .enumerate()
            .fold((0, 0.0_f64), |best, (i, &x)| if x.abs() > best.1.abs() { (i, x) } else { best });
        if pivot.1 < 0.0 {
            v.mapv_inplace(|x| -x);
        }
        components.column_mut(k).assign(&v);
    }
    let scores = centered.dot(&components);
    Ok((
        PcaModel {
            mean,
            components,
            variances,
        },
        scores,
    ))
}
