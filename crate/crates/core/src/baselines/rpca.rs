use ndarray::{Array2, ArrayView2, Zip};

use crate::error::{Error, Result};
use crate::graph::symmetric_eigendecomposition;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RpcaOptions {
    /// Weight of the ℓ₁ term; `None` selects 1/√max(m, D).
    pub lambda: Option<f64>,
    /// Stopping threshold on ‖X − L − S‖_F / ‖X‖_F.
    pub tol: f64,
    pub max_iter: usize,
    /// Multiplicative growth of the penalty parameter per iteration.
    pub rho: f64,
}

impl Default for RpcaOptions {
    fn default() -> Self {
        RpcaOptions {
            lambda: None,
            tol: 1e-7,
            max_iter: 1000,
            rho: 1.5,
        }
    }
}

/// Low-rank plus sparse split of a data matrix.
#[derive(Debug, Clone)]
pub struct RpcaResult {
    pub low_rank: Array2<f64>,
    pub sparse: Array2<f64>,
    pub iterations: usize,
    /// ‖X − L − S‖_F / ‖X‖_F at return.
    pub residual: f64,
    pub converged: bool,
    /// ‖L‖_* + λ‖S‖₁ after each iteration.
    pub objective: Vec<f64>,
}

impl RpcaResult {
    /// Turns an unconverged result into `NoConvergence`.
    pub fn into_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NoConvergence {
                what: "robust PCA",
                iterations: self.iterations,
            })
        }
    }
}

pub fn default_lambda(m: usize, d: usize) -> f64 {
    1.0 / (m.max(d).max(1) as f64).sqrt()
}

fn frobenius(a: &Array2<f64>) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn symmetrized(mut g: Array2<f64>) -> Array2<f64> {
    let n = g.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (g[[i, j]] + g[[j, i]]);
            g[[i, j]] = v;
            g[[j, i]] = v;
        }
    }
    g
}

/// Singular values (descending, clamped at 0) with the right singular vectors
/// when `m ≥ D`, else the left ones, from the eigenproblem of the smaller Gram
/// matrix.
fn gram_svd(y: &Array2<f64>) -> Result<(Vec<f64>, Array2<f64>, bool)> {
    let right = y.nrows() >= y.ncols();
    let gram = if right { y.t().dot(y) } else { y.dot(&y.t()) };
    let decomp = symmetric_eigendecomposition(&symmetrized(gram))?;
    let k = decomp.n();
    let sigma = (0..k).rev().map(|i| decomp.eigenvalues()[i].max(0.0).sqrt()).collect();
    let mut vecs = Array2::zeros((k, k));
    for (c, i) in (0..k).rev().enumerate() {
        vecs.column_mut(c).assign(&decomp.eigenvector(i));
    }
    Ok((sigma, vecs, right))
}

fn spectral_norm(y: &Array2<f64>) -> Result<f64> {
    Ok(gram_svd(y)?.0.first().copied().unwrap_or(0.0))
}

/// Singular value thresholding at `tau`; returns the shrunk matrix and its
/// nuclear norm.
fn svt(y: &Array2<f64>, tau: f64) -> Result<(Array2<f64>, f64)> {
    let (sigma, vecs, right) = gram_svd(y)?;
    let keep: Vec<usize> = (0..sigma.len()).filter(|&i| sigma[i] > tau).collect();
    let nuclear = keep.iter().map(|&i| sigma[i] - tau).sum();
    if keep.is_empty() {
        return Ok((Array2::zeros(y.dim()), 0.0));
    }
    let basis = vecs.select(ndarray::Axis(1), &keep);
    let mut scaled = basis.clone();
    for (c, &i) in keep.iter().enumerate() {
        scaled.column_mut(c).mapv_inplace(|v| v * (1.0 - tau / sigma[i]));
    }
    let projector = scaled.dot(&basis.t());
    let out = if right { y.dot(&projector) } else { projector.dot(y) };
    Ok((out, nuclear))
}

/// Principal component pursuit min ‖L‖_* + λ‖S‖₁ s.t. X = L + S by the
/// inexact augmented Lagrange multiplier method. Hitting `max_iter` is
/// reported through `converged = false`, not as an error.
pub fn rpca_decompose(data: ArrayView2<'_, f64>, options: &RpcaOptions) -> Result<RpcaResult> {
    let (m, d) = data.dim();
    let lambda = options.lambda.unwrap_or_else(|| default_lambda(m, d));
    if !(lambda > 0.0) || !(options.tol > 0.0) || !(options.rho > 1.0) {
        return Err(Error::InvalidConfig("RPCA needs lambda > 0, tol > 0, rho > 1".into()));
    }
    let x = data.to_owned();
    let x_norm = frobenius(&x);
    if x_norm == 0.0 {
        return Ok(RpcaResult {
            low_rank: Array2::zeros((m, d)),
            sparse: Array2::zeros((m, d)),
            iterations: 1,
            residual: 0.0,
            converged: true,
            objective: vec![0.0],
        });
    }
    let two_norm = spectral_norm(&x)?;
    let inf_norm = x.iter().fold(0.0_f64, |a, &v| a.max(v.abs()));
    let mut dual = &x / two_norm.max(inf_norm / lambda);
    let mut mu = 1.25 / two_norm;
    let mu_cap = mu * 1e7;
    let mut sparse = Array2::zeros((m, d));
    let mut low_rank = Array2::zeros((m, d));
    let mut objective = Vec::new();
    let mut residual = f64::INFINITY;
    let mut iterations = 0;

    while iterations < options.max_iter {
        iterations += 1;
        let (l, nuclear) = svt(&(&x - &sparse + &dual / mu), 1.0 / mu)?;
        low_rank = l;
        let shrink = lambda / mu;
        sparse = &x - &low_rank + &dual / mu;
        sparse.mapv_inplace(|v| v.signum() * (v.abs() - shrink).max(0.0));
        let gap = &x - &low_rank - &sparse;
        Zip::from(&mut dual).and(&gap).for_each(|y, &z| *y += mu * z);
        residual = frobenius(&gap) / x_norm;
        objective.push(nuclear + lambda * sparse.iter().map(|v| v.abs()).sum::<f64>());
        if residual <= options.tol {
            break;
        }
        mu = (mu * options.rho).min(mu_cap);
    }
    Ok(RpcaResult {
        low_rank,
        sparse,
        iterations,
        residual,
        converged: residual <= options.tol,
        objective,
    })
}
