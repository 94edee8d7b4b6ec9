//! Graph filters: exact spectral-domain convolution, Chebyshev polynomial
//! filters of the scaled Laplacian, and the first-order renormalized filter.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::graph::{symmetric_eigendecomposition, SpectralDecomposition};

/// Spectral radius bound assumed for normalized Laplacians when no exact
/// largest eigenvalue is supplied.
pub const DEFAULT_LAMBDA_MAX: f64 = 2.0;

/// K Chebyshev coefficients θ′₀ … θ′_{K−1}; the filter is (K−1)-hop local.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevFilter {
    coefficients: Vec<f64>,
}

impl ChebyshevFilter {
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::InvalidFilter("order K must be at least 1".into()));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidFilter("coefficients must be finite".into()));
        }
        Ok(ChebyshevFilter { coefficients })
    }

    /// The tied first-order filter θ′₀ = θ, θ′₁ = −θ.
    pub fn first_order_tied(theta: f64) -> Result<Self> {
        Self::new(vec![theta, -theta])
    }

    pub fn order(&self) -> usize {
        self.coefficients.len()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }
}

/// How λ_max is chosen when scaling a normalized Laplacian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaMax {
    /// Use the upper bound 2 of the normalized Laplacian spectrum.
    Approximate,
    /// Compute the largest eigenvalue.
    Exact,
    Given(f64),
}

impl LambdaMax {
    pub fn resolve(self, l_norm: &Array2<f64>) -> Result<f64> {
        match self {
            LambdaMax::Approximate => Ok(DEFAULT_LAMBDA_MAX),
            LambdaMax::Exact => Ok(symmetric_eigendecomposition(l_norm)?.lambda_max()),
            LambdaMax::Given(v) => Ok(v),
        }
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

fn check_square(m: &Array2<f64>, n: usize) -> Result<()> {
    let (rows, cols) = m.dim();
    if rows != cols {
        return Err(Error::NonSquare { rows, cols });
    }
    check_len(rows, n)
}

/// U((Uᵀh) ⊙ (Uᵀx)).
pub fn spectral_convolve(
    d: &SpectralDecomposition,
    x: ArrayView1<'_, f64>,
    h: ArrayView1<'_, f64>,
) -> Result<Array1<f64>> {
    let x_hat = d.gft(x)?;
    let h_hat = d.gft(h)?;
    d.igft((h_hat * x_hat).view())
}

/// L̂ = (2/λ_max) L̃ − I.
pub fn scaled_laplacian(l_norm: &Array2<f64>, lambda_max: f64) -> Result<Array2<f64>> {
    if !(lambda_max > 0.0) {
        return Err(Error::NonpositiveLambdaMax(lambda_max));
    }
    let (rows, cols) = l_norm.dim();
    if rows != cols {
        return Err(Error::NonSquare { rows, cols });
    }
    let mut out = l_norm * (2.0 / lambda_max);
    out.diag_mut().mapv_inplace(|v| v - 1.0);
    Ok(out)
}

/// Σ_k θ′_k T_k(L̂) x by the three-term recurrence on vectors.
pub fn chebyshev_filter(
    l_hat: &Array2<f64>,
    x: ArrayView1<'_, f64>,
    filter: &ChebyshevFilter,
) -> Result<Array1<f64>> {
    check_square(l_hat, x.len())?;
    let coeffs = filter.coefficients();
    let mut prev = x.to_owned();
    let mut out = &prev * coeffs[0];
    if coeffs.len() == 1 {
        return Ok(out);
    }
    let mut curr = l_hat.dot(&x);
    out.scaled_add(coeffs[1], &curr);
    for &theta in &coeffs[2..] {
        let mut next = l_hat.dot(&curr) * 2.0;
        next -= &prev;
        out.scaled_add(theta, &next);
        prev = curr;
        curr = next;
    }
    Ok(out)
}

/// θ Ã x.
pub fn first_order_conv(
    a_tilde: &Array2<f64>,
    x: ArrayView1<'_, f64>,
    theta: f64,
) -> Result<Array1<f64>> {
    check_square(a_tilde, x.len())?;
    Ok(a_tilde.dot(&x) * theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, Graph};
    use ndarray::array;

    fn max_abs_diff(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
        a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn filter_validation() {
        assert!(ChebyshevFilter::new(vec![]).is_err());
        assert!(ChebyshevFilter::new(vec![1.0, f64::NAN]).is_err());
        assert_eq!(ChebyshevFilter::first_order_tied(0.5).unwrap().coefficients(), &[0.5, -0.5]);
    }

    #[test]
    fn scaled_laplacian_examples() {
        assert_eq!(scaled_laplacian(&Array2::eye(3), 2.0).unwrap(), Array2::<f64>::zeros((3, 3)));
        let l = array![[1.0, -1.0], [-1.0, 1.0]];
        assert_eq!(scaled_laplacian(&l, 2.0).unwrap(), array![[0.0, -1.0], [-1.0, 0.0]]);
        assert!(matches!(scaled_laplacian(&l, 0.0), Err(Error::NonpositiveLambdaMax(_))));
        assert!(scaled_laplacian(&l, -1.0).is_err());
    }

    #[test]
    fn scaled_laplacian_exact_lambda_bounds() {
        for seed in 0..10 {
            let g = generate::random_connected(12, 0.3, seed);
            let l = g.normalized_laplacian().unwrap();
            let lmax = LambdaMax::Exact.resolve(&l).unwrap();
            let d = symmetric_eigendecomposition(&scaled_laplacian(&l, lmax).unwrap()).unwrap();
            assert!(d.lambda_min() >= -1.0 - 1e-9 && d.lambda_max() <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn order_one_is_scaling() {
        let l = array![[0.0, -1.0], [-1.0, 0.0]];
        let f = ChebyshevFilter::new(vec![3.0]).unwrap();
        let y = chebyshev_filter(&l, array![1.0, -2.0].view(), &f).unwrap();
        assert_eq!(y, array![3.0, -6.0]);
    }

    #[test]
    fn first_order_examples() {
        let g = Graph::new(array![[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let a = g.renormalized_adjacency();
        assert_eq!(first_order_conv(&a, array![1.0, 3.0].view(), 2.0).unwrap(), array![4.0, 4.0]);
        assert_eq!(first_order_conv(&a, array![1.0, 3.0].view(), 0.0).unwrap(), array![0.0, 0.0]);
        let id = Graph::empty(3).renormalized_adjacency();
        let x = array![1.0, -2.0, 0.5];
        assert_eq!(first_order_conv(&id, x.view(), 1.0).unwrap(), x);
        assert!(first_order_conv(&id, array![1.0].view(), 1.0).is_err());
    }

    #[test]
    fn spectral_convolve_identity_and_zero() {
        let g = generate::random_connected(6, 0.4, 2);
        let d = symmetric_eigendecomposition(&g.normalized_laplacian().unwrap()).unwrap();
        let flat = d.igft(Array1::ones(6).view()).unwrap();
        let x = array![0.3, -1.0, 2.0, 0.0, 5.0, -0.7];
        let y = spectral_convolve(&d, x.view(), flat.view()).unwrap();
        assert!(max_abs_diff(&y, &x) < 1e-9);
        let z = spectral_convolve(&d, Array1::zeros(6).view(), flat.view()).unwrap();
        assert!(z.iter().all(|v| v.abs() < 1e-15));
        assert!(spectral_convolve(&d, x.view(), array![1.0].view()).is_err());
    }

    #[test]
    fn spectral_convolve_matches_dense_evaluation() {
        // h = x = u₀: the spectral response of u₀ is e₀, so the output is u₀·(1·1)
        let g = generate::random_connected(7, 0.3, 9);
        let d = symmetric_eigendecomposition(&g.normalized_laplacian().unwrap()).unwrap();
        let u0 = d.eigenvector(0).to_owned();
        let y = spectral_convolve(&d, u0.view(), u0.view()).unwrap();
        let u = d.eigenvectors();
        let brute = u.dot(&(u.t().dot(&u0) * u.t().dot(&u0)));
        assert!(max_abs_diff(&y, &brute) < 1e-10);
        assert!(max_abs_diff(&y, &u0) < 1e-10);
    }
}
