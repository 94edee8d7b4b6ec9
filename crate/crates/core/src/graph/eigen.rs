//! Symmetric eigendecomposition by cyclic Jacobi rotations, and the graph
//! Fourier transform built on top of it.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Largest tolerated |M[i][j] - M[j][i]| before a matrix is rejected.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;
/// Sweeps are stopped once the off-diagonal Frobenius norm falls below this
/// fraction of the input's Frobenius norm.
pub const RELATIVE_OFF_DIAGONAL_TOLERANCE: f64 = 1e-10;
pub const MAX_SWEEPS: usize = 100;

/// Eigenpairs of a real symmetric matrix, eigenvalues ascending.
///
/// Column `l` of `eigenvectors` is the unit eigenvector for `eigenvalues[l]`.
/// Within clusters of equal eigenvalues the column order is unspecified.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    eigenvalues: Array1<f64>,
    eigenvectors: Array2<f64>,
}

impl SpectralDecomposition {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &Array1<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &Array2<f64> {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, l: usize) -> ArrayView1<'_, f64> {
        self.eigenvectors.column(l)
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues[self.n() - 1]
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// U Λ Uᵀ.
    pub fn reconstruct(&self) -> Array2<f64> {
        let scaled = &self.eigenvectors * &self.eigenvalues.view().insert_axis(Axis(0));
        scaled.dot(&self.eigenvectors.t())
    }

    /// Graph Fourier transform: coefficient `l` is ⟨u_l, x⟩.
    pub fn gft(&self, x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        self.check_len(x.len())?;
        Ok(self.eigenvectors.t().dot(&x))
    }

    /// Inverse transform, U·coeffs.
    pub fn igft(&self, coeffs: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        self.check_len(coeffs.len())?;
        Ok(self.eigenvectors.dot(&coeffs))
    }

    fn check_len(&self, found: usize) -> Result<()> {
        if found != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found,
            });
        }
        Ok(())
    }
}

/// Maximum elementwise asymmetry |M - Mᵀ|.
pub fn max_asymmetry(m: ArrayView2<'_, f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[[i, j]] - m[[j, i]]).abs());
        }
    }
    worst
}

/// Decomposes a symmetric matrix as U Λ Uᵀ with cyclic Jacobi sweeps.
pub fn symmetric_eigendecomposition(m: &Array2<f64>) -> Result<SpectralDecomposition> {
    let (rows, cols) = m.dim();
    if rows != cols {
        return Err(Error::NonSquare { rows, cols });
    }
    let asym = max_asymmetry(m.view());
    if asym > SYMMETRY_TOLERANCE || m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotSymmetric(asym));
    }
    let n = rows;

    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = 0.5 * (m[[i, j]] + m[[j, i]]);
        }
    }
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let tol = RELATIVE_OFF_DIAGONAL_TOLERANCE * a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a, n) <= tol {
            converged = true;
            break;
        }
        sweep(&mut a, &mut v, n);
    }
    if !converged && off_diagonal_norm(&a, n) > tol {
        return Err(Error::NoConvergence {
            what: "Jacobi eigensolver",
            iterations: MAX_SWEEPS,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));
    let eigenvalues = Array1::from_iter(order.iter().map(|&i| a[i * n + i]));
    let eigenvectors = Array2::from_shape_fn((n, n), |(r, c)| v[r * n + order[c]]);
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += a[i * n + j] * a[i * n + j];
            }
        }
    }
    sum.sqrt()
}

/// One cyclic pass annihilating every off-diagonal pair (p, q) in turn.
fn sweep(a: &mut [f64], v: &mut [f64], n: usize) {
    for p in 0..n {
        for q in (p + 1)..n {
            let apq = a[p * n + q];
            if apq == 0.0 {
                continue;
            }
            let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
            let t = if theta.abs() > 1e150 {
                0.5 / theta
            } else {
                theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
            };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;

            for k in 0..n {
                let akp = a[k * n + p];
                let akq = a[k * n + q];
                a[k * n + p] = c * akp - s * akq;
                a[k * n + q] = s * akp + c * akq;
            }
            for k in 0..n {
                let apk = a[p * n + k];
                let aqk = a[q * n + k];
                a[p * n + k] = c * apk - s * aqk;
                a[q * n + k] = s * apk + c * aqk;
            }
            a[p * n + q] = 0.0;
            a[q * n + p] = 0.0;
            for k in 0..n {
                let vkp = v[k * n + p];
                let vkq = v[k * n + q];
                v[k * n + p] = c * vkp - s * vkq;
                v[k * n + q] = s * vkp + c * vkq;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
        let mut m = Array2::zeros((n, n));
        for i in 0..n {
            for j in i..n {
                let x: f64 = rng.random_range(-1.0..1.0);
                m[[i, j]] = x;
                m[[j, i]] = x;
            }
        }
        m
    }

    fn max_abs(m: &Array2<f64>) -> f64 {
        m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
    }

    #[test]
    fn diagonal_matrix_sorted() {
        let d = symmetric_eigendecomposition(&array![[3.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_eq!(d.eigenvalues().to_vec(), vec![1.0, 3.0]);
        assert_eq!(d.eigenvector(0).mapv(f64::abs).to_vec(), vec![0.0, 1.0]);
        assert_eq!(d.eigenvector(1).mapv(f64::abs).to_vec(), vec![1.0, 0.0]);
    }

    #[test]
    fn single_edge_laplacian() {
        // characteristic polynomial λ² − 2λ
        let d = symmetric_eigendecomposition(&array![[1.0, -1.0], [-1.0, 1.0]]).unwrap();
        assert!(d.eigenvalues()[0].abs() < 1e-12);
        assert!((d.eigenvalues()[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_matrix_converges() {
        let d = symmetric_eigendecomposition(&Array2::zeros((4, 4))).unwrap();
        assert!(d.eigenvalues().iter().all(|&x| x == 0.0));
        assert_eq!(d.eigenvectors(), &Array2::<f64>::eye(4));
    }

    #[test]
    fn rejects_asymmetric_and_nonsquare() {
        let err = symmetric_eigendecomposition(&array![[1.0, 2.0], [2.0 + 1e-9, 1.0]]);
        assert!(matches!(err, Err(Error::NotSymmetric(_))));
        let err = symmetric_eigendecomposition(&Array2::zeros((2, 3)));
        assert!(matches!(err, Err(Error::NonSquare { .. })));
    }

    #[test]
    fn random_matrices_reconstruct_and_are_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [1, 2, 3, 7, 20, 45] {
            let m = random_symmetric(n, &mut rng);
            let d = symmetric_eigendecomposition(&m).unwrap();
            assert!(max_abs(&(d.reconstruct() - &m)) < 1e-8);
            let gram = d.eigenvectors().t().dot(d.eigenvectors());
            assert!(max_abs(&(gram - Array2::<f64>::eye(n))) < 1e-9);
            for w in d.eigenvalues().windows(2) {
                assert!(w[0] <= w[1]);
            }
        }
    }

    #[test]
    fn degenerate_spectrum_projectors_match() {
        // eigenvalue 2 with multiplicity 2, rotated into a dense basis
        let q = {
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            symmetric_eigendecomposition(&random_symmetric(3, &mut rng))
                .unwrap()
                .eigenvectors()
                .clone()
        };
        let lam = Array2::from_diag(&array![2.0, 2.0, 5.0]);
        let m = q.dot(&lam).dot(&q.t());
        let m = (&m + &m.t()) * 0.5;
        let d = symmetric_eigendecomposition(&m).unwrap();
        let u = d.eigenvectors().slice(ndarray::s![.., 0..2]).to_owned();
        let expected = q.slice(ndarray::s![.., 0..2]).to_owned();
        let p1 = u.dot(&u.t());
        let p2 = expected.dot(&expected.t());
        assert!(max_abs(&(p1 - p2)) < 1e-9);
    }

    #[test]
    fn gft_roundtrip_and_parseval() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_symmetric(8, &mut rng);
        let d = symmetric_eigendecomposition(&m).unwrap();
        let x = Array1::from_iter((0..8).map(|_| rng.random_range(-2.0..2.0)));
        let coeffs = d.gft(x.view()).unwrap();
        let back = d.igft(coeffs.view()).unwrap();
        assert!((&back - &x).iter().all(|e| e.abs() < 1e-9));
        assert!((coeffs.dot(&coeffs).sqrt() - x.dot(&x).sqrt()).abs() < 1e-9);

        let e0 = d.gft(d.eigenvector(0)).unwrap();
        assert!((e0[0] - 1.0).abs() < 1e-12);
        assert!(e0.iter().skip(1).all(|c| c.abs() < 1e-12));
        let u0 = d.igft(Array1::from_iter((0..8).map(|i| f64::from(i == 0))).view()).unwrap();
        assert_eq!(u0, d.eigenvector(0).to_owned());
        assert!(d.gft(Array1::zeros(8).view()).unwrap().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn gft_dimension_mismatch() {
        let d = symmetric_eigendecomposition(&Array2::eye(3)).unwrap();
        assert!(matches!(
            d.gft(Array1::zeros(2).view()),
            Err(Error::DimensionMismatch { expected: 3, found: 2 })
        ));
        assert!(d.igft(Array1::zeros(4).view()).is_err());
    }
}
