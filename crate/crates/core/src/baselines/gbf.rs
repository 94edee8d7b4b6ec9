use ndarray::{s, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{symmetric_eigendecomposition, Graph, SpectralDecomposition};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum LaplacianKind {
    #[default]
    Normalized,
    Combinatorial,
}

/// Eigendecomposition of the chosen Laplacian of `g`.
pub fn gbf_basis(g: &Graph, kind: LaplacianKind) -> Result<SpectralDecomposition> {
    let l = match kind {
        LaplacianKind::Normalized => g.normalized_laplacian()?,
        LaplacianKind::Combinatorial => g.combinatorial_laplacian(),
    };
    symmetric_eigendecomposition(&l)
}

/// Row i holds the first `n_components` graph Fourier coefficients of
/// sample i.
pub fn gbf_transform(
    decomp: &SpectralDecomposition,
    data: ArrayView2<'_, f64>,
    n_components: usize,
) -> Result<Array2<f64>> {
    let n = decomp.n();
    if data.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: data.ncols(),
        });
    }
    if n_components > n {
        return Err(Error::TooManyComponents {
            requested: n_components,
            max: n,
        });
    }
    Ok(data.dot(&decomp.eigenvectors().slice(s![.., ..n_components])))
}

/// Maps truncated coefficients back to vertex space.
pub fn gbf_reconstruct(decomp: &SpectralDecomposition, coeffs: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let k = coeffs.ncols();
    if k > decomp.n() {
        return Err(Error::TooManyComponents {
            requested: k,
            max: decomp.n(),
        });
    }
    Ok(coeffs.dot(&decomp.eigenvectors().slice(s![.., ..k]).t()))
}
