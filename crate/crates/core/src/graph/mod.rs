//! Weighted undirected graphs and the operators derived from them:
//! combinatorial and normalized Laplacians, the renormalized adjacency used by
//! graph convolution, and spectral decomposition / Fourier transform.

mod eigen;
pub mod generate;
pub mod io;

use std::collections::VecDeque;

use ndarray::{Array1, Array2, Axis};

use crate::error::{Error, Result};

pub use eigen::{
    max_asymmetry, symmetric_eigendecomposition, SpectralDecomposition, MAX_SWEEPS,
    RELATIVE_OFF_DIAGONAL_TOLERANCE, SYMMETRY_TOLERANCE,
};

/// Validated weighted adjacency: square, exactly symmetric, nonnegative,
/// zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    adjacency: Array2<f64>,
}

impl Graph {
    /// Validates `adjacency` without repairing it. Non-finite weights are
    /// reported as [`Error::NegativeWeight`].
    pub fn new(adjacency: Array2<f64>) -> Result<Self> {
        let (rows, cols) = adjacency.dim();
        if rows != cols {
            return Err(Error::NonSquare { rows, cols });
        }
        let n = rows;
        for ((row, col), &value) in adjacency.indexed_iter() {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(Error::NegativeWeight { row, col, value });
            }
        }
        for i in 0..n {
            if adjacency[[i, i]] != 0.0 {
                return Err(Error::NonzeroDiagonal {
                    index: i,
                    value: adjacency[[i, i]],
                });
            }
        }
        let mut worst: Option<(usize, usize, f64)> = None;
        for i in 0..n {
            for j in (i + 1)..n {
                let diff = (adjacency[[i, j]] - adjacency[[j, i]]).abs();
                if diff > 0.0 && worst.is_none_or(|(_, _, d)| diff > d) {
                    worst = Some((i, j, diff));
                }
            }
        }
        if let Some((row, col, diff)) = worst {
            return Err(Error::Asymmetric { row, col, diff });
        }
        Ok(Graph { adjacency })
    }

    /// Graph on `n` vertices with no edges.
    pub fn empty(n: usize) -> Self {
        Graph {
            adjacency: Array2::zeros((n, n)),
        }
    }

    pub fn n(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn adjacency(&self) -> &Array2<f64> {
        &self.adjacency
    }

    pub fn into_adjacency(self) -> Array2<f64> {
        self.adjacency
    }

    /// Weighted degree of every vertex, D[i][i] = Σ_j W[i][j].
    pub fn degrees(&self) -> Array1<f64> {
        self.adjacency.sum_axis(Axis(1))
    }

    /// Number of nonzero undirected edges.
    pub fn edge_count(&self) -> usize {
        let n = self.n();
        (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.adjacency[[i, j]] > 0.0)
            .count()
    }

    /// Number of connected components (isolated vertices count as components).
    pub fn component_count(&self) -> usize {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut components = 0;
        let mut queue = VecDeque::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            components += 1;
            seen[start] = true;
            queue.push_back(start);
            while let Some(u) = queue.pop_front() {
                for v in 0..n {
                    if !seen[v] && self.adjacency[[u, v]] > 0.0 {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
        }
        components
    }

    pub fn is_connected(&self) -> bool {
        self.component_count() <= 1
    }

    /// L = D − W.
    pub fn combinatorial_laplacian(&self) -> Array2<f64> {
        let mut l = -&self.adjacency;
        for (i, d) in self.degrees().iter().enumerate() {
            l[[i, i]] = *d;
        }
        l
    }

    /// Symmetric normalized Laplacian I − D^{-1/2} W D^{-1/2}.
    pub fn normalized_laplacian(&self) -> Result<Array2<f64>> {
        let degrees = self.degrees();
        if let Some(i) = degrees.iter().position(|&d| d <= 0.0) {
            return Err(Error::ZeroDegreeVertex(i));
        }
        let mut l = symmetric_scaling(&self.adjacency, &degrees).mapv(|x| -x);
        for i in 0..self.n() {
            l[[i, i]] = 1.0;
        }
        Ok(l)
    }

    /// Renormalized adjacency D̂^{-1/2} (W + I) D̂^{-1/2}, where D̂ holds the
    /// row sums of W + I. Defined for every graph, including ones with
    /// isolated vertices.
    pub fn renormalized_adjacency(&self) -> Array2<f64> {
        let mut with_loops = self.adjacency.clone();
        for i in 0..self.n() {
            with_loops[[i, i]] += 1.0;
        }
        let degrees = with_loops.sum_axis(Axis(1));
        symmetric_scaling(&with_loops, &degrees)
    }
}

/// D^{-1/2} · M · D^{-1/2} for degrees `d`, computed on the upper triangle
/// and mirrored so the result is exactly symmetric.
fn symmetric_scaling(m: &Array2<f64>, d: &Array1<f64>) -> Array2<f64> {
    let n = m.nrows();
    let mut out = Array2::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let v = m[[i, j]] / (d[i] * d[j]).sqrt();
            out[[i, j]] = v;
            out[[j, i]] = v;
        }
    }
    out
}
