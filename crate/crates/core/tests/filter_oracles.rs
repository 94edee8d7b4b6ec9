//! Chebyshev filtering checked against two independent evaluations: an
//! explicit power-basis polynomial of the scaled Laplacian, and the spectral
//! form U diag(Σ θ_k cos(k·arccos λ̂)) Uᵀ.

use gcae::filter::{chebyshev_filter, first_order_conv, scaled_laplacian, ChebyshevFilter, LambdaMax};
use gcae::graph::{generate, symmetric_eigendecomposition, Graph};
use ndarray::{Array1, Array2};
use proptest::prelude::*;

/// Power-basis coefficients of T_0..T_5, lowest degree first.
const CHEBYSHEV_POWER: [&[f64]; 6] = [
    &[1.0],
    &[0.0, 1.0],
    &[-1.0, 0.0, 2.0],
    &[0.0, -3.0, 0.0, 4.0],
    &[1.0, 0.0, -8.0, 0.0, 8.0],
    &[0.0, 5.0, 0.0, -20.0, 0.0, 16.0],
];

fn dense_polynomial_oracle(l_hat: &Array2<f64>, x: &Array1<f64>, theta: &[f64]) -> Array1<f64> {
    let n = x.len();
    let mut poly = vec![0.0; theta.len()];
    for (k, &t) in theta.iter().enumerate() {
        for (d, &c) in CHEBYSHEV_POWER[k].iter().enumerate() {
            poly[d] += t * c;
        }
    }
    let mut power = Array2::<f64>::eye(n);
    let mut total = Array2::<f64>::zeros((n, n));
    for &c in &poly {
        total.scaled_add(c, &power);
        power = power.dot(l_hat);
    }
    total.dot(x)
}

fn spectral_oracle(l_hat: &Array2<f64>, x: &Array1<f64>, theta: &[f64]) -> Array1<f64> {
    let d = symmetric_eigendecomposition(l_hat).unwrap();
    let response: Array1<f64> = d
        .eigenvalues()
        .mapv(|lam| {
            let phi = lam.clamp(-1.0, 1.0).acos();
            theta.iter().enumerate().map(|(k, t)| t * (k as f64 * phi).cos()).sum()
        });
    let coeffs = d.gft(x.view()).unwrap() * response;
    d.igft(coeffs.view()).unwrap()
}

fn max_abs(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    (a - b).iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

fn graph_strategy() -> impl Strategy<Value = Graph> {
    (2usize..14, any::<u64>(), 0.1f64..0.8).prop_map(|(n, seed, p)| generate::random_connected(n, p, seed))
}

fn signal(n: usize, seed: u64) -> Array1<f64> {
    Array1::from_shape_fn(n, |i| ((i as f64 + 1.0) * 0.37 + seed as f64 * 0.11).sin())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn recurrence_matches_power_basis(
        g in graph_strategy(),
        theta in prop::collection::vec(-2.0f64..2.0, 1..=6),
        seed in any::<u64>(),
    ) {
        let l_hat = scaled_laplacian(&g.normalized_laplacian().unwrap(), 2.0).unwrap();
        let x = signal(g.n(), seed);
        let filter = ChebyshevFilter::new(theta.clone()).unwrap();
        let y = chebyshev_filter(&l_hat, x.view(), &filter).unwrap();
        prop_assert!(max_abs(&y, &dense_polynomial_oracle(&l_hat, &x, &theta)) < 1e-9);
        prop_assert!(max_abs(&y, &spectral_oracle(&l_hat, &x, &theta)) < 1e-9);
    }

    #[test]
    fn filtering_is_linear_in_the_signal(
        g in graph_strategy(),
        theta in prop::collection::vec(-2.0f64..2.0, 1..=5),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        let l_hat = scaled_laplacian(&g.normalized_laplacian().unwrap(), 2.0).unwrap();
        let filter = ChebyshevFilter::new(theta).unwrap();
        let x = signal(g.n(), 1);
        let z = signal(g.n(), 2).mapv(|v| v * v - 0.3);
        let combined = &x * a + &z * b;
        let lhs = chebyshev_filter(&l_hat, combined.view(), &filter).unwrap();
        let rhs = chebyshev_filter(&l_hat, x.view(), &filter).unwrap() * a
            + chebyshev_filter(&l_hat, z.view(), &filter).unwrap() * b;
        prop_assert!(max_abs(&lhs, &rhs) < 1e-10);
    }

    #[test]
    fn tied_first_order_filter_is_one_plus_normalized_adjacency(
        g in graph_strategy(),
        theta in -3.0f64..3.0,
    ) {
        let l_hat = scaled_laplacian(&g.normalized_laplacian().unwrap(), 2.0).unwrap();
        let x = signal(g.n(), 3);
        let y = chebyshev_filter(&l_hat, x.view(), &ChebyshevFilter::first_order_tied(theta).unwrap()).unwrap();
        let d = g.degrees();
        let w = g.adjacency();
        let expected = Array1::from_shape_fn(g.n(), |i| {
            let smoothed: f64 = (0..g.n()).map(|j| w[[i, j]] / (d[i] * d[j]).sqrt() * x[j]).sum();
            theta * (x[i] + smoothed)
        });
        prop_assert!(max_abs(&y, &expected) < 1e-10);
    }

    #[test]
    fn renormalized_first_order_conv_matches_definition(g in graph_strategy(), theta in -2.0f64..2.0) {
        let x = signal(g.n(), 4);
        let y = first_order_conv(&g.renormalized_adjacency(), x.view(), theta).unwrap();
        let w = g.adjacency();
        let d_hat: Vec<f64> = (0..g.n()).map(|i| 1.0 + w.row(i).sum()).collect();
        let expected = Array1::from_shape_fn(g.n(), |i| {
            let s: f64 = (0..g.n())
                .map(|j| (w[[i, j]] + if i == j { 1.0 } else { 0.0 }) / (d_hat[i] * d_hat[j]).sqrt() * x[j])
                .sum();
            theta * s
        });
        prop_assert!(max_abs(&y, &expected) < 1e-12);
    }
}

#[test]
fn exact_lambda_max_keeps_scaled_spectrum_in_unit_interval() {
    let g = generate::random_connected(10, 0.3, 9);
    let l = g.normalized_laplacian().unwrap();
    let lambda = LambdaMax::Exact.resolve(&l).unwrap();
    let l_hat = scaled_laplacian(&l, lambda).unwrap();
    let d = symmetric_eigendecomposition(&l_hat).unwrap();
    assert!((d.lambda_max() - 1.0).abs() < 1e-10);
    assert!(d.lambda_min() >= -1.0 - 1e-10);
}

#[test]
fn order_k_filter_is_k_minus_one_hop_local() {
    // Path graph 0-1-2-3-4-5-6: a delta at vertex 0 filtered with K = 3
    // reaches vertex 2 and no further.
    let n = 7;
    let mut w = Array2::zeros((n, n));
    for i in 0..n - 1 {
        w[[i, i + 1]] = 1.0;
        w[[i + 1, i]] = 1.0;
    }
    let g = Graph::new(w).unwrap();
    let l_hat = scaled_laplacian(&g.normalized_laplacian().unwrap(), 2.0).unwrap();
    let mut x = Array1::zeros(n);
    x[0] = 1.0;
    let y = chebyshev_filter(&l_hat, x.view(), &ChebyshevFilter::new(vec![0.3, 0.5, 0.7]).unwrap()).unwrap();
    assert!(y[2].abs() > 1e-6);
    assert!(y.iter().skip(3).all(|&v| v.abs() < 1e-14));
}
