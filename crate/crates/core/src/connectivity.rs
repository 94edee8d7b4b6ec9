//! Feature-graph estimation from multichannel recordings by pairwise Granger
//! causality, followed by symmetrization and top-k sparsification.

use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::graph::Graph;

pub const DEFAULT_ORDER: usize = 5;
pub const DEFAULT_DENSITY: f64 = 0.1;

/// Pivots below this fraction of the largest |R_kk| mark a rank-deficient
/// design.
const RANK_TOLERANCE: f64 = 1e-10;

/// Channels × timepoints, optionally split into consecutive trials. Lag
/// windows never cross a trial boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesPanel {
    values: Array2<f64>,
    trial_starts: Vec<usize>,
}

impl TimeSeriesPanel {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        Self::with_trial_starts(values, vec![0])
    }

    /// Equal-length trials laid end to end along the time axis.
    pub fn with_trial_length(values: Array2<f64>, trial_length: usize) -> Result<Self> {
        let t = values.ncols();
        if trial_length == 0 || t % trial_length != 0 {
            return Err(Error::InvalidConfig(format!(
                "trial length {trial_length} does not divide {t} timepoints"
            )));
        }
        Self::with_trial_starts(values, (0..t).step_by(trial_length).collect())
    }

    /// `trial_starts` must begin at 0 and increase strictly.
    pub fn with_trial_starts(values: Array2<f64>, trial_starts: Vec<usize>) -> Result<Self> {
        let t = values.ncols();
        if trial_starts.first() != Some(&0) || trial_starts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig("trial starts must begin at 0 and increase".into()));
        }
        if trial_starts.last().is_some_and(|&s| s >= t) && t > 0 {
            return Err(Error::InvalidConfig("trial start beyond the last timepoint".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("time series contain non-finite values".into()));
        }
        Ok(TimeSeriesPanel { values, trial_starts })
    }

    pub fn channels(&self) -> usize {
        self.values.nrows()
    }

    pub fn timepoints(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    fn segments(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let t = self.timepoints();
        self.trial_starts
            .iter()
            .enumerate()
            .map(move |(k, &s)| (s, self.trial_starts.get(k + 1).copied().unwrap_or(t)))
    }

    /// Time indices with a full lag window of `order` samples in their trial.
    fn targets(&self, order: usize) -> Vec<usize> {
        self.segments().flat_map(|(s, e)| (s + order).min(e)..e).collect()
    }
}

/// Nonnegative directed influence strengths; entry (i, j) is i → j.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceMatrix(Array2<f64>);

impl InfluenceMatrix {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        let (r, c) = values.dim();
        if r != c {
            return Err(Error::NonSquare { rows: r, cols: c });
        }
        for ((i, j), &v) in values.indexed_iter() {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::NegativeWeight { row: i, col: j, value: v });
            }
            if i == j && v != 0.0 {
                return Err(Error::NonzeroDiagonal { index: i, value: v });
            }
        }
        Ok(InfluenceMatrix(values))
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.0[[from, to]]
    }
}

/// Residual sum of squares of the least-squares fit of `y` on the columns of
/// `design` (column-major, `rows` long), by Householder QR. `None` when the
/// design is rank deficient.
fn least_squares_rss(design: &mut [Vec<f64>], y: &mut [f64]) -> Option<f64> {
    let rows = y.len();
    let cols = design.len();
    if rows <= cols {
        return None;
    }
    let scale = design
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0_f64, f64::max);
    if scale == 0.0 {
        return None;
    }
    for k in 0..cols {
        let (done, rest) = design.split_at_mut(k + 1);
        let col = &mut done[k];
        let norm = col[k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= RANK_TOLERANCE * scale {
            return None;
        }
        let alpha = if col[k] > 0.0 { -norm } else { norm };
        col[k] -= alpha;
        let vnorm2: f64 = col[k..].iter().map(|v| v * v).sum();
        let reflect = |target: &mut [f64]| {
            let dot: f64 = col[k..].iter().zip(&target[k..]).map(|(a, b)| a * b).sum();
            let f = 2.0 * dot / vnorm2;
            for (t, v) in target[k..].iter_mut().zip(&col[k..]) {
                *t -= f * v;
            }
        };
        for other in rest.iter_mut() {
            reflect(other);
        }
        reflect(y);
        col[k] = alpha;
    }
    Some(y[cols..].iter().map(|v| v * v).sum())
}

fn lagged_design(series: &[ArrayView1<'_, f64>], targets: &[usize], order: usize) -> Vec<Vec<f64>> {
    let mut design = vec![vec![1.0; targets.len()]];
    for s in series {
        for lag in 1..=order {
            design.push(targets.iter().map(|&t| s[t - lag]).collect());
        }
    }
    design
}

/// Pairwise Granger influence ln(σ²_restricted / σ²_full), clamped at 0.
/// The restricted model regresses channel j on an intercept and its own
/// `order` lags; the full model adds `order` lags of channel i. Rank-deficient
/// regressions yield 0 with a warning.
pub fn granger_influence(panel: &TimeSeriesPanel, order: usize) -> Result<InfluenceMatrix> {
    if order == 0 {
        return Err(Error::InvalidConfig("model order must be at least 1".into()));
    }
    let targets = panel.targets(order);
    let required = 2 * order + 1;
    if targets.len() < required {
        return Err(Error::TooShort {
            available: targets.len(),
            required,
        });
    }
    let n = panel.channels();
    let mut out = Array2::zeros((n, n));
    let rows: Vec<ArrayView1<'_, f64>> = panel.values.rows().into_iter().collect();
    for j in 0..n {
        let response: Vec<f64> = targets.iter().map(|&t| rows[j][t]).collect();
        let mut restricted = lagged_design(&[rows[j]], &targets, order);
        let Some(rss_r) = least_squares_rss(&mut restricted, &mut response.clone()) else {
            log::warn!("{} for channel {j}; its incoming influences are 0", Error::SingularRegression);
            continue;
        };
        for i in (0..n).filter(|&i| i != j) {
            let mut full = lagged_design(&[rows[j], rows[i]], &targets, order);
            match least_squares_rss(&mut full, &mut response.clone()) {
                Some(rss_f) if rss_f > 0.0 => out[[i, j]] = (rss_r / rss_f).ln().max(0.0),
                _ => log::warn!("degenerate regression for {i} -> {j}; influence set to 0"),
            }
        }
    }
    InfluenceMatrix::new(out)
}

/// Symmetrizes by the larger direction and keeps the ⌈density·N(N−1)/2⌉
/// heaviest positive pairs; equal weights are ranked by (i, j).
pub fn influence_to_graph(m: &InfluenceMatrix, density: f64) -> Result<Graph> {
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidConfig(format!("density must lie in (0, 1], got {density}")));
    }
    let v = m.values();
    let n = v.nrows();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let w = v[[i, j]].max(v[[j, i]]);
            if w > 0.0 {
                pairs.push((w, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let keep = (density * (n * n.saturating_sub(1)) as f64 / 2.0 - 1e-9).ceil().max(0.0) as usize;
    let mut w = Array2::zeros((n, n));
    for &(x, i, j) in pairs.iter().take(keep) {
        w[[i, j]] = x;
        w[[j, i]] = x;
    }
    Graph::new(w)
}
