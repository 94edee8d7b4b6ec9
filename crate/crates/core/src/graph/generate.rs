//! Seeded random graph generators.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Graph;

/// Random weighted graph: a random spanning tree plus independent edges with
/// probability `edge_prob`. Weights are uniform on [0.1, 1). Always connected.
pub fn random_connected(n: usize, edge_prob: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = Array2::zeros((n, n));
    add_spanning_tree(&mut w, &mut rng);
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < edge_prob {
                let x = rng.random_range(0.1..1.0);
                w[[i, j]] = x;
                w[[j, i]] = x;
            }
        }
    }
    Graph { adjacency: w }
}

/// Stochastic block model with `blocks` equal-size communities. A light
/// spanning tree (weight 0.1) keeps the graph connected.
pub fn stochastic_block(n: usize, blocks: usize, p_in: f64, p_out: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blocks = blocks.max(1);
    let block_of = |i: usize| i * blocks / n.max(1);
    let mut w = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let p = if block_of(i) == block_of(j) { p_in } else { p_out };
            if rng.random::<f64>() < p {
                w[[i, j]] = 1.0;
                w[[j, i]] = 1.0;
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    for k in 1..n {
        let (a, b) = (order[k], order[rng.random_range(0..k)]);
        if w[[a, b]] == 0.0 {
            w[[a, b]] = 0.1;
            w[[b, a]] = 0.1;
        }
    }
    Graph { adjacency: w }
}

/// Sensor-layout style graph: `n` points uniform in the unit square joined to
/// their `k` nearest neighbours with Gaussian weights exp(−d²/2σ²), σ the mean
/// neighbour distance. Remaining components are bridged by their closest pair
/// of points.
pub fn geometric(n: usize, k: usize, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<[f64; 2]> = (0..n).map(|_| [rng.random(), rng.random()]).collect();
    let dist = |a: usize, b: usize| {
        let dx = points[a][0] - points[b][0];
        let dy = points[a][1] - points[b][1];
        (dx * dx + dy * dy).sqrt()
    };
    let k = k.min(n.saturating_sub(1));
    let mut neighbours = Vec::with_capacity(n);
    let mut total = 0.0;
    for i in 0..n {
        let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        others.sort_by(|&a, &b| dist(i, a).total_cmp(&dist(i, b)).then(a.cmp(&b)));
        others.truncate(k);
        total += others.iter().map(|&j| dist(i, j)).sum::<f64>();
        neighbours.push(others);
    }
    let sigma = if n * k > 0 { total / (n * k) as f64 } else { 1.0 };
    let weight = |d: f64| (-d * d / (2.0 * sigma * sigma)).exp();

    let mut w = Array2::zeros((n, n));
    for (i, list) in neighbours.iter().enumerate() {
        for &j in list {
            let x = weight(dist(i, j));
            w[[i, j]] = x;
            w[[j, i]] = x;
        }
    }
    let mut graph = Graph { adjacency: w };
    loop {
        let labels = component_labels(&graph);
        if labels.iter().all(|&c| c == 0) {
            break;
        }
        let mut best = (f64::INFINITY, 0, 0);
        for a in 0..n {
            for b in 0..n {
                if labels[a] == 0 && labels[b] != 0 && dist(a, b) < best.0 {
                    best = (dist(a, b), a, b);
                }
            }
        }
        let (d, a, b) = best;
        let x = weight(d);
        graph.adjacency[[a, b]] = x;
        graph.adjacency[[b, a]] = x;
    }
    graph
}

fn component_labels(g: &Graph) -> Vec<usize> {
    let n = g.n();
    let mut labels = vec![usize::MAX; n];
    let mut next = 0;
    for start in 0..n {
        if labels[start] != usize::MAX {
            continue;
        }
        let mut stack = vec![start];
        labels[start] = next;
        while let Some(u) = stack.pop() {
            for v in 0..n {
                if labels[v] == usize::MAX && g.adjacency[[u, v]] > 0.0 {
                    labels[v] = next;
                    stack.push(v);
                }
            }
        }
        next += 1;
    }
    labels
}

fn add_spanning_tree(w: &mut Array2<f64>, rng: &mut ChaCha8Rng) {
    let n = w.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    for k in 1..n {
        let a = order[k];
        let b = order[rng.random_range(0..k)];
        let x = rng.random_range(0.1..1.0);
        w[[a, b]] = x;
        w[[b, a]] = x;
    }
}
