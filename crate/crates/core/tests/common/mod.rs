#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semirank::{BtlModel, ComparisonGraph};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random spanning tree plus each remaining pair with probability `extra`.
pub fn random_connected(n: usize, extra: f64, r: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(r);
    let mut edges = Vec::new();
    for k in 1..n {
        let parent = order[r.random_range(0..k)];
        let (a, b) = (order[k], parent);
        edges.push((a.min(b), a.max(b)));
    }
    for i in 0..n {
        for j in i + 1..n {
            if !edges.contains(&(i, j)) && r.random::<f64>() < extra {
                edges.push((i, j));
            }
        }
    }
    edges
}

pub fn random_graph(n: usize, extra: f64, weighted: bool, r: &mut ChaCha8Rng) -> ComparisonGraph {
    let edges = random_connected(n, extra, r);
    let triples: Vec<_> = edges
        .into_iter()
        .map(|(i, j)| (i, j, if weighted { r.random_range(0.05..=1.0) } else { 1.0 }))
        .collect();
    ComparisonGraph::from_weighted_edges(n, triples).unwrap()
}

/// Scores `exp(U[0, ln h])`, with the extremes pinned so the range is exactly `h`.
pub fn random_model(n: usize, h: f64, r: &mut ChaCha8Rng) -> BtlModel {
    let mut alpha: Vec<f64> = (0..n).map(|_| (r.random::<f64>() * h.ln()).exp()).collect();
    alpha[0] = 1.0;
    alpha[1] = h;
    alpha.shuffle(r);
    BtlModel::new(alpha).unwrap()
}

/// Dense Laplacian built straight from the edge list.
pub fn dense_laplacian(n: usize, edges: &[(usize, usize, f64)]) -> DMatrix<f64> {
    let mut l = DMatrix::zeros(n, n);
    for &(i, j, w) in edges {
        l[(i, i)] += w;
        l[(j, j)] += w;
        l[(i, j)] -= w;
        l[(j, i)] -= w;
    }
    l
}

pub fn second_smallest(m: DMatrix<f64>) -> f64 {
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev[1]
}

pub fn triples(g: &ComparisonGraph) -> Vec<(usize, usize, f64)> {
    g.edges()
        .iter()
        .zip(g.weights())
        .map(|(&(i, j), &w)| (i, j, w))
        .collect()
}

pub fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
