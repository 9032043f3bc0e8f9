//! Observation graphs: semi-random sampling plans, Erdős-Rényi and
//! stochastic block models, and the monotone ER/semi-random coupling.
//!
//! Every generator decides pair `(i, j)` by comparing the shared uniform
//! `U_ij = rng::pair_uniform(seed, i, j)` against that pair's probability, so
//! generators with equal probabilities produce identical graphs for equal
//! seeds, and the coupling is exact.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Undirected simple graph with a weight in `[0, 1]` on each edge.
///
/// Edges are stored once as `(i, j)` with `i < j`, sorted lexicographically.
/// Zero-weight edges stay in the edge set but are inert in every weighted
/// computation.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    weights: Vec<f64>,
    adjacency: Vec<Vec<(usize, usize)>>,
}

/// `(d_min, d_max, mean)` of the weighted degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegreeStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl ComparisonGraph {
    /// Unit-weight graph on `n` nodes. Pairs may be given in either
    /// orientation; duplicates and self-loops are rejected.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let edges: Vec<_> = edges.into_iter().collect();
        let weights = vec![1.0; edges.len()];
        Self::from_weighted_edges(n, edges.into_iter().zip(weights).map(|((i, j), w)| (i, j, w)))
    }

    pub fn from_weighted_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut list: Vec<((usize, usize), f64)> = Vec::new();
        for (i, j, w) in edges {
            if i == j {
                return Err(Error::SameItem(i));
            }
            for index in [i, j] {
                if index >= n {
                    return Err(Error::IndexOutOfRange { index, n });
                }
            }
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::WeightOutOfRange { i, j, weight: w });
            }
            list.push(((i.min(j), i.max(j)), w));
        }
        list.sort_by_key(|a| a.0);
        if let Some(pair) = list.windows(2).find(|p| p[0].0 == p[1].0) {
            return Err(Error::Parse(format!("duplicate edge {:?}", pair[0].0)));
        }
        let (edges, weights) = list.into_iter().unzip();
        Ok(Self::assemble(n, edges, weights))
    }

    fn assemble(n: usize, edges: Vec<(usize, usize)>, weights: Vec<f64>) -> Self {
        let mut adjacency = vec![Vec::new(); n];
        for (e, &(i, j)) in edges.iter().enumerate() {
            adjacency[i].push((j, e));
            adjacency[j].push((i, e));
        }
        Self {
            n,
            edges,
            weights,
            adjacency,
        }
    }

    pub fn empty(n: usize) -> Self {
        Self::assemble(n, Vec::new(), Vec::new())
    }

    pub fn complete(n: usize) -> Self {
        let edges: Vec<_> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let weights = vec![1.0; edges.len()];
        Self::assemble(n, edges, weights)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Neighbours of `i` as `(neighbour, edge index)`.
    pub fn neighbors(&self, i: usize) -> &[(usize, usize)] {
        &self.adjacency[i]
    }

    pub fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        let key = (i.min(j), i.max(j));
        self.edges.binary_search(&key).ok()
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.edge_index(i, j).map_or(0.0, |e| self.weights[e])
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edge_index(i, j).is_some()
    }

    /// Same edge set with `weights` (indexed like `edges()`) in place of the
    /// current ones.
    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.edges.len() {
            return Err(Error::SizeMismatch {
                expected: self.edges.len(),
                actual: weights.len(),
            });
        }
        if let Some((e, &w)) = weights.iter().enumerate().find(|(_, w)| !(0.0..=1.0).contains(*w)) {
            let (i, j) = self.edges[e];
            return Err(Error::WeightOutOfRange { i, j, weight: w });
        }
        Ok(Self {
            weights,
            ..self.clone()
        })
    }

    /// Copy with every weight set to 1.
    pub fn unweighted(&self) -> Self {
        Self {
            weights: vec![1.0; self.edges.len()],
            ..self.clone()
        }
    }

    pub fn weighted_degrees(&self) -> Vec<f64> {
        let mut deg = vec![0.0; self.n];
        for (&(i, j), &w) in self.edges.iter().zip(&self.weights) {
            deg[i] += w;
            deg[j] += w;
        }
        deg
    }

    pub fn degree_stats(&self) -> DegreeStats {
        let deg = self.weighted_degrees();
        let min = deg.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = deg.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mean = deg.iter().sum::<f64>() / self.n.max(1) as f64;
        DegreeStats { min, max, mean }
    }

    /// Component label of every node, using only edges with positive weight.
    pub fn components(&self) -> Vec<usize> {
        let mut label = vec![usize::MAX; self.n];
        let mut next = 0;
        let mut queue = VecDeque::new();
        for start in 0..self.n {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = next;
            queue.push_back(start);
            while let Some(u) = queue.pop_front() {
                for &(v, e) in &self.adjacency[u] {
                    if self.weights[e] > 0.0 && label[v] == usize::MAX {
                        label[v] = next;
                        queue.push_back(v);
                    }
                }
            }
            next += 1;
        }
        label
    }

    /// Connectivity over positive-weight edges. The empty graph on one node
    /// counts as connected.
    pub fn is_connected(&self) -> bool {
        self.n == 0 || self.components().iter().all(|&c| c == 0)
    }

    /// Edge indices of a BFS spanning forest of the full edge set, ignoring
    /// weights.
    pub fn spanning_forest(&self) -> Vec<usize> {
        let mut seen = vec![false; self.n];
        let mut tree = Vec::new();
        let mut queue = VecDeque::new();
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            queue.push_back(start);
            while let Some(u) = queue.pop_front() {
                for &(v, e) in &self.adjacency[u] {
                    if !seen[v] {
                        seen[v] = true;
                        tree.push(e);
                        queue.push_back(v);
                    }
                }
            }
        }
        tree.sort_unstable();
        tree
    }
}

/// Per-pair edge probabilities `q_ij` in `[base_p, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingPlan {
    n: usize,
    base_p: f64,
    // upper triangle, row-major over i < j
    q: Vec<f64>,
}

#[inline]
fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

impl SamplingPlan {
    /// Builds a plan from `q(i, j)` evaluated on every pair `i < j`.
    pub fn from_fn(n: usize, base_p: f64, mut q: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&base_p) {
            return Err(Error::InvalidPlan(format!("base probability {base_p} outside [0, 1]")));
        }
        let mut values = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                let v = q(i, j);
                if !(v >= base_p && v <= 1.0) {
                    return Err(Error::InvalidPlan(format!("q({i}, {j}) = {v} outside [{base_p}, 1]")));
                }
                values.push(v);
            }
        }
        Ok(Self { n, base_p, q: values })
    }

    pub fn uniform(n: usize, p: f64) -> Result<Self> {
        Self::from_fn(n, p, |_, _| p)
    }

    /// Plan from a full symmetric matrix; only the upper triangle is read.
    pub fn from_matrix(base_p: f64, matrix: &[Vec<f64>]) -> Result<Self> {
        let n = matrix.len();
        if matrix.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidPlan("probability matrix is not square".into()));
        }
        for i in 0..n {
            for j in i + 1..n {
                if matrix[i][j] != matrix[j][i] {
                    return Err(Error::InvalidPlan(format!("matrix not symmetric at ({i}, {j})")));
                }
            }
        }
        Self::from_fn(n, base_p, |i, j| matrix[i][j])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn base_p(&self) -> f64 {
        self.base_p
    }

    /// True when the plan has no positive base probability, which the
    /// semi-random analysis does not cover (the block model of the first
    /// experiment is such a plan).
    pub fn zero_base_warning(&self) -> bool {
        self.base_p == 0.0
    }

    /// `q_ij` for `i != j`.
    pub fn q(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (i.min(j), i.max(j));
        self.q[pair_index(self.n, a, b)]
    }

    /// Row `i` of the plan with `q_ii = 0`.
    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.n).map(|j| if i == j { 0.0 } else { self.q(i, j) }).collect()
    }
}

/// Stochastic block model with contiguous, equally sized blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum SbmSpec {
    /// Within-block probabilities `q` (ascending), cross-block `p < q_1`.
    Assortative { n: usize, m: usize, p: f64, q: Vec<f64> },
    /// Symmetric `m x m` block probability matrix.
    Generalized { n: usize, matrix: Vec<Vec<f64>> },
}

impl SbmSpec {
    pub fn n(&self) -> usize {
        match self {
            SbmSpec::Assortative { n, .. } | SbmSpec::Generalized { n, .. } => *n,
        }
    }

    pub fn blocks(&self) -> usize {
        match self {
            SbmSpec::Assortative { m, .. } => *m,
            SbmSpec::Generalized { matrix, .. } => matrix.len(),
        }
    }

    /// Block of node `i` (0-based).
    pub fn block_of(&self, i: usize) -> usize {
        i / (self.n() / self.blocks())
    }

    pub fn validate(&self) -> Result<()> {
        let (n, m) = (self.n(), self.blocks());
        if m < 2 {
            return Err(Error::BlockSizeError(format!("need at least 2 blocks, got {m}")));
        }
        if n % m != 0 || n / m < 2 {
            return Err(Error::BlockSizeError(format!(
                "{n} items cannot form {m} blocks of equal size >= 2"
            )));
        }
        let in_unit = |x: f64| (0.0..=1.0).contains(&x);
        match self {
            SbmSpec::Assortative { p, q, .. } => {
                if q.len() != m {
                    return Err(Error::BlockSizeError(format!(
                        "{} within-block probabilities for {m} blocks",
                        q.len()
                    )));
                }
                if !in_unit(*p) || !q.iter().all(|&x| in_unit(x)) {
                    return Err(Error::InvalidPlan("probabilities must lie in [0, 1]".into()));
                }
                if q.windows(2).any(|w| w[0] > w[1]) {
                    return Err(Error::InvalidPlan(
                        "within-block probabilities must be ascending".into(),
                    ));
                }
                if q[0] <= *p {
                    return Err(Error::InvalidPlan("block model is not assortative (q_1 <= p)".into()));
                }
            }
            SbmSpec::Generalized { matrix, .. } => {
                for a in 0..m {
                    if matrix[a].len() != m {
                        return Err(Error::InvalidPlan("block matrix is not square".into()));
                    }
                    for b in 0..m {
                        if !in_unit(matrix[a][b]) || matrix[a][b] != matrix[b][a] {
                            return Err(Error::InvalidPlan(format!("bad block entry ({a}, {b})")));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Probability of the pair of blocks `(a, b)`.
    pub fn block_prob(&self, a: usize, b: usize) -> f64 {
        match self {
            SbmSpec::Assortative { p, q, .. } => {
                if a == b {
                    q[a]
                } else {
                    *p
                }
            }
            SbmSpec::Generalized { matrix, .. } => matrix[a][b],
        }
    }

    /// Equivalent sampling plan. The base probability is the smallest
    /// block entry.
    pub fn plan(&self) -> Result<SamplingPlan> {
        self.validate()?;
        let m = self.blocks();
        let base = (0..m)
            .flat_map(|a| (0..m).map(move |b| (a, b)))
            .map(|(a, b)| self.block_prob(a, b))
            .fold(f64::INFINITY, f64::min);
        SamplingPlan::from_fn(self.n(), base, |i, j| {
            self.block_prob(self.block_of(i), self.block_of(j))
        })
    }

    /// The three-block model of the first experiment: block 1 is complete
    /// and fully joined to block 2, never to block 3, and every other block
    /// pair uses `2 ln(n) / n`.
    pub fn experiment1(n: usize) -> Self {
        let s = (2.0 * (n as f64).ln() / n as f64).min(1.0);
        SbmSpec::Generalized {
            n,
            matrix: vec![vec![1.0, 1.0, 0.0], vec![1.0, s, s], vec![0.0, s, s]],
        }
    }
}

fn sample_with(plan: &SamplingPlan, seed: u64, threshold: impl Fn(usize, usize) -> f64) -> ComparisonGraph {
    let n = plan.n();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng::pair_uniform(seed, i, j) <= threshold(i, j) {
                edges.push((i, j));
            }
        }
    }
    let weights = vec![1.0; edges.len()];
    ComparisonGraph::assemble(n, edges, weights)
}

/// Includes each pair independently with probability `q_ij`.
pub fn gen_semi_random(plan: &SamplingPlan, seed: u64) -> ComparisonGraph {
    sample_with(plan, seed, |i, j| plan.q(i, j))
}

/// Erdős-Rényi graph, the semi-random graph of the uniform plan.
pub fn gen_er(n: usize, p: f64, seed: u64) -> Result<ComparisonGraph> {
    Ok(gen_semi_random(&SamplingPlan::uniform(n, p)?, seed))
}

pub fn gen_sbm(spec: &SbmSpec, seed: u64) -> Result<ComparisonGraph> {
    Ok(gen_semi_random(&spec.plan()?, seed))
}

/// Draws an Erdős-Rényi graph at the plan's base probability and the plan's
/// semi-random graph from the same uniforms; the first is always a subgraph
/// of the second.
pub fn monotone_coupling(plan: &SamplingPlan, seed: u64) -> (ComparisonGraph, ComparisonGraph) {
    let p = plan.base_p();
    let er = sample_with(plan, seed, |_, _| p);
    let sr = gen_semi_random(plan, seed);
    (er, sr)
}

/// Seed for the graph of one experiment trial.
pub(crate) fn graph_seed(trial_seed: u64) -> u64 {
    rng::derive(trial_seed, &[rng::STREAM_GRAPH])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complete_and_empty() {
        let plan = SamplingPlan::uniform(6, 1.0).unwrap();
        assert_eq!(gen_semi_random(&plan, 3), ComparisonGraph::complete(6));
        assert_eq!(gen_er(6, 0.0, 3).unwrap().edge_count(), 0);
        assert_eq!(gen_er(6, 1.0, 3).unwrap(), ComparisonGraph::complete(6));
    }

    #[test]
    fn zero_probability_needs_zero_base() {
        assert!(SamplingPlan::from_fn(4, 0.1, |_, _| 0.0).is_err());
        let plan = SamplingPlan::from_fn(4, 0.0, |_, _| 0.0).unwrap();
        assert!(plan.zero_base_warning());
        assert_eq!(gen_semi_random(&plan, 1).edge_count(), 0);
    }

    #[test]
    fn plan_rejects_out_of_range() {
        assert!(matches!(SamplingPlan::uniform(3, 1.5), Err(Error::InvalidPlan(_))));
        assert!(SamplingPlan::from_fn(3, 0.2, |_, _| 1.01).is_err());
        assert!(SamplingPlan::from_matrix(0.0, &[vec![0.0, 0.1], vec![0.2, 0.0]]).is_err());
    }

    #[test]
    fn degenerate_sbm_matches_er() {
        let spec = SbmSpec::Generalized {
            n: 12,
            matrix: vec![vec![0.3; 3]; 3],
        };
        for seed in 0..20 {
            assert_eq!(gen_sbm(&spec, seed).unwrap(), gen_er(12, 0.3, seed).unwrap());
        }
    }

    #[test]
    fn sbm_block_validation() {
        let bad = SbmSpec::Assortative {
            n: 10,
            m: 3,
            p: 0.1,
            q: vec![0.2, 0.3, 0.4],
        };
        assert!(matches!(bad.validate(), Err(Error::BlockSizeError(_))));
        let tiny = SbmSpec::Assortative {
            n: 3,
            m: 3,
            p: 0.1,
            q: vec![0.2, 0.3, 0.4],
        };
        assert!(matches!(tiny.validate(), Err(Error::BlockSizeError(_))));
        let unsorted = SbmSpec::Assortative {
            n: 6,
            m: 2,
            p: 0.1,
            q: vec![0.5, 0.3],
        };
        assert!(unsorted.validate().is_err());
        let disassortative = SbmSpec::Assortative {
            n: 6,
            m: 2,
            p: 0.4,
            q: vec![0.3, 0.5],
        };
        assert!(disassortative.validate().is_err());
    }

    #[test]
    fn experiment1_fixed_blocks() {
        let spec = SbmSpec::experiment1(30);
        for seed in 0..30 {
            let g = gen_sbm(&spec, seed).unwrap();
            for i in 0..10 {
                for j in 0..20 {
                    if i != j {
                        assert!(g.has_edge(i, j));
                    }
                }
                for j in 20..30 {
                    assert!(!g.has_edge(i, j));
                }
            }
        }
    }

    #[test]
    fn coupling_identical_when_plan_is_uniform() {
        let plan = SamplingPlan::uniform(15, 0.3).unwrap();
        let (er, sr) = monotone_coupling(&plan, 11);
        assert_eq!(er, sr);
        assert_eq!(sr, gen_semi_random(&plan, 11));
    }

    #[test]
    fn degrees_and_connectivity() {
        let k4 = ComparisonGraph::complete(4);
        assert!(k4.is_connected());
        let s = k4.degree_stats();
        assert_eq!((s.min, s.max), (3.0, 3.0));

        let two = ComparisonGraph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        assert!(!two.is_connected());

        let path = ComparisonGraph::from_weighted_edges(3, [(0, 1, 0.5), (1, 2, 0.25)]).unwrap();
        let s = path.degree_stats();
        assert_eq!(s.min, 0.25);
        assert_eq!(s.max, 0.75);
        assert!((s.mean - 0.5).abs() < 1e-15);

        let cut = path.with_weights(vec![0.5, 0.0]).unwrap();
        assert!(!cut.is_connected());
        assert_eq!(cut.edge_count(), 2);
    }

    #[test]
    fn rejects_malformed_edges() {
        assert!(ComparisonGraph::from_edges(3, [(0, 0)]).is_err());
        assert!(ComparisonGraph::from_edges(3, [(0, 3)]).is_err());
        assert!(ComparisonGraph::from_edges(3, [(0, 1), (1, 0)]).is_err());
        assert!(ComparisonGraph::from_weighted_edges(3, [(0, 1, 1.5)]).is_err());
    }

    #[test]
    fn spanning_forest_spans() {
        let g = gen_er(30, 0.2, 5).unwrap();
        let tree = g.spanning_forest();
        let comps = g.components();
        let ncomp = comps.iter().max().unwrap() + 1;
        assert_eq!(tree.len(), 30 - ncomp);
        let mut w = vec![0.0; g.edge_count()];
        for e in tree {
            w[e] = 1.0;
        }
        assert_eq!(g.with_weights(w).unwrap().components(), comps);
    }
}
