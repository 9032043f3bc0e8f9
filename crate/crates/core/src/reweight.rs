//! Edge reweighting that raises the Fiedler value of the weighted Laplacian.
//!
//! The optimization problem is
//!
//! ```text
//! maximize    lambda_{n-1}(L^W)
//! subject to  0 <= w_ij <= 1 on observed edges, w_ij = 0 elsewhere,
//!             floor <= sum_j w_ij <= cap for every node.
//! ```
//!
//! It is attacked with matrix multiplicative weights: a density matrix
//! `Y_t ~ P exp(-eta / rho * sum_{s<t} L^{W_s}) P` (with `P` the projector
//! onto the complement of the all-ones vector and `rho = 2 cap` the width)
//! weights each edge by its gain `<Y_t, (e_i - e_j)(e_i - e_j)^T>`, and a
//! greedy oracle allocates degree capacity to the edges with the largest
//! gains. The running average of the oracle outputs is feasible; the best
//! average seen is then saturated (the Fiedler value is monotone in the
//! weights), repaired to meet the degree floor, and compared against the
//! uniformly scaled all-ones weighting.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::chain::{build_empirical_markov, rank_centrality};
use crate::error::{Error, Result};
use crate::graph::ComparisonGraph;
use crate::model::ComparisonDataset;
use crate::spectra::{fiedler_value, markov_spectral_gap, normalized_laplacian_gap, rw_spectral_gap, SpectralReport};

/// Lower bound put on spanning-tree weights when an optimized weighting
/// would leave the graph disconnected.
pub const TREE_FLOOR_WEIGHT: f64 = 1e-6;

const DEFAULT_ITERATIONS: usize = 200;
const CHECK_EVERY: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Oracle {
    /// Greedy degree-capacity allocation in decreasing gain order.
    #[default]
    Greedy,
}

/// Optimizer settings. `None` fields are resolved per graph, see
/// [`ReweightConfig::resolve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReweightConfig {
    pub degree_cap: Option<f64>,
    pub degree_floor: f64,
    pub iterations: usize,
    pub step_size: Option<f64>,
    pub oracle: Oracle,
}

impl Default for ReweightConfig {
    fn default() -> Self {
        Self {
            degree_cap: None,
            degree_floor: 1.0,
            iterations: DEFAULT_ITERATIONS,
            step_size: None,
            oracle: Oracle::Greedy,
        }
    }
}

/// Settings with every default filled in for a specific graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResolvedReweight {
    pub degree_cap: f64,
    pub degree_floor: f64,
    pub iterations: usize,
    pub step_size: f64,
}

/// Default degree cap `2 * n * p_eff`, with `p_eff` the lower-quartile
/// unweighted degree divided by `n`.
///
/// The lower quartile tracks the degree an Erdős-Rényi graph at the base
/// probability would have; the mean is pulled up by whatever dense region
/// the sampling plan over-represents, and a cap above the maximum degree
/// would leave the all-ones weighting optimal.
pub fn default_degree_cap(graph: &ComparisonGraph) -> f64 {
    let mut deg: Vec<usize> = (0..graph.n()).map(|i| graph.neighbors(i).len()).collect();
    deg.sort_unstable();
    let q = deg.get((deg.len().saturating_sub(1)) / 4).copied().unwrap_or(0);
    2.0 * q as f64
}

impl ReweightConfig {
    pub fn resolve(&self, graph: &ComparisonGraph) -> Result<ResolvedReweight> {
        let iterations = self.iterations;
        if iterations == 0 {
            return Err(Error::Config("reweighting needs at least one iteration".into()));
        }
        let degree_cap = self
            .degree_cap
            .unwrap_or_else(|| default_degree_cap(graph).max(self.degree_floor + 1.0));
        let step_size = self.step_size.unwrap_or(0.5 / (iterations as f64).sqrt());
        if !(self.degree_floor >= 1.0) || !(degree_cap > self.degree_floor) {
            return Err(Error::Config(format!(
                "need 1 <= degree_floor < degree_cap, got floor {} and cap {degree_cap}",
                self.degree_floor
            )));
        }
        if !(step_size > 0.0 && step_size.is_finite()) {
            return Err(Error::Config(format!("step size must be positive, got {step_size}")));
        }
        Ok(ResolvedReweight {
            degree_cap,
            degree_floor: self.degree_floor,
            iterations,
            step_size,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReweightResult {
    /// One weight per edge of the input graph, in its edge order.
    pub weights: Vec<f64>,
    pub achieved_fiedler: f64,
    pub iterations_used: usize,
    /// Whether every weighted degree lies in `[degree_floor, degree_cap]`.
    pub feasible: bool,
    pub settings: ResolvedReweight,
}

struct Capacities {
    cap: f64,
    degree: Vec<f64>,
}

impl Capacities {
    fn new(n: usize, cap: f64) -> Self {
        Self {
            cap,
            degree: vec![0.0; n],
        }
    }

    fn of(graph: &ComparisonGraph, weights: &[f64], cap: f64) -> Self {
        let mut c = Self::new(graph.n(), cap);
        for (&(i, j), &w) in graph.edges().iter().zip(weights) {
            c.degree[i] += w;
            c.degree[j] += w;
        }
        c
    }

    fn slack(&self, i: usize) -> f64 {
        (self.cap - self.degree[i]).max(0.0)
    }

    /// Largest increase of an edge currently at `w` that respects the box
    /// and both caps.
    fn room(&self, i: usize, j: usize, w: f64) -> f64 {
        (1.0 - w).min(self.slack(i)).min(self.slack(j)).max(0.0)
    }

    fn add(&mut self, i: usize, j: usize, dw: f64) {
        self.degree[i] += dw;
        self.degree[j] += dw;
    }
}

/// Edge order by descending gain, ties toward the lexicographically
/// smallest edge (edges are stored in lexicographic order).
fn gain_order(gains: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..gains.len()).collect();
    order.sort_by(|&a, &b| gains[b].total_cmp(&gains[a]).then(a.cmp(&b)));
    order
}

fn greedy_oracle(graph: &ComparisonGraph, order: &[usize], cap: f64) -> Vec<f64> {
    let edges = graph.edges();
    let mut caps = Capacities::new(graph.n(), cap);
    let mut w = vec![0.0; edges.len()];
    for &e in order {
        let (i, j) = edges[e];
        let dw = caps.room(i, j, 0.0);
        w[e] = dw;
        caps.add(i, j, dw);
    }
    w
}

/// Raises weights along `order` until no edge can grow without breaking a
/// cap or the unit box.
fn saturate(graph: &ComparisonGraph, weights: &mut [f64], order: &[usize], cap: f64) {
    let edges = graph.edges();
    let mut caps = Capacities::of(graph, weights, cap);
    for &e in order {
        let (i, j) = edges[e];
        let dw = caps.room(i, j, weights[e]);
        if dw > 0.0 {
            weights[e] += dw;
            caps.add(i, j, dw);
        }
    }
}

/// Raises weights at nodes below the floor, taking capacity only where the
/// cap allows.
fn repair_floor(graph: &ComparisonGraph, weights: &mut [f64], order: &[usize], cap: f64, floor: f64) {
    let mut rank = vec![0; order.len()];
    for (r, &e) in order.iter().enumerate() {
        rank[e] = r;
    }
    let mut caps = Capacities::of(graph, weights, cap);
    for i in 0..graph.n() {
        if caps.degree[i] >= floor {
            continue;
        }
        let mut incident: Vec<(usize, usize)> = graph.neighbors(i).to_vec();
        incident.sort_by_key(|&(_, e)| rank[e]);
        for (j, e) in incident {
            let deficit = floor - caps.degree[i];
            if deficit <= 0.0 {
                break;
            }
            let dw = caps.room(i, j, weights[e]).min(deficit);
            weights[e] += dw;
            caps.add(i, j, dw);
        }
    }
}

/// Removes rounding excess so that every degree is at most `cap` and every
/// weight lies in `[0, 1]` when recomputed from scratch.
fn enforce_cap_exactly(graph: &ComparisonGraph, weights: &mut [f64], cap: f64) {
    for w in weights.iter_mut() {
        *w = w.clamp(0.0, 1.0);
    }
    for _ in 0..8 {
        let degree = Capacities::of(graph, weights, cap).degree;
        let mut clean = true;
        for (i, &d) in degree.iter().enumerate() {
            if d > cap {
                clean = false;
                let excess = d - cap;
                if let Some(&(_, e)) = graph
                    .neighbors(i)
                    .iter()
                    .max_by(|a, b| weights[a.1].total_cmp(&weights[b.1]).then(b.1.cmp(&a.1)))
                {
                    // rounding-level excess; double it so the recomputed sum lands below
                    weights[e] = (weights[e] - 2.0 * excess).max(0.0);
                }
            }
        }
        if clean {
            return;
        }
    }
}

fn edge_gains(graph: &ComparisonGraph, accumulated: &DMatrix<f64>, scale: f64) -> Vec<f64> {
    let eig = SymmetricEigen::new(accumulated.clone());
    let shift = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let root: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&mu| (-0.5 * scale * (mu - shift)).exp())
        .collect();
    let u = &eig.eigenvectors;
    let n = graph.n();
    // gain_ij = ||V_i - V_j||^2 with V = U diag(exp(-scale mu / 2)). The
    // all-ones direction contributes equally to every row and cancels.
    graph
        .edges()
        .iter()
        .map(|&(i, j)| (0..n).map(|k| (root[k] * (u[(i, k)] - u[(j, k)])).powi(2)).sum())
        .collect()
}

fn add_laplacian(acc: &mut DMatrix<f64>, graph: &ComparisonGraph, weights: &[f64]) {
    for (&(i, j), &w) in graph.edges().iter().zip(weights) {
        acc[(i, i)] += w;
        acc[(j, j)] += w;
        acc[(i, j)] -= w;
        acc[(j, i)] -= w;
    }
}

fn fiedler_of(graph: &ComparisonGraph, weights: &[f64]) -> f64 {
    fiedler_value(&graph.with_weights(weights.to_vec()).expect("weights stay in [0, 1]"))
}

/// Maximizes the weighted Fiedler value of `graph` under the box and
/// degree constraints of `config`. Deterministic.
pub fn mmwu_reweight(graph: &ComparisonGraph, config: &ReweightConfig) -> Result<ReweightResult> {
    if graph.n() < 2 || !graph.unweighted().is_connected() {
        return Err(Error::NotConnected);
    }
    let settings = config.resolve(graph)?;
    let ResolvedReweight {
        degree_cap: cap,
        degree_floor: floor,
        iterations,
        step_size,
    } = settings;
    if let Some(i) = (0..graph.n()).find(|&i| (graph.neighbors(i).len() as f64) < floor) {
        return Err(Error::Infeasible(format!(
            "node {i} has {} edges, below the degree floor {floor}",
            graph.neighbors(i).len()
        )));
    }

    let m = graph.edge_count();
    let scale = step_size / (2.0 * cap);
    let mut accumulated = DMatrix::zeros(graph.n(), graph.n());
    let mut total = vec![0.0; m];
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut order = Vec::new();
    for t in 1..=iterations {
        let gains = edge_gains(graph, &accumulated, scale);
        order = gain_order(&gains);
        let w = greedy_oracle(graph, &order, cap);
        add_laplacian(&mut accumulated, graph, &w);
        for (acc, x) in total.iter_mut().zip(&w) {
            *acc += x;
        }
        if t % CHECK_EVERY == 0 || t == iterations {
            let average: Vec<f64> = total.iter().map(|x| x / t as f64).collect();
            let value = fiedler_of(graph, &average);
            if best.as_ref().is_none_or(|(v, _)| value > *v) {
                best = Some((value, average));
            }
        }
    }
    let (_, averaged) = best.expect("at least one checkpoint");

    let d_max = graph.unweighted().degree_stats().max;
    let uniform = vec![(cap / d_max).min(1.0); m];
    let trivial_value = fiedler_of(graph, &uniform);

    let mut candidates = Vec::new();
    for start in [averaged, uniform.clone()] {
        let mut w = start;
        saturate(graph, &mut w, &order, cap);
        repair_floor(graph, &mut w, &order, cap, floor);
        enforce_cap_exactly(graph, &mut w, cap);
        let value = fiedler_of(graph, &w);
        candidates.push((value, w));
    }
    let mut uniform = uniform;
    enforce_cap_exactly(graph, &mut uniform, cap);
    candidates.push((trivial_value, uniform));

    let is_feasible = |w: &[f64]| {
        let deg = Capacities::of(graph, w, cap).degree;
        deg.iter().all(|&d| d >= floor && d <= cap) && w.iter().all(|x| (0.0..=1.0).contains(x))
    };
    // prefer feasible weightings, then the larger Fiedler value, then the earlier candidate
    let (achieved_fiedler, weights) = candidates
        .into_iter()
        .enumerate()
        .max_by(|(ia, (va, wa)), (ib, (vb, wb))| {
            is_feasible(wa)
                .cmp(&is_feasible(wb))
                .then(va.total_cmp(vb))
                .then(ib.cmp(ia))
        })
        .map(|(_, c)| c)
        .expect("non-empty candidates");
    let feasible = is_feasible(&weights);
    Ok(ReweightResult {
        weights,
        achieved_fiedler,
        iterations_used: iterations,
        feasible,
        settings,
    })
}

/// Replaces the weights of `graph` by `weights`, given as `(i, j, w)`
/// triples on existing edges. Edges not listed get weight 0 and stay in the
/// edge set.
pub fn apply_weights(graph: &ComparisonGraph, weights: &[(usize, usize, f64)]) -> Result<ComparisonGraph> {
    let mut w = vec![0.0; graph.edge_count()];
    for &(i, j, x) in weights {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::WeightOutOfRange { i, j, weight: x });
        }
        let e = graph.edge_index(i, j).ok_or(Error::UnknownEdge(i, j))?;
        w[e] = x;
    }
    graph.with_weights(w)
}

/// Result of the weighted spectral method.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedEstimate {
    pub pi_hat: Vec<f64>,
    pub ranking: Vec<usize>,
    /// Diagnostics of the weighted graph; `markov_gap` is the gap of the
    /// weighted empirical Markov matrix.
    pub report: SpectralReport,
    pub reweight: ReweightResult,
    /// The weighted graph the estimate was computed on.
    pub weighted_graph: ComparisonGraph,
}

/// Weighted graph used for estimation: the optimized weights, with
/// spanning-tree edges lifted to [`TREE_FLOOR_WEIGHT`] if zero weights
/// disconnect it.
pub fn estimation_graph(graph: &ComparisonGraph, result: &ReweightResult) -> Result<ComparisonGraph> {
    let mut w = result.weights.clone();
    let weighted = graph.with_weights(w.clone())?;
    if weighted.is_connected() {
        return Ok(weighted);
    }
    for e in graph.spanning_forest() {
        w[e] = w[e].max(TREE_FLOOR_WEIGHT);
    }
    graph.with_weights(w)
}

/// Reweights `graph`, then runs rank centrality on the weighted empirical
/// Markov matrix.
pub fn weighted_rank_centrality(
    graph: &ComparisonGraph,
    dataset: &ComparisonDataset,
    config: &ReweightConfig,
) -> Result<WeightedEstimate> {
    if !graph.unweighted().is_connected() {
        return Err(Error::NotConnected);
    }
    let reweight = mmwu_reweight(&graph.unweighted(), config)?;
    let weighted_graph = estimation_graph(graph, &reweight)?;
    let (pi_hat, ranking) = rank_centrality(&weighted_graph, dataset)?;
    let s_hat = build_empirical_markov(&weighted_graph, dataset)?;
    let report = SpectralReport {
        n: graph.n(),
        seed: dataset.seed,
        markov_gap: markov_spectral_gap(&s_hat, None)?,
        fiedler: fiedler_value(&weighted_graph),
        normalized_gap: normalized_laplacian_gap(&weighted_graph)?,
        rw_gap: rw_spectral_gap(&weighted_graph)?,
        pi_fiedler: None,
    };
    Ok(WeightedEstimate {
        pi_hat,
        ranking,
        report,
        reweight,
        weighted_graph,
    })
}
