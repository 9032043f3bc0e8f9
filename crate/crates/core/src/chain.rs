//! Markov matrices of comparison graphs and their stationary distributions
//! (the rank-centrality estimator).

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::ComparisonGraph;
use crate::io::fmt_sig;
use crate::model::{BtlModel, ComparisonDataset};

/// Power-iteration defaults: l1 residual and iteration cap.
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITERS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Built from the true preference probabilities.
    Canonical,
    /// Built from observed win fractions.
    Empirical,
}

/// Dense row-stochastic transition matrix.
///
/// Row `i` moves to neighbour `j` with probability `p_ij * w_ij / d`, where
/// `p_ij` is the (true or empirical) probability that `j` beats `i` and `d`
/// is the maximum weighted degree; the remainder stays on the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovMatrix {
    matrix: DMatrix<f64>,
    d: f64,
    provenance: Provenance,
}

impl MarkovMatrix {
    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// The normalizer used in construction.
    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    /// Row-major dump: a `n,d` header line, the values, then one line per row.
    pub fn to_csv(&self) -> String {
        let n = self.n();
        let mut out = format!("n,d\n{},{}\n", n, fmt_sig(self.d));
        for i in 0..n {
            let row: Vec<String> = (0..n).map(|j| fmt_sig(self.matrix[(i, j)])).collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }

    /// Whether the symmetric support of the off-diagonal entries is connected.
    pub fn support_connected(&self) -> bool {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for v in 0..n {
                if !seen[v] && v != u && (self.matrix[(u, v)] > 0.0 || self.matrix[(v, u)] > 0.0) {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == n
    }

    /// `v^T S` for a row vector `v`.
    pub fn left_mul(&self, v: &DVector<f64>) -> DVector<f64> {
        self.matrix.tr_mul(v)
    }
}

fn build(graph: &ComparisonGraph, provenance: Provenance, prob: impl Fn(usize) -> f64) -> Result<MarkovMatrix> {
    let n = graph.n();
    let d = graph.degree_stats().max;
    if graph.edge_count() == 0 || !(d > 0.0) {
        return Err(Error::EmptyGraph);
    }
    let mut matrix = DMatrix::zeros(n, n);
    for (e, (&(i, j), &w)) in graph.edges().iter().zip(graph.weights()).enumerate() {
        let p = prob(e);
        matrix[(i, j)] = p * w / d;
        matrix[(j, i)] = (1.0 - p) * w / d;
    }
    for i in 0..n {
        let off: f64 = graph.neighbors(i).iter().map(|&(j, _)| matrix[(i, j)]).sum();
        // clamp: off <= deg_i / d <= 1 up to rounding
        matrix[(i, i)] = (1.0 - off).max(0.0);
    }
    Ok(MarkovMatrix { matrix, d, provenance })
}

/// Markov matrix of the true preference probabilities on `graph` (weights
/// included).
pub fn build_canonical_markov(graph: &ComparisonGraph, model: &BtlModel) -> Result<MarkovMatrix> {
    if graph.n() != model.n() {
        return Err(Error::SizeMismatch {
            expected: model.n(),
            actual: graph.n(),
        });
    }
    let edges = graph.edges();
    build(graph, Provenance::Canonical, |e| {
        let (i, j) = edges[e];
        model.p(i, j)
    })
}

/// Markov matrix of the observed win fractions on `graph` (weights included).
pub fn build_empirical_markov(graph: &ComparisonGraph, dataset: &ComparisonDataset) -> Result<MarkovMatrix> {
    if dataset.n != graph.n() || dataset.edges != graph.edges() {
        return Err(Error::EdgeSetMismatch);
    }
    dataset.validate()?;
    build(graph, Provenance::Empirical, |e| dataset.p_hat(e))
}

/// Stationary distribution by power iteration from the uniform vector,
/// stopping once `||v^T S - v^T||_1 <= tol`.
pub fn stationary_distribution(s: &MarkovMatrix, tol: f64, max_iters: usize) -> Result<Vec<f64>> {
    if !(tol > 0.0) {
        return Err(Error::Config(format!("tolerance must be positive, got {tol}")));
    }
    if !s.support_connected() {
        return Err(Error::NotConnected);
    }
    let n = s.n();
    let mut v = DVector::from_element(n, 1.0 / n as f64);
    for _ in 0..max_iters {
        let mut next = s.left_mul(&v);
        let residual: f64 = next.iter().zip(v.iter()).map(|(a, b)| (a - b).abs()).sum();
        let total = next.sum();
        next /= total;
        v = next;
        if residual <= tol {
            return Ok(v.iter().copied().collect());
        }
    }
    Err(Error::NoConvergence(max_iters))
}

/// Stationary distribution from the dense linear system
/// `v^T (S - I) = 0`, `sum(v) = 1`.
pub fn stationary_exact(s: &MarkovMatrix) -> Result<Vec<f64>> {
    let n = s.n();
    if n > 512 {
        return Err(Error::Config(format!("dense solve limited to n <= 512, got {n}")));
    }
    let mut a = s.matrix.transpose();
    for i in 0..n {
        a[(i, i)] -= 1.0;
    }
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;
    let lu = a.lu();
    let v = lu.solve(&rhs).ok_or(Error::SingularSystem)?;
    // A reducible chain leaves the system numerically singular; reject
    // solutions that are not probability vectors or do not balance.
    let residual = (s.left_mul(&v) - &v).amax();
    if !v.iter().all(|x| x.is_finite() && *x >= -1e-9) || residual > 1e-8 {
        return Err(Error::SingularSystem);
    }
    Ok(v.iter().map(|x| x.max(0.0)).collect())
}

/// Items sorted by descending score, ties broken by ascending index.
pub fn ranking(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

/// Rank centrality: the stationary distribution of the empirical Markov
/// matrix of `graph` (its weights included) and the induced ranking.
pub fn rank_centrality(graph: &ComparisonGraph, dataset: &ComparisonDataset) -> Result<(Vec<f64>, Vec<usize>)> {
    if !graph.is_connected() {
        return Err(Error::NotConnected);
    }
    let s = build_empirical_markov(graph, dataset)?;
    let pi_hat = stationary_distribution(&s, DEFAULT_TOL, DEFAULT_MAX_ITERS)?;
    let order = ranking(&pi_hat);
    Ok((pi_hat, order))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    fn rows(s: &MarkovMatrix) -> Vec<Vec<f64>> {
        (0..s.n()).map(|i| (0..s.n()).map(|j| s.get(i, j)).collect()).collect()
    }

    #[test]
    fn k3_uniform() {
        let s = build_canonical_markov(&ComparisonGraph::complete(3), &BtlModel::uniform(3).unwrap()).unwrap();
        assert_eq!(s.d(), 2.0);
        let expect = [[0.5, 0.25, 0.25], [0.25, 0.5, 0.25], [0.25, 0.25, 0.5]];
        for (r, e) in rows(&s).iter().zip(expect) {
            assert_close(r, &e, 1e-15);
        }
        assert_close(
            &stationary_distribution(&s, 1e-12, 1000).unwrap(),
            &[1.0 / 3.0; 3],
            1e-12,
        );
        assert_close(&stationary_exact(&s).unwrap(), &[1.0 / 3.0; 3], 1e-12);
    }

    #[test]
    fn single_edge() {
        let g = ComparisonGraph::complete(2);
        let s = build_canonical_markov(&g, &BtlModel::new(vec![1.0, 3.0]).unwrap()).unwrap();
        assert_eq!(s.d(), 1.0);
        assert_close(&rows(&s)[0], &[0.25, 0.75], 1e-15);
        assert_close(&rows(&s)[1], &[0.25, 0.75], 1e-15);
    }

    #[test]
    fn weighted_triangle() {
        let g = ComparisonGraph::from_weighted_edges(3, [(0, 1, 1.0), (0, 2, 0.5), (1, 2, 0.5)]).unwrap();
        let s = build_canonical_markov(&g, &BtlModel::uniform(3).unwrap()).unwrap();
        assert_eq!(s.d(), 1.5);
        // 0.5 * 1 / 1.5, 0.5 * 0.5 / 1.5; diagonal takes the rest
        assert!((s.get(0, 1) - 1.0 / 3.0).abs() < 1e-15);
        assert!((s.get(0, 2) - 1.0 / 6.0).abs() < 1e-15);
        assert!((s.get(0, 0) - 0.5).abs() < 1e-15);
        assert!((s.get(2, 2) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn stationary_equals_pi() {
        let m = BtlModel::new(vec![1.0, 2.0, 3.0]).unwrap();
        let s = build_canonical_markov(&ComparisonGraph::complete(3), &m).unwrap();
        let v = stationary_distribution(&s, DEFAULT_TOL, DEFAULT_MAX_ITERS).unwrap();
        assert_close(&v, &[1.0 / 6.0, 1.0 / 3.0, 0.5], 1e-9);

        let m = BtlModel::new(vec![1.0, 2.0]).unwrap();
        let s = build_canonical_markov(&ComparisonGraph::complete(2), &m).unwrap();
        let v = stationary_distribution(&s, DEFAULT_TOL, DEFAULT_MAX_ITERS).unwrap();
        assert_close(&v, &[1.0 / 3.0, 2.0 / 3.0], 1e-9);
    }

    #[test]
    fn relabeling_permutes_stationary() {
        let alpha = vec![1.0, 2.0, 5.0, 3.0];
        let edges = [(0, 1), (1, 2), (2, 3), (0, 3), (1, 3)];
        let perm = [2, 0, 3, 1];
        let g = ComparisonGraph::from_edges(4, edges).unwrap();
        let gp = ComparisonGraph::from_edges(4, edges.iter().map(|&(i, j)| (perm[i], perm[j]))).unwrap();
        let mut alpha_p = vec![0.0; 4];
        for i in 0..4 {
            alpha_p[perm[i]] = alpha[i];
        }
        let v = stationary_exact(&build_canonical_markov(&g, &BtlModel::new(alpha).unwrap()).unwrap()).unwrap();
        let vp = stationary_exact(&build_canonical_markov(&gp, &BtlModel::new(alpha_p).unwrap()).unwrap()).unwrap();
        for i in 0..4 {
            assert!((v[i] - vp[perm[i]]).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_dataset_matches_canonical() {
        let m = BtlModel::new(vec![1.0, 3.0, 1.0, 3.0]).unwrap();
        let g = ComparisonGraph::complete(4);
        // k * p_ij is integral for p in {1/4, 1/2, 3/4}
        let data = m.expected_comparisons(&g, 8).unwrap();
        let a = build_canonical_markov(&g, &m).unwrap();
        let b = build_empirical_markov(&g, &data).unwrap();
        assert!((a.matrix() - b.matrix()).amax() <= 1e-15);
        let (pi_hat, order) = rank_centrality(&g, &data).unwrap();
        assert_close(&pi_hat, m.pi(), 1e-9);
        assert_eq!(order, vec![1, 3, 0, 2]);
    }

    #[test]
    fn all_losses_stay_stochastic() {
        let g = ComparisonGraph::complete(4);
        let data = ComparisonDataset {
            n: 4,
            k: 5,
            edges: g.edges().to_vec(),
            wins: vec![0; 6],
            seed: 0,
        };
        let s = build_empirical_markov(&g, &data).unwrap();
        for i in 0..4 {
            let row: f64 = (0..4).map(|j| s.get(i, j)).sum();
            assert!((row - 1.0).abs() < 1e-12);
            for j in i + 1..4 {
                assert_eq!(s.get(i, j), 0.0);
            }
        }
        // item 0 never loses, so all mass ends there
        let (pi_hat, order) = rank_centrality(&g, &data).unwrap();
        assert_close(&pi_hat, &[1.0, 0.0, 0.0, 0.0], 1e-9);
        assert_eq!(order[0], 0);
    }

    #[test]
    fn winner_takes_all_on_two_items() {
        let g = ComparisonGraph::complete(2);
        let data = ComparisonDataset {
            n: 2,
            k: 10,
            edges: vec![(0, 1)],
            wins: vec![10],
            seed: 0,
        };
        let (pi_hat, order) = rank_centrality(&g, &data).unwrap();
        assert_close(&pi_hat, &[0.0, 1.0], 1e-12);
        assert_eq!(order, vec![1, 0]);
    }

    #[test]
    fn errors() {
        let g = ComparisonGraph::empty(3);
        assert_eq!(
            build_canonical_markov(&g, &BtlModel::uniform(3).unwrap()),
            Err(Error::EmptyGraph)
        );
        let g = ComparisonGraph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        let m = BtlModel::uniform(4).unwrap();
        let s = build_canonical_markov(&g, &m).unwrap();
        assert_eq!(stationary_distribution(&s, 1e-10, 100), Err(Error::NotConnected));
        assert_eq!(stationary_exact(&s), Err(Error::SingularSystem));
        let data = m.expected_comparisons(&g, 2).unwrap();
        assert_eq!(rank_centrality(&g, &data), Err(Error::NotConnected));
        let other = m.expected_comparisons(&ComparisonGraph::complete(4), 2).unwrap();
        assert_eq!(build_empirical_markov(&g, &other), Err(Error::EdgeSetMismatch));
    }

    #[test]
    fn no_convergence_reported() {
        let g = gen_path(30);
        let m = BtlModel::new((1..=30).map(f64::from).collect()).unwrap();
        let s = build_canonical_markov(&g, &m).unwrap();
        assert_eq!(stationary_distribution(&s, 1e-14, 3), Err(Error::NoConvergence(3)));
    }

    fn gen_path(n: usize) -> ComparisonGraph {
        ComparisonGraph::from_edges(n, (0..n - 1).map(|i| (i, i + 1))).unwrap()
    }

    #[test]
    fn ranking_ties_by_index() {
        assert_eq!(ranking(&[0.2, 0.5, 0.2, 0.1]), vec![1, 0, 2, 3]);
    }

    #[test]
    fn csv_dump_header() {
        let s = build_canonical_markov(&ComparisonGraph::complete(2), &BtlModel::uniform(2).unwrap()).unwrap();
        let csv = s.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("n,d"));
        assert!(lines.next().unwrap().starts_with("2,1.0000000000"));
        assert_eq!(lines.count(), 2);
    }
}
