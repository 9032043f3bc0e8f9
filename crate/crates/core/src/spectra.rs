//! Spectral diagnostics.
//!
//! Markov eigenvalues are ordered by modulus, descending, so `lambda_2` is
//! the second-largest modulus (real or complex). Laplacian eigenvalues are
//! ordered algebraically, ascending, so the Fiedler value is the second
//! smallest.

use nalgebra::{DMatrix, Schur, SymmetricEigen};
use serde::Serialize;

use crate::chain::{build_canonical_markov, MarkovMatrix, Provenance};
use crate::error::{Error, Result};
use crate::graph::ComparisonGraph;
use crate::io::fmt_sig;
use crate::model::BtlModel;

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut values: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

fn gap_from_moduli(mut moduli: Vec<f64>) -> f64 {
    moduli.sort_by(|a, b| b.total_cmp(a));
    (1.0 - moduli.get(1).copied().unwrap_or(0.0)).max(0.0)
}

/// `1 - |lambda_2(S)|`.
///
/// With a model and a canonical `S` the chain is reversible with respect to
/// `pi`, and the gap comes from the symmetric matrix
/// `D_pi^{1/2} S D_pi^{-1/2}`. Otherwise a dense nonsymmetric eigensolve is
/// used.
pub fn markov_spectral_gap(s: &MarkovMatrix, model: Option<&BtlModel>) -> Result<f64> {
    let n = s.n();
    match model {
        Some(model) if s.provenance() == Provenance::Canonical => {
            if model.n() != n {
                return Err(Error::SizeMismatch {
                    expected: n,
                    actual: model.n(),
                });
            }
            let root: Vec<f64> = model.pi().iter().map(|p| p.sqrt()).collect();
            let mut b = DMatrix::from_fn(n, n, |i, j| root[i] * s.get(i, j) / root[j]);
            symmetrize(&mut b);
            let values = symmetric_eigenvalues(b);
            Ok(gap_from_moduli(values.iter().map(|v| v.abs()).collect()))
        }
        _ => {
            let schur = Schur::try_new(s.matrix().clone(), 1e-14, 100_000)
                .ok_or_else(|| Error::EigensolveFailure("Schur iteration did not converge".into()))?;
            let moduli = schur.complex_eigenvalues().iter().map(|z| z.norm()).collect();
            Ok(gap_from_moduli(moduli))
        }
    }
}

/// Weighted Laplacian `sum_{i<j} w_ij (e_i - e_j)(e_i - e_j)^T`.
pub fn laplacian(graph: &ComparisonGraph) -> DMatrix<f64> {
    edge_laplacian(graph, |_, _, w| w)
}

fn edge_laplacian(graph: &ComparisonGraph, coef: impl Fn(usize, usize, f64) -> f64) -> DMatrix<f64> {
    let n = graph.n();
    let mut l = DMatrix::zeros(n, n);
    for (&(i, j), &w) in graph.edges().iter().zip(graph.weights()) {
        let c = coef(i, j, w);
        l[(i, i)] += c;
        l[(j, j)] += c;
        l[(i, j)] -= c;
        l[(j, i)] -= c;
    }
    l
}

fn second_smallest(graph: &ComparisonGraph, l: DMatrix<f64>) -> f64 {
    if !graph.is_connected() {
        return 0.0;
    }
    symmetric_eigenvalues(l)[1].max(0.0)
}

/// Algebraic connectivity `lambda_{n-1}(L^W)`; exactly 0 when the
/// positive-weight graph is disconnected.
pub fn fiedler_value(graph: &ComparisonGraph) -> f64 {
    assert!(graph.n() >= 2, "Fiedler value needs at least two nodes");
    second_smallest(graph, laplacian(graph))
}

fn normalized_adjacency(graph: &ComparisonGraph) -> Result<DMatrix<f64>> {
    let deg = graph.weighted_degrees();
    if let Some(i) = deg.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::IsolatedVertex(i));
    }
    let inv_root: Vec<f64> = deg.iter().map(|d| 1.0 / d.sqrt()).collect();
    let n = graph.n();
    let mut a = DMatrix::zeros(n, n);
    for (&(i, j), &w) in graph.edges().iter().zip(graph.weights()) {
        let v = w * inv_root[i] * inv_root[j];
        a[(i, j)] = v;
        a[(j, i)] = v;
    }
    Ok(a)
}

/// All eigenvalues of `I - D^{-1/2} A D^{-1/2}`, ascending.
pub fn normalized_laplacian_spectrum(graph: &ComparisonGraph) -> Result<Vec<f64>> {
    let a = normalized_adjacency(graph)?;
    let n = graph.n();
    Ok(symmetric_eigenvalues(DMatrix::identity(n, n) - a))
}

/// Second-smallest eigenvalue of the symmetric normalized Laplacian.
pub fn normalized_laplacian_gap(graph: &ComparisonGraph) -> Result<f64> {
    Ok(normalized_laplacian_spectrum(graph)?[1].max(0.0))
}

/// `1 - |lambda_2(D^{-1} A)|` of the simple random walk, computed on the
/// similar matrix `D^{-1/2} A D^{-1/2}`.
pub fn rw_spectral_gap(graph: &ComparisonGraph) -> Result<f64> {
    if !graph.is_connected() {
        return Err(Error::NotConnected);
    }
    let a = normalized_adjacency(graph)?;
    let values = symmetric_eigenvalues(a);
    Ok(gap_from_moduli(values.iter().map(|v| v.abs()).collect()))
}

/// Laplacian with edge coefficients `pi_i pi_j / (pi_i + pi_j) * w_ij`.
pub fn pi_weighted_laplacian(graph: &ComparisonGraph, model: &BtlModel) -> Result<DMatrix<f64>> {
    if graph.n() != model.n() {
        return Err(Error::SizeMismatch {
            expected: model.n(),
            actual: graph.n(),
        });
    }
    let pi = model.pi();
    Ok(edge_laplacian(graph, |i, j, w| pi[i] * pi[j] / (pi[i] + pi[j]) * w))
}

pub fn pi_weighted_fiedler(graph: &ComparisonGraph, model: &BtlModel) -> Result<f64> {
    assert!(graph.n() >= 2, "Fiedler value needs at least two nodes");
    Ok(second_smallest(graph, pi_weighted_laplacian(graph, model)?))
}

/// One row of spectral diagnostics for a weighted graph.
///
/// `markov_gap` and `rw_gap` follow the modulus ordering; `fiedler`,
/// `normalized_gap` and `pi_fiedler` are second-smallest Laplacian
/// eigenvalues.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralReport {
    pub n: usize,
    pub seed: u64,
    pub markov_gap: f64,
    pub fiedler: f64,
    pub normalized_gap: f64,
    pub rw_gap: f64,
    pub pi_fiedler: Option<f64>,
}

impl SpectralReport {
    pub const CSV_HEADER: &'static str = "n,seed,markov_gap,fiedler,normalized_gap,rw_gap,pi_fiedler";

    /// Report for `graph`. With a model, `markov_gap` is the gap of the
    /// canonical chain and `pi_fiedler` is filled in; without one, the
    /// canonical chain of uniform scores is used.
    pub fn for_graph(graph: &ComparisonGraph, model: Option<&BtlModel>, seed: u64) -> Result<Self> {
        let uniform;
        let chain_model = match model {
            Some(m) => m,
            None => {
                uniform = BtlModel::uniform(graph.n())?;
                &uniform
            }
        };
        let s = build_canonical_markov(graph, chain_model)?;
        Ok(Self {
            n: graph.n(),
            seed,
            markov_gap: markov_spectral_gap(&s, Some(chain_model))?,
            fiedler: fiedler_value(graph),
            normalized_gap: normalized_laplacian_gap(graph)?,
            rw_gap: rw_spectral_gap(graph)?,
            pi_fiedler: model.map(|m| pi_weighted_fiedler(graph, m)).transpose()?,
        })
    }

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.n,
            self.seed,
            fmt_sig(self.markov_gap),
            fmt_sig(self.fiedler),
            fmt_sig(self.normalized_gap),
            fmt_sig(self.rw_gap),
            self.pi_fiedler.map(fmt_sig).unwrap_or_default()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::build_canonical_markov;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn markov_gap_small_cases() {
        let k2 = ComparisonGraph::complete(2);
        let u2 = BtlModel::uniform(2).unwrap();
        let s = build_canonical_markov(&k2, &u2).unwrap();
        assert!(close(markov_spectral_gap(&s, Some(&u2)).unwrap(), 1.0, 1e-12));
        assert!(close(markov_spectral_gap(&s, None).unwrap(), 1.0, 1e-12));

        let k3 = ComparisonGraph::complete(3);
        let u3 = BtlModel::uniform(3).unwrap();
        let s = build_canonical_markov(&k3, &u3).unwrap();
        assert!(close(markov_spectral_gap(&s, Some(&u3)).unwrap(), 0.75, 1e-12));
        assert!(close(markov_spectral_gap(&s, None).unwrap(), 0.75, 1e-10));
    }

    #[test]
    fn symmetric_and_general_paths_agree() {
        let m = BtlModel::new(vec![1.0, 2.0, 4.0, 3.0, 1.5]).unwrap();
        let g = ComparisonGraph::from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (1, 3)]).unwrap();
        let s = build_canonical_markov(&g, &m).unwrap();
        let a = markov_spectral_gap(&s, Some(&m)).unwrap();
        let b = markov_spectral_gap(&s, None).unwrap();
        assert!(close(a, b, 1e-10), "{a} vs {b}");
    }

    #[test]
    fn laplacian_fixtures() {
        let k2 = ComparisonGraph::complete(2);
        let l = laplacian(&k2);
        assert_eq!(l, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
        assert!(close(fiedler_value(&k2), 2.0, 1e-12));
        assert!(close(fiedler_value(&ComparisonGraph::complete(4)), 4.0, 1e-12));
        let split = ComparisonGraph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        assert_eq!(fiedler_value(&split), 0.0);
    }

    #[test]
    fn normalized_gap_fixtures() {
        assert!(close(
            normalized_laplacian_gap(&ComparisonGraph::complete(2)).unwrap(),
            2.0,
            1e-12
        ));
        let g = ComparisonGraph::from_edges(3, [(0, 1)]).unwrap();
        assert_eq!(normalized_laplacian_gap(&g), Err(Error::IsolatedVertex(2)));
    }

    #[test]
    fn random_walk_gap_fixtures() {
        assert!(close(
            rw_spectral_gap(&ComparisonGraph::complete(2)).unwrap(),
            0.0,
            1e-12
        ));
        assert!(close(
            rw_spectral_gap(&ComparisonGraph::complete(4)).unwrap(),
            2.0 / 3.0,
            1e-12
        ));
        let split = ComparisonGraph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        assert_eq!(rw_spectral_gap(&split), Err(Error::NotConnected));
    }

    #[test]
    fn pi_weighted_uniform_scaling() {
        let g = ComparisonGraph::from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 2)]).unwrap();
        let u = BtlModel::uniform(5).unwrap();
        let expect = fiedler_value(&g) / 10.0;
        assert!(close(pi_weighted_fiedler(&g, &u).unwrap(), expect, 1e-14));
    }

    #[test]
    fn report_row() {
        let g = ComparisonGraph::complete(4);
        let r = SpectralReport::for_graph(&g, None, 3).unwrap();
        assert!(close(r.fiedler, 4.0, 1e-12));
        assert!(r.pi_fiedler.is_none());
        let row = r.to_csv_row();
        assert!(row.starts_with("4,3,"));
        assert!(row.ends_with(','));
        assert_eq!(row.split(',').count(), SpectralReport::CSV_HEADER.split(',').count());
    }
}
