//! Bradley-Terry-Luce scores and comparison sampling.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::ComparisonGraph;
use crate::rng;

/// Above this many comparisons per pair, outcomes are drawn from an exact
/// binomial sampler instead of summed Bernoulli draws.
pub const BERNOULLI_SUM_LIMIT: u32 = 10_000;

/// Latent positive scores together with their canonical normalization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BtlModel {
    alpha: Vec<f64>,
    pi: Vec<f64>,
    h: f64,
}

impl BtlModel {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.len() < 2 {
            return Err(Error::TooFewItems(alpha.len()));
        }
        if let Some((index, &value)) = alpha.iter().enumerate().find(|(_, a)| !(a.is_finite() && **a > 0.0)) {
            return Err(Error::NonPositiveScore { index, value });
        }
        let total: f64 = alpha.iter().sum();
        let pi = alpha.iter().map(|a| a / total).collect();
        let max = alpha.iter().cloned().fold(f64::MIN, f64::max);
        let min = alpha.iter().cloned().fold(f64::MAX, f64::min);
        Ok(Self {
            alpha,
            pi,
            h: max / min,
        })
    }

    /// Uniform scores, `alpha_i = 1`.
    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(vec![1.0; n])
    }

    /// Log-scores drawn uniformly from `[0, ln h]`.
    pub fn uniform_log(n: usize, h: f64, seed: u64) -> Result<Self> {
        if !(h.is_finite() && h >= 1.0) {
            return Err(Error::Config(format!("dynamic range must be >= 1, got {h}")));
        }
        let mut r = rng::rng_from(rng::derive(seed, &[rng::STREAM_SCORES]));
        let span = h.ln();
        let alpha = (0..n).map(|_| (r.random::<f64>() * span).exp()).collect();
        Self::new(alpha)
    }

    pub fn n(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// Canonical score vector, `alpha / sum(alpha)`.
    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    /// Dynamic range `max(alpha) / min(alpha)`.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Probability that `j` is preferred over `i`.
    pub fn pref_prob(&self, i: usize, j: usize) -> Result<f64> {
        let n = self.n();
        for index in [i, j] {
            if index >= n {
                return Err(Error::IndexOutOfRange { index, n });
            }
        }
        if i == j {
            return Err(Error::SameItem(i));
        }
        Ok(self.p(i, j))
    }

    #[inline]
    pub(crate) fn p(&self, i: usize, j: usize) -> f64 {
        self.alpha[j] / (self.alpha[i] + self.alpha[j])
    }

    /// Draws `k` comparisons on every edge of `graph`.
    ///
    /// The count for pair `(i, j)` depends only on `(seed, i, j)`, never on
    /// the order in which edges are visited.
    pub fn sample_comparisons(&self, graph: &ComparisonGraph, k: u32, seed: u64) -> Result<ComparisonDataset> {
        if graph.n() != self.n() {
            return Err(Error::SizeMismatch {
                expected: self.n(),
                actual: graph.n(),
            });
        }
        if k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        let wins = graph
            .edges()
            .iter()
            .map(|&(i, j)| {
                let p = self.p(i, j);
                let mut r = rng::pair_rng(seed, i, j);
                if k <= BERNOULLI_SUM_LIMIT {
                    (0..k).filter(|_| r.random::<f64>() < p).count() as u32
                } else {
                    // p lies strictly inside (0, 1) for positive scores.
                    Binomial::new(k as u64, p).expect("valid binomial").sample(&mut r) as u32
                }
            })
            .collect();
        Ok(ComparisonDataset {
            n: self.n(),
            k,
            edges: graph.edges().to_vec(),
            wins,
            seed,
        })
    }

    /// Dataset whose win counts are `round(k * p_ij)`; exact whenever every
    /// `k * p_ij` is an integer.
    pub fn expected_comparisons(&self, graph: &ComparisonGraph, k: u32) -> Result<ComparisonDataset> {
        if graph.n() != self.n() {
            return Err(Error::SizeMismatch {
                expected: self.n(),
                actual: graph.n(),
            });
        }
        let wins = graph
            .edges()
            .iter()
            .map(|&(i, j)| (k as f64 * self.p(i, j)).round() as u32)
            .collect();
        Ok(ComparisonDataset {
            n: self.n(),
            k,
            edges: graph.edges().to_vec(),
            wins,
            seed: 0,
        })
    }
}

/// Outcomes of `k` comparisons on each observed pair.
///
/// `wins[e]` counts how often the larger index `j` beat `i` on edge
/// `edges[e] = (i, j)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonDataset {
    pub n: usize,
    pub k: u32,
    pub edges: Vec<(usize, usize)>,
    pub wins: Vec<u32>,
    pub seed: u64,
}

impl ComparisonDataset {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.wins.len() != self.edges.len() {
            return Err(Error::SizeMismatch {
                expected: self.edges.len(),
                actual: self.wins.len(),
            });
        }
        for (e, &(i, j)) in self.edges.iter().enumerate() {
            if i >= j || j >= self.n {
                return Err(Error::Parse(format!("edge ({i}, {j}) is not a pair i < j < n")));
            }
            if self.wins[e] > self.k {
                return Err(Error::Parse(format!(
                    "win count {} exceeds k = {}",
                    self.wins[e], self.k
                )));
            }
            if e > 0 && self.edges[e - 1] >= (i, j) {
                return Err(Error::Parse("edges must be strictly increasing".into()));
            }
        }
        Ok(())
    }

    /// Empirical probability that `j` beat `i` on edge index `e`.
    #[inline]
    pub fn p_hat(&self, e: usize) -> f64 {
        self.wins[e] as f64 / self.k as f64
    }
}

/// JSON description of a score vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum ModelSpec {
    Explicit { alpha: Vec<f64> },
    Generated { n: usize, alpha_gen: AlphaGen },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlphaGen {
    UniformLog { h: f64, seed: u64 },
}

impl ModelSpec {
    pub fn build(&self) -> Result<BtlModel> {
        match self {
            ModelSpec::Explicit { alpha } => BtlModel::new(alpha.clone()),
            ModelSpec::Generated {
                n,
                alpha_gen: AlphaGen::UniformLog { h, seed },
            } => BtlModel::uniform_log(*n, *h, *seed),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn canonical_scores() {
        let m = BtlModel::new(vec![1.0; 4]).unwrap();
        assert!(close(m.pi(), &[0.25; 4], 1e-15));
        assert_eq!(m.h(), 1.0);
        let m = BtlModel::new(vec![2.0, 1.0, 1.0]).unwrap();
        assert!(close(m.pi(), &[0.5, 0.25, 0.25], 1e-15));
        assert_eq!(m.h(), 2.0);
        let m = BtlModel::new(vec![3.0, 1.0]).unwrap();
        assert!(close(m.pi(), &[0.75, 0.25], 1e-15));
        assert_eq!(m.h(), 3.0);
    }

    #[test]
    fn rejects_bad_scores() {
        assert_eq!(BtlModel::new(vec![1.0]), Err(Error::TooFewItems(1)));
        assert!(matches!(
            BtlModel::new(vec![1.0, 0.0]),
            Err(Error::NonPositiveScore { index: 1, .. })
        ));
        assert!(matches!(
            BtlModel::new(vec![-1.0, 2.0]),
            Err(Error::NonPositiveScore { index: 0, .. })
        ));
        assert!(BtlModel::new(vec![1.0, f64::NAN]).is_err());
        assert!(BtlModel::new(vec![1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn preference_probabilities() {
        let m = BtlModel::new(vec![1.0, 1.0]).unwrap();
        assert_eq!(m.pref_prob(0, 1).unwrap(), 0.5);
        let m = BtlModel::new(vec![1.0, 3.0]).unwrap();
        assert_eq!(m.pref_prob(0, 1).unwrap(), 0.75);
        assert_eq!(m.pref_prob(1, 1), Err(Error::SameItem(1)));
        assert!(matches!(m.pref_prob(0, 2), Err(Error::IndexOutOfRange { .. })));
        let m = BtlModel::new(vec![3.0, 1.0]).unwrap();
        let h = m.h();
        for (i, j) in [(0, 1), (1, 0)] {
            let p = m.pref_prob(i, j).unwrap();
            assert!(p >= 1.0 / (1.0 + h) && p <= h / (1.0 + h));
        }
    }

    #[test]
    fn single_comparison_is_binary() {
        let m = BtlModel::new(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let g = ComparisonGraph::complete(4);
        let d = m.sample_comparisons(&g, 1, 9).unwrap();
        assert!(d.wins.iter().all(|&z| z <= 1));
        d.validate().unwrap();
    }

    #[test]
    fn size_mismatch() {
        let m = BtlModel::uniform(3).unwrap();
        let g = ComparisonGraph::complete(4);
        assert!(matches!(
            m.sample_comparisons(&g, 5, 0),
            Err(Error::SizeMismatch { .. })
        ));
    }

    #[test]
    fn large_k_uses_binomial_path() {
        let m = BtlModel::new(vec![1.0, 3.0]).unwrap();
        let g = ComparisonGraph::complete(2);
        let k = 200_000;
        let d = m.sample_comparisons(&g, k, 4).unwrap();
        // sd of p_hat is ~0.001
        assert!((d.p_hat(0) - 0.75).abs() < 0.006);
        assert_eq!(d, m.sample_comparisons(&g, k, 4).unwrap());
    }

    #[test]
    fn model_spec_json() {
        let s = ModelSpec::from_json(r#"{"alpha": [1.0, 2.0]}"#).unwrap();
        assert_eq!(s.build().unwrap().alpha(), &[1.0, 2.0]);
        let s =
            ModelSpec::from_json(r#"{"n": 50, "alpha_gen": {"kind": "uniform_log", "h": 4.0, "seed": 7}}"#).unwrap();
        let m = s.build().unwrap();
        assert_eq!(m.n(), 50);
        assert!(m.h() <= 4.0 + 1e-12);
        assert!(m.alpha().iter().all(|&a| (1.0..=4.0).contains(&a)));
        assert!(ModelSpec::from_json(r#"{"alpha": [1.0], "extra": 1}"#).is_err());
    }
}
