//! Spectral ranking from pairwise comparisons under the Bradley-Terry-Luce
//! model, on observation graphs drawn by a semi-random adversary.
//!
//! The crate covers the whole pipeline: score models and comparison
//! sampling ([`model`]), observation graph generators ([`graph`]), the
//! rank-centrality estimator ([`chain`]), spectral diagnostics
//! ([`spectra`]), Fiedler-value reweighting ([`reweight`]), and a
//! reproducible Monte Carlo harness ([`experiment`]).

// `!(x > 0.0)` is used on purpose to reject NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod chain;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod io;
pub mod metrics;
pub mod model;
pub mod reweight;
pub mod rng;
pub mod spectra;

pub use chain::{
    build_canonical_markov, build_empirical_markov, rank_centrality, stationary_distribution, stationary_exact,
    MarkovMatrix, Provenance,
};
pub use error::{Error, Result};
pub use experiment::{
    run_experiment, scaling_probe, ExperimentConfig, ExperimentResult, GraphSpec, Method, ModelGen, Prob, ScalingProbe,
    TrialRecord,
};
pub use graph::{
    gen_er, gen_sbm, gen_semi_random, monotone_coupling, ComparisonGraph, DegreeStats, SamplingPlan, SbmSpec,
};
pub use metrics::{check_variation_condition, rel_l2_error, rel_linf_error, VariationCheck};
pub use model::{BtlModel, ComparisonDataset, ModelSpec};
pub use reweight::{
    apply_weights, mmwu_reweight, weighted_rank_centrality, ReweightConfig, ReweightResult, WeightedEstimate,
};
pub use spectra::{
    fiedler_value, laplacian, markov_spectral_gap, normalized_laplacian_gap, pi_weighted_fiedler, rw_spectral_gap,
    SpectralReport,
};
