//! Inputs shared by the benchmarks.

use semirank::{BtlModel, ComparisonDataset, ComparisonGraph, SbmSpec};

/// Connected three-block graph of the first preset experiment at size `n`,
/// with log-uniform scores and `k = 32` sampled comparisons per edge.
pub fn experiment1_instance(n: usize) -> (ComparisonGraph, BtlModel, ComparisonDataset) {
    let graph = (0..)
        .map(|seed| semirank::gen_sbm(&SbmSpec::experiment1(n), seed).expect("valid block model"))
        .find(ComparisonGraph::is_connected)
        .expect("some seed gives a connected graph");
    let model = BtlModel::uniform_log(n, 4.0, 1).expect("valid scores");
    let data = model.sample_comparisons(&graph, 32, 2).expect("matching sizes");
    (graph, model, data)
}
