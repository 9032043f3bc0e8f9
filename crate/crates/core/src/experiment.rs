//! Declarative Monte Carlo experiments comparing the unweighted and the
//! reweighted spectral estimators.
//!
//! Every trial derives its own seed from `(base_seed, n, trial)`, so results
//! do not depend on scheduling; trials run in parallel on the rayon pool and
//! are reduced in `(n, trial)` order.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{build_canonical_markov, rank_centrality};
use crate::error::{Error, Result};
use crate::graph::{gen_semi_random, graph_seed, ComparisonGraph, SamplingPlan, SbmSpec};
use crate::io::fmt_sig;
use crate::metrics::{log_log_slope, mean, median, quantile, rel_l2_error, rel_linf_error};
use crate::model::BtlModel;
use crate::reweight::{estimation_graph, mmwu_reweight, ReweightConfig};
use crate::rng;
use crate::spectra::{fiedler_value, markov_spectral_gap};

/// Probability given either as a constant or as `c * ln(n) / n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Prob {
    Const(f64),
    LogScaled { log_scaled: f64 },
}

impl Prob {
    pub fn at(&self, n: usize) -> f64 {
        match *self {
            Prob::Const(p) => p,
            Prob::LogScaled { log_scaled } => (log_scaled * (n as f64).ln() / n as f64).min(1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSpec {
    Er {
        p: Prob,
    },
    Sbm {
        m: usize,
        p: Prob,
        q: Vec<Prob>,
    },
    GeneralizedSbm {
        matrix: Vec<Vec<Prob>>,
    },
    /// Fixed plan; only valid for `n` equal to the matrix size.
    Plan {
        base_p: f64,
        q: Vec<Vec<f64>>,
    },
}

impl GraphSpec {
    pub fn plan(&self, n: usize) -> Result<SamplingPlan> {
        let plan = match self {
            GraphSpec::Er { p } => SamplingPlan::uniform(n, p.at(n)),
            GraphSpec::Sbm { m, p, q } => SbmSpec::Assortative {
                n,
                m: *m,
                p: p.at(n),
                q: q.iter().map(|x| x.at(n)).collect(),
            }
            .plan(),
            GraphSpec::GeneralizedSbm { matrix } => SbmSpec::Generalized {
                n,
                matrix: matrix.iter().map(|row| row.iter().map(|x| x.at(n)).collect()).collect(),
            }
            .plan(),
            GraphSpec::Plan { base_p, q } => {
                if q.len() != n {
                    return Err(Error::Config(format!("plan has {} rows but n = {n}", q.len())));
                }
                SamplingPlan::from_matrix(*base_p, q)
            }
        };
        plan.map_err(|e| Error::Config(format!("graph spec at n = {n}: {e}")))
    }
}

/// Per-trial score generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelGen {
    Uniform,
    /// Log-scores uniform on `[0, ln h]`, seeded from the trial seed.
    UniformLog {
        h: f64,
    },
    Explicit {
        alpha: Vec<f64>,
    },
}

impl ModelGen {
    pub fn build(&self, n: usize, seed: u64) -> Result<BtlModel> {
        match self {
            ModelGen::Uniform => BtlModel::uniform(n),
            ModelGen::UniformLog { h } => BtlModel::uniform_log(n, *h, seed),
            ModelGen::Explicit { alpha } => {
                if alpha.len() != n {
                    return Err(Error::Config(format!("{} scores given for n = {n}", alpha.len())));
                }
                BtlModel::new(alpha.clone())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Unweighted,
    Weighted,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Unweighted => "unweighted",
            Method::Weighted => "weighted",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub graph_spec: GraphSpec,
    pub model_spec: ModelGen,
    pub n_grid: Vec<usize>,
    pub k: u32,
    pub trials: usize,
    pub methods: Vec<Method>,
    pub base_seed: u64,
    #[serde(default)]
    pub reweight: ReweightConfig,
    /// Use win counts `round(k * p_ij)` instead of sampled outcomes.
    #[serde(default)]
    pub exact_outcomes: bool,
}

/// Comparisons per pair used by the presets.
pub const PRESET_K: u32 = 32;
/// Dynamic range of the preset score generator.
pub const PRESET_H: f64 = 4.0;
pub const PRESET_TRIALS: usize = 25;
pub const PRESET_SEED: u64 = 20_250_601;
pub const PRESET_N_GRID: [usize; 8] = [30, 45, 60, 75, 90, 105, 120, 135];

impl ExperimentConfig {
    /// Three-block model: block 1 complete and fully joined to block 2,
    /// disjoint from block 3, every other pair at `2 ln(n) / n`.
    pub fn experiment1() -> Self {
        let s = Prob::LogScaled { log_scaled: 2.0 };
        let (one, zero) = (Prob::Const(1.0), Prob::Const(0.0));
        Self::preset(
            "experiment1",
            GraphSpec::GeneralizedSbm {
                matrix: vec![vec![one, one, zero], vec![one, s, s], vec![zero, s, s]],
            },
        )
    }

    /// Erdős-Rényi graphs at `p = 2 ln(n) / n`.
    pub fn experiment2() -> Self {
        Self::preset(
            "experiment2",
            GraphSpec::Er {
                p: Prob::LogScaled { log_scaled: 2.0 },
            },
        )
    }

    pub fn preset_by_name(name: &str) -> Option<Self> {
        match name {
            "experiment1" => Some(Self::experiment1()),
            "experiment2" => Some(Self::experiment2()),
            _ => None,
        }
    }

    fn preset(name: &str, graph_spec: GraphSpec) -> Self {
        Self {
            name: name.into(),
            graph_spec,
            model_spec: ModelGen::UniformLog { h: PRESET_H },
            n_grid: PRESET_N_GRID.to_vec(),
            k: PRESET_K,
            trials: PRESET_TRIALS,
            methods: vec![Method::Unweighted, Method::Weighted],
            base_seed: PRESET_SEED,
            reweight: ReweightConfig::default(),
            exact_outcomes: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.trials == 0 {
            return fail("trials must be at least 1".into());
        }
        if self.n_grid.is_empty() {
            return fail("n_grid is empty".into());
        }
        if self.methods.is_empty() {
            return fail("no methods requested".into());
        }
        if self.k == 0 {
            return fail("k must be at least 1".into());
        }
        for &n in &self.n_grid {
            if n < 2 {
                return fail(format!("n = {n} is too small"));
            }
            self.graph_spec.plan(n)?;
            self.model_spec.build(n, 0).map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }

    /// Seed of trial `trial` at size `n`.
    pub fn trial_seed(&self, n: usize, trial: usize) -> u64 {
        rng::derive(self.base_seed, &[rng::STREAM_TRIAL, n as u64, trial as u64])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodMetrics {
    pub rel_linf_error: f64,
    pub rel_l2_error: f64,
    /// Gap of the canonical Markov matrix of the graph the method used.
    pub markov_gap: f64,
    pub fiedler: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodRecord {
    pub method: Method,
    pub outcome: std::result::Result<MethodMetrics, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub n: usize,
    pub trial_index: usize,
    pub seed: u64,
    pub connected: bool,
    pub methods: Vec<MethodRecord>,
    pub wall_time: f64,
}

impl TrialRecord {
    pub fn discarded(&self) -> bool {
        !self.connected
    }

    pub fn errored(&self) -> bool {
        self.methods.iter().any(|m| m.outcome.is_err())
    }
}

/// Graph, scores and outcomes of one trial.
pub struct TrialInputs {
    pub graph: ComparisonGraph,
    pub model: BtlModel,
    pub dataset: crate::model::ComparisonDataset,
}

impl ExperimentConfig {
    /// Regenerates the random inputs of one trial.
    pub fn trial_inputs(&self, n: usize, trial: usize, k: u32) -> Result<TrialInputs> {
        let seed = self.trial_seed(n, trial);
        let plan = self.graph_spec.plan(n)?;
        let graph = gen_semi_random(&plan, graph_seed(seed));
        let model = self.model_spec.build(n, rng::derive(seed, &[rng::STREAM_SCORES]))?;
        let dataset = if self.exact_outcomes {
            model.expected_comparisons(&graph, k)?
        } else {
            model.sample_comparisons(&graph, k, rng::derive(seed, &[rng::STREAM_OUTCOME]))?
        };
        Ok(TrialInputs { graph, model, dataset })
    }
}

fn run_method(method: Method, inputs: &TrialInputs, reweight: &ReweightConfig) -> Result<MethodMetrics> {
    let TrialInputs { graph, model, dataset } = inputs;
    let used = match method {
        Method::Unweighted => graph.clone(),
        Method::Weighted => estimation_graph(graph, &mmwu_reweight(graph, reweight)?)?,
    };
    let (pi_hat, _) = rank_centrality(&used, dataset)?;
    let canonical = build_canonical_markov(&used, model)?;
    Ok(MethodMetrics {
        rel_linf_error: rel_linf_error(&pi_hat, model.pi())?,
        rel_l2_error: rel_l2_error(&pi_hat, model.pi())?,
        markov_gap: markov_spectral_gap(&canonical, Some(model))?,
        fiedler: fiedler_value(&used),
    })
}

fn run_trial(config: &ExperimentConfig, n: usize, trial: usize, k: u32) -> Result<TrialRecord> {
    let start = Instant::now();
    let inputs = config.trial_inputs(n, trial, k)?;
    let connected = inputs.graph.is_connected();
    let methods = if connected {
        config
            .methods
            .iter()
            .map(|&method| MethodRecord {
                method,
                outcome: run_method(method, &inputs, &config.reweight).map_err(|e| e.to_string()),
            })
            .collect()
    } else {
        Vec::new()
    };
    Ok(TrialRecord {
        n,
        trial_index: trial,
        seed: config.trial_seed(n, trial),
        connected,
        methods,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Aggregate of one `(n, method)` cell over its recorded trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub n: usize,
    pub method: Method,
    pub median_rel_linf: f64,
    pub median_rel_l2: f64,
    pub median_markov_gap: f64,
    pub median_fiedler: f64,
    pub mean_rel_linf: f64,
    pub iqr_rel_linf: f64,
    pub mean_markov_gap: f64,
    pub iqr_markov_gap: f64,
    pub trials_used: usize,
    pub trials_discarded: usize,
    pub trials_errored: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub k: u32,
    pub records: Vec<TrialRecord>,
    pub cells: Vec<CellSummary>,
}

pub const CSV_HEADER: &str =
    "experiment,n,method,median_rel_linf,median_rel_l2,median_markov_gap,median_fiedler,trials_used,trials_discarded";

fn fmt_opt(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        fmt_sig(x)
    }
}

impl ExperimentResult {
    pub fn cell(&self, n: usize, method: Method) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.n == n && c.method == method)
    }

    pub fn any_errored(&self) -> bool {
        self.records.iter().any(TrialRecord::errored)
    }

    /// Summary table. Deterministic given the config.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                self.config.name,
                c.n,
                c.method.as_str(),
                fmt_opt(c.median_rel_linf),
                fmt_opt(c.median_rel_l2),
                fmt_opt(c.median_markov_gap),
                fmt_opt(c.median_fiedler),
                c.trials_used,
                c.trials_discarded
            );
        }
        out
    }

    /// Means and interquartile ranges, for inspection only.
    pub fn diagnostics_csv(&self) -> String {
        let mut out = String::from(
            "experiment,n,method,mean_rel_linf,iqr_rel_linf,mean_markov_gap,iqr_markov_gap,trials_errored\n",
        );
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                self.config.name,
                c.n,
                c.method.as_str(),
                fmt_opt(c.mean_rel_linf),
                fmt_opt(c.iqr_rel_linf),
                fmt_opt(c.mean_markov_gap),
                fmt_opt(c.iqr_markov_gap),
                c.trials_errored
            );
        }
        out
    }

    /// One line per trial and method.
    pub fn trials_csv(&self) -> String {
        let mut out = String::from(
            "n,trial,seed,connected,method,rel_linf_error,rel_l2_error,markov_gap,fiedler,error,wall_time\n",
        );
        for r in &self.records {
            if r.methods.is_empty() {
                let _ = writeln!(
                    out,
                    "{},{},{},{},,,,,,,{:.6}",
                    r.n, r.trial_index, r.seed, r.connected, r.wall_time
                );
            }
            for m in &r.methods {
                let (metrics, err) = match &m.outcome {
                    Ok(x) => (
                        format!(
                            "{},{},{},{}",
                            fmt_sig(x.rel_linf_error),
                            fmt_sig(x.rel_l2_error),
                            fmt_sig(x.markov_gap),
                            fmt_sig(x.fiedler)
                        ),
                        String::new(),
                    ),
                    Err(e) => (",,,".into(), e.replace([',', '\n'], ";")),
                };
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{:.6}",
                    r.n,
                    r.trial_index,
                    r.seed,
                    r.connected,
                    m.method.as_str(),
                    metrics,
                    err,
                    r.wall_time
                );
            }
        }
        out
    }

    /// Configuration and resolved defaults, as JSON.
    pub fn metadata_json(&self) -> String {
        let meta = serde_json::json!({
            "config": self.config,
            "k": self.k,
            "reweight_defaults": {
                "degree_cap": "2 * lower-quartile unweighted degree (when unset)",
                "degree_floor": self.config.reweight.degree_floor,
                "iterations": self.config.reweight.iterations,
                "step_size": self.config.reweight.step_size
                    .unwrap_or(0.5 / (self.config.reweight.iterations as f64).sqrt()),
            },
            "trials_discarded": self.records.iter().filter(|r| r.discarded()).count(),
            "trials_errored": self.records.iter().filter(|r| r.errored()).count(),
        });
        serde_json::to_string_pretty(&meta).expect("serializable metadata")
    }
}

fn summarize(config: &ExperimentConfig, records: &[TrialRecord]) -> Vec<CellSummary> {
    let mut cells = Vec::new();
    for &n in &config.n_grid {
        let at_n: Vec<&TrialRecord> = records.iter().filter(|r| r.n == n).collect();
        let discarded = at_n.iter().filter(|r| r.discarded()).count();
        for &method in &config.methods {
            let mut errored = 0;
            let ok: Vec<&MethodMetrics> = at_n
                .iter()
                .flat_map(|r| r.methods.iter().filter(|m| m.method == method))
                .filter_map(|m| match &m.outcome {
                    Ok(x) => Some(x),
                    Err(_) => {
                        errored += 1;
                        None
                    }
                })
                .collect();
            let col = |f: fn(&MethodMetrics) -> f64| ok.iter().map(|x| f(x)).collect::<Vec<_>>();
            let linf = col(|x| x.rel_linf_error);
            let gap = col(|x| x.markov_gap);
            let iqr = |v: &[f64]| match (quantile(v, 0.75), quantile(v, 0.25)) {
                (Some(a), Some(b)) => a - b,
                _ => f64::NAN,
            };
            cells.push(CellSummary {
                n,
                method,
                median_rel_linf: median(&linf).unwrap_or(f64::NAN),
                median_rel_l2: median(&col(|x| x.rel_l2_error)).unwrap_or(f64::NAN),
                median_markov_gap: median(&gap).unwrap_or(f64::NAN),
                median_fiedler: median(&col(|x| x.fiedler)).unwrap_or(f64::NAN),
                mean_rel_linf: mean(&linf).unwrap_or(f64::NAN),
                iqr_rel_linf: iqr(&linf),
                mean_markov_gap: mean(&gap).unwrap_or(f64::NAN),
                iqr_markov_gap: iqr(&gap),
                trials_used: ok.len(),
                trials_discarded: discarded,
                trials_errored: errored,
            });
        }
    }
    cells
}

fn run_with_k(config: &ExperimentConfig, k: u32) -> Result<ExperimentResult> {
    config.validate()?;
    let jobs: Vec<(usize, usize)> = config
        .n_grid
        .iter()
        .flat_map(|&n| (0..config.trials).map(move |t| (n, t)))
        .collect();
    let records = jobs
        .par_iter()
        .map(|&(n, t)| run_trial(config, n, t, k))
        .collect::<Result<Vec<_>>>()?;
    let cells = summarize(config, &records);
    Ok(ExperimentResult {
        config: config.clone(),
        k,
        records,
        cells,
    })
}

/// Runs every `(n, trial)` of `config` and aggregates medians per
/// `(n, method)` over connected trials.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    run_with_k(config, config.k)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub k: u32,
    pub n: usize,
    pub method: Method,
    pub median_rel_linf: f64,
    pub trials_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingSlope {
    pub n: usize,
    pub method: Method,
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingProbe {
    pub rows: Vec<ScalingRow>,
    pub slopes: Vec<ScalingSlope>,
}

impl ScalingProbe {
    pub fn slope(&self, n: usize, method: Method) -> Option<f64> {
        self.slopes
            .iter()
            .find(|s| s.n == n && s.method == method)
            .map(|s| s.slope)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,n,method,median_rel_linf,trials_used\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.k,
                r.n,
                r.method.as_str(),
                fmt_opt(r.median_rel_linf),
                r.trials_used
            );
        }
        out.push_str("n,method,slope\n");
        for s in &self.slopes {
            let _ = writeln!(out, "{},{},{}", s.n, s.method.as_str(), fmt_opt(s.slope));
        }
        out
    }
}

/// Reruns `config` at every `k` in `k_grid` (strictly ascending, at least two
/// entries) and fits the log-log slope of the median relative l-infinity
/// error against `k`. The same graphs and scores are used at every `k`.
pub fn scaling_probe(config: &ExperimentConfig, k_grid: &[u32]) -> Result<ScalingProbe> {
    if k_grid.len() < 2 {
        return Err(Error::Config("k grid needs at least two entries".into()));
    }
    if k_grid.windows(2).any(|w| w[0] >= w[1]) || k_grid[0] == 0 {
        return Err(Error::Config("k grid must be positive and strictly ascending".into()));
    }
    let mut rows = Vec::new();
    for &k in k_grid {
        let result = run_with_k(config, k)?;
        rows.extend(result.cells.iter().map(|c| ScalingRow {
            k,
            n: c.n,
            method: c.method,
            median_rel_linf: c.median_rel_linf,
            trials_used: c.trials_used,
        }));
    }
    let mut slopes = Vec::new();
    for &n in &config.n_grid {
        for &method in &config.methods {
            let (ks, errs): (Vec<f64>, Vec<f64>) = rows
                .iter()
                .filter(|r| r.n == n && r.method == method)
                .map(|r| (r.k as f64, r.median_rel_linf))
                .unzip();
            slopes.push(ScalingSlope {
                n,
                method,
                slope: log_log_slope(&ks, &errs)?,
            });
        }
    }
    Ok(ScalingProbe { rows, slopes })
}
