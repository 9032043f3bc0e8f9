use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use semirank::experiment::ExperimentResult;
use semirank::io::{fmt_sig, read_edge_list, write_edge_list, write_heatmap};
use semirank::{
    gen_er, gen_sbm, gen_semi_random, rank_centrality, scaling_probe, weighted_rank_centrality, BtlModel,
    ComparisonDataset, ComparisonGraph, Error, ExperimentConfig, ModelSpec, ReweightConfig, SamplingPlan, SbmSpec,
    SpectralReport,
};

const EXIT_CONFIG: u8 = 2;
const EXIT_TRIAL_ERROR: u8 = 3;

#[derive(Parser)]
#[command(name = "semirank", version, about = "Spectral ranking from pairwise comparisons")]
struct Cli {
    /// Seed for commands that draw random numbers.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// JSON configuration: an experiment config for `experiment` and
    /// `probe-k`, reweighting settings for `reweight` and `rank --weighted`,
    /// a block model for `generate sbm-spec`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for experiment sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a comparison graph and print it as an edge list.
    Generate {
        #[command(subcommand)]
        kind: GraphKind,
    },
    /// Draw k comparisons per edge of a graph under a score model.
    Sample {
        #[arg(long)]
        graph: PathBuf,
        /// Score model JSON: `{"alpha": [...]}` or
        /// `{"n": .., "alpha_gen": {"kind": "uniform_log", "h": .., "seed": ..}}`.
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 32)]
        k: u32,
    },
    /// Estimate scores from a graph and a comparison dataset.
    Rank {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Reweight the graph before estimating.
        #[arg(long)]
        weighted: bool,
        #[command(flatten)]
        reweight: ReweightArgs,
    },
    /// Compute Fiedler-maximizing edge weights for a graph.
    Reweight {
        #[arg(long)]
        graph: PathBuf,
        /// Also write every pair's weight as `i,j,w` CSV.
        #[arg(long)]
        heatmap: Option<PathBuf>,
        #[command(flatten)]
        reweight: ReweightArgs,
    },
    /// Print spectral diagnostics of a graph as one CSV row.
    Spectra {
        #[arg(long)]
        graph: PathBuf,
        /// Score model JSON; uniform scores when absent.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Run a Monte Carlo experiment and print the per-(n, method) summary.
    Experiment {
        #[command(flatten)]
        run: RunArgs,
        /// Write means and interquartile ranges here.
        #[arg(long)]
        diagnostics: Option<PathBuf>,
        /// Write one row per trial and method here.
        #[arg(long)]
        trials_out: Option<PathBuf>,
        /// Write the configuration and resolved defaults as JSON here.
        #[arg(long)]
        metadata: Option<PathBuf>,
    },
    /// Rerun an experiment over several k and fit the error's log-log slope.
    ProbeK {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated, strictly ascending.
        #[arg(long, value_delimiter = ',', default_values_t = [16u32, 64, 256])]
        k_grid: Vec<u32>,
    },
}

#[derive(Subcommand)]
enum GraphKind {
    /// Erdős-Rényi graph.
    Er {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
    },
    /// Assortative block model with m equal blocks.
    Sbm {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        /// Cross-block probability.
        #[arg(long)]
        p: f64,
        /// Within-block probabilities, one per block or a single shared value.
        #[arg(long, value_delimiter = ',', required = true)]
        q: Vec<f64>,
    },
    /// Block model read from `--config`.
    SbmSpec,
    /// The three-block graph of the first preset experiment.
    Experiment1 {
        #[arg(long)]
        n: usize,
    },
    /// Independent edges with probabilities from a JSON matrix file.
    Plan {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        base_p: f64,
    },
}

#[derive(Args)]
struct ReweightArgs {
    #[arg(long)]
    degree_cap: Option<f64>,
    #[arg(long)]
    degree_floor: Option<f64>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    step_size: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    /// Built-in experiment (`experiment1` or `experiment2`); ignored with `--config`.
    preset: Option<String>,
    /// Override comparisons per pair.
    #[arg(long)]
    k: Option<u32>,
    /// Override trials per n.
    #[arg(long)]
    trials: Option<usize>,
    /// Override the n grid (comma-separated).
    #[arg(long, value_delimiter = ',')]
    n_grid: Option<Vec<usize>>,
}

/// Marks failures caused by the user's input rather than the computation.
#[derive(Debug)]
struct ConfigError(String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_err(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

fn is_config_error(err: &anyhow::Error) -> bool {
    err.chain().any(|e| {
        e.is::<ConfigError>()
            || e.is::<serde_json::Error>()
            || matches!(
                e.downcast_ref::<Error>(),
                Some(
                    Error::Config(_)
                        | Error::Parse(_)
                        | Error::InvalidPlan(_)
                        | Error::BlockSizeError(_)
                        | Error::NonPositiveScore { .. }
                        | Error::TooFewItems(_)
                        | Error::WeightOutOfRange { .. }
                        | Error::IndexOutOfRange { .. }
                        | Error::SameItem(_)
                )
            )
    })
}

fn read_text(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))
}

fn read_graph(path: &Path) -> anyhow::Result<ComparisonGraph> {
    read_edge_list(&read_text(path)?).with_context(|| format!("in {}", path.display()))
}

fn read_model(path: &Path) -> anyhow::Result<BtlModel> {
    let spec = ModelSpec::from_json(&read_text(path)?).with_context(|| format!("in {}", path.display()))?;
    Ok(spec.build()?)
}

fn read_dataset(path: &Path) -> anyhow::Result<ComparisonDataset> {
    let data: ComparisonDataset =
        serde_json::from_str(&read_text(path)?).with_context(|| format!("in {}", path.display()))?;
    data.validate()?;
    Ok(data)
}

fn write_file(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => write_file(path, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(stdout.flush()?)
        }
    }
}

fn reweight_config(base: Option<&Path>, args: &ReweightArgs) -> anyhow::Result<ReweightConfig> {
    let mut cfg = match base {
        Some(path) => serde_json::from_str(&read_text(path)?).with_context(|| format!("in {}", path.display()))?,
        None => ReweightConfig::default(),
    };
    if args.degree_cap.is_some() {
        cfg.degree_cap = args.degree_cap;
    }
    if let Some(floor) = args.degree_floor {
        cfg.degree_floor = floor;
    }
    if let Some(iterations) = args.iterations {
        cfg.iterations = iterations;
    }
    if args.step_size.is_some() {
        cfg.step_size = args.step_size;
    }
    Ok(cfg)
}

fn experiment_config(config: Option<&Path>, run: &RunArgs) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match (config, run.preset.as_deref()) {
        (Some(path), _) => {
            ExperimentConfig::from_json(&read_text(path)?).with_context(|| format!("in {}", path.display()))?
        }
        (None, Some(name)) => ExperimentConfig::preset_by_name(name)
            .ok_or_else(|| config_err(format!("unknown preset {name:?}; expected experiment1 or experiment2")))?,
        (None, None) => bail!(config_err("give a preset name or --config")),
    };
    if let Some(k) = run.k {
        cfg.k = k;
    }
    if let Some(trials) = run.trials {
        cfg.trials = trials;
    }
    if let Some(grid) = &run.n_grid {
        cfg.n_grid = grid.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn generate(cli: &Cli, kind: &GraphKind) -> anyhow::Result<ComparisonGraph> {
    Ok(match kind {
        GraphKind::Er { n, p } => gen_er(*n, *p, cli.seed)?,
        GraphKind::Sbm { n, m, p, q } => {
            let q = if q.len() == 1 { vec![q[0]; *m] } else { q.clone() };
            gen_sbm(&SbmSpec::Assortative { n: *n, m: *m, p: *p, q }, cli.seed)?
        }
        GraphKind::SbmSpec => {
            let path = cli
                .config
                .as_deref()
                .ok_or_else(|| config_err("`generate sbm-spec` needs --config"))?;
            let spec: SbmSpec =
                serde_json::from_str(&read_text(path)?).with_context(|| format!("in {}", path.display()))?;
            gen_sbm(&spec, cli.seed)?
        }
        GraphKind::Experiment1 { n } => gen_sbm(&SbmSpec::experiment1(*n), cli.seed)?,
        GraphKind::Plan { matrix, base_p } => {
            let rows: Vec<Vec<f64>> =
                serde_json::from_str(&read_text(matrix)?).with_context(|| format!("in {}", matrix.display()))?;
            gen_semi_random(&SamplingPlan::from_matrix(*base_p, &rows)?, cli.seed)
        }
    })
}

fn scores_csv(pi_hat: &[f64], ranking: &[usize]) -> String {
    let mut position = vec![0; pi_hat.len()];
    for (r, &item) in ranking.iter().enumerate() {
        position[item] = r + 1;
    }
    let mut out = String::from("item,score,rank\n");
    for (i, p) in pi_hat.iter().enumerate() {
        out.push_str(&format!("{i},{},{}\n", fmt_sig(*p), position[i]));
    }
    out
}

fn write_experiment_extras(
    result: &ExperimentResult,
    diagnostics: Option<&Path>,
    trials: Option<&Path>,
    metadata: Option<&Path>,
) -> anyhow::Result<()> {
    if let Some(path) = diagnostics {
        write_file(path, &result.diagnostics_csv())?;
    }
    if let Some(path) = trials {
        write_file(path, &result.trials_csv())?;
    }
    if let Some(path) = metadata {
        write_file(path, &result.metadata_json())?;
    }
    Ok(())
}

fn report_trial_errors(result: &ExperimentResult) -> ExitCode {
    let errored: Vec<_> = result.records.iter().filter(|r| r.errored()).collect();
    if errored.is_empty() {
        return ExitCode::SUCCESS;
    }
    for r in &errored {
        for m in &r.methods {
            if let Err(e) = &m.outcome {
                eprintln!("trial n={} index={} {}: {e}", r.n, r.trial_index, m.method.as_str());
            }
        }
    }
    ExitCode::from(EXIT_TRIAL_ERROR)
}

fn run(cli: &Cli) -> anyhow::Result<ExitCode> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            bail!(config_err("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    }
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Generate { kind } => emit(out, &write_edge_list(&generate(cli, kind)?))?,
        Command::Sample { graph, model, k } => {
            let graph = read_graph(graph)?;
            let model = read_model(model)?;
            let data = model.sample_comparisons(&graph, *k, cli.seed)?;
            emit(out, &(serde_json::to_string(&data)? + "\n"))?;
        }
        Command::Rank {
            graph,
            data,
            weighted,
            reweight,
        } => {
            let graph = read_graph(graph)?;
            let data = read_dataset(data)?;
            let (pi_hat, ranking) = if *weighted {
                let est = weighted_rank_centrality(&graph, &data, &reweight_config(cli.config.as_deref(), reweight)?)?;
                (est.pi_hat, est.ranking)
            } else {
                rank_centrality(&graph, &data)?
            };
            emit(out, &scores_csv(&pi_hat, &ranking))?;
        }
        Command::Reweight {
            graph,
            heatmap,
            reweight,
        } => {
            let graph = read_graph(graph)?;
            let cfg = reweight_config(cli.config.as_deref(), reweight)?;
            let result = semirank::mmwu_reweight(&graph, &cfg)?;
            let weighted = graph.with_weights(result.weights.clone())?;
            eprintln!(
                "fiedler {} (unweighted {}), degree cap {}, feasible {}",
                fmt_sig(result.achieved_fiedler),
                fmt_sig(semirank::fiedler_value(&graph)),
                fmt_sig(result.settings.degree_cap),
                result.feasible
            );
            emit(out, &write_edge_list(&weighted))?;
            if let Some(path) = heatmap {
                write_file(path, &write_heatmap(&weighted))?;
            }
        }
        Command::Spectra { graph, model } => {
            let graph = read_graph(graph)?;
            let model = model.as_deref().map(read_model).transpose()?;
            let report = SpectralReport::for_graph(&graph, model.as_ref(), cli.seed)?;
            emit(
                out,
                &format!("{}\n{}\n", SpectralReport::CSV_HEADER, report.to_csv_row()),
            )?;
        }
        Command::Experiment {
            run,
            diagnostics,
            trials_out,
            metadata,
        } => {
            let cfg = experiment_config(cli.config.as_deref(), run)?;
            let result = semirank::run_experiment(&cfg)?;
            emit(out, &result.to_csv())?;
            write_experiment_extras(
                &result,
                diagnostics.as_deref(),
                trials_out.as_deref(),
                metadata.as_deref(),
            )?;
            return Ok(report_trial_errors(&result));
        }
        Command::ProbeK { run, k_grid } => {
            let cfg = experiment_config(cli.config.as_deref(), run)?;
            let probe = scaling_probe(&cfg, k_grid)?;
            emit(out, &probe.to_csv())?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            if is_config_error(&err) {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
