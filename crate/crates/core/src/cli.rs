//! The `mnr` command line.
//!
//! Exit codes: 0 success, 2 unreadable or invalid input, 3 runtime failure,
//! 4 disconnected localization graph, 5 too few responses or a perfect fit.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::dataset::{
    adjacency_from_edge_text, edge_list_text, id_values_text, parse_dense_matrix, parse_id_values, parse_responses,
    Dataset,
};
use crate::error::Error;
use crate::geodesic::{build_localization_graph, connectivity_report, shortest_path_matrix_among};
use crate::rdpg::{curve_hardy_weinberg, sample_rdpg_directed, AdjacencyMatrix};
use crate::regression::{f_test, ols_fit, FTestResult, LinearFit};
use crate::sim::{self, staged, ExperimentConfig, ExperimentId, ResultTable};
use crate::spectral::{ase_directed, ase_undirected, LatentMatrix};
use crate::stats::RngStream;
use crate::stress::{minimize_raw_stress, MdsOptions};

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;
pub const EXIT_DISCONNECTED: i32 = 4;
pub const EXIT_DEGENERATE: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "mnr", version, about = "Regression on regressors recovered from random dot product graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a simulation protocol and write its result table.
    Simulate(SimulateArgs),
    /// Embed a graph on the line, regress responses and test the slope.
    Apply(ApplyArgs),
    /// Write the one-dimensional embedding only.
    Embed(EmbedArgs),
    /// Write a synthetic directed dataset.
    Generate(GenerateArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// fig3, fig4, fig5 or fig8.
    pub experiment: ExperimentId,
    /// JSON experiment configuration; defaults to the reduced grid.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, env = "MNR_SEED")]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Use the full-size grid instead of the reduced one.
    #[arg(long)]
    pub full: bool,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub n_grid: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Args)]
pub struct DatasetArgs {
    /// Edge list, one `src,dst` pair per line.
    #[arg(long, conflicts_with = "matrix")]
    pub edges: Option<PathBuf>,
    /// Dense adjacency matrix as headerless CSV rows.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    /// Node count when trailing nodes have no edges.
    #[arg(long)]
    pub n_nodes: Option<usize>,
    /// `id,response` lines.
    #[arg(long)]
    pub responses: Option<PathBuf>,
    #[arg(long)]
    pub directed: bool,
    /// Singular triples per side for directed graphs.
    #[arg(long, default_value_t = 3)]
    pub d_half: usize,
    /// Embedding dimension for undirected graphs.
    #[arg(long, default_value_t = 3)]
    pub d: usize,
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
    /// Keep only nodes in the largest component instead of failing.
    #[arg(long)]
    pub largest_component: bool,
    /// Unlabelled nodes to embed; defaults to every unlabelled node.
    #[arg(long, value_delimiter = ',')]
    pub targets: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0)]
    pub restarts: usize,
}

#[derive(Debug, Args)]
pub struct ApplyArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[arg(long, default_value_t = 0.01)]
    pub level: f64,
    /// Per-node output: id,z,fitted,predicted.
    #[arg(long)]
    pub out_embedding: PathBuf,
    /// Reuse coordinates written by `embed` instead of recomputing them.
    #[arg(long)]
    pub embedding: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[arg(long)]
    pub out: PathBuf,
    /// Write one embedding per listed lambda, suffixed `_lambda<value>`.
    #[arg(long, value_delimiter = ',')]
    pub lambda_sweep: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, env = "MNR_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Number of leading nodes with a recorded response.
    #[arg(long)]
    pub labelled: Option<usize>,
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 5.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.1)]
    pub sigma: f64,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn input(message: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.to_string(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Disconnected { .. } => EXIT_DISCONNECTED,
            Error::PerfectFit => EXIT_DEGENERATE,
            Error::Csv(_) | Error::Json(_) => EXIT_INPUT,
            _ => EXIT_RUNTIME,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let outcome = match cli.command {
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Apply(a) => cmd_apply(&a),
        Command::Embed(a) => cmd_embed(&a),
        Command::Generate(a) => cmd_generate(&a),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn persist(path: &Path, text: &str) -> CliResult<()> {
    let tmp = staged(path, text.as_bytes())?;
    tmp.persist(path).map_err(|e| CliError::from(Error::Io(e.error)))?;
    Ok(())
}

pub fn cmd_simulate(args: &SimulateArgs) -> CliResult<()> {
    let mut cfg = match &args.config {
        Some(path) => serde_json::from_str::<ExperimentConfig>(&read_text(path)?)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?,
        None if args.full => ExperimentConfig::full(args.experiment),
        None => ExperimentConfig::scaled(args.experiment),
    };
    if cfg.experiment_id != args.experiment {
        return Err(CliError::input(format!(
            "config describes {}, not {}",
            cfg.experiment_id, args.experiment
        )));
    }
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    if let Some(r) = args.replicates {
        cfg.replicates = r;
    }
    if let Some(grid) = &args.n_grid {
        cfg.n_grid = grid.clone();
    }
    cfg.validate().map_err(CliError::input)?;

    let table = sim::run(&cfg)?;
    table.write(&args.out)?;
    print_summary(&cfg, &table)?;
    Ok(())
}

fn print_summary(cfg: &ExperimentConfig, table: &ResultTable) -> CliResult<()> {
    if cfg.experiment_id == ExperimentId::Fig8 {
        let s = sim::summarize_fig8(table)?;
        println!(
            "median squared error: true {:.3e}, naive {:.3e}, adjusted {:.3e}, adjusted (estimated) {:.3e}; excluded {} / {}",
            s.median_true,
            s.median_naive,
            s.median_adj_sigma,
            s.median_adj_sigma_hat,
            s.excluded_sigma,
            s.excluded_sigma_hat
        );
        return Ok(());
    }
    for row in &table.rows {
        let cells: Vec<String> = table
            .columns
            .iter()
            .zip(row)
            .map(|(c, v)| format!("{c}={v}"))
            .collect();
        println!("{}", cells.join(" "));
    }
    if table.skipped > 0 {
        println!("skipped replicates (disconnected): {}", table.skipped);
    }
    Ok(())
}

fn load_dataset(args: &DatasetArgs) -> CliResult<Dataset> {
    let adjacency = match (&args.edges, &args.matrix) {
        (Some(path), None) => adjacency_from_edge_text(&read_text(path)?, args.n_nodes, args.directed),
        (None, Some(path)) => parse_dense_matrix(&read_text(path)?)
            .and_then(|m| AdjacencyMatrix::from_dense(m, args.directed)),
        _ => return Err(CliError::input("exactly one of --edges or --matrix is required")),
    }
    .map_err(CliError::input)?;
    let responses = load_responses(args)?;
    Dataset::new(adjacency, responses).map_err(CliError::input)
}

fn load_responses(args: &DatasetArgs) -> CliResult<BTreeMap<usize, f64>> {
    match &args.responses {
        Some(path) => parse_responses(&read_text(path)?).map_err(CliError::input),
        None => Ok(BTreeMap::new()),
    }
}

fn spectral_embedding(data: &Dataset, args: &DatasetArgs) -> CliResult<LatentMatrix> {
    let a = data.adjacency.as_matrix();
    Ok(if args.directed {
        ase_directed(a, args.d_half)?
    } else {
        ase_undirected(a, args.d)?
    })
}

/// Labelled nodes in id order followed by the requested targets.
fn embedding_nodes(data: &Dataset, args: &DatasetArgs) -> CliResult<Vec<usize>> {
    let mut nodes = data.labelled();
    let targets = match &args.targets {
        Some(t) => t.clone(),
        None => data.unlabelled(),
    };
    for t in targets {
        if t >= data.n() {
            return Err(CliError::input(format!("target {t} is not a node")));
        }
        if !nodes.contains(&t) {
            nodes.push(t);
        }
    }
    Ok(nodes)
}

/// Embeds `nodes` at one lambda; returns the ids kept and their coordinates.
fn embed_at(
    points: &LatentMatrix,
    nodes: &[usize],
    lambda: f64,
    args: &DatasetArgs,
) -> CliResult<Vec<(usize, f64)>> {
    let graph = build_localization_graph(points, lambda)?;
    let comps = connectivity_report(&graph);
    let first = nodes.first().map(|&i| comps.label[i]);
    let kept: Vec<usize> = if nodes.iter().all(|&i| Some(comps.label[i]) == first) {
        nodes.to_vec()
    } else if args.largest_component {
        let largest = comps.largest();
        let kept: Vec<usize> = nodes.iter().copied().filter(|i| largest.contains(i)).collect();
        eprintln!(
            "warning: keeping {} of {} nodes in the largest component",
            kept.len(),
            nodes.len()
        );
        kept
    } else {
        return Err(Error::Disconnected {
            labels: nodes.iter().map(|&i| comps.label[i]).collect(),
        }
        .into());
    };
    if kept.len() < 2 {
        return Err(CliError::input("fewer than two nodes to embed"));
    }
    let dis = shortest_path_matrix_among(&graph, &kept)?;
    let opts = MdsOptions {
        restarts: args.restarts,
        ..MdsOptions::default()
    };
    let emb = minimize_raw_stress(&dis, &opts)?;
    Ok(kept.into_iter().zip(emb.z).collect())
}

pub fn cmd_embed(args: &EmbedArgs) -> CliResult<()> {
    let data = load_dataset(&args.data)?;
    let points = spectral_embedding(&data, &args.data)?;
    let nodes = embedding_nodes(&data, &args.data)?;
    let outputs: Vec<(PathBuf, f64)> = match &args.lambda_sweep {
        None => vec![(args.out.clone(), args.data.lambda)],
        Some(sweep) => sweep.iter().map(|&l| (sweep_path(&args.out, l), l)).collect(),
    };
    let mut texts = Vec::with_capacity(outputs.len());
    for (path, lambda) in &outputs {
        let coords = embed_at(&points, &nodes, *lambda, &args.data)?;
        texts.push((path.clone(), id_values_text("id,z", coords)));
    }
    let staged_files = texts
        .iter()
        .map(|(path, text)| Ok((path.clone(), staged(path, text.as_bytes())?)))
        .collect::<CliResult<Vec<_>>>()?;
    for (path, tmp) in staged_files {
        tmp.persist(&path).map_err(|e| CliError::from(Error::Io(e.error)))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

/// `dir/emb.csv` with lambda 0.4 becomes `dir/emb_lambda0.4.csv`.
pub fn sweep_path(out: &Path, lambda: f64) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}_lambda{lambda}.{}", ext.to_string_lossy()),
        None => format!("{stem}_lambda{lambda}"),
    };
    out.with_file_name(name)
}

/// Regression of the recorded responses on the coordinates.
#[derive(Debug, Clone)]
pub struct ApplyReport {
    pub fit: LinearFit,
    pub test: FTestResult,
    /// `(id, z, fitted, predicted)`; exactly one of the last two is set.
    pub rows: Vec<(usize, f64, Option<f64>, Option<f64>)>,
}

pub fn regress_coordinates(
    coords: &[(usize, f64)],
    responses: &BTreeMap<usize, f64>,
    level: f64,
) -> CliResult<ApplyReport> {
    let labelled: Vec<(f64, f64)> = coords
        .iter()
        .filter_map(|(id, z)| responses.get(id).map(|y| (*z, *y)))
        .collect();
    if labelled.len() < 3 {
        return Err(CliError {
            code: EXIT_DEGENERATE,
            message: format!("need at least 3 embedded nodes with responses, found {}", labelled.len()),
        });
    }
    let z: Vec<f64> = labelled.iter().map(|p| p.0).collect();
    let y: Vec<f64> = labelled.iter().map(|p| p.1).collect();
    let fit = ols_fit(&z, &y)?;
    let test = f_test(&y, &fit.fitted, y.len(), level)?;
    let mut rows: Vec<_> = coords
        .iter()
        .map(|&(id, z)| {
            let value = fit.predict(z);
            if responses.contains_key(&id) {
                (id, z, Some(value), None)
            } else {
                (id, z, None, Some(value))
            }
        })
        .collect();
    rows.sort_by_key(|r| r.0);
    Ok(ApplyReport { fit, test, rows })
}

pub fn cmd_apply(args: &ApplyArgs) -> CliResult<()> {
    if !(args.level > 0.0 && args.level < 1.0) {
        return Err(CliError::input("--level must lie in (0, 1)"));
    }
    let (coords, responses) = match &args.embedding {
        Some(path) => {
            let z = parse_id_values(&read_text(path)?, "embedding").map_err(CliError::input)?;
            let responses = load_responses(&args.data)?;
            if let Some(id) = responses.keys().find(|id| !z.contains_key(id)) {
                return Err(CliError::input(format!("response id {id} has no coordinate")));
            }
            // Labelled ids first, as `embed` orders them.
            let mut coords: Vec<(usize, f64)> =
                z.iter().filter(|(id, _)| responses.contains_key(id)).map(|(&i, &v)| (i, v)).collect();
            coords.extend(z.iter().filter(|(id, _)| !responses.contains_key(id)).map(|(&i, &v)| (i, v)));
            (coords, responses)
        }
        None => {
            let data = load_dataset(&args.data)?;
            if data.responses.len() < 3 {
                return Err(CliError {
                    code: EXIT_DEGENERATE,
                    message: format!("need at least 3 responses, found {}", data.responses.len()),
                });
            }
            let points = spectral_embedding(&data, &args.data)?;
            let nodes = embedding_nodes(&data, &args.data)?;
            let coords = embed_at(&points, &nodes, args.data.lambda, &args.data)?;
            (coords, data.responses)
        }
    };
    let report = regress_coordinates(&coords, &responses, args.level)?;
    let t = &report.test;
    println!("F = {} on ({}, {}) degrees of freedom, p-value = {:.6e}", t.f_stat, t.df1, t.df2, t.p_value);
    println!(
        "fitted line: y = {} + {} z",
        report.fit.alpha_hat, report.fit.beta_hat
    );
    println!(
        "slope {} at level {} (critical value {})",
        if t.reject { "significant" } else { "not significant" },
        t.level,
        t.critical_value
    );
    let mut text = String::from("id,z,fitted,predicted\n");
    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for (id, z, fitted, predicted) in &report.rows {
        text.push_str(&format!("{id},{z},{},{}\n", cell(*fitted), cell(*predicted)));
    }
    persist(&args.out_embedding, &text)
}

/// Directed graph with `x_i = psi(t_i)` on the Hardy-Weinberg curve and
/// `y_i = alpha + beta t_i + eps_i`.
pub fn cmd_generate(args: &GenerateArgs) -> CliResult<()> {
    let labelled = args.labelled.unwrap_or(args.n);
    if args.n < 3 || labelled > args.n {
        return Err(CliError::input("need n >= 3 and labelled <= n"));
    }
    let curve = curve_hardy_weinberg();
    let mut rng = RngStream::keyed(args.seed, &[0x0067_656e]);
    let t: Vec<f64> = (0..args.n).map(|_| rng.next_f64()).collect();
    let x = curve.latent_positions(&t)?;
    let a = sample_rdpg_directed(&x, &mut rng)?;
    let y = t[..labelled]
        .iter()
        .map(|&ti| Ok(args.alpha + args.beta * ti + rng.normal(0.0, args.sigma)?))
        .collect::<crate::Result<Vec<f64>>>()
        .map_err(CliError::input)?;
    fs::create_dir_all(&args.out_dir).map_err(|e| CliError::from(Error::Io(e)))?;
    let edges = args.out_dir.join("edges.csv");
    let responses = args.out_dir.join("responses.csv");
    persist(&edges, &edge_list_text(&a))?;
    persist(&responses, &id_values_text("id,response", y.into_iter().enumerate()))?;
    println!("wrote {} and {}", edges.display(), responses.display());
    Ok(())
}
