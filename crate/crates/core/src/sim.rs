//! Monte Carlo runners for the four simulation protocols.
//!
//! Every replicate draws from its own stream keyed by
//! `(experiment, n, replicate)`, replicates run on the rayon pool and are
//! aggregated in index order, so a table depends only on the configuration.

use std::fmt;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rdpg::{curve_diag_line, curve_hardy_weinberg, sample_rdpg, sample_scenario, ParamCurve};
use crate::regression::{
    adjusted_estimator, estimate_gamma_delta_method_at, f_statistic, naive_slope, ols_fit, predict_unknown_manifold,
    project_rows, PredictionConfig, VarianceProfile,
};
use crate::spectral::{ase_undirected, procrustes_align, LatentMatrix};
use crate::stats::{f_quantile, median, RngStream};
use crate::stress::MdsOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentId {
    Fig3,
    Fig4,
    Fig5,
    Fig8,
}

impl ExperimentId {
    fn stream_code(self) -> u64 {
        match self {
            Self::Fig3 => 3,
            Self::Fig4 => 4,
            Self::Fig5 => 5,
            Self::Fig8 => 8,
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Self::Fig3 => "fig3",
            Self::Fig4 => "fig4",
            Self::Fig5 => "fig5",
            Self::Fig8 => "fig8",
        };
        f.write_str(name)
    }
}

impl std::str::FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig3" => Ok(Self::Fig3),
            "fig4" => Ok(Self::Fig4),
            "fig5" => Ok(Self::Fig5),
            "fig8" => Ok(Self::Fig8),
            other => Err(Error::invalid(format!("unknown experiment {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub alpha: f64,
    pub beta: f64,
    pub sigma_eps: f64,
}

/// `lambda_K = base * decay^(K - 1)` where `n` is the `K`-th point of the
/// grid `n_start, n_start + n_step, ...`. Without `n_start`/`n_step`, `K` is
/// the position of `n` in `n_grid`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaSchedule {
    pub base: f64,
    pub decay: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_start: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_step: Option<usize>,
}

impl LambdaSchedule {
    pub fn lambda(&self, n: usize, grid_index: usize) -> f64 {
        let k = match (self.n_start, self.n_step) {
            (Some(start), Some(step)) if step > 0 => n.saturating_sub(start) / step,
            _ => grid_index,
        };
        self.base * self.decay.powi(k as i32)
    }
}

fn default_level() -> f64 {
    0.05
}

fn default_pilot() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment_id: ExperimentId,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    pub master_seed: u64,
    pub model: ModelParams,
    /// Labelled nodes (fig4, fig5). fig3 and fig8 label every node.
    pub s: usize,
    /// Nodes embedded on the line (fig4, fig5).
    pub l: usize,
    pub lambda_schedule: LambdaSchedule,
    /// Fraction of nodes entering the localization graph; never fewer than `l`.
    pub subset_fraction: f64,
    pub d: usize,
    /// Significance level of the F tests (fig5).
    #[serde(default = "default_level")]
    pub level: f64,
    /// Planted replicates used to estimate `Gamma` (fig8); 0 disables the correction.
    #[serde(default = "default_pilot")]
    pub pilot_replicates: usize,
    /// Replace the sampled adjacency by its expectation (fig3).
    #[serde(default)]
    pub noiseless: bool,
}

fn grid(start: usize, end: usize, step: usize) -> Vec<usize> {
    (start..=end).step_by(step).collect()
}

impl ExperimentConfig {
    /// Protocol at its published scale.
    pub fn full(id: ExperimentId) -> Self {
        match id {
            ExperimentId::Fig3 => Self {
                experiment_id: id,
                n_grid: grid(600, 2500, 100),
                replicates: 100,
                master_seed: 0,
                model: ModelParams {
                    alpha: 2.0,
                    beta: 5.0,
                    sigma_eps: 0.1,
                },
                s: 0,
                l: 0,
                lambda_schedule: LambdaSchedule {
                    base: 1.0,
                    decay: 1.0,
                    n_start: None,
                    n_step: None,
                },
                subset_fraction: 1.0,
                d: 3,
                level: default_level(),
                pilot_replicates: 0,
                noiseless: false,
            },
            ExperimentId::Fig4 => Self {
                experiment_id: id,
                n_grid: grid(500, 3000, 250),
                replicates: 100,
                master_seed: 0,
                model: ModelParams {
                    alpha: 2.0,
                    beta: 5.0,
                    sigma_eps: 0.01,
                },
                s: 20,
                l: 21,
                lambda_schedule: LambdaSchedule {
                    base: 0.8,
                    decay: 0.99,
                    n_start: Some(500),
                    n_step: Some(250),
                },
                subset_fraction: 0.1,
                d: 4,
                level: default_level(),
                pilot_replicates: 0,
                noiseless: false,
            },
            ExperimentId::Fig5 => Self {
                experiment_id: id,
                n_grid: grid(100, 1000, 50),
                replicates: 100,
                master_seed: 0,
                model: ModelParams {
                    alpha: 2.0,
                    beta: 5.0,
                    sigma_eps: 3.0,
                },
                s: 20,
                l: 21,
                lambda_schedule: LambdaSchedule {
                    base: 0.9,
                    decay: 0.99,
                    n_start: Some(100),
                    n_step: Some(50),
                },
                subset_fraction: 0.1,
                d: 4,
                level: default_level(),
                pilot_replicates: 0,
                noiseless: false,
            },
            ExperimentId::Fig8 => Self {
                experiment_id: id,
                n_grid: vec![800],
                replicates: 100,
                master_seed: 0,
                model: ModelParams {
                    alpha: 0.0,
                    beta: 5.0,
                    sigma_eps: 0.1,
                },
                s: 0,
                l: 0,
                lambda_schedule: LambdaSchedule {
                    base: 1.0,
                    decay: 1.0,
                    n_start: None,
                    n_step: None,
                },
                subset_fraction: 1.0,
                d: 3,
                level: default_level(),
                pilot_replicates: default_pilot(),
                noiseless: false,
            },
        }
    }

    /// Reduced grids that finish in minutes on one core.
    pub fn scaled(id: ExperimentId) -> Self {
        let mut cfg = Self::full(id);
        match id {
            ExperimentId::Fig3 => {
                cfg.n_grid = vec![600, 1200, 2500];
                cfg.replicates = 50;
            }
            ExperimentId::Fig4 => {
                cfg.n_grid = vec![500, 1500, 3000];
                cfg.replicates = 50;
            }
            ExperimentId::Fig5 => cfg.n_grid = vec![100, 1000],
            ExperimentId::Fig8 => {}
        }
        cfg
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::invalid("replicates must be at least 1"));
        }
        if self.n_grid.is_empty() {
            return Err(Error::invalid("n_grid is empty"));
        }
        let ls = &self.lambda_schedule;
        if !(ls.base > 0.0) || !(ls.decay > 0.0 && ls.decay <= 1.0) {
            return Err(Error::invalid("lambda schedule needs base > 0 and 0 < decay <= 1"));
        }
        if !(self.subset_fraction > 0.0 && self.subset_fraction <= 1.0) {
            return Err(Error::invalid("subset_fraction must lie in (0, 1]"));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::invalid("level must lie in (0, 1)"));
        }
        if !(self.model.sigma_eps > 0.0) {
            return Err(Error::invalid("sigma_eps must be positive"));
        }
        if self.d == 0 {
            return Err(Error::invalid("d must be at least 1"));
        }
        let min_n = *self.n_grid.iter().min().expect("nonempty");
        match self.experiment_id {
            ExperimentId::Fig4 | ExperimentId::Fig5 => {
                if self.s < 3 || self.l <= self.s {
                    return Err(Error::invalid("need s >= 3 and l > s"));
                }
                if min_n < self.l {
                    return Err(Error::invalid(format!("every n must be at least l = {}", self.l)));
                }
            }
            ExperimentId::Fig3 | ExperimentId::Fig8 => {
                if min_n < self.d.max(3) {
                    return Err(Error::invalid("n too small for the embedding dimension"));
                }
            }
        }
        if self.experiment_id == ExperimentId::Fig8 && self.pilot_replicates == 1 {
            return Err(Error::invalid("pilot_replicates must be 0 or at least 2"));
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(canonical.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    fn graph_nodes(&self, n: usize) -> usize {
        let m = (n as f64 * self.subset_fraction).ceil() as usize;
        m.max(self.l).min(n)
    }

    fn stream(&self, n: usize, replicate: usize) -> RngStream {
        RngStream::keyed(
            self.master_seed,
            &[self.experiment_id.stream_code(), n as u64, replicate as u64],
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub code_version: String,
}

/// Rectangular numeric table with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub provenance: Provenance,
    /// Replicates dropped for disconnected localization graphs.
    pub skipped: usize,
}

impl ResultTable {
    fn new(columns: &[&str], cfg: &ExperimentConfig) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            provenance: Provenance {
                config_hash: cfg.hash(),
                code_version: env!("CARGO_PKG_VERSION").to_string(),
            },
            skipped: 0,
        }
    }

    fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.columns.iter().position(|x| x == name)?;
        Some(self.rows.iter().map(|r| r[c]).collect())
    }

    /// Value of `name` in the row whose `n` column equals `n`.
    pub fn value_at(&self, n: usize, name: &str) -> Option<f64> {
        let nc = self.columns.iter().position(|x| x == "n")?;
        let c = self.columns.iter().position(|x| x == name)?;
        self.rows.iter().find(|r| r[nc] == n as f64).map(|r| r[c])
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let columns: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record?;
            let row = record
                .iter()
                .map(|cell| cell.trim().parse::<f64>().map_err(|e| Error::invalid(format!("bad cell {cell:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            if row.len() != columns.len() {
                return Err(Error::invalid("ragged result table"));
            }
            rows.push(row);
        }
        Ok(Self {
            columns,
            rows,
            provenance: Provenance {
                config_hash: String::new(),
                code_version: String::new(),
            },
            skipped: 0,
        })
    }

    /// Writes the CSV and a `<path>.meta.json` sidecar. Both files appear
    /// atomically or not at all.
    pub fn write(&self, path: &Path) -> Result<()> {
        let meta = serde_json::json!({
            "config_hash": self.provenance.config_hash,
            "code_version": self.provenance.code_version,
            "skipped": self.skipped,
            "rows": self.rows.len(),
        });
        let meta_path = sidecar_path(path);
        let csv_tmp = staged(path, self.to_csv_string().as_bytes())?;
        let meta_tmp = staged(&meta_path, serde_json::to_string_pretty(&meta)?.as_bytes())?;
        csv_tmp.persist(path).map_err(|e| Error::Io(e.error))?;
        meta_tmp.persist(&meta_path).map_err(|e| Error::Io(e.error))?;
        Ok(())
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".meta.json");
    path.with_file_name(name)
}

/// Writes `bytes` to a temporary file next to `path`, ready to be persisted.
pub fn staged(path: &Path, bytes: &[u8]) -> Result<tempfile::NamedTempFile> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    Ok(tmp)
}

pub fn run(cfg: &ExperimentConfig) -> Result<ResultTable> {
    match cfg.experiment_id {
        ExperimentId::Fig3 => run_fig3(cfg),
        ExperimentId::Fig4 => run_fig4(cfg),
        ExperimentId::Fig5 => run_fig5(cfg),
        ExperimentId::Fig8 => run_fig8(cfg),
    }
}

fn expect(cfg: &ExperimentConfig, id: ExperimentId) -> Result<()> {
    cfg.validate()?;
    if cfg.experiment_id != id {
        return Err(Error::invalid(format!("config is for {}, not {id}", cfg.experiment_id)));
    }
    Ok(())
}

/// Embeds the graph, aligns to the truth and projects onto the curve.
fn aligned_projections(
    a: &nalgebra::DMatrix<f64>,
    x: &LatentMatrix,
    d: usize,
    curve: &ParamCurve,
) -> Result<(LatentMatrix, Vec<f64>)> {
    let xhat = ase_undirected(a, d)?;
    let aligned = procrustes_align(&xhat, x)?.aligned;
    let t_hat = project_rows(curve, &aligned);
    Ok((aligned, t_hat))
}

/// Squared parameter errors `||theta_hat - theta||^2` of OLS on the true
/// and on the estimated regressors.
pub fn run_fig3(cfg: &ExperimentConfig) -> Result<ResultTable> {
    expect(cfg, ExperimentId::Fig3)?;
    let curve = curve_hardy_weinberg();
    let m = cfg.model;
    let mut table = ResultTable::new(&["n", "mse_true", "mse_sub"], cfg);
    for &n in &cfg.n_grid {
        let errs = (0..cfg.replicates)
            .into_par_iter()
            .map(|rep| {
                let mut rng = cfg.stream(n, rep);
                let (scn, x) = sample_scenario(&curve, n, n, m.alpha, m.beta, m.sigma_eps, &mut rng)?;
                let a = if cfg.noiseless {
                    x.gram()
                } else {
                    sample_rdpg(&x, &mut rng)?.as_matrix().clone()
                };
                let (_, t_hat) = aligned_projections(&a, &x, cfg.d, &curve)?;
                let truth = ols_fit(&scn.t, &scn.y)?;
                let sub = ols_fit(&t_hat, &scn.y)?;
                let se = |a: f64, b: f64| (a - m.alpha).powi(2) + (b - m.beta).powi(2);
                Ok((se(truth.alpha_hat, truth.beta_hat), se(sub.alpha_hat, sub.beta_hat)))
            })
            .collect::<Result<Vec<_>>>()?;
        let k = errs.len() as f64;
        let mse_true = errs.iter().map(|e| e.0).sum::<f64>() / k;
        let mse_sub = errs.iter().map(|e| e.1).sum::<f64>() / k;
        table.push(vec![n as f64, mse_true, mse_sub]);
    }
    Ok(table)
}

struct UnknownCurveDraw {
    /// `y_hat` at node `s` from the raw-stress coordinates and from the truth.
    pred_sub: f64,
    pred_true: f64,
    f_hat: f64,
    f_true: f64,
}

fn unknown_curve_replicate(cfg: &ExperimentConfig, n: usize, rep: usize, lambda: f64) -> Result<UnknownCurveDraw> {
    let curve = curve_diag_line();
    let m = cfg.model;
    let mut rng = cfg.stream(n, rep);
    let (scn, x) = sample_scenario(&curve, n, cfg.s, m.alpha, m.beta, m.sigma_eps, &mut rng)?;
    let a = sample_rdpg(&x, &mut rng)?;
    let pcfg = PredictionConfig {
        d: cfg.d,
        lambda,
        l: cfg.l,
        graph_nodes: Some(cfg.graph_nodes(n)),
        mds: MdsOptions::default(),
    };
    let out = predict_unknown_manifold(a.as_matrix(), &scn.y, &pcfg)?;
    let truth = ols_fit(&scn.t[..cfg.s], &scn.y)?;
    Ok(UnknownCurveDraw {
        pred_sub: out.predictions[cfg.s],
        pred_true: truth.predict(scn.t[cfg.s]),
        f_hat: f_statistic(&scn.y, &out.fit.fitted, cfg.s)?,
        f_true: f_statistic(&scn.y, &truth.fitted, cfg.s)?,
    })
}

/// Runs every replicate at `n`; disconnected localization graphs are
/// counted and dropped.
fn unknown_curve_batch(cfg: &ExperimentConfig, n: usize, lambda: f64) -> Result<(Vec<UnknownCurveDraw>, usize)> {
    let results: Vec<Result<UnknownCurveDraw>> = (0..cfg.replicates)
        .into_par_iter()
        .map(|rep| unknown_curve_replicate(cfg, n, rep, lambda))
        .collect();
    let mut kept = Vec::with_capacity(results.len());
    let mut skipped = 0;
    for r in results {
        match r {
            Ok(draw) => kept.push(draw),
            Err(Error::Disconnected { .. }) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok((kept, skipped))
}

/// Mean squared gap between predictions from raw-stress coordinates and
/// from the true regressors.
pub fn run_fig4(cfg: &ExperimentConfig) -> Result<ResultTable> {
    expect(cfg, ExperimentId::Fig4)?;
    let mut table = ResultTable::new(&["n", "lambda", "mse_pred", "completed", "skipped"], cfg);
    for (k, &n) in cfg.n_grid.iter().enumerate() {
        let lambda = cfg.lambda_schedule.lambda(n, k);
        let (draws, skipped) = unknown_curve_batch(cfg, n, lambda)?;
        let mse = if draws.is_empty() {
            f64::NAN
        } else {
            draws.iter().map(|d| (d.pred_sub - d.pred_true).powi(2)).sum::<f64>() / draws.len() as f64
        };
        table.skipped += skipped;
        table.push(vec![n as f64, lambda, mse, draws.len() as f64, skipped as f64]);
    }
    Ok(table)
}

/// Empirical powers of the F tests on true and on estimated regressors.
pub fn run_fig5(cfg: &ExperimentConfig) -> Result<ResultTable> {
    expect(cfg, ExperimentId::Fig5)?;
    let critical = f_quantile(1.0 - cfg.level, 1.0, (cfg.s - 2) as f64)?;
    let mut table = ResultTable::new(
        &["n", "lambda", "power_true", "power_hat", "power_diff", "completed", "skipped"],
        cfg,
    );
    for (k, &n) in cfg.n_grid.iter().enumerate() {
        let lambda = cfg.lambda_schedule.lambda(n, k);
        let (draws, skipped) = unknown_curve_batch(cfg, n, lambda)?;
        let share = |f: fn(&UnknownCurveDraw) -> f64| {
            draws.iter().filter(|d| f(d) > critical).count() as f64 / draws.len() as f64
        };
        let power_true = share(|d| d.f_true);
        let power_hat = share(|d| d.f_hat);
        table.skipped += skipped;
        table.push(vec![
            n as f64,
            lambda,
            power_true,
            power_hat,
            power_hat - power_true,
            draws.len() as f64,
            skipped as f64,
        ]);
    }
    Ok(table)
}

/// Per-node sample variance of `t_hat_i - t_i` over planted replicates.
pub fn pilot_gamma(cfg: &ExperimentConfig, n: usize) -> Result<VarianceProfile> {
    let p = cfg.pilot_replicates;
    if p == 0 {
        return Ok(VarianceProfile::zeros(n));
    }
    let curve = curve_hardy_weinberg();
    let m = cfg.model;
    let diffs = (0..p)
        .into_par_iter()
        .map(|rep| {
            let mut rng = RngStream::keyed(cfg.master_seed, &[cfg.experiment_id.stream_code(), n as u64, PILOT_KEY, rep as u64]);
            let (scn, x) = sample_scenario(&curve, n, 0, m.alpha, m.beta, m.sigma_eps, &mut rng)?;
            let a = sample_rdpg(&x, &mut rng)?;
            let (_, t_hat) = aligned_projections(a.as_matrix(), &x, cfg.d, &curve)?;
            Ok(t_hat.iter().zip(&scn.t).map(|(a, b)| a - b).collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let gamma = (0..n)
        .map(|i| {
            let mean = diffs.iter().map(|d| d[i]).sum::<f64>() / p as f64;
            diffs.iter().map(|d| (d[i] - mean).powi(2)).sum::<f64>() / (p - 1) as f64
        })
        .collect();
    VarianceProfile::new(gamma)
}

const PILOT_KEY: u64 = 0x0070_696c_6f74;

/// Per-replicate squared errors of the no-intercept slope estimators.
/// Replicates whose adjusted denominator is not positive carry `NaN` in
/// that column.
pub fn run_fig8(cfg: &ExperimentConfig) -> Result<ResultTable> {
    expect(cfg, ExperimentId::Fig8)?;
    let curve = curve_hardy_weinberg();
    let m = cfg.model;
    let mut table = ResultTable::new(
        &["n", "replicate", "se_true", "se_naive", "se_adj_sigma", "se_adj_sigma_hat"],
        cfg,
    );
    for &n in &cfg.n_grid {
        let gamma = pilot_gamma(cfg, n)?;
        let rows = (0..cfg.replicates)
            .into_par_iter()
            .map(|rep| {
                let mut rng = cfg.stream(n, rep);
                let (scn, x) = sample_scenario(&curve, n, n, m.alpha, m.beta, m.sigma_eps, &mut rng)?;
                let a = sample_rdpg(&x, &mut rng)?;
                let (aligned, t_hat) = aligned_projections(a.as_matrix(), &x, cfg.d, &curve)?;
                let gamma_hat = estimate_gamma_delta_method_at(&aligned, &curve, &t_hat)?;
                let se = |b: f64| (b - m.beta).powi(2);
                let or_nan = |r: Result<f64>| match r {
                    Ok(b) => Ok(se(b)),
                    Err(Error::NonPositiveDenominator(_)) => Ok(f64::NAN),
                    Err(e) => Err(e),
                };
                Ok(vec![
                    n as f64,
                    rep as f64,
                    se(naive_slope(&scn.t, &scn.y)?),
                    se(naive_slope(&t_hat, &scn.y)?),
                    or_nan(adjusted_estimator(&t_hat, &scn.y, &gamma))?,
                    or_nan(adjusted_estimator(&t_hat, &scn.y, &gamma_hat))?,
                ])
            })
            .collect::<Result<Vec<_>>>()?;
        rows.into_iter().for_each(|r| table.push(r));
    }
    Ok(table)
}

/// Medians of the fig8 columns with `NaN` entries excluded.
#[derive(Debug, Clone, PartialEq)]
pub struct Fig8Summary {
    pub median_true: f64,
    pub median_naive: f64,
    pub median_adj_sigma: f64,
    pub median_adj_sigma_hat: f64,
    pub excluded_sigma: usize,
    pub excluded_sigma_hat: usize,
}

pub fn summarize_fig8(table: &ResultTable) -> Result<Fig8Summary> {
    let col = |name: &str| table.column(name).ok_or_else(|| Error::invalid(format!("missing column {name}")));
    let finite_median = |v: Vec<f64>| -> Result<(f64, usize)> {
        let kept: Vec<f64> = v.iter().copied().filter(|x| !x.is_nan()).collect();
        Ok((median(&kept)?, v.len() - kept.len()))
    };
    let (median_true, _) = finite_median(col("se_true")?)?;
    let (median_naive, _) = finite_median(col("se_naive")?)?;
    let (median_adj_sigma, excluded_sigma) = finite_median(col("se_adj_sigma")?)?;
    let (median_adj_sigma_hat, excluded_sigma_hat) = finite_median(col("se_adj_sigma_hat")?)?;
    Ok(Fig8Summary {
        median_true,
        median_naive,
        median_adj_sigma,
        median_adj_sigma_hat,
        excluded_sigma,
        excluded_sigma_hat,
    })
}
