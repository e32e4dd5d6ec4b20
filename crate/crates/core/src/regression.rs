//! Regression on estimated regressors.
//!
//! Covers the plug-in estimators on a known curve, the prediction pipeline
//! for an unknown curve (spectral embedding, localization graph, shortest
//! paths, raw-stress embedding, least squares), the F test for `beta = 0`,
//! and the measurement-error adjusted slope for the no-intercept model.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geodesic::{build_localization_graph, shortest_path_matrix, shortest_path_matrix_among};
use crate::rdpg::{norm, ParamCurve};
use crate::spectral::{ase_undirected, LatentMatrix};
use crate::stats::{f_quantile, f_sf};
use crate::stress::{minimize_raw_stress, Embedding1D, MdsOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub alpha_hat: f64,
    pub beta_hat: f64,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
    pub s: usize,
    pub t_mean: f64,
    pub y_mean: f64,
}

impl LinearFit {
    pub fn predict(&self, t_new: f64) -> f64 {
        predict(self, t_new)
    }
}

/// Ordinary least squares of `y` on `t` with intercept.
pub fn ols_fit(t: &[f64], y: &[f64]) -> Result<LinearFit> {
    if t.len() != y.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} responses", t.len()),
            found: format!("{}", y.len()),
        });
    }
    let s = t.len();
    if s < 2 {
        return Err(Error::invalid("least squares needs at least two points"));
    }
    let t_mean = t.iter().sum::<f64>() / s as f64;
    let y_mean = y.iter().sum::<f64>() / s as f64;
    let stt: f64 = t.iter().map(|ti| (ti - t_mean).powi(2)).sum();
    if !(stt > 1e-12 * s as f64) {
        return Err(Error::DegenerateRegressors);
    }
    let sty: f64 = t.iter().zip(y).map(|(ti, yi)| (ti - t_mean) * (yi - y_mean)).sum();
    let beta_hat = sty / stt;
    let alpha_hat = y_mean - beta_hat * t_mean;
    let fitted: Vec<f64> = t.iter().map(|ti| alpha_hat + beta_hat * ti).collect();
    let residuals = y.iter().zip(&fitted).map(|(yi, fi)| yi - fi).collect();
    Ok(LinearFit {
        alpha_hat,
        beta_hat,
        fitted,
        residuals,
        s,
        t_mean,
        y_mean,
    })
}

pub fn predict(fit: &LinearFit, t_new: f64) -> f64 {
    fit.alpha_hat + fit.beta_hat * t_new
}

/// Global minimizer of `||point - psi(t)||` over `[0, L]`.
///
/// A 1024-point grid scan picks every local minimum; each is refined by
/// golden-section search inside its neighbouring grid cells to
/// `|dt| < 1e-10 L`. Equal distances resolve to the smallest `t`.
pub fn project_to_curve(curve: &ParamCurve, point: &[f64]) -> f64 {
    const GRID: usize = 1024;
    let len = curve.length();
    let dist2 = |t: f64| -> f64 {
        curve
            .eval(t)
            .iter()
            .zip(point)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    };
    let grid: Vec<f64> = (0..GRID).map(|k| len * k as f64 / (GRID - 1) as f64).collect();
    let values: Vec<f64> = grid.iter().map(|&t| dist2(t)).collect();

    let mut best_t = f64::NAN;
    let mut best_v = f64::INFINITY;
    let mut consider = |t: f64, v: f64| {
        let tie = best_v.is_finite() && (v - best_v).abs() <= 1e-12 * best_v.max(1e-300);
        if v < best_v && !tie || tie && t < best_t {
            best_t = t;
            best_v = v;
        }
    };
    for k in 0..GRID {
        let left = if k > 0 { values[k - 1] } else { f64::INFINITY };
        let right = if k + 1 < GRID { values[k + 1] } else { f64::INFINITY };
        if values[k] > left || values[k] > right {
            continue;
        }
        let lo = grid[k.saturating_sub(1)];
        let hi = grid[(k + 1).min(GRID - 1)];
        let (t, v) = golden_section(&dist2, lo, hi, 1e-10 * len);
        if v <= values[k] {
            consider(t, v);
        } else {
            consider(grid[k], values[k]);
        }
    }
    best_t
}

fn golden_section(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let candidates = [(a, f(a)), (c, fc), (d, fd), (b, f(b))];
    candidates
        .into_iter()
        .min_by(|x, y| x.1.total_cmp(&y.1).then(x.0.total_cmp(&y.0)))
        .expect("nonempty")
}

#[derive(Debug, Clone)]
pub struct KnownManifoldEstimate {
    pub alpha_sub: f64,
    pub beta_sub: f64,
    pub t_hat: Vec<f64>,
    pub aligned: LatentMatrix,
}

/// Plug-in estimates on a known curve: embed, rotate by `w`, project each
/// row onto the curve, regress `y` on the projections.
pub fn est_known_manifold(
    a: &DMatrix<f64>,
    w: &DMatrix<f64>,
    d: usize,
    curve: &ParamCurve,
    y: &[f64],
) -> Result<KnownManifoldEstimate> {
    if y.len() != a.nrows() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} responses", a.nrows()),
            found: format!("{}", y.len()),
        });
    }
    let xhat = ase_undirected(a, d)?;
    let aligned = xhat.transform(w)?;
    let t_hat = project_rows(curve, &aligned);
    let fit = ols_fit(&t_hat, y)?;
    Ok(KnownManifoldEstimate {
        alpha_sub: fit.alpha_hat,
        beta_sub: fit.beta_hat,
        t_hat,
        aligned,
    })
}

pub fn project_rows(curve: &ParamCurve, x: &LatentMatrix) -> Vec<f64> {
    use rayon::prelude::*;
    (0..x.nrows())
        .into_par_iter()
        .map(|i| project_to_curve(curve, &x.row(i)))
        .collect()
}

/// Settings for the unknown-curve prediction pipeline.
#[derive(Debug, Clone)]
pub struct PredictionConfig {
    pub d: usize,
    pub lambda: f64,
    /// Nodes `0..l` are embedded on the line.
    pub l: usize,
    /// Restrict the localization graph to the first `graph_nodes` embedded
    /// points (`None` uses all `n`). Must be at least `l`.
    pub graph_nodes: Option<usize>,
    pub mds: MdsOptions,
}

#[derive(Debug, Clone)]
pub struct PredictionOutcome {
    pub embedding: Embedding1D,
    /// Least-squares fit of the `s` responses on `z_0..z_{s-1}`.
    pub fit: LinearFit,
    /// `a_hat + b_hat z_i` for every embedded node `i < l`.
    pub predictions: Vec<f64>,
}

/// The full unknown-curve pipeline on a symmetric adjacency matrix.
///
/// `y` holds the responses of nodes `0..s`; predictions are returned for all
/// nodes `0..l`.
pub fn predict_unknown_manifold(a: &DMatrix<f64>, y: &[f64], cfg: &PredictionConfig) -> Result<PredictionOutcome> {
    let n = a.nrows();
    let s = y.len();
    if s < 3 {
        return Err(Error::invalid(format!("need s >= 3 labelled nodes, got {s}")));
    }
    if !(s < cfg.l && cfg.l <= n) {
        return Err(Error::invalid(format!("need s < l <= n (s = {s}, l = {}, n = {n})", cfg.l)));
    }
    let m = cfg.graph_nodes.unwrap_or(n);
    if m < cfg.l || m > n {
        return Err(Error::invalid(format!("graph_nodes = {m} must lie in [{}, {n}]", cfg.l)));
    }
    let xhat = ase_undirected(a, cfg.d)?;
    let points = if m < n { xhat.head(m) } else { xhat };
    let graph = build_localization_graph(&points, cfg.lambda)?;
    let dis = shortest_path_matrix(&graph, cfg.l)?;
    let embedding = minimize_raw_stress(&dis, &cfg.mds)?;
    regress_on_embedding(embedding, y)
}

/// Final two steps of the pipeline: least squares on the first `s`
/// coordinates, then predictions at every coordinate.
pub fn regress_on_embedding(embedding: Embedding1D, y: &[f64]) -> Result<PredictionOutcome> {
    let s = y.len();
    if embedding.z.len() < s {
        return Err(Error::invalid("embedding shorter than the response vector"));
    }
    let fit = ols_fit(&embedding.z[..s], y)?;
    let predictions = embedding.z.iter().map(|&z| fit.predict(z)).collect();
    Ok(PredictionOutcome {
        embedding,
        fit,
        predictions,
    })
}

/// Predicted response at node `r` (0-based, `s <= r < l`).
pub fn pred_unknown_manifold(a: &DMatrix<f64>, d: usize, lambda: f64, l: usize, y: &[f64], r: usize) -> Result<f64> {
    if !(y.len() <= r && r < l) {
        return Err(Error::invalid(format!("target r = {r} must satisfy s <= r < l")));
    }
    let cfg = PredictionConfig {
        d,
        lambda,
        l,
        graph_nodes: None,
        mds: MdsOptions::default(),
    };
    Ok(predict_unknown_manifold(a, y, &cfg)?.predictions[r])
}

/// Embeds an arbitrary node subset: graph on all points, shortest paths
/// among `nodes`, raw-stress embedding.
pub fn embed_nodes(points: &LatentMatrix, lambda: f64, nodes: &[usize], mds: &MdsOptions) -> Result<Embedding1D> {
    let graph = build_localization_graph(points, lambda)?;
    let dis = shortest_path_matrix_among(&graph, nodes)?;
    minimize_raw_stress(&dis, mds)
}

/// `(s - 2) sum (y_hat - y_bar)^2 / sum (y - y_hat)^2` over the first `s` entries.
pub fn f_statistic(y: &[f64], y_hat: &[f64], s: usize) -> Result<f64> {
    if s < 3 {
        return Err(Error::invalid(format!("F statistic needs s >= 3, got {s}")));
    }
    if y.len() < s || y_hat.len() < s {
        return Err(Error::ShapeMismatch {
            expected: format!("at least {s} values"),
            found: format!("{} and {}", y.len(), y_hat.len()),
        });
    }
    let (y, y_hat) = (&y[..s], &y_hat[..s]);
    let y_bar = y.iter().sum::<f64>() / s as f64;
    let ssr: f64 = y_hat.iter().map(|v| (v - y_bar).powi(2)).sum();
    let sse: f64 = y.iter().zip(y_hat).map(|(a, b)| (a - b).powi(2)).sum();
    let sst: f64 = y.iter().map(|v| (v - y_bar).powi(2)).sum();
    if sse <= 1e-20 * sst.max(1e-300) {
        return Err(Error::PerfectFit);
    }
    Ok((s - 2) as f64 * ssr / sse)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FTestResult {
    pub f_stat: f64,
    pub df1: usize,
    pub df2: usize,
    pub p_value: f64,
    pub level: f64,
    pub critical_value: f64,
    pub reject: bool,
}

impl FTestResult {
    /// Decision at another significance level.
    pub fn reject_at(&self, level: f64) -> Result<bool> {
        Ok(self.f_stat > f_quantile(1.0 - level, self.df1 as f64, self.df2 as f64)?)
    }
}

/// F test of `beta = 0`: reject when `F` exceeds the `1 - level` quantile of
/// `F(1, s - 2)`.
pub fn f_test(y: &[f64], y_hat: &[f64], s: usize, level: f64) -> Result<FTestResult> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid(format!("level = {level} must lie in (0, 1)")));
    }
    let f_stat = f_statistic(y, y_hat, s)?;
    f_test_from_statistic(f_stat, s, level)
}

pub fn f_test_from_statistic(f_stat: f64, s: usize, level: f64) -> Result<FTestResult> {
    let df2 = s
        .checked_sub(2)
        .filter(|&d| d >= 1)
        .ok_or_else(|| Error::invalid("need s >= 3"))?;
    let p_value = f_sf(f_stat, 1.0, df2 as f64)?;
    let critical_value = f_quantile(1.0 - level, 1.0, df2 as f64)?;
    Ok(FTestResult {
        f_stat,
        df1: 1,
        df2,
        p_value,
        level,
        critical_value,
        reject: f_stat > critical_value,
    })
}

/// `Gamma_i = var(t_hat_i - t_i)` estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceProfile {
    pub gamma: Vec<f64>,
}

impl VarianceProfile {
    pub fn new(gamma: Vec<f64>) -> Result<Self> {
        if gamma.iter().any(|g| !(*g >= 0.0) || !g.is_finite()) {
            return Err(Error::invalid("variance profile entries must be finite and nonnegative"));
        }
        Ok(Self { gamma })
    }

    pub fn zeros(n: usize) -> Self {
        Self { gamma: vec![0.0; n] }
    }

    pub fn total(&self) -> f64 {
        self.gamma.iter().sum()
    }
}

/// No-intercept least-squares slope `sum y t / sum t^2`.
pub fn naive_slope(t_hat: &[f64], y: &[f64]) -> Result<f64> {
    adjusted_estimator(t_hat, y, &VarianceProfile::zeros(t_hat.len()))
}

/// Measurement-error adjusted slope `sum y t_hat / (sum t_hat^2 - sum Gamma)`
/// for `y = beta t + eps`.
pub fn adjusted_estimator(t_hat: &[f64], y: &[f64], gamma: &VarianceProfile) -> Result<f64> {
    if t_hat.len() != y.len() || gamma.gamma.len() != y.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} entries", t_hat.len()),
            found: format!("{} responses, {} variances", y.len(), gamma.gamma.len()),
        });
    }
    let num: f64 = y.iter().zip(t_hat).map(|(a, b)| a * b).sum();
    let den = t_hat.iter().map(|t| t * t).sum::<f64>() - gamma.total();
    if !(den > 1e-12) {
        return Err(Error::NonPositiveDenominator(den));
    }
    Ok(num / den)
}

/// Delta-method estimate of `var(t_hat_i - t_i)` from the aligned embedding.
///
/// The asymptotic covariance of row `i` is replaced by its empirical
/// plug-in over all rows, and the gradient of the curve inverse by
/// `psi'(t_hat) / ||psi'(t_hat)||^2`:
/// `Gamma_i = g^T Delta^{-1} M_i Delta^{-1} g / n` with `Delta = X^T X / n`
/// and `M_i = (1/n) sum_j p_ij (1 - p_ij) x_j x_j^T`, `p_ij` clamped to [0, 1].
pub fn estimate_gamma_delta_method(x_tilde: &LatentMatrix, curve: &ParamCurve) -> Result<VarianceProfile> {
    let t_hat = project_rows(curve, x_tilde);
    estimate_gamma_delta_method_at(x_tilde, curve, &t_hat)
}

/// As [`estimate_gamma_delta_method`] with precomputed projections.
pub fn estimate_gamma_delta_method_at(
    x_tilde: &LatentMatrix,
    curve: &ParamCurve,
    t_hat: &[f64],
) -> Result<VarianceProfile> {
    let n = x_tilde.nrows();
    let d = x_tilde.ncols();
    if n < d {
        return Err(Error::invalid(format!("need n >= d (n = {n}, d = {d})")));
    }
    if t_hat.len() != n {
        return Err(Error::ShapeMismatch {
            expected: format!("{n} projections"),
            found: format!("{}", t_hat.len()),
        });
    }
    let x = x_tilde.as_matrix();
    let delta = x.transpose() * x / n as f64;
    let eig = delta.clone().symmetric_eigen();
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    let cond = if min > 0.0 { max / min } else { f64::INFINITY };
    if !(cond < 1e12) {
        return Err(Error::SingularMoment(cond));
    }
    let delta_inv = delta.try_inverse().ok_or(Error::SingularMoment(cond))?;
    let p = x * x.transpose();

    use rayon::prelude::*;
    let gamma: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let tangent = curve.deriv(t_hat[i]);
            let speed2 = norm(&tangent).powi(2);
            let g = DVector::from_iterator(d, tangent.iter().map(|v| v / speed2));
            let h = &delta_inv * g;
            let proj = x * &h;
            let mut acc = 0.0;
            for j in 0..n {
                let pij = p[(i, j)].clamp(0.0, 1.0);
                acc += pij * (1.0 - pij) * proj[j] * proj[j];
            }
            acc / (n as f64 * n as f64)
        })
        .collect();
    VarianceProfile::new(gamma)
}
