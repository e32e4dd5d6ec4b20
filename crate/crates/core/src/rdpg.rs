//! Curves carrying the latent positions, random dot product graph sampling
//! and regression scenarios.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::spectral::LatentMatrix;
use crate::stats::{normal, uniform, RngStream};

type CurveFn = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

/// A parameterized curve `psi: [0, L] -> R^d`.
#[derive(Clone)]
pub struct ParamCurve {
    name: String,
    length: f64,
    dim: usize,
    eval: CurveFn,
    deriv: Option<CurveFn>,
    arclength: bool,
}

impl fmt::Debug for ParamCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParamCurve")
            .field("name", &self.name)
            .field("length", &self.length)
            .field("dim", &self.dim)
            .field("arclength", &self.arclength)
            .finish()
    }
}

impl ParamCurve {
    /// A curve without an analytic derivative; `deriv` falls back to central
    /// differences with step `1e-6 L`.
    pub fn new<F>(name: impl Into<String>, length: f64, eval: F) -> Result<Self>
    where
        F: Fn(f64) -> Vec<f64> + Send + Sync + 'static,
    {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::invalid(format!("curve length {length} must be positive")));
        }
        let dim = eval(0.0).len();
        if dim == 0 {
            return Err(Error::invalid("curve must map into R^d with d >= 1"));
        }
        Ok(Self {
            name: name.into(),
            length,
            dim,
            eval: Arc::new(eval),
            deriv: None,
            arclength: false,
        })
    }

    pub fn with_derivative<F>(mut self, deriv: F) -> Self
    where
        F: Fn(f64) -> Vec<f64> + Send + Sync + 'static,
    {
        self.deriv = Some(Arc::new(deriv));
        self
    }

    /// Marks the curve unit-speed after checking `||psi'|| = 1 +- 1e-6` on a
    /// 1024-point grid.
    pub fn arclength_parameterized(mut self) -> Result<Self> {
        for k in 0..1024 {
            let t = self.length * k as f64 / 1023.0;
            let speed = norm(&self.deriv(t));
            if (speed - 1.0).abs() > 1e-6 {
                return Err(Error::invalid(format!(
                    "curve '{}' has speed {speed} at t = {t}",
                    self.name
                )));
            }
        }
        self.arclength = true;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_arclength(&self) -> bool {
        self.arclength
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        (self.eval)(t)
    }

    pub fn deriv(&self, t: f64) -> Vec<f64> {
        if let Some(d) = &self.deriv {
            return d(t);
        }
        let h = 1e-6 * self.length;
        let lo = (t - h).max(0.0);
        let hi = (t + h).min(self.length);
        let a = self.eval(lo);
        let b = self.eval(hi);
        a.iter().zip(&b).map(|(x, y)| (y - x) / (hi - lo)).collect()
    }

    /// Rows `psi(t_i)`.
    pub fn latent_positions(&self, t: &[f64]) -> Result<LatentMatrix> {
        let mut m = DMatrix::zeros(t.len(), self.dim);
        for (i, &ti) in t.iter().enumerate() {
            for (j, v) in self.eval(ti).into_iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        LatentMatrix::new(m)
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `psi(t) = (t^2, 2t(1-t), (1-t)^2)` on `[0, 1]`.
pub fn curve_hardy_weinberg() -> ParamCurve {
    ParamCurve::new("hardy-weinberg", 1.0, |t| {
        vec![t * t, 2.0 * t * (1.0 - t), (1.0 - t) * (1.0 - t)]
    })
    .expect("valid curve")
    .with_derivative(|t| vec![2.0 * t, 2.0 - 4.0 * t, -2.0 * (1.0 - t)])
}

/// `psi(t) = (t/2, t/2, t/2, t/2)` on `[0, 1]`, unit speed.
pub fn curve_diag_line() -> ParamCurve {
    ParamCurve::new("diag-line", 1.0, |t| vec![0.5 * t; 4])
        .expect("valid curve")
        .with_derivative(|_| vec![0.5; 4])
        .arclength_parameterized()
        .expect("unit speed")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerProductReport {
    pub min_ip: f64,
    pub max_ip: f64,
    pub valid: bool,
}

/// Checks that `psi(t_i)^T psi(t_j)` lies in `[0, 1]` (tolerance 1e-12) over
/// an evenly spaced grid.
pub fn validate_inner_products(curve: &ParamCurve, grid_size: usize) -> Result<InnerProductReport> {
    if grid_size < 2 {
        return Err(Error::invalid("grid_size must be at least 2"));
    }
    let points: Vec<Vec<f64>> = (0..grid_size)
        .map(|k| curve.eval(curve.length() * k as f64 / (grid_size - 1) as f64))
        .collect();
    let mut min_ip = f64::INFINITY;
    let mut max_ip = f64::NEG_INFINITY;
    for a in &points {
        for b in &points {
            let ip: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            min_ip = min_ip.min(ip);
            max_ip = max_ip.max(ip);
        }
    }
    let tol = 1e-12;
    Ok(InnerProductReport {
        min_ip,
        max_ip,
        valid: min_ip >= -tol && max_ip <= 1.0 + tol,
    })
}

/// A hollow binary graph; symmetric unless directed.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyMatrix {
    entries: DMatrix<f64>,
    directed: bool,
}

impl AdjacencyMatrix {
    pub fn from_dense(entries: DMatrix<f64>, directed: bool) -> Result<Self> {
        let n = entries.nrows();
        if entries.ncols() != n {
            return Err(Error::ShapeMismatch {
                expected: "square adjacency".into(),
                found: format!("{}x{}", entries.nrows(), entries.ncols()),
            });
        }
        for i in 0..n {
            if entries[(i, i)] != 0.0 {
                return Err(Error::invalid(format!("adjacency diagonal entry {i} is nonzero")));
            }
            for j in 0..n {
                let v = entries[(i, j)];
                if v != 0.0 && v != 1.0 {
                    return Err(Error::invalid(format!("adjacency entry ({i}, {j}) = {v} is not binary")));
                }
                if !directed && v != entries[(j, i)] {
                    return Err(Error::NotSymmetric { row: i, col: j, gap: 1.0 });
                }
            }
        }
        Ok(Self { entries, directed })
    }

    /// Builds from `(src, dst)` pairs; undirected edges are mirrored and
    /// duplicates collapse. Self-loops are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)], directed: bool) -> Result<Self> {
        let mut entries = DMatrix::zeros(n, n);
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::invalid(format!("edge ({a}, {b}) out of range for {n} nodes")));
            }
            if a == b {
                return Err(Error::invalid(format!("self-loop on node {a}")));
            }
            entries[(a, b)] = 1.0;
            if !directed {
                entries[(b, a)] = 1.0;
            }
        }
        Ok(Self { entries, directed })
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn edge_count(&self) -> usize {
        let ones = self.entries.iter().filter(|&&v| v == 1.0).count();
        if self.directed {
            ones
        } else {
            ones / 2
        }
    }
}

fn checked_probability(i: usize, j: usize, ip: f64) -> Result<f64> {
    if !(-1e-9..=1.0 + 1e-9).contains(&ip) {
        return Err(Error::InnerProductDomain { i, j, value: ip });
    }
    Ok(ip.clamp(0.0, 1.0))
}

/// Undirected hollow RDPG: `A_ij ~ Bernoulli(x_i^T x_j)` for `i < j`,
/// sampled row by row over the upper triangle and mirrored.
pub fn sample_rdpg(x: &LatentMatrix, rng: &mut RngStream) -> Result<AdjacencyMatrix> {
    let p = x.gram();
    let n = x.nrows();
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let prob = checked_probability(i, j, p[(i, j)])?;
            if rng.bernoulli(prob) {
                a[(i, j)] = 1.0;
                a[(j, i)] = 1.0;
            }
        }
    }
    Ok(AdjacencyMatrix {
        entries: a,
        directed: false,
    })
}

/// Directed hollow RDPG: `A_ij ~ Bernoulli(x_i^T x_j)` independently for all
/// `i != j`, row-major order.
pub fn sample_rdpg_directed(x: &LatentMatrix, rng: &mut RngStream) -> Result<AdjacencyMatrix> {
    let p = x.gram();
    let n = x.nrows();
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let prob = checked_probability(i, j, p[(i, j)])?;
            if rng.bernoulli(prob) {
                a[(i, j)] = 1.0;
            }
        }
    }
    Ok(AdjacencyMatrix {
        entries: a,
        directed: true,
    })
}

/// Regressors for all nodes and responses `y_i = alpha + beta t_i + eps_i`
/// for the first `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionScenario {
    pub alpha: f64,
    pub beta: f64,
    pub sigma_eps: f64,
    pub s: usize,
    pub t: Vec<f64>,
    pub y: Vec<f64>,
}

/// Draws `t_1..t_n ~ U[0, L]`, then `s` Gaussian errors, in that order.
pub fn sample_scenario(
    curve: &ParamCurve,
    n: usize,
    s: usize,
    alpha: f64,
    beta: f64,
    sigma_eps: f64,
    rng: &mut RngStream,
) -> Result<(RegressionScenario, LatentMatrix)> {
    if n == 0 || s > n {
        return Err(Error::invalid(format!("need 1 <= n and s <= n (n = {n}, s = {s})")));
    }
    if !(sigma_eps > 0.0) {
        return Err(Error::invalid(format!("sigma_eps = {sigma_eps} must be positive")));
    }
    let t = (0..n)
        .map(|_| uniform(rng, 0.0, curve.length()))
        .collect::<Result<Vec<_>>>()?;
    let y = t[..s]
        .iter()
        .map(|&ti| Ok(alpha + beta * ti + normal(rng, 0.0, sigma_eps)?))
        .collect::<Result<Vec<_>>>()?;
    let x = curve.latent_positions(&t)?;
    Ok((
        RegressionScenario {
            alpha,
            beta,
            sigma_eps,
            s,
            t,
            y,
        },
        x,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn hardy_weinberg_points() {
        let c = curve_hardy_weinberg();
        assert!(close(&c.eval(0.0), &[0.0, 0.0, 1.0], 0.0));
        assert!(close(&c.eval(0.5), &[0.25, 0.5, 0.25], 1e-15));
        assert!(close(&c.eval(1.0), &[1.0, 0.0, 0.0], 0.0));
        assert!(!c.is_arclength());
    }

    #[test]
    fn diag_line_points() {
        let c = curve_diag_line();
        assert!(close(&c.eval(1.0), &[0.5; 4], 0.0));
        assert!((norm(&c.deriv(0.37)) - 1.0).abs() < 1e-15);
        assert!(c.is_arclength());
        let ip: f64 = c.eval(0.3).iter().zip(c.eval(0.6)).map(|(a, b)| a * b).sum();
        assert!((ip - 0.18).abs() < 1e-15);
    }

    #[test]
    fn numeric_derivative_fallback() {
        let c = ParamCurve::new("hw-numeric", 1.0, |t| vec![t * t, 2.0 * t * (1.0 - t), (1.0 - t) * (1.0 - t)]).unwrap();
        let analytic = curve_hardy_weinberg().deriv(0.3);
        assert!(close(&c.deriv(0.3), &analytic, 1e-6));
    }

    #[test]
    fn inner_product_validation() {
        let hw = validate_inner_products(&curve_hardy_weinberg(), 256).unwrap();
        assert!(hw.valid && hw.max_ip <= 1.0);
        let line = validate_inner_products(&curve_diag_line(), 256).unwrap();
        assert_eq!(line.min_ip, 0.0);
        assert!((line.max_ip - 1.0).abs() < 1e-15);
        let bad = ParamCurve::new("bad", 1.0, |t| vec![2.0 * t, 0.0, 0.0]).unwrap();
        let r = validate_inner_products(&bad, 16).unwrap();
        assert!(!r.valid);
        assert_eq!(r.max_ip, 4.0);
    }

    #[test]
    fn degenerate_probabilities() {
        let mut rng = RngStream::new(1, 1);
        let ones = LatentMatrix::from_rows(&vec![vec![1.0, 0.0, 0.0]; 6]).unwrap();
        let a = sample_rdpg(&ones, &mut rng).unwrap();
        assert_eq!(a.edge_count(), 15);
        let zeros = LatentMatrix::from_rows(&vec![vec![0.0, 0.0, 0.0]; 6]).unwrap();
        assert_eq!(sample_rdpg(&zeros, &mut rng).unwrap().edge_count(), 0);
    }

    #[test]
    fn domain_error_names_pair() {
        let mut rng = RngStream::new(1, 1);
        let x = LatentMatrix::from_rows(&[vec![0.5, 0.0], vec![0.5, 0.0], vec![2.5, 0.0]]).unwrap();
        match sample_rdpg(&x, &mut rng) {
            Err(Error::InnerProductDomain { i, j, .. }) => assert_eq!((i, j), (0, 2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn edge_density_concentrates() {
        let c = curve_hardy_weinberg();
        let mut rng = RngStream::new(5, 0);
        let (_, x) = sample_scenario(&c, 2000, 0, 0.0, 0.0, 1.0, &mut rng).unwrap();
        let a = sample_rdpg(&x, &mut rng).unwrap();
        let p = x.gram();
        let (mut mean, mut var) = (0.0, 0.0);
        let n = 2000;
        for i in 0..n {
            for j in (i + 1)..n {
                mean += p[(i, j)];
                var += p[(i, j)] * (1.0 - p[(i, j)]);
            }
        }
        let edges = a.edge_count() as f64;
        assert!((edges - mean).abs() <= 3.0 * var.sqrt(), "edges {edges} mean {mean}");
    }

    #[test]
    fn scenario_determinism_and_line() {
        let c = curve_hardy_weinberg();
        let a = sample_scenario(&c, 50, 10, 2.0, 5.0, 0.1, &mut RngStream::new(3, 4)).unwrap();
        let b = sample_scenario(&c, 50, 10, 2.0, 5.0, 0.1, &mut RngStream::new(3, 4)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.0.y.len(), 10);
        assert!(sample_scenario(&c, 5, 6, 2.0, 5.0, 0.1, &mut RngStream::new(3, 4)).is_err());
        assert!(sample_scenario(&c, 5, 2, 2.0, 5.0, 0.0, &mut RngStream::new(3, 4)).is_err());
    }

    #[test]
    fn adjacency_validation() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(AdjacencyMatrix::from_dense(m.clone(), false).is_err());
        assert!(AdjacencyMatrix::from_dense(m, true).is_ok());
        assert!(AdjacencyMatrix::from_edges(3, &[(1, 1)], false).is_err());
        let g = AdjacencyMatrix::from_edges(3, &[(0, 1), (1, 0), (1, 2)], false).unwrap();
        assert_eq!(g.edge_count(), 2);
    }
}
