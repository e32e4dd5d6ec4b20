//! One-dimensional raw-stress embedding by Guttman-transform majorization.
//!
//! The iteration starts from classical scaling and never increases stress.
//! It is a local method: with `restarts > 0` extra runs start from seeded
//! perturbations of the classical configuration and the lowest-stress
//! result wins.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geodesic::DissimilarityMatrix;
use crate::linalg::sym_eigen_full;
use crate::stats::{normal, RngStream};

/// Pairs closer than this are treated as coincident in the Guttman transform.
pub const COINCIDENT_TOL: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct MdsOptions {
    pub max_iter: usize,
    pub rel_tol: f64,
    /// Extra runs beyond the classical-scaling start.
    pub restarts: usize,
    /// Symmetric nonnegative weights; `None` means all ones.
    pub weights: Option<DMatrix<f64>>,
}

impl Default for MdsOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            rel_tol: 1e-10,
            restarts: 0,
            weights: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Embedding1D {
    /// Centered to mean zero.
    pub z: Vec<f64>,
    pub final_stress: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Stress after each iterate, starting with the initial configuration.
    pub stress_trace: Vec<f64>,
}

fn weight(w: Option<&DMatrix<f64>>, i: usize, j: usize) -> f64 {
    w.map_or(1.0, |w| w[(i, j)])
}

fn check_weights(w: Option<&DMatrix<f64>>, l: usize) -> Result<()> {
    if let Some(w) = w {
        if w.nrows() != l || w.ncols() != l {
            return Err(Error::ShapeMismatch {
                expected: format!("{l}x{l} weights"),
                found: format!("{}x{}", w.nrows(), w.ncols()),
            });
        }
        if w.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::invalid("weights must be finite and nonnegative"));
        }
    }
    Ok(())
}

/// `sum_{i<j} w_ij (|z_i - z_j| - D_ij)^2`.
pub fn raw_stress(z: &[f64], d: &DissimilarityMatrix, w: Option<&DMatrix<f64>>) -> Result<f64> {
    let l = d.size();
    if z.len() != l {
        return Err(Error::ShapeMismatch {
            expected: format!("{l} coordinates"),
            found: format!("{}", z.len()),
        });
    }
    check_weights(w, l)?;
    let mut sum = 0.0;
    for i in 0..l {
        for j in (i + 1)..l {
            let r = (z[i] - z[j]).abs() - d.get(i, j);
            sum += weight(w, i, j) * r * r;
        }
    }
    Ok(sum)
}

/// Classical scaling onto the line: `v_1 sqrt(lambda_1)` for the top
/// eigenpair of `-1/2 H (D o D) H`.
///
/// An all-zero `D` yields the zero vector. If `lambda_1 <= 0` otherwise, a
/// fixed pseudo-random configuration (seed 0) scaled to the data is returned.
pub fn classical_mds_1d(d: &DissimilarityMatrix) -> Result<Vec<f64>> {
    let l = d.size();
    if l < 2 {
        return Err(Error::invalid("classical scaling needs at least two points"));
    }
    if d.as_matrix().iter().all(|&v| v == 0.0) {
        return Ok(vec![0.0; l]);
    }
    let sq = d.as_matrix().map(|v| v * v);
    let row_means: Vec<f64> = (0..l).map(|i| sq.row(i).sum() / l as f64).collect();
    let grand = row_means.iter().sum::<f64>() / l as f64;
    let b = DMatrix::from_fn(l, l, |i, j| -0.5 * (sq[(i, j)] - row_means[i] - row_means[j] + grand));
    let pairs = sym_eigen_full(&b)?;
    let (top, &lambda) = pairs
        .values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
        .expect("nonempty spectrum");
    if lambda <= 0.0 {
        let scale = (sq.sum() / (l * l) as f64).sqrt();
        let mut rng = RngStream::new(0, 0);
        let mut z = (0..l)
            .map(|_| normal(&mut rng, 0.0, scale))
            .collect::<Result<Vec<_>>>()?;
        center(&mut z);
        return Ok(z);
    }
    let root = lambda.sqrt();
    Ok(pairs.vectors.column(top).iter().map(|v| v * root).collect())
}

/// Moore-Penrose inverse of `V = sum w_ij (e_i - e_j)(e_i - e_j)^T`.
fn v_pseudo_inverse(w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let l = w.nrows();
    let mut v = DMatrix::zeros(l, l);
    for i in 0..l {
        for j in 0..l {
            if i != j {
                v[(i, j)] = -w[(i, j)];
                v[(i, i)] += w[(i, j)];
            }
        }
    }
    let ones = DMatrix::from_element(l, l, 1.0);
    let inv = (v + &ones)
        .try_inverse()
        .ok_or_else(|| Error::invalid("weight graph is disconnected"))?;
    Ok(inv - ones / (l * l) as f64)
}

fn b_times_z(z: &[f64], d: &DissimilarityMatrix, w: Option<&DMatrix<f64>>) -> Vec<f64> {
    let l = z.len();
    let mut out = vec![0.0; l];
    for i in 0..l {
        let mut acc = 0.0;
        for j in 0..l {
            if i == j {
                continue;
            }
            let gap = (z[i] - z[j]).abs();
            if gap > COINCIDENT_TOL {
                let bij = -weight(w, i, j) * d.get(i, j) / gap;
                // b_ii z_i + b_ij z_j with b_ii = -sum_j b_ij
                acc += bij * (z[j] - z[i]);
            }
        }
        out[i] = acc;
    }
    out
}

/// One Guttman transform `z' = V^+ B(z) z`; with unit weights `V^+ = I / l`
/// on the centered subspace.
pub fn guttman_step(z: &[f64], d: &DissimilarityMatrix, w: Option<&DMatrix<f64>>) -> Result<Vec<f64>> {
    let l = d.size();
    if z.len() != l {
        return Err(Error::ShapeMismatch {
            expected: format!("{l} coordinates"),
            found: format!("{}", z.len()),
        });
    }
    check_weights(w, l)?;
    let bz = b_times_z(z, d, w);
    match w {
        None => Ok(bz.into_iter().map(|v| v / l as f64).collect()),
        Some(w) => {
            let vinv = v_pseudo_inverse(w)?;
            Ok((vinv * nalgebra::DVector::from_vec(bz)).iter().copied().collect())
        }
    }
}

fn center(z: &mut [f64]) {
    let mean = z.iter().sum::<f64>() / z.len() as f64;
    z.iter_mut().for_each(|v| *v -= mean);
}

fn iterate(
    mut z: Vec<f64>,
    d: &DissimilarityMatrix,
    opts: &MdsOptions,
    vinv: Option<&DMatrix<f64>>,
) -> Result<Embedding1D> {
    let w = opts.weights.as_ref();
    let l = z.len();
    let mut stress = raw_stress(&z, d, w)?;
    let mut trace = vec![stress];
    let mut converged = stress == 0.0;
    let mut iterations = 0;
    while !converged && iterations < opts.max_iter {
        let bz = b_times_z(&z, d, w);
        let next: Vec<f64> = match vinv {
            None => bz.into_iter().map(|v| v / l as f64).collect(),
            Some(vinv) => (vinv * nalgebra::DVector::from_vec(bz)).iter().copied().collect(),
        };
        let next_stress = raw_stress(&next, d, w)?;
        iterations += 1;
        let decrease = (stress - next_stress) / stress.max(1e-300);
        z = next;
        stress = next_stress;
        trace.push(stress);
        if decrease < opts.rel_tol || stress == 0.0 {
            converged = true;
        }
    }
    center(&mut z);
    let final_stress = raw_stress(&z, d, w)?;
    Ok(Embedding1D {
        z,
        final_stress,
        iterations,
        converged,
        stress_trace: trace,
    })
}

/// Minimizes raw stress on the line from the classical-scaling start.
pub fn minimize_raw_stress(d: &DissimilarityMatrix, opts: &MdsOptions) -> Result<Embedding1D> {
    if !(opts.rel_tol > 0.0) {
        return Err(Error::invalid("rel_tol must be positive"));
    }
    let l = d.size();
    check_weights(opts.weights.as_ref(), l)?;
    if l == 1 {
        return Ok(Embedding1D {
            z: vec![0.0],
            final_stress: 0.0,
            iterations: 0,
            converged: true,
            stress_trace: vec![0.0],
        });
    }
    let vinv = opts.weights.as_ref().map(v_pseudo_inverse).transpose()?;
    let init = classical_mds_1d(d)?;
    let spread = (d.as_matrix().map(|v| v * v).sum() / (l * l) as f64).sqrt();

    let starts: Vec<Vec<f64>> = (0..=opts.restarts)
        .map(|r| {
            if r == 0 {
                return Ok(init.clone());
            }
            let mut rng = RngStream::new(0, r as u64);
            init.iter()
                .map(|&v| Ok(v + normal(&mut rng, 0.0, 0.25 * spread)?))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let runs = starts
        .into_par_iter()
        .map(|z0| iterate(z0, d, opts, vinv.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    // Minimum stress, lowest restart index on ties.
    let best = runs
        .into_iter()
        .enumerate()
        .min_by(|a, b| a.1.final_stress.total_cmp(&b.1.final_stress).then(a.0.cmp(&b.0)))
        .map(|(_, e)| e)
        .expect("at least one run");
    Ok(best)
}
