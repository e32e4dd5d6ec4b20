//! Dense symmetric eigensolver.
//!
//! Householder reduction to tridiagonal form, implicit QL with Wilkinson
//! shifts for the eigenvalues, then inverse iteration on the tridiagonal for
//! only the requested eigenvectors. Full eigenvector accumulation costs
//! O(n^3) on top of the reduction, which is wasted work when only a handful
//! of leading pairs are wanted.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Eigenpairs sorted by descending absolute eigenvalue.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: DVector<f64>,
    /// One orthonormal eigenvector per column, paired with `values`.
    pub vectors: DMatrix<f64>,
}

impl EigenPairs {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Relative symmetry tolerance accepted by [`sym_eigen_topk`].
pub const SYMMETRY_TOL: f64 = 1e-10;

pub(crate) fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::ShapeMismatch {
            expected: "square matrix".into(),
            found: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    let scale = m.amax().max(1.0);
    let n = m.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let gap = (m[(i, j)] - m[(j, i)]).abs();
            if gap > SYMMETRY_TOL * scale || !gap.is_finite() {
                return Err(Error::NotSymmetric { row: i, col: j, gap });
            }
        }
    }
    Ok(())
}

/// The `k` eigenpairs of a symmetric matrix with the largest `|lambda|`.
///
/// Each eigenvector is normalized and signed so that its entry of largest
/// magnitude is positive (first such entry on ties).
pub fn sym_eigen_topk(m: &DMatrix<f64>, k: usize) -> Result<EigenPairs> {
    check_symmetric(m)?;
    let n = m.nrows();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("k = {k} must lie in 1..={n}")));
    }

    let work = Tridiagonalization::new(m);
    let values = tridiagonal_eigenvalues(&work.diag, &work.off)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        values[b]
            .abs()
            .total_cmp(&values[a].abs())
            .then(values[b].total_cmp(&values[a]))
    });
    let chosen: Vec<f64> = order[..k].iter().map(|&i| values[i]).collect();

    let tvecs = inverse_iteration(&work.diag, &work.off, &chosen);
    let mut vectors = DMatrix::zeros(n, k);
    for (c, mut y) in tvecs.into_iter().enumerate() {
        work.apply_q(&mut y);
        normalize(&mut y);
        fix_sign(&mut y);
        vectors.column_mut(c).copy_from_slice(&y);
    }
    Ok(EigenPairs {
        values: DVector::from_vec(chosen),
        vectors,
    })
}

/// All eigenpairs, sorted by descending absolute eigenvalue.
pub fn sym_eigen_full(m: &DMatrix<f64>) -> Result<EigenPairs> {
    sym_eigen_topk(m, m.nrows())
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

/// Makes the entry of largest magnitude positive; ties go to the lowest index.
pub(crate) fn fix_sign(v: &mut [f64]) {
    let max = v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    if max == 0.0 {
        return;
    }
    let lead = v
        .iter()
        .position(|x| x.abs() >= max * (1.0 - 1e-12))
        .unwrap_or(0);
    if v[lead] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Householder reduction `Q^T M Q = T`, reflectors kept below the subdiagonal.
struct Tridiagonalization {
    n: usize,
    /// Row-major lower triangle; column `k` below row `k + 1` holds reflector `k`.
    a: Vec<f64>,
    tau: Vec<f64>,
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl Tridiagonalization {
    fn new(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                a[i * n + j] = 0.5 * (m[(i, j)] + m[(j, i)]);
            }
        }
        let mut tau = vec![0.0; n.saturating_sub(2)];
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n.saturating_sub(1)];

        let mut v = Vec::with_capacity(n);
        let mut p = Vec::with_capacity(n);
        for k in 0..n.saturating_sub(2) {
            let base = k + 1;
            let len = n - base;
            diag[k] = a[k * n + k];

            v.clear();
            v.extend((base..n).map(|i| a[i * n + k]));
            let alpha = v[0];
            let tail = v[1..].iter().map(|x| x * x).sum::<f64>().sqrt();
            if tail == 0.0 {
                off[k] = alpha;
                tau[k] = 0.0;
                for i in (base + 1)..n {
                    a[i * n + k] = 0.0;
                }
                continue;
            }
            let beta = -alpha.signum() * alpha.hypot(tail);
            let t = (beta - alpha) / beta;
            let scale = 1.0 / (alpha - beta);
            v[0] = 1.0;
            v[1..].iter_mut().for_each(|x| *x *= scale);
            for (i, &vi) in v.iter().enumerate().skip(1) {
                a[(base + i) * n + k] = vi;
            }
            off[k] = beta;
            tau[k] = t;

            // p = t * S v with S the trailing block, lower triangle only.
            p.clear();
            p.resize(len, 0.0);
            for i in 0..len {
                let row = &a[(base + i) * n + base..(base + i) * n + base + i + 1];
                let vi = v[i];
                let mut dot = 0.0;
                for ((pj, &sij), &vj) in p[..i].iter_mut().zip(&row[..i]).zip(&v[..i]) {
                    dot += sij * vj;
                    *pj += sij * vi;
                }
                p[i] += dot + row[i] * vi;
            }
            p.iter_mut().for_each(|x| *x *= t);
            let pv: f64 = p.iter().zip(&v).map(|(a, b)| a * b).sum();
            let shift = -0.5 * t * pv;
            let w = &mut p;
            w.iter_mut().zip(&v).for_each(|(wi, vi)| *wi += shift * vi);

            // S -= v w^T + w v^T on the lower triangle.
            for i in 0..len {
                let (vi, wi) = (v[i], w[i]);
                let row = &mut a[(base + i) * n + base..(base + i) * n + base + i + 1];
                for ((sij, &vj), &wj) in row.iter_mut().zip(&v[..=i]).zip(&w[..=i]) {
                    *sij -= vi * wj + wi * vj;
                }
            }
        }
        if n >= 2 {
            diag[n - 2] = a[(n - 2) * n + n - 2];
            off[n - 2] = a[(n - 1) * n + n - 2];
        }
        if n >= 1 {
            diag[n - 1] = a[(n - 1) * n + n - 1];
        }
        Self {
            n,
            a,
            tau,
            diag,
            off,
        }
    }

    /// `y <- Q y`, mapping a tridiagonal eigenvector back to the original basis.
    fn apply_q(&self, y: &mut [f64]) {
        let n = self.n;
        for k in (0..self.tau.len()).rev() {
            let t = self.tau[k];
            if t == 0.0 {
                continue;
            }
            let base = k + 1;
            let mut dot = y[base];
            for i in (base + 1)..n {
                dot += self.a[i * n + k] * y[i];
            }
            let f = t * dot;
            y[base] -= f;
            for i in (base + 1)..n {
                y[i] -= f * self.a[i * n + k];
            }
        }
    }

}

/// Eigenvalues of the symmetric tridiagonal matrix (diag, off) by implicit QL.
pub(crate) fn tridiagonal_eigenvalues(diag: &[f64], off: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.push(0.0);
    let scale = d.iter().chain(&e).fold(0.0f64, |acc, v| acc.max(v.abs()));
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                // The absolute floor keeps clusters of zero eigenvalues from stalling.
                if e[m].abs() <= f64::EPSILON * dd || e[m].abs() <= f64::EPSILON * scale * 1e-2 {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 100 {
                return Err(Error::invalid("tridiagonal QL failed to converge"));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(d)
}

/// Eigenvectors of the tridiagonal for the given eigenvalues.
///
/// Vectors whose eigenvalues sit within `1e-3 * ||T||` of each other are
/// Gram-Schmidt orthogonalized after every solve.
fn inverse_iteration(diag: &[f64], off: &[f64], values: &[f64]) -> Vec<Vec<f64>> {
    let n = diag.len();
    let tnorm = (0..n)
        .map(|i| {
            diag[i].abs()
                + if i > 0 { off[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { off[i].abs() } else { 0.0 }
        })
        .fold(0.0f64, f64::max);
    let cluster_tol = 1e-3 * tnorm;
    let pivot_floor = f64::EPSILON * tnorm.max(f64::MIN_POSITIVE);

    let mut out: Vec<Vec<f64>> = Vec::with_capacity(values.len());
    for (idx, &lambda) in values.iter().enumerate() {
        let lu = TridiagLu::factor(diag, off, lambda, pivot_floor);
        let mut x = start_vector(n, idx as u64);
        let neighbours: Vec<usize> = (0..idx)
            .filter(|&j| (values[j] - lambda).abs() <= cluster_tol)
            .collect();
        for _ in 0..5 {
            lu.solve(&mut x);
            for &j in &neighbours {
                let prev = &out[j];
                let dot: f64 = prev.iter().zip(&x).map(|(a, b)| a * b).sum();
                x.iter_mut().zip(prev).for_each(|(xi, pi)| *xi -= dot * pi);
            }
            normalize(&mut x);
        }
        out.push(x);
    }
    out
}

fn start_vector(n: usize, salt: u64) -> Vec<f64> {
    let mut state = 0x9E37_79B9_7F4A_7C15u64 ^ salt.wrapping_mul(0xD1B5_4A32_D192_ED03);
    let mut v: Vec<f64> = (0..n)
        .map(|_| {
            state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            z ^= z >> 31;
            (z >> 11) as f64 / (1u64 << 53) as f64 + 0.5
        })
        .collect();
    normalize(&mut v);
    v
}

/// LU with partial pivoting of `T - sigma I`, two superdiagonals after pivoting.
struct TridiagLu {
    u0: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
    mult: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagLu {
    fn factor(diag: &[f64], off: &[f64], sigma: f64, pivot_floor: f64) -> Self {
        let n = diag.len();
        let mut u0: Vec<f64> = diag.iter().map(|d| d - sigma).collect();
        let mut u1: Vec<f64> = off.to_vec();
        u1.push(0.0);
        let mut u2 = vec![0.0; n];
        let mut mult = vec![0.0; n.saturating_sub(1)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            let sub = off[i];
            if u0[i].abs() >= sub.abs() {
                if u0[i] == 0.0 {
                    u0[i] = pivot_floor;
                }
                let l = sub / u0[i];
                mult[i] = l;
                u0[i + 1] -= l * u1[i];
            } else {
                let l = u0[i] / sub;
                mult[i] = l;
                swapped[i] = true;
                let old_u1 = u1[i];
                let (next_u0, next_u1) = (u0[i + 1], u1[i + 1]);
                u0[i] = sub;
                u1[i] = next_u0;
                u2[i] = next_u1;
                u0[i + 1] = old_u1 - l * next_u0;
                u1[i + 1] = -l * next_u1;
            }
        }
        for p in u0.iter_mut() {
            if p.abs() < pivot_floor {
                *p = if *p < 0.0 { -pivot_floor } else { pivot_floor };
            }
        }
        Self {
            u0,
            u1,
            u2,
            mult,
            swapped,
        }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = b.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                b.swap(i, i + 1);
            }
            b[i + 1] -= self.mult[i] * b[i];
        }
        for i in (0..n).rev() {
            let mut acc = b[i];
            if i + 1 < n {
                acc -= self.u1[i] * b[i + 1];
            }
            if i + 2 < n {
                acc -= self.u2[i] * b[i + 2];
            }
            b[i] = acc / self.u0[i];
        }
        // Keep magnitudes bounded between normalizations.
        let max = b.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if max > 0.0 && max.is_finite() {
            b.iter_mut().for_each(|x| *x /= max);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(m: &DMatrix<f64>, pairs: &EigenPairs) -> f64 {
        let mut worst = 0.0f64;
        for c in 0..pairs.len() {
            let v = pairs.vectors.column(c);
            let r = m * v - v * pairs.values[c];
            worst = worst.max(r.norm());
        }
        worst
    }

    fn pseudo_random_symmetric(n: usize, seed: u64) -> DMatrix<f64> {
        let v = start_vector(n * n, seed);
        let mut m = DMatrix::from_fn(n, n, |i, j| v[i * n + j] * n as f64 - 0.7);
        m = &m + m.transpose();
        m
    }

    #[test]
    fn identity_returns_unit_values_and_orthonormal_vectors() {
        let m = DMatrix::<f64>::identity(3, 3);
        let pairs = sym_eigen_topk(&m, 2).unwrap();
        assert_eq!(pairs.values.as_slice(), &[1.0, 1.0]);
        let gram = pairs.vectors.transpose() * &pairs.vectors;
        assert!((gram - DMatrix::<f64>::identity(2, 2)).amax() < 1e-12);
    }

    #[test]
    fn diagonal_sorted_by_magnitude() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, -5.0, 1.0]));
        let pairs = sym_eigen_topk(&m, 2).unwrap();
        assert!((pairs.values[0] + 5.0).abs() < 1e-14);
        assert!((pairs.values[1] - 3.0).abs() < 1e-14);
        assert!((pairs.vectors[(1, 0)] - 1.0).abs() < 1e-12);
        assert!((pairs.vectors[(0, 1)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn full_decomposition_reconstructs() {
        for seed in 0..5 {
            let m = pseudo_random_symmetric(6, seed);
            let pairs = sym_eigen_full(&m).unwrap();
            let rebuilt = &pairs.vectors
                * DMatrix::from_diagonal(&pairs.values)
                * pairs.vectors.transpose();
            assert!((rebuilt - &m).amax() < 1e-8, "seed {seed}");
            assert!(residual(&m, &pairs) <= 1e-8 * m.norm());
        }
    }

    #[test]
    fn matches_reference_eigenvalues() {
        let m = pseudo_random_symmetric(40, 11);
        let pairs = sym_eigen_topk(&m, 5).unwrap();
        let mut reference: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        reference.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
        for c in 0..5 {
            assert!((pairs.values[c] - reference[c]).abs() < 1e-9 * m.norm());
        }
        assert!(residual(&m, &pairs) <= 1e-8 * m.norm());
    }

    #[test]
    fn low_rank_gram_matrix() {
        let n = 200;
        let x = DMatrix::from_fn(n, 3, |i, j| {
            let t = i as f64 / (n - 1) as f64;
            [t * t, 2.0 * t * (1.0 - t), (1.0 - t) * (1.0 - t)][j]
        });
        let p = &x * x.transpose();
        let pairs = sym_eigen_topk(&p, 3).unwrap();
        let back = &pairs.vectors * DMatrix::from_diagonal(&pairs.values) * pairs.vectors.transpose();
        assert!((back - p).amax() < 1e-10);
    }

    #[test]
    fn repeated_eigenvalues_give_orthonormal_basis() {
        // Rank-two projector embedded in a rotation: eigenvalues 1, 1, 0, 0.
        let q = sym_eigen_full(&pseudo_random_symmetric(4, 3)).unwrap().vectors;
        let proj = q.columns(0, 2) * q.columns(0, 2).transpose();
        let pairs = sym_eigen_topk(&proj, 2).unwrap();
        let gram = pairs.vectors.transpose() * &pairs.vectors;
        assert!((gram - DMatrix::<f64>::identity(2, 2)).amax() < 1e-10);
        assert!(residual(&proj, &pairs) < 1e-10);
    }

    #[test]
    fn sign_convention_and_determinism() {
        let m = pseudo_random_symmetric(12, 5);
        let a = sym_eigen_topk(&m, 3).unwrap();
        let b = sym_eigen_topk(&m, 3).unwrap();
        assert_eq!(a.vectors, b.vectors);
        for c in 0..3 {
            let col: Vec<f64> = a.vectors.column(c).iter().copied().collect();
            let max = col.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
            let lead = col.iter().position(|x| x.abs() >= max * (1.0 - 1e-12)).unwrap();
            assert!(col[lead] > 0.0);
        }
    }

    #[test]
    fn rejects_non_symmetric_and_bad_k() {
        let mut m = DMatrix::<f64>::identity(3, 3);
        m[(0, 1)] = 0.5;
        assert!(matches!(sym_eigen_topk(&m, 1), Err(Error::NotSymmetric { .. })));
        let m = DMatrix::<f64>::identity(3, 3);
        assert!(sym_eigen_topk(&m, 0).is_err());
        assert!(sym_eigen_topk(&m, 4).is_err());
    }

    #[test]
    fn one_by_one_and_two_by_two() {
        let m = DMatrix::from_element(1, 1, -2.5);
        let pairs = sym_eigen_topk(&m, 1).unwrap();
        assert_eq!(pairs.values[0], -2.5);
        assert_eq!(pairs.vectors[(0, 0)], 1.0);

        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let pairs = sym_eigen_full(&m).unwrap();
        assert!((pairs.values[0].abs() - 1.0).abs() < 1e-14);
        assert!(residual(&m, &pairs) < 1e-12);
    }
}
