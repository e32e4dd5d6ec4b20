//! Adjacency spectral embedding and orthogonal Procrustes alignment.

use nalgebra::{DMatrix, SVD};

use crate::error::{Error, Result};
use crate::linalg::{fix_sign, sym_eigen_topk};

/// An `n x d` configuration; row `i` is the position of node `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentMatrix(DMatrix<f64>);

impl LatentMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() == 0 || m.ncols() == 0 {
            return Err(Error::invalid("latent matrix must have n >= 1 and d >= 1"));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("latent matrix has non-finite entries"));
        }
        Ok(Self(m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::invalid("ragged rows"));
        }
        Self::new(DMatrix::from_fn(n, d, |i, j| rows[i][j]))
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.0.ncols()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.0.row(i).iter().copied().collect()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// First `m` rows.
    pub fn head(&self, m: usize) -> LatentMatrix {
        LatentMatrix(self.0.rows(0, m.min(self.nrows())).into_owned())
    }

    /// `X X^T`.
    pub fn gram(&self) -> DMatrix<f64> {
        &self.0 * self.0.transpose()
    }

    /// Right-multiplication by a `d x d` matrix.
    pub fn transform(&self, w: &DMatrix<f64>) -> Result<LatentMatrix> {
        if w.nrows() != self.ncols() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} rows", self.ncols()),
                found: format!("{}", w.nrows()),
            });
        }
        LatentMatrix::new(&self.0 * w)
    }
}

/// `X_hat = V |S|^{1/2}` from the top-`d` eigenpairs (by magnitude) of a
/// symmetric matrix, usually a hollow adjacency matrix.
pub fn ase_undirected(a: &DMatrix<f64>, d: usize) -> Result<LatentMatrix> {
    let pairs = sym_eigen_topk(a, d)?;
    let mut x = pairs.vectors;
    for (c, lambda) in pairs.values.iter().enumerate() {
        let scale = lambda.abs().sqrt();
        x.column_mut(c).iter_mut().for_each(|v| *v *= scale);
    }
    LatentMatrix::new(x)
}

/// `[U Sigma^{1/2} | V Sigma^{1/2}]` from the leading `d_half` singular
/// triples of a (possibly non-symmetric) square matrix.
///
/// Each `(u, v)` pair is signed so the largest-magnitude entry of `u` is
/// positive.
pub fn ase_directed(a: &DMatrix<f64>, d_half: usize) -> Result<LatentMatrix> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::ShapeMismatch {
            expected: "square matrix".into(),
            found: format!("{}x{}", a.nrows(), a.ncols()),
        });
    }
    if d_half == 0 || 2 * d_half > n {
        return Err(Error::invalid(format!("d_half = {d_half} must satisfy 1 <= 2 d_half <= {n}")));
    }
    let svd = SVD::new(a.clone(), true, true);
    let u = svd.u.as_ref().expect("left vectors requested");
    let v_t = svd.v_t.as_ref().expect("right vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]).then(x.cmp(&y)));

    let mut out = DMatrix::zeros(n, 2 * d_half);
    for (c, &k) in order[..d_half].iter().enumerate() {
        let scale = svd.singular_values[k].max(0.0).sqrt();
        let mut left: Vec<f64> = u.column(k).iter().copied().collect();
        let mut right: Vec<f64> = v_t.row(k).iter().copied().collect();
        let before = left.clone();
        fix_sign(&mut left);
        if left != before {
            right.iter_mut().for_each(|x| *x = -*x);
        }
        for i in 0..n {
            out[(i, c)] = left[i] * scale;
            out[(i, d_half + c)] = right[i] * scale;
        }
    }
    LatentMatrix::new(out)
}

#[derive(Debug, Clone)]
pub struct Procrustes {
    /// Orthogonal `d x d` minimizer of `||source W - target||_F`.
    pub rotation: DMatrix<f64>,
    pub aligned: LatentMatrix,
}

/// Closed-form orthogonal Procrustes via the polar factor of `source^T target`.
pub fn procrustes_align(source: &LatentMatrix, target: &LatentMatrix) -> Result<Procrustes> {
    if source.nrows() != target.nrows() || source.ncols() != target.ncols() {
        return Err(Error::ShapeMismatch {
            expected: format!("{}x{}", source.nrows(), source.ncols()),
            found: format!("{}x{}", target.nrows(), target.ncols()),
        });
    }
    let cross = source.as_matrix().transpose() * target.as_matrix();
    let svd = SVD::new(cross, true, true);
    let rotation = svd.u.expect("left vectors requested") * svd.v_t.expect("right vectors requested");
    let aligned = source.transform(&rotation)?;
    Ok(Procrustes { rotation, aligned })
}
