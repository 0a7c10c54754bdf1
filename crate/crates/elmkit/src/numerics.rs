//! Pseudoinverse, ridge solve, row normalization and feature standardization.
//!
//! The pseudoinverse is the workhorse behind output-weight training. It is
//! computed from a singular value decomposition with a relative cutoff:
//! singular values at or below the cutoff are treated as exactly zero, so
//! rank-deficient inputs yield the minimum-norm least-squares inverse
//! instead of amplified noise.

use faer::prelude::Solve;
use faer::{Mat, Side};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Rows below this Euclidean norm are reported as degenerate instead of
/// being divided by a denormal.
const ZERO_ROW_NORM: f64 = 1e-300;

/// Columns with a population standard deviation below this are centered
/// only; the divisor is forced to one.
const ZERO_VARIANCE: f64 = 1e-12;

/// Moore-Penrose pseudoinverse of `a`.
///
/// `tol` is an absolute cutoff on singular values; `tol = 0` selects the
/// default `max(rows, cols) * eps * s_max`. The result has the transposed
/// shape of `a` and satisfies the four Penrose conditions to numerical
/// tolerance.
pub fn pseudoinverse(a: &Matrix, tol: f64) -> Result<Matrix> {
    if a.is_empty() {
        return Err(Error::EmptyMatrix {
            op: "pseudoinverse",
        });
    }
    if !(tol >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "pseudoinverse tolerance must be nonnegative, got {tol}"
        )));
    }
    let (m, n) = a.shape();
    let k = m.min(n);
    let svd = a.as_faer().thin_svd().map_err(|_| Error::SvdFailed)?;
    let (u, s, v) = (svd.U(), svd.S(), svd.V());

    let s_max = if k > 0 { s[0] } else { 0.0 };
    let cutoff = if tol > 0.0 {
        tol
    } else {
        m.max(n) as f64 * f64::EPSILON * s_max
    };

    // A^+ = V diag(1/s) U^T over the retained spectrum.
    let mut v_scaled: Mat<f64> = Mat::zeros(n, k);
    for t in 0..k {
        if s[t] > cutoff {
            let inv = 1.0 / s[t];
            for j in 0..n {
                v_scaled[(j, t)] = v[(j, t)] * inv;
            }
        }
    }
    let pinv = v_scaled.as_ref() * u.get(.., 0..k).transpose();
    let out = Matrix::from_faer(pinv.as_ref());
    out.check_finite("pseudoinverse")?;
    Ok(out)
}

/// Solves `min_w ||h w - t||^2 + lambda ||w||^2` in closed form,
/// `(H^T H + lambda I)^-1 H^T T`. Requires `lambda > 0`; the unregularized
/// path belongs to the pseudoinverse.
pub fn ridge_solve(h: &Matrix, t: &Matrix, lambda: f64) -> Result<Matrix> {
    if h.rows() != t.rows() {
        return Err(Error::DimMismatch {
            op: "ridge_solve",
            left: h.shape(),
            right: t.shape(),
        });
    }
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "ridge_solve requires lambda > 0, got {lambda}"
        )));
    }
    let mut gram = h.matmul_tn(h)?;
    for i in 0..gram.rows() {
        let v = gram.get(i, i);
        gram.set(i, i, v + lambda);
    }
    let rhs = h.matmul_tn(t)?;
    let llt = gram
        .as_faer()
        .llt(Side::Lower)
        .map_err(|_| Error::SolveFailed { op: "ridge_solve" })?;
    let w = llt.solve(rhs.as_faer());
    let out = Matrix::from_faer(w.as_ref());
    out.check_finite("ridge_solve")?;
    Ok(out)
}

/// Row normalization result. Zero rows pass through unchanged and are
/// reported by index so callers can decide whether they matter.
#[derive(Debug, Clone)]
pub struct NormalizedRows {
    pub matrix: Matrix,
    pub zero_rows: Vec<usize>,
}

/// Divides every row by its Euclidean norm. Rows with (numerically) zero
/// norm are left untouched and flagged.
pub fn l2_normalize_rows(a: &Matrix) -> NormalizedRows {
    let mut out = a.clone();
    let mut zero_rows = Vec::new();
    let cols = a.cols();
    for i in 0..a.rows() {
        let norm = a.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < ZERO_ROW_NORM {
            zero_rows.push(i);
            continue;
        }
        let inv = 1.0 / norm;
        for j in 0..cols {
            let v = out.get(i, j) * inv;
            out.set(i, j, v);
        }
    }
    NormalizedRows {
        matrix: out,
        zero_rows,
    }
}

/// Per-column affine transform to zero mean and unit population standard
/// deviation, fitted on training data and applied unchanged elsewhere.
#[derive(Debug, Clone)]
pub struct Standardizer {
    means: Vec<f64>,
    stds: Vec<f64>,
}

impl Standardizer {
    /// Fits column means and population (1/n) standard deviations.
    /// Near-constant columns get a divisor of one so they are centered
    /// only; MNIST border pixels would otherwise divide by ~0.
    pub fn fit(a: &Matrix) -> Result<Self> {
        if a.rows() == 0 {
            return Err(Error::EmptyMatrix {
                op: "standardize_fit",
            });
        }
        let n = a.rows() as f64;
        let cols = a.cols();
        let mut means = vec![0.0; cols];
        for i in 0..a.rows() {
            for (j, m) in means.iter_mut().enumerate() {
                *m += a.get(i, j);
            }
        }
        for m in &mut means {
            *m /= n;
        }
        let mut vars = vec![0.0; cols];
        for i in 0..a.rows() {
            for (j, v) in vars.iter_mut().enumerate() {
                let d = a.get(i, j) - means[j];
                *v += d * d;
            }
        }
        let stds = vars
            .iter()
            .map(|v| {
                let s = (v / n).sqrt();
                if s < ZERO_VARIANCE {
                    1.0
                } else {
                    s
                }
            })
            .collect();
        Ok(Standardizer { means, stds })
    }

    pub fn apply(&self, a: &Matrix) -> Result<Matrix> {
        if a.cols() != self.means.len() {
            return Err(Error::DimMismatch {
                op: "standardize_apply",
                left: a.shape(),
                right: (1, self.means.len()),
            });
        }
        Ok(Matrix::from_fn(a.rows(), a.cols(), |i, j| {
            (a.get(i, j) - self.means[j]) / self.stds[j]
        }))
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn stds(&self) -> &[f64] {
        &self.stds
    }
}
