//! One-sided (Hestenes) Jacobi singular value decomposition for small dense
//! matrices.
//!
//! The factorization is full: `U` is `m x m`, `V` is `n x n`, and `sigma` holds
//! the `min(m, n)` singular values in non-increasing order. Output is
//! deterministic: for every column pair `(U[:, i], V[:, i])` the largest
//! magnitude entry of `V[:, i]` is made positive (first such entry on ties).

use std::ops::Range;

use ndarray::{s, Array1, Array2, ArrayView2};

use crate::error::{Error, Result};

/// Default relative tolerance for grouping equal singular values and for
/// deciding numerical rank.
pub const DEFAULT_GROUP_TOL: f64 = 1e-8;

const MAX_SWEEPS: usize = 80;

#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactorization {
    pub u: Array2<f64>,
    pub sigma: Array1<f64>,
    pub v: Array2<f64>,
    pub group_tol: f64,
}

impl SvdFactorization {
    pub fn nrows(&self) -> usize {
        self.u.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.v.nrows()
    }

    /// `group_tol * max(1, sigma_1)`: the absolute threshold used for both rank
    /// and equality decisions.
    pub fn threshold(&self) -> f64 {
        self.group_tol * self.sigma.first().copied().unwrap_or(0.0).max(1.0)
    }

    /// Number of singular values counted as nonzero.
    pub fn rank(&self) -> usize {
        let t = self.threshold();
        self.sigma.iter().filter(|&&s| s > t).count()
    }

    /// Index ranges of (numerically) equal singular values, in order.
    pub fn groups(&self) -> Vec<Range<usize>> {
        let t = self.threshold();
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=self.sigma.len() {
            if i == self.sigma.len() || (self.sigma[start] - self.sigma[i]).abs() > t {
                out.push(start..i);
                start = i;
            }
        }
        out
    }

    /// `U diag(values) V^T` with the rectangular diagonal padded by zeros.
    pub fn compose(&self, values: &[f64]) -> Array2<f64> {
        let k = values.len().min(self.sigma.len());
        let (m, n) = (self.nrows(), self.ncols());
        let mut out = Array2::zeros((m, n));
        for i in 0..k {
            if values[i] == 0.0 {
                continue;
            }
            let ui = self.u.column(i);
            let vi = self.v.column(i);
            for r in 0..m {
                let scale = values[i] * ui[r];
                if scale == 0.0 {
                    continue;
                }
                for c in 0..n {
                    out[[r, c]] += scale * vi[c];
                }
            }
        }
        out
    }

    /// Reassembles the factored matrix.
    pub fn reconstruct(&self) -> Array2<f64> {
        self.compose(self.sigma.as_slice().expect("contiguous"))
    }
}

/// Full SVD of `x`. Rejects non-finite input.
pub fn svd(x: &Array2<f64>, group_tol: f64) -> Result<SvdFactorization> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("svd of a matrix with non-finite entries".into()));
    }
    if !(group_tol.is_finite() && group_tol >= 0.0) {
        return Err(Error::InvalidInput(format!("invalid group tolerance {group_tol}")));
    }
    let (m, n) = x.dim();
    let (mut u, sigma, mut v) = if m <= n {
        wide_svd(x.view())
    } else {
        let (u_t, sigma, v_t) = wide_svd(x.t());
        (v_t, sigma, u_t)
    };
    fix_signs(&mut u, &mut v, sigma.len());
    Ok(SvdFactorization { u, sigma, v, group_tol })
}

/// SVD of an `m x n` matrix with `m <= n`: Jacobi rotations orthogonalize the
/// columns of `x^T`.
fn wide_svd(x: ArrayView2<f64>) -> (Array2<f64>, Array1<f64>, Array2<f64>) {
    let (m, n) = x.dim();
    // columns of x^T, i.e. rows of x
    let mut w: Vec<Vec<f64>> = (0..m).map(|i| x.row(i).to_vec()).collect();
    let mut rot = Array2::<f64>::eye(m);
    let eps = f64::EPSILON * (m.max(1) as f64);

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..m {
            for q in (p + 1)..m {
                let alpha = dot(&w[p], &w[p]);
                let beta = dot(&w[q], &w[q]);
                let gamma = dot(&w[p], &w[q]);
                if gamma == 0.0 || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (wp, wq) = pair_mut(&mut w, p, q);
                for (a, b) in wp.iter_mut().zip(wq.iter_mut()) {
                    let (ap, bq) = (*a, *b);
                    *a = c * ap - s * bq;
                    *b = s * ap + c * bq;
                }
                for r in 0..m {
                    let (ap, bq) = (rot[[r, p]], rot[[r, q]]);
                    rot[[r, p]] = c * ap - s * bq;
                    rot[[r, q]] = s * ap + c * bq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = w.iter().map(|c| dot(c, c).sqrt()).collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));

    let sigma = Array1::from_iter(order.iter().map(|&j| norms[j]));
    let mut u = Array2::zeros((m, m));
    for (dst, &src) in order.iter().enumerate() {
        u.column_mut(dst).assign(&rot.column(src));
    }

    let smax = sigma.first().copied().unwrap_or(0.0);
    let floor = smax * 1e-13;
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    for &j in &order {
        if norms[j] > floor && norms[j] > 0.0 {
            let mut col: Vec<f64> = w[j].iter().map(|v| v / norms[j]).collect();
            if orthonormalize_against(&mut col, &basis) > 0.5 {
                basis.push(col);
                continue;
            }
        }
        basis.push(completion_vector(&basis, n));
    }
    while basis.len() < n {
        let next = completion_vector(&basis, n);
        basis.push(next);
    }
    let mut v = Array2::zeros((n, n));
    for (j, col) in basis.iter().enumerate() {
        for (r, val) in col.iter().enumerate() {
            v[[r, j]] = *val;
        }
    }
    (u, sigma, v)
}

fn fix_signs(u: &mut Array2<f64>, v: &mut Array2<f64>, paired: usize) {
    for j in 0..v.ncols() {
        if leading_sign(v.column(j).iter()) < 0.0 {
            v.column_mut(j).mapv_inplace(|a| -a);
            if j < paired {
                u.column_mut(j).mapv_inplace(|a| -a);
            }
        }
    }
    for j in paired..u.ncols() {
        if leading_sign(u.column(j).iter()) < 0.0 {
            u.column_mut(j).mapv_inplace(|a| -a);
        }
    }
}

/// Sign of the first entry with the largest magnitude.
pub(crate) fn leading_sign<'a>(values: impl Iterator<Item = &'a f64>) -> f64 {
    let mut best = 0.0f64;
    for &v in values {
        if v.abs() > best.abs() {
            best = v;
        }
    }
    if best < 0.0 {
        -1.0
    } else {
        1.0
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn pair_mut(w: &mut [Vec<f64>], p: usize, q: usize) -> (&mut Vec<f64>, &mut Vec<f64>) {
    debug_assert!(p < q);
    let (lo, hi) = w.split_at_mut(q);
    (&mut lo[p], &mut hi[0])
}

/// Two passes of modified Gram-Schmidt, normalizing `col`; returns the norm
/// left after projection.
fn orthonormalize_against(col: &mut [f64], basis: &[Vec<f64>]) -> f64 {
    for _ in 0..2 {
        for b in basis {
            let proj = dot(col, b);
            for (c, bv) in col.iter_mut().zip(b) {
                *c -= proj * bv;
            }
        }
    }
    let norm = dot(col, col).sqrt();
    if norm > 0.0 {
        col.iter_mut().for_each(|c| *c /= norm);
    }
    norm
}

/// Standard basis vector with the largest component outside `span(basis)`,
/// orthonormalized against it.
fn completion_vector(basis: &[Vec<f64>], n: usize) -> Vec<f64> {
    let mut best: Option<(f64, Vec<f64>)> = None;
    for k in 0..n {
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        let residual = orthonormalize_against(&mut e, basis);
        if best.as_ref().map_or(true, |(r, _)| residual > *r + 1e-12) {
            best = Some((residual, e));
        }
    }
    best.expect("n > basis.len()").1
}

/// Sub-block `rows x cols` of `a` as an owned matrix.
pub(crate) fn block(a: &Array2<f64>, rows: Range<usize>, cols: Range<usize>) -> Array2<f64> {
    a.slice(s![rows, cols]).to_owned()
}
