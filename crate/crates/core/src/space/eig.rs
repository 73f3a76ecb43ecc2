use ndarray::{Array1, Array2};

use super::svd::leading_sign;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 80;

/// Symmetric eigendecomposition `M = Q diag(values) Q^T` by cyclic Jacobi
/// rotations. Eigenvalues are returned in non-increasing order; each
/// eigenvector has its largest-magnitude entry positive.
#[derive(Debug, Clone, PartialEq)]
pub struct SymEigen {
    pub values: Array1<f64>,
    pub vectors: Array2<f64>,
}

impl SymEigen {
    pub fn compose(&self, values: &[f64]) -> Array2<f64> {
        let n = self.vectors.nrows();
        let mut out = Array2::zeros((n, n));
        for (k, &lam) in values.iter().enumerate() {
            if lam == 0.0 {
                continue;
            }
            let q = self.vectors.column(k);
            for i in 0..n {
                for j in 0..n {
                    out[[i, j]] += lam * q[i] * q[j];
                }
            }
        }
        out
    }
}

pub fn sym_eig(m: &Array2<f64>) -> Result<SymEigen> {
    let (r, c) = m.dim();
    if r != c {
        return Err(Error::InvalidInput(format!("sym_eig needs a square matrix, got {r}x{c}")));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("sym_eig of a matrix with non-finite entries".into()));
    }
    let scale = frobenius(m).max(1.0);
    let asym = frobenius(&(m - &m.t()));
    if asym > 1e-10 * scale {
        return Err(Error::InvalidInput(format!(
            "matrix is not symmetric (asymmetry {asym:e})"
        )));
    }
    let n = r;
    let mut a = 0.5 * (m + &m.t());
    let mut q = Array2::<f64>::eye(n);

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[[i, j]] * a[[i, j]])
            .sum::<f64>()
            .sqrt();
        if off <= f64::EPSILON * scale {
            break;
        }
        for p in 0..n {
            for qq in (p + 1)..n {
                let apq = a[[p, qq]];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[[qq, qq]] - a[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for k in 0..n {
                    let (akp, akq) = (a[[k, p]], a[[k, qq]]);
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, qq]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[[p, k]], a[[qq, k]]);
                    a[[p, k]] = c * apk - s * aqk;
                    a[[qq, k]] = s * apk + c * aqk;
                }
                a[[p, qq]] = 0.0;
                a[[qq, p]] = 0.0;
                for k in 0..n {
                    let (qkp, qkq) = (q[[k, p]], q[[k, qq]]);
                    q[[k, p]] = c * qkp - s * qkq;
                    q[[k, qq]] = s * qkp + c * qkq;
                }
            }
        }
    }

    let diag: Vec<f64> = (0..n).map(|i| a[[i, i]]).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| diag[y].total_cmp(&diag[x]).then(x.cmp(&y)));
    let values = Array1::from_iter(order.iter().map(|&i| diag[i]));
    let mut vectors = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        let sign = leading_sign(q.column(src).iter());
        vectors.column_mut(dst).assign(&(&q.column(src) * sign));
    }
    Ok(SymEigen { values, vectors })
}

pub(crate) fn frobenius(a: &Array2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}
