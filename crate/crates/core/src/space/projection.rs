use ndarray::{Array1, Array2};

use super::eig::{frobenius, sym_eig};
use super::element::Element;
use super::linear_map::LinearMap;
use super::svd::{svd, DEFAULT_GROUP_TOL};
use crate::error::{Error, Result};

/// Nearest positive semidefinite matrix in Frobenius norm: symmetrize, then
/// clip negative eigenvalues at zero.
pub fn psd_project(m: &Array2<f64>) -> Result<Array2<f64>> {
    let (r, c) = m.dim();
    if r != c {
        return Err(Error::InvalidInput(format!("psd_project needs a square matrix, got {r}x{c}")));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("psd_project of a non-finite matrix".into()));
    }
    let sym = 0.5 * (m + &m.t());
    let eig = sym_eig(&sym)?;
    let clipped: Vec<f64> = eig.values.iter().map(|&l| l.max(0.0)).collect();
    Ok(eig.compose(&clipped))
}

/// Frobenius distance from `m` to the PSD cone, from the closed form
/// `||skew(m)||^2 + sum_i min(lambda_i(sym(m)), 0)^2`.
pub fn psd_distance(m: &Array2<f64>) -> Result<f64> {
    let sym = 0.5 * (m + &m.t());
    let skew = 0.5 * (m - &m.t());
    let eig = sym_eig(&sym)?;
    let neg: f64 = eig.values.iter().map(|&l| l.min(0.0).powi(2)).sum();
    Ok((frobenius(&skew).powi(2) + neg).sqrt())
}

/// Projection onto the affine set `{x : A(x) = y_bar}`, with the
/// pseudoinverse of a dense map factored once.
#[derive(Debug, Clone)]
pub struct AffineProjector {
    map: LinearMap,
    pinv: Option<Array2<f64>>,
}

impl AffineProjector {
    pub fn new(map: &LinearMap) -> Result<Self> {
        let pinv = match map {
            LinearMap::Dense { matrix, .. } => Some(pseudo_inverse(matrix)?),
            _ => None,
        };
        Ok(AffineProjector { map: map.clone(), pinv })
    }

    pub fn map(&self) -> &LinearMap {
        &self.map
    }

    /// `x - A^+(A(x) - y_bar)`. Fails when `y_bar` is not attainable.
    pub fn project(&self, x: &Element, y_bar: &Element) -> Result<Element> {
        if y_bar.shape() != self.map.output_shape() {
            return Err(Error::InvalidInput(format!(
                "target has shape {}, map outputs {}",
                y_bar.shape(),
                self.map.output_shape()
            )));
        }
        let z = match &self.map {
            LinearMap::Identity { .. } => {
                self.map.apply(x)?;
                y_bar.clone()
            }
            LinearMap::CoordinateSelect { input, indices } => {
                if x.shape() != *input {
                    return Err(Error::InvalidInput(format!("expected {input}, got {}", x.shape())));
                }
                let mut flat = x.to_flat();
                for (&i, &v) in indices.iter().zip(y_bar.iter()) {
                    flat[i] = v;
                }
                Element::from_flat(*input, flat)?
            }
            LinearMap::Dense { input, .. } => {
                let gap = self.map.apply(x)?.sub(y_bar);
                let pinv = self.pinv.as_ref().expect("dense projector carries a pseudoinverse");
                let step = pinv.dot(&Array1::from(gap.to_flat()));
                let flat: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a - b).collect();
                Element::from_flat(*input, flat)?
            }
        };
        let residual = self.map.apply(&z)?.distance(y_bar);
        if residual > 1e-9 * y_bar.norm().max(1.0) {
            return Err(Error::InfeasibleTarget(format!(
                "target is not in the range of the map (least-squares residual {residual:e})"
            )));
        }
        Ok(z)
    }
}

/// One-shot projection onto `{x : A(x) = y_bar}`.
pub fn affine_project(x: &Element, map: &LinearMap, y_bar: &Element) -> Result<Element> {
    AffineProjector::new(map)?.project(x, y_bar)
}

/// Moore-Penrose pseudoinverse from the SVD, discarding singular values at or
/// below the rank threshold.
pub fn pseudo_inverse(a: &Array2<f64>) -> Result<Array2<f64>> {
    let f = svd(a, DEFAULT_GROUP_TOL)?;
    let (m, n) = a.dim();
    let rank = f.rank();
    let mut out = Array2::zeros((n, m));
    for k in 0..rank {
        let inv = 1.0 / f.sigma[k];
        for i in 0..n {
            let vi = f.v[[i, k]] * inv;
            for j in 0..m {
                out[[i, j]] += vi * f.u[[j, k]];
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::Shape;
    use ndarray::array;

    #[test]
    fn clip_negative_eigenvalue() {
        let p = psd_project(&array![[1.0, 0.0], [0.0, -2.0]]).unwrap();
        assert!(frobenius(&(p - array![[1.0, 0.0], [0.0, 0.0]])) < 1e-15);
        assert!((psd_distance(&array![[1.0, 0.0], [0.0, -2.0]]).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn skew_matrix_projects_to_zero() {
        let m = array![[0.0, 1.0], [-1.0, 0.0]];
        let p = psd_project(&m).unwrap();
        assert!(frobenius(&p) < 1e-15);
        assert!((psd_distance(&m).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        // brute force over a grid of 2x2 PSD matrices [[a, b], [b, c]], b^2 <= ac
        let mut best = f64::INFINITY;
        let grid: Vec<f64> = (-10..=10).map(|k| k as f64 * 0.1).collect();
        for &a in grid.iter().filter(|&&v| v >= 0.0) {
            for &c in grid.iter().filter(|&&v| v >= 0.0) {
                for &b in &grid {
                    if b * b <= a * c {
                        let d = frobenius(&(&m - &array![[a, b], [b, c]]));
                        best = best.min(d);
                    }
                }
            }
        }
        assert!((best - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn psd_input_is_fixed() {
        let m = array![[2.0, 1.0], [1.0, 2.0]];
        let p = psd_project(&m).unwrap();
        assert!(frobenius(&(p - &m)) < 1e-14);
        assert!(psd_distance(&m).unwrap() < 1e-14);
    }

    #[test]
    fn identity_map_returns_target() {
        let map = LinearMap::identity(Shape::Vector(2));
        let y = Element::vector(vec![3.0, -1.0]);
        let z = affine_project(&Element::vector(vec![0.0, 0.0]), &map, &y).unwrap();
        assert_eq!(z, y);
    }

    #[test]
    fn coordinate_projection_overwrites_entries() {
        let map = LinearMap::select_entries(2, 2, &[(0, 0), (1, 1)]).unwrap();
        let x = Element::matrix_from_rows(&[vec![5.0, 2.0], vec![3.0, 7.0]]);
        let z = affine_project(&x, &map, &Element::vector(vec![1.0, 0.0])).unwrap();
        assert_eq!(z, Element::matrix_from_rows(&[vec![1.0, 2.0], vec![3.0, 0.0]]));
    }

    #[test]
    fn dense_row_projection_matches_lagrange_solution() {
        // min ||z||^2 s.t. z1 + z2 = 2  =>  z = 2 a / ||a||^2 with a = (1, 1)
        let map = LinearMap::dense(Shape::Vector(2), array![[1.0, 1.0]]).unwrap();
        let z = affine_project(&Element::vector(vec![0.0, 0.0]), &map, &Element::vector(vec![2.0]))
            .unwrap();
        assert!(z.distance(&Element::vector(vec![1.0, 1.0])) < 1e-14);
    }

    #[test]
    fn inconsistent_target_is_infeasible() {
        let map = LinearMap::dense(Shape::Vector(2), array![[1.0, 1.0], [2.0, 2.0]]).unwrap();
        let err = affine_project(
            &Element::vector(vec![0.0, 0.0]),
            &map,
            &Element::vector(vec![1.0, 0.0]),
        );
        assert!(matches!(err, Err(Error::InfeasibleTarget(_))));
    }
}
