use std::fmt;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

/// Shape of a point in the ambient space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Shape {
    Vector(usize),
    Matrix(usize, usize),
}

impl Shape {
    /// Number of scalar entries.
    pub fn len(&self) -> usize {
        match *self {
            Shape::Vector(n) => n,
            Shape::Matrix(m, n) => m * n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_matrix(&self) -> bool {
        matches!(self, Shape::Matrix(..))
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Vector(n) => write!(f, "vector({n})"),
            Shape::Matrix(m, n) => write!(f, "matrix({m}x{n})"),
        }
    }
}

/// A point of a finite-dimensional Euclidean space: either a vector with the
/// Euclidean inner product or a matrix with the trace (Frobenius) inner product.
///
/// Matrices are flattened row-major whenever a flat view is needed, e.g. when a
/// dense linear map acts on a matrix argument.
#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    Vector(Array1<f64>),
    Matrix(Array2<f64>),
}

impl Element {
    pub fn vector(v: impl Into<Vec<f64>>) -> Self {
        Element::Vector(Array1::from(v.into()))
    }

    /// Builds a matrix from rows. Panics on ragged input.
    pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Self {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == n), "ragged matrix rows");
        Element::Matrix(Array2::from_shape_fn((m, n), |(i, j)| rows[i][j]))
    }

    pub fn zeros(shape: Shape) -> Self {
        match shape {
            Shape::Vector(n) => Element::Vector(Array1::zeros(n)),
            Shape::Matrix(m, n) => Element::Matrix(Array2::zeros((m, n))),
        }
    }

    /// Builds an element of `shape` from row-major flat entries.
    pub fn from_flat(shape: Shape, data: Vec<f64>) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(Error::InvalidInput(format!(
                "{} entries supplied for {shape}",
                data.len()
            )));
        }
        Ok(match shape {
            Shape::Vector(_) => Element::Vector(Array1::from(data)),
            Shape::Matrix(m, n) => Element::Matrix(
                Array2::from_shape_vec((m, n), data).expect("length checked above"),
            ),
        })
    }

    pub fn shape(&self) -> Shape {
        match self {
            Element::Vector(v) => Shape::Vector(v.len()),
            Element::Matrix(a) => Shape::Matrix(a.nrows(), a.ncols()),
        }
    }

    /// Entries in row-major order.
    pub fn to_flat(&self) -> Vec<f64> {
        match self {
            Element::Vector(v) => v.to_vec(),
            Element::Matrix(a) => a.iter().copied().collect(),
        }
    }

    pub fn iter(&self) -> Box<dyn Iterator<Item = &f64> + '_> {
        match self {
            Element::Vector(v) => Box::new(v.iter()),
            Element::Matrix(a) => Box::new(a.iter()),
        }
    }

    pub fn as_vector(&self) -> Option<&Array1<f64>> {
        match self {
            Element::Vector(v) => Some(v),
            Element::Matrix(_) => None,
        }
    }

    pub fn as_matrix(&self) -> Option<&Array2<f64>> {
        match self {
            Element::Matrix(a) => Some(a),
            Element::Vector(_) => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }

    pub fn inner(&self, other: &Element) -> f64 {
        self.assert_same_shape(other);
        self.iter().zip(other.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn distance(&self, other: &Element) -> f64 {
        self.assert_same_shape(other);
        self.iter()
            .zip(other.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Element {
        match self {
            Element::Vector(v) => Element::Vector(v.mapv(f)),
            Element::Matrix(a) => Element::Matrix(a.mapv(f)),
        }
    }

    /// Entrywise combination of two elements of the same shape.
    pub fn zip_map(&self, other: &Element, f: impl Fn(f64, f64) -> f64) -> Element {
        self.assert_same_shape(other);
        match (self, other) {
            (Element::Vector(a), Element::Vector(b)) => {
                Element::Vector(ndarray::Zip::from(a).and(b).map_collect(|&x, &y| f(x, y)))
            }
            (Element::Matrix(a), Element::Matrix(b)) => {
                Element::Matrix(ndarray::Zip::from(a).and(b).map_collect(|&x, &y| f(x, y)))
            }
            _ => unreachable!("shapes checked"),
        }
    }

    pub fn add(&self, other: &Element) -> Element {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Element) -> Element {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Element {
        self.map(|a| s * a)
    }

    /// `self + s * other`
    pub fn axpy(&self, s: f64, other: &Element) -> Element {
        self.zip_map(other, |a, b| a + s * b)
    }

    pub fn same_shape(&self, other: &Element) -> bool {
        self.shape() == other.shape()
    }

    fn assert_same_shape(&self, other: &Element) {
        assert_eq!(
            self.shape(),
            other.shape(),
            "element shape mismatch: {} vs {}",
            self.shape(),
            other.shape()
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frobenius_inner_product() {
        let a = Element::matrix_from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert_eq!(a.inner(&a), 30.0);
        assert!((a.norm() - 30f64.sqrt()).abs() < 1e-15);
        assert_eq!(a.to_flat(), vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn zero_norm_only_at_zero() {
        let z = Element::zeros(Shape::Vector(3));
        assert_eq!(z.norm(), 0.0);
        assert!(Element::vector(vec![0.0, 1e-100, 0.0]).norm() > 0.0);
    }

    #[test]
    fn from_flat_rejects_wrong_length() {
        assert!(Element::from_flat(Shape::Matrix(2, 2), vec![1.0; 3]).is_err());
    }
}
