use ndarray::{Array1, Array2};

use super::element::{Element, Shape};
use crate::error::{Error, Result};

/// A linear operator `A : E -> T` together with its adjoint.
///
/// `Dense` acts on the row-major flattening of its input and maps into a
/// vector space. `CoordinateSelect` reads a list of entries, e.g.
/// `X -> (X11, X22)`.
#[derive(Debug, Clone, PartialEq)]
pub enum LinearMap {
    Identity { shape: Shape },
    Dense { input: Shape, matrix: Array2<f64> },
    CoordinateSelect { input: Shape, indices: Vec<usize> },
}

impl LinearMap {
    pub fn identity(shape: Shape) -> Self {
        LinearMap::Identity { shape }
    }

    pub fn dense(input: Shape, matrix: Array2<f64>) -> Result<Self> {
        if matrix.ncols() != input.len() {
            return Err(Error::InvalidInput(format!(
                "dense map has {} columns but its input {input} has {} entries",
                matrix.ncols(),
                input.len()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("dense map has non-finite entries".into()));
        }
        Ok(LinearMap::Dense { input, matrix })
    }

    /// Coordinate selection on a matrix input from `(row, col)` pairs (0-based).
    pub fn select_entries(rows: usize, cols: usize, entries: &[(usize, usize)]) -> Result<Self> {
        let mut indices = Vec::with_capacity(entries.len());
        for &(i, j) in entries {
            if i >= rows || j >= cols {
                return Err(Error::InvalidInput(format!(
                    "entry ({i}, {j}) outside a {rows}x{cols} matrix"
                )));
            }
            indices.push(i * cols + j);
        }
        Ok(LinearMap::CoordinateSelect { input: Shape::Matrix(rows, cols), indices })
    }

    /// Coordinate selection from flat (row-major) indices.
    pub fn select_flat(input: Shape, indices: Vec<usize>) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= input.len()) {
            return Err(Error::InvalidInput(format!("index {bad} outside {input}")));
        }
        Ok(LinearMap::CoordinateSelect { input, indices })
    }

    pub fn input_shape(&self) -> Shape {
        match self {
            LinearMap::Identity { shape } => *shape,
            LinearMap::Dense { input, .. } | LinearMap::CoordinateSelect { input, .. } => *input,
        }
    }

    pub fn output_shape(&self) -> Shape {
        match self {
            LinearMap::Identity { shape } => *shape,
            LinearMap::Dense { matrix, .. } => Shape::Vector(matrix.nrows()),
            LinearMap::CoordinateSelect { indices, .. } => Shape::Vector(indices.len()),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, LinearMap::Identity { .. })
    }

    pub fn apply(&self, x: &Element) -> Result<Element> {
        check_shape("linear map input", self.input_shape(), x)?;
        Ok(match self {
            LinearMap::Identity { .. } => x.clone(),
            LinearMap::Dense { matrix, .. } => {
                let flat = Array1::from(x.to_flat());
                Element::Vector(matrix.dot(&flat))
            }
            LinearMap::CoordinateSelect { indices, .. } => {
                let flat = x.to_flat();
                Element::Vector(indices.iter().map(|&i| flat[i]).collect())
            }
        })
    }

    pub fn adjoint(&self, y: &Element) -> Result<Element> {
        check_shape("adjoint input", self.output_shape(), y)?;
        match self {
            LinearMap::Identity { .. } => Ok(y.clone()),
            LinearMap::Dense { input, matrix } => {
                let flat = Array1::from(y.to_flat());
                Element::from_flat(*input, matrix.t().dot(&flat).to_vec())
            }
            LinearMap::CoordinateSelect { input, indices } => {
                let mut out = vec![0.0; input.len()];
                for (&i, v) in indices.iter().zip(y.iter()) {
                    out[i] += v;
                }
                Element::from_flat(*input, out)
            }
        }
    }

    /// The map as an explicit matrix acting on flattened inputs.
    pub fn to_dense(&self) -> Array2<f64> {
        match self {
            LinearMap::Identity { shape } => Array2::eye(shape.len()),
            LinearMap::Dense { matrix, .. } => matrix.clone(),
            LinearMap::CoordinateSelect { input, indices } => {
                let mut a = Array2::zeros((indices.len(), input.len()));
                for (row, &i) in indices.iter().enumerate() {
                    a[[row, i]] = 1.0;
                }
                a
            }
        }
    }
}

fn check_shape(what: &str, expected: Shape, x: &Element) -> Result<()> {
    if x.shape() != expected {
        return Err(Error::InvalidInput(format!(
            "{what}: expected {expected}, got {}",
            x.shape()
        )));
    }
    Ok(())
}
