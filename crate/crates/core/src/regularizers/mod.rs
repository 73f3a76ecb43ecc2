//! Regularizer families `P` with their values, proximal maps, distances to
//! the subdifferential, and the inverse images `(dP)^{-1}(-g)`.

mod inverse_image;

pub use inverse_image::{CoordinateCase, GroupCase, InverseImage, NuclearImage};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::space::{block, svd, Element, Shape, DEFAULT_GROUP_TOL};

/// Default relative tolerance for deciding that a singular value equals one,
/// or that a group gradient norm equals its weight.
pub const DEFAULT_TAU_EQ: f64 = 1e-8;

/// Per-coordinate constraint of an orthant-type indicator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SignConstraint {
    Free,
    NonNeg,
    NonPos,
    Zero,
}

impl SignConstraint {
    pub fn clamp(self, v: f64) -> f64 {
        match self {
            SignConstraint::Free => v,
            SignConstraint::NonNeg => v.max(0.0),
            SignConstraint::NonPos => v.min(0.0),
            SignConstraint::Zero => 0.0,
        }
    }

    pub fn admits(self, v: f64) -> bool {
        match self {
            SignConstraint::Free => true,
            SignConstraint::NonNeg => v >= 0.0,
            SignConstraint::NonPos => v <= 0.0,
            SignConstraint::Zero => v == 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Regularizer {
    /// `weight * ||x||_1`
    L1 { weight: f64 },
    /// `weight * ||x||_2^2`
    Ridge { weight: f64 },
    /// `sum_J w_J ||x_J||_2` over a partition of the coordinates.
    GroupedLasso { groups: Vec<Vec<usize>>, weights: Vec<f64> },
    /// `weight * ||X||_*`
    NuclearNorm { weight: f64 },
    /// Indicator of `{x : x_i satisfies signs[i]}`.
    OrthantIndicator { signs: Vec<SignConstraint> },
}

impl Regularizer {
    pub fn l1(weight: f64) -> Result<Self> {
        check_weight("L1", weight)?;
        Ok(Regularizer::L1 { weight })
    }

    pub fn ridge(weight: f64) -> Result<Self> {
        check_weight("ridge", weight)?;
        Ok(Regularizer::Ridge { weight })
    }

    /// The unit-weight nuclear norm.
    pub fn nuclear() -> Self {
        Regularizer::NuclearNorm { weight: 1.0 }
    }

    pub fn nuclear_weighted(weight: f64) -> Result<Self> {
        check_weight("nuclear norm", weight)?;
        Ok(Regularizer::NuclearNorm { weight })
    }

    pub fn orthant(signs: Vec<SignConstraint>) -> Self {
        Regularizer::OrthantIndicator { signs }
    }

    /// Groups must be disjoint, nonempty, and cover `0..n` for some `n`.
    pub fn grouped_lasso(groups: Vec<Vec<usize>>, weights: Vec<f64>) -> Result<Self> {
        if groups.len() != weights.len() {
            return Err(Error::InvalidInput(format!(
                "{} groups but {} weights",
                groups.len(),
                weights.len()
            )));
        }
        for &w in &weights {
            check_weight("group", w)?;
        }
        let n: usize = groups.iter().map(Vec::len).sum();
        let mut seen = vec![false; n];
        for (k, g) in groups.iter().enumerate() {
            if g.is_empty() {
                return Err(Error::InvalidInput(format!("group {k} is empty")));
            }
            for &i in g {
                if i >= n || seen[i] {
                    return Err(Error::InvalidInput(format!(
                        "groups must partition 0..{n}; index {i} in group {k} is out of range or repeated"
                    )));
                }
                seen[i] = true;
            }
        }
        Ok(Regularizer::GroupedLasso { groups, weights })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Regularizer::L1 { .. } => "l1",
            Regularizer::Ridge { .. } => "ridge",
            Regularizer::GroupedLasso { .. } => "grouped_lasso",
            Regularizer::NuclearNorm { .. } => "nuclear_norm",
            Regularizer::OrthantIndicator { .. } => "orthant",
        }
    }

    /// Whether the regularizer has a polyhedral epigraph (or, for grouped
    /// LASSO, polyhedral inverse images).
    pub fn has_polyhedral_inverse_images(&self) -> bool {
        !matches!(self, Regularizer::NuclearNorm { .. } | Regularizer::Ridge { .. })
    }

    /// `t P`, used for proximal steps of length `t`.
    pub fn scaled(&self, t: f64) -> Regularizer {
        match self {
            Regularizer::L1 { weight } => Regularizer::L1 { weight: weight * t },
            Regularizer::Ridge { weight } => Regularizer::Ridge { weight: weight * t },
            Regularizer::GroupedLasso { groups, weights } => Regularizer::GroupedLasso {
                groups: groups.clone(),
                weights: weights.iter().map(|w| w * t).collect(),
            },
            Regularizer::NuclearNorm { weight } => Regularizer::NuclearNorm { weight: weight * t },
            Regularizer::OrthantIndicator { .. } => self.clone(),
        }
    }

    /// Rejects elements whose kind or size does not match the regularizer.
    pub fn check_element(&self, x: &Element) -> Result<()> {
        let ok = match (self, x.shape()) {
            (Regularizer::NuclearNorm { .. }, Shape::Matrix(..)) => true,
            (Regularizer::NuclearNorm { .. }, Shape::Vector(_)) => false,
            (_, Shape::Matrix(..)) => false,
            (Regularizer::GroupedLasso { groups, .. }, Shape::Vector(n)) => {
                groups.iter().map(Vec::len).sum::<usize>() == n
            }
            (Regularizer::OrthantIndicator { signs }, Shape::Vector(n)) => signs.len() == n,
            (_, Shape::Vector(_)) => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "{} regularizer cannot act on {}",
                self.name(),
                x.shape()
            )))
        }
    }

    /// `P(x)`; the orthant indicator returns `+inf` outside its set.
    pub fn value(&self, x: &Element) -> Result<f64> {
        self.check_element(x)?;
        Ok(match self {
            Regularizer::L1 { weight } => weight * x.iter().map(|v| v.abs()).sum::<f64>(),
            Regularizer::Ridge { weight } => weight * x.inner(x),
            Regularizer::GroupedLasso { groups, weights } => {
                let v = x.to_flat();
                groups.iter().zip(weights).map(|(g, w)| w * group_norm(&v, g)).sum()
            }
            Regularizer::NuclearNorm { weight } => {
                let f = svd(matrix(x), DEFAULT_GROUP_TOL)?;
                weight * f.sigma.sum()
            }
            Regularizer::OrthantIndicator { signs } => {
                if x.iter().zip(signs).all(|(&v, s)| s.admits(v)) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        })
    }

    /// `argmin_u 1/2 ||u - z||^2 + P(u)`.
    pub fn prox(&self, z: &Element) -> Result<Element> {
        self.check_element(z)?;
        Ok(match self {
            Regularizer::L1 { weight } => z.map(|v| soft_threshold(v, *weight)),
            Regularizer::Ridge { weight } => z.scale(1.0 / (1.0 + 2.0 * weight)),
            Regularizer::GroupedLasso { groups, weights } => {
                let mut v = z.to_flat();
                for (g, &w) in groups.iter().zip(weights) {
                    let nrm = group_norm(&v, g);
                    let factor = if nrm > w { 1.0 - w / nrm } else { 0.0 };
                    for &i in g {
                        v[i] *= factor;
                    }
                }
                Element::from_flat(z.shape(), v)?
            }
            Regularizer::NuclearNorm { weight } => {
                let f = svd(matrix(z), DEFAULT_GROUP_TOL)?;
                let shrunk: Vec<f64> = f.sigma.iter().map(|s| (s - weight).max(0.0)).collect();
                Element::Matrix(f.compose(&shrunk))
            }
            Regularizer::OrthantIndicator { signs } => {
                let v: Vec<f64> = z.iter().zip(signs).map(|(&v, s)| s.clamp(v)).collect();
                Element::from_flat(z.shape(), v)?
            }
        })
    }

    /// `prox(x - g) - x`, assembled coordinate-wise where the prox is separable
    /// so that tiny `g` is not swallowed by cancellation against `x`.
    pub fn prox_residual(&self, x: &Element, g: &Element) -> Result<Element> {
        self.check_element(x)?;
        if !x.same_shape(g) {
            return Err(Error::InvalidInput("gradient and point differ in shape".into()));
        }
        Ok(match self {
            Regularizer::L1 { weight } => x.zip_map(g, |xi, gi| {
                let z = xi - gi;
                if z.abs() <= *weight {
                    -xi
                } else {
                    -gi - weight * z.signum()
                }
            }),
            Regularizer::Ridge { weight } => {
                let denom = 1.0 + 2.0 * weight;
                x.zip_map(g, |xi, gi| (-gi - 2.0 * weight * xi) / denom)
            }
            Regularizer::GroupedLasso { groups, weights } => {
                let xv = x.to_flat();
                let gv = g.to_flat();
                let mut out = vec![0.0; xv.len()];
                for (grp, &w) in groups.iter().zip(weights) {
                    let nrm = grp.iter().map(|&i| (xv[i] - gv[i]).powi(2)).sum::<f64>().sqrt();
                    for &i in grp {
                        out[i] = if nrm <= w { -xv[i] } else { -gv[i] - w * (xv[i] - gv[i]) / nrm };
                    }
                }
                Element::from_flat(x.shape(), out)?
            }
            Regularizer::NuclearNorm { .. } => self.prox(&x.sub(g))?.sub(x),
            Regularizer::OrthantIndicator { signs } => {
                let out: Vec<f64> = x
                    .iter()
                    .zip(g.iter())
                    .zip(signs)
                    .map(|((&xi, &gi), s)| {
                        let z = xi - gi;
                        match s {
                            SignConstraint::Free => -gi,
                            SignConstraint::Zero => -xi,
                            SignConstraint::NonNeg if z >= 0.0 => -gi,
                            SignConstraint::NonPos if z <= 0.0 => -gi,
                            _ => -xi,
                        }
                    })
                    .collect();
                Element::from_flat(x.shape(), out)?
            }
        })
    }

    /// `d(s, dP(x))`. The orthant indicator requires `x` in its set.
    pub fn subdiff_distance(&self, x: &Element, s: &Element) -> Result<f64> {
        self.check_element(x)?;
        if !x.same_shape(s) {
            return Err(Error::InvalidInput("subgradient and point differ in shape".into()));
        }
        Ok(match self {
            Regularizer::L1 { weight } => x
                .iter()
                .zip(s.iter())
                .map(|(&xi, &si)| {
                    if xi != 0.0 {
                        (si - weight * xi.signum()).powi(2)
                    } else {
                        (si.abs() - weight).max(0.0).powi(2)
                    }
                })
                .sum::<f64>()
                .sqrt(),
            Regularizer::Ridge { weight } => s.distance(&x.scale(2.0 * weight)),
            Regularizer::GroupedLasso { groups, weights } => {
                let xv = x.to_flat();
                let sv = s.to_flat();
                groups
                    .iter()
                    .zip(weights)
                    .map(|(g, &w)| {
                        let nx = group_norm(&xv, g);
                        if nx > 0.0 {
                            g.iter().map(|&i| (sv[i] - w * xv[i] / nx).powi(2)).sum::<f64>()
                        } else {
                            (group_norm(&sv, g) - w).max(0.0).powi(2)
                        }
                    })
                    .sum::<f64>()
                    .sqrt()
            }
            Regularizer::NuclearNorm { weight } => {
                if *weight == 0.0 {
                    s.norm()
                } else {
                    weight * nuclear_subdiff_distance(matrix(x), &(matrix(s) / *weight))?
                }
            }
            Regularizer::OrthantIndicator { signs } => {
                let mut total = 0.0;
                for ((&xi, &si), sc) in x.iter().zip(s.iter()).zip(signs) {
                    if !sc.admits(xi) {
                        return Err(Error::Domain(format!(
                            "coordinate {xi} violates its {sc:?} constraint"
                        )));
                    }
                    // normal cone of the coordinate constraint at xi
                    let d = match sc {
                        SignConstraint::Free => si.abs(),
                        SignConstraint::Zero => 0.0,
                        SignConstraint::NonNeg if xi == 0.0 => si.max(0.0),
                        SignConstraint::NonPos if xi == 0.0 => (-si).max(0.0),
                        _ => si.abs(),
                    };
                    total += d * d;
                }
                total.sqrt()
            }
        })
    }

    /// `Gamma_P(g) = {x : -g in dP(x)}` with the default equality tolerance.
    pub fn inverse_image(&self, g: &Element) -> Result<InverseImage> {
        self.inverse_image_with(g, DEFAULT_TAU_EQ)
    }

    pub fn inverse_image_with(&self, g: &Element, tau_eq: f64) -> Result<InverseImage> {
        self.check_element(g)?;
        inverse_image::build(self, g, tau_eq)
    }

    /// `d(x, Gamma_P(g))`; fails with an infeasible-target error when the
    /// inverse image is empty.
    pub fn inverse_image_distance(&self, g: &Element, x: &Element) -> Result<f64> {
        self.check_element(x)?;
        self.inverse_image(g)?.distance(x)
    }
}

fn check_weight(what: &str, w: f64) -> Result<()> {
    if !(w.is_finite() && w >= 0.0) {
        return Err(Error::InvalidInput(format!("{what} weight must be finite and >= 0, got {w}")));
    }
    Ok(())
}

pub(crate) fn group_norm(v: &[f64], group: &[usize]) -> f64 {
    group.iter().map(|&i| v[i] * v[i]).sum::<f64>().sqrt()
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    v.signum() * (v.abs() - t).max(0.0)
}

fn matrix(x: &Element) -> &Array2<f64> {
    x.as_matrix().expect("element kind checked by the caller")
}

/// `d(s, d||.||_*(x))` with `dP(x) = U [I_r 0; 0 W] V^T, ||W|| <= 1`.
fn nuclear_subdiff_distance(x: &Array2<f64>, s: &Array2<f64>) -> Result<f64> {
    let f = svd(x, DEFAULT_GROUP_TOL)?;
    let (m, n) = x.dim();
    let r = f.rank();
    let rotated = f.u.t().dot(s).dot(&f.v);
    let mut total = 0.0;
    for i in 0..m {
        for j in 0..n {
            if i < r && j < r {
                let target = if i == j { 1.0 } else { 0.0 };
                total += (rotated[[i, j]] - target).powi(2);
            } else if i < r || j < r {
                total += rotated[[i, j]].powi(2);
            }
        }
    }
    if r < m && r < n {
        let rest = block(&rotated, r..m, r..n);
        let g = svd(&rest, DEFAULT_GROUP_TOL)?;
        total += g.sigma.iter().map(|s| (s - 1.0).max(0.0).powi(2)).sum::<f64>();
    }
    Ok(total.sqrt())
}
