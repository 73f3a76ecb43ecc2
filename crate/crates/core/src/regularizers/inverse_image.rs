use ndarray::{Array1, Array2};

use super::{group_norm, Regularizer, SignConstraint};
use crate::error::{Error, Result};
use crate::space::{block, psd_distance, psd_project, svd, Element, Shape, SvdFactorization, DEFAULT_GROUP_TOL};

/// Per-coordinate piece of `Gamma_P(g)` for separable polyhedral regularizers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoordinateCase {
    Empty,
    Zero,
    NonNeg,
    NonPos,
    Free,
}

/// Per-group piece of `Gamma_P(g)` for grouped LASSO:
/// empty, `{0}`, the ray `{a g_J : a <= 0}`, or all of `R^|J|`.
#[derive(Debug, Clone, PartialEq)]
pub enum GroupCase {
    Empty,
    Zero,
    Ray(Array1<f64>),
    FullSpace,
}

/// `Gamma_P(G)` for the nuclear norm, parameterized by an SVD of `-G` (scaled
/// by the inverse weight): `{ U [Z 0; 0 0] V^T : Z PSD of order s_bar }`.
#[derive(Debug, Clone, PartialEq)]
pub struct NuclearImage {
    pub svd: SvdFactorization,
    pub s_bar: usize,
}

impl NuclearImage {
    /// Rotates `x` into the `(U, V)` basis of the stored SVD.
    fn rotate(&self, x: &Array2<f64>) -> Array2<f64> {
        self.svd.u.t().dot(x).dot(&self.svd.v)
    }

    fn project(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        let rotated = self.rotate(x);
        let s = self.s_bar;
        let (m, n) = rotated.dim();
        let mut core = Array2::zeros((m, n));
        if s > 0 {
            let top = psd_project(&block(&rotated, 0..s, 0..s))?;
            core.slice_mut(ndarray::s![0..s, 0..s]).assign(&top);
        }
        Ok(self.svd.u.dot(&core).dot(&self.svd.v.t()))
    }

    fn distance(&self, x: &Array2<f64>) -> Result<f64> {
        let rotated = self.rotate(x);
        let s = self.s_bar;
        let total: f64 = rotated.iter().map(|v| v * v).sum();
        if s == 0 {
            return Ok(total.sqrt());
        }
        let top = block(&rotated, 0..s, 0..s);
        let top_sq: f64 = top.iter().map(|v| v * v).sum();
        let outside = (total - top_sq).max(0.0);
        Ok((outside + psd_distance(&top)?.powi(2)).sqrt())
    }
}

/// The inverse image `Gamma_P(g) = (dP)^{-1}(-g)`. Emptiness is a value.
#[derive(Debug, Clone, PartialEq)]
pub enum InverseImage {
    Coordinates(Vec<CoordinateCase>),
    Groups(Vec<(Vec<usize>, GroupCase)>),
    Point(Element),
    Unconstrained(Shape),
    Nuclear(NuclearImage),
    Empty { reason: String },
}

impl InverseImage {
    pub fn is_empty(&self) -> bool {
        self.empty_reason().is_some()
    }

    pub fn empty_reason(&self) -> Option<String> {
        match self {
            InverseImage::Empty { reason } => Some(reason.clone()),
            InverseImage::Coordinates(cases) => cases
                .iter()
                .position(|c| *c == CoordinateCase::Empty)
                .map(|i| format!("coordinate {i} admits no point")),
            InverseImage::Groups(groups) => groups
                .iter()
                .position(|(_, c)| *c == GroupCase::Empty)
                .map(|k| format!("group {k} admits no point")),
            _ => None,
        }
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, x: &Element) -> Result<Element> {
        if let Some(reason) = self.empty_reason() {
            return Err(Error::InfeasibleTarget(format!("inverse image is empty: {reason}")));
        }
        match self {
            InverseImage::Coordinates(cases) => {
                check_len(cases.len(), x)?;
                let v: Vec<f64> = x
                    .iter()
                    .zip(cases)
                    .map(|(&xi, c)| match c {
                        CoordinateCase::Zero => 0.0,
                        CoordinateCase::NonNeg => xi.max(0.0),
                        CoordinateCase::NonPos => xi.min(0.0),
                        CoordinateCase::Free => xi,
                        CoordinateCase::Empty => unreachable!("emptiness checked"),
                    })
                    .collect();
                Element::from_flat(x.shape(), v)
            }
            InverseImage::Groups(groups) => {
                let n: usize = groups.iter().map(|(g, _)| g.len()).sum();
                check_len(n, x)?;
                let xv = x.to_flat();
                let mut out = vec![0.0; n];
                for (g, case) in groups {
                    match case {
                        GroupCase::Zero => {}
                        GroupCase::FullSpace => g.iter().for_each(|&i| out[i] = xv[i]),
                        GroupCase::Ray(dir) => {
                            let dd = dir.dot(dir);
                            if dd > 0.0 {
                                let a = (g.iter().zip(dir).map(|(&i, d)| xv[i] * d).sum::<f64>() / dd)
                                    .min(0.0);
                                g.iter().zip(dir).for_each(|(&i, d)| out[i] = a * d);
                            }
                        }
                        GroupCase::Empty => unreachable!("emptiness checked"),
                    }
                }
                Element::from_flat(x.shape(), out)
            }
            InverseImage::Point(p) => {
                if p.shape() != x.shape() {
                    return Err(shape_error(p.shape(), x));
                }
                Ok(p.clone())
            }
            InverseImage::Unconstrained(shape) => {
                if *shape != x.shape() {
                    return Err(shape_error(*shape, x));
                }
                Ok(x.clone())
            }
            InverseImage::Nuclear(img) => {
                let m = nuclear_arg(img, x)?;
                Ok(Element::Matrix(img.project(m)?))
            }
            InverseImage::Empty { .. } => unreachable!("emptiness checked"),
        }
    }

    /// `d(x, Gamma_P(g))`.
    pub fn distance(&self, x: &Element) -> Result<f64> {
        match self {
            InverseImage::Nuclear(img) if !self.is_empty() => img.distance(nuclear_arg(img, x)?),
            _ => Ok(x.distance(&self.project(x)?)),
        }
    }
}

fn check_len(n: usize, x: &Element) -> Result<()> {
    if x.shape() != Shape::Vector(n) {
        return Err(shape_error(Shape::Vector(n), x));
    }
    Ok(())
}

fn shape_error(expected: Shape, x: &Element) -> Error {
    Error::InvalidInput(format!("expected {expected}, got {}", x.shape()))
}

fn nuclear_arg<'a>(img: &NuclearImage, x: &'a Element) -> Result<&'a Array2<f64>> {
    let expected = Shape::Matrix(img.svd.nrows(), img.svd.ncols());
    match x {
        Element::Matrix(m) if x.shape() == expected => Ok(m),
        _ => Err(shape_error(expected, x)),
    }
}

pub(super) fn build(reg: &Regularizer, g: &Element, tau: f64) -> Result<InverseImage> {
    let near = |a: f64, b: f64| (a - b).abs() <= tau * b.abs().max(1.0);
    Ok(match reg {
        Regularizer::L1 { weight } => {
            let w = *weight;
            InverseImage::Coordinates(
                g.iter()
                    .map(|&gi| {
                        let s = -gi;
                        if w == 0.0 {
                            if s.abs() <= tau {
                                CoordinateCase::Free
                            } else {
                                CoordinateCase::Empty
                            }
                        } else if s.abs() > w * (1.0 + tau) {
                            CoordinateCase::Empty
                        } else if near(s, w) {
                            CoordinateCase::NonNeg
                        } else if near(s, -w) {
                            CoordinateCase::NonPos
                        } else {
                            CoordinateCase::Zero
                        }
                    })
                    .collect(),
            )
        }
        Regularizer::OrthantIndicator { signs } => InverseImage::Coordinates(
            g.iter()
                .zip(signs)
                .map(|(&gi, sc)| {
                    let s = -gi;
                    let zero = s.abs() <= tau;
                    match sc {
                        SignConstraint::Zero => CoordinateCase::Zero,
                        SignConstraint::Free if zero => CoordinateCase::Free,
                        SignConstraint::NonNeg if zero => CoordinateCase::NonNeg,
                        SignConstraint::NonPos if zero => CoordinateCase::NonPos,
                        SignConstraint::NonNeg if s < 0.0 => CoordinateCase::Zero,
                        SignConstraint::NonPos if s > 0.0 => CoordinateCase::Zero,
                        _ => CoordinateCase::Empty,
                    }
                })
                .collect(),
        ),
        Regularizer::Ridge { weight } => {
            if *weight > 0.0 {
                InverseImage::Point(g.scale(-1.0 / (2.0 * weight)))
            } else if g.norm() <= tau {
                InverseImage::Unconstrained(g.shape())
            } else {
                InverseImage::Empty { reason: "zero ridge weight needs g = 0".into() }
            }
        }
        Regularizer::GroupedLasso { groups, weights } => {
            let gv = g.to_flat();
            InverseImage::Groups(
                groups
                    .iter()
                    .zip(weights)
                    .map(|(grp, &w)| {
                        let nrm = group_norm(&gv, grp);
                        let case = if w == 0.0 {
                            if nrm <= tau {
                                GroupCase::FullSpace
                            } else {
                                GroupCase::Empty
                            }
                        } else if nrm > w * (1.0 + tau) {
                            GroupCase::Empty
                        } else if near(nrm, w) {
                            GroupCase::Ray(grp.iter().map(|&i| gv[i]).collect())
                        } else {
                            GroupCase::Zero
                        };
                        (grp.clone(), case)
                    })
                    .collect(),
            )
        }
        Regularizer::NuclearNorm { weight } => {
            let gm = g.as_matrix().expect("kind checked");
            if *weight == 0.0 {
                return Ok(if g.norm() <= tau {
                    InverseImage::Unconstrained(g.shape())
                } else {
                    InverseImage::Empty { reason: "zero nuclear weight needs G = 0".into() }
                });
            }
            let f = svd(&(gm * (-1.0 / weight)), DEFAULT_GROUP_TOL)?;
            let top = f.sigma.first().copied().unwrap_or(0.0);
            if top > 1.0 + tau {
                InverseImage::Empty {
                    reason: format!("spectral norm of -G/weight is {top} > 1"),
                }
            } else {
                let s_bar = f.sigma.iter().filter(|&&s| s >= 1.0 - tau).count();
                InverseImage::Nuclear(NuclearImage { svd: f, s_bar })
            }
        }
    })
}
