//! Composite problems `F = f + P`, the proximal residual map, optimality
//! certificates, and distances to the optimal set.
//!
//! For the problem class handled here every optimum shares the same
//! `y_bar = A(x*)` and `g_bar = grad f(x*)`, so the optimal set is the
//! intersection of the affine set `{x : A(x) = y_bar}` with the inverse image
//! `(dP)^{-1}(-g_bar)`. Distances to that intersection are computed with
//! Dykstra's alternating projections.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::losses::CompositeSmooth;
use crate::regularizers::{InverseImage, Regularizer, SignConstraint};
use crate::space::{pseudo_inverse, AffineProjector, Element, LinearMap};

/// Default tolerance on `||R(x)||` for accepting a point as optimal.
pub const DEFAULT_CERTIFY_TOL: f64 = 1e-9;

/// How `d(x, X)` is obtained for an instance.
#[derive(Debug, Clone, PartialEq)]
pub enum SolutionSet {
    /// `X = {x : A(x) = y_bar} ∩ (dP)^{-1}(-g_bar)`, resolved by Dykstra.
    Invariant,
    /// `X = {x*}`.
    Unique,
    /// `X` is given directly by per-coordinate sign constraints.
    Orthant(Vec<SignConstraint>),
}

#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub smooth: CompositeSmooth,
    pub reg: Regularizer,
    pub feasible_point: Element,
    pub solution_set: SolutionSet,
    projector: OnceLock<AffineProjector>,
}

impl ProblemInstance {
    /// Validates that `feasible_point` lies in `dom(f) ∩ dom(P)` and picks the
    /// solution-set model: `Unique` when `F` is known to be strongly convex,
    /// `Invariant` otherwise.
    pub fn new(smooth: CompositeSmooth, reg: Regularizer, feasible_point: Element) -> Result<Self> {
        reg.check_element(&feasible_point)?;
        smooth.value(&feasible_point)?;
        if !reg.value(&feasible_point)?.is_finite() {
            return Err(Error::Domain("feasible point lies outside dom(P)".into()));
        }
        let mut prob = ProblemInstance {
            smooth,
            reg,
            feasible_point,
            solution_set: SolutionSet::Invariant,
            projector: OnceLock::new(),
        };
        if prob.is_strongly_convex() {
            prob.solution_set = SolutionSet::Unique;
        }
        Ok(prob)
    }

    pub fn with_solution_set(mut self, solution_set: SolutionSet) -> Self {
        self.solution_set = solution_set;
        self
    }

    pub fn map(&self) -> &LinearMap {
        &self.smooth.map
    }

    /// `F` is strongly convex: either `f` is (strongly convex `h` composed with
    /// an injective map) or the regularizer is a positive ridge.
    pub fn is_strongly_convex(&self) -> bool {
        let ridge = matches!(self.reg, Regularizer::Ridge { weight } if weight > 0.0);
        ridge || (self.smooth.h.is_strongly_convex() && map_is_injective(&self.smooth.map))
    }

    pub fn objective(&self, x: &Element) -> Result<f64> {
        Ok(self.smooth.value(x)? + self.reg.value(x)?)
    }

    /// `R(x) = prox_P(x - grad f(x)) - x`, with unit prox step.
    pub fn residual_map(&self, x: &Element) -> Result<Element> {
        let g = self.smooth.gradient(x)?;
        self.reg.prox_residual(x, &g)
    }

    pub fn residual_norm(&self, x: &Element) -> Result<f64> {
        Ok(self.residual_map(x)?.norm())
    }

    /// Accepts `x` as optimal when `||R(x)|| <= tol` and records the invariants.
    pub fn certify(&self, x: &Element, tol: f64) -> Result<OptimalityCertificate> {
        let residual = self.residual_norm(x)?;
        if !(residual <= tol) {
            return Err(Error::NotOptimal { residual, tol });
        }
        Ok(OptimalityCertificate {
            x_star: x.clone(),
            y_bar: self.smooth.map.apply(x)?,
            g_bar: self.smooth.gradient(x)?,
            residual_norm: residual,
            tol,
        })
    }

    /// `||A(x) - y_bar|| + d(-g_bar, dP(x))`.
    pub fn r_alt(&self, cert: &OptimalityCertificate, x: &Element) -> Result<f64> {
        let gap = self.smooth.map.apply(x)?.distance(&cert.y_bar);
        Ok(gap + self.reg.subdiff_distance(x, &cert.g_bar.scale(-1.0))?)
    }

    pub fn distance_to_solution_set(
        &self,
        cert: &OptimalityCertificate,
        x: &Element,
        opts: &DistanceOptions,
    ) -> Result<f64> {
        SolutionSetGeometry::new(self, cert, *opts)?.distance(x)
    }

    fn affine_projector(&self) -> Result<&AffineProjector> {
        if let Some(p) = self.projector.get() {
            return Ok(p);
        }
        let p = AffineProjector::new(&self.smooth.map)?;
        Ok(self.projector.get_or_init(|| p))
    }
}

impl PartialEq for ProblemInstance {
    fn eq(&self, other: &Self) -> bool {
        self.smooth == other.smooth
            && self.reg == other.reg
            && self.feasible_point == other.feasible_point
            && self.solution_set == other.solution_set
    }
}

fn map_is_injective(map: &LinearMap) -> bool {
    match map {
        LinearMap::Identity { .. } => true,
        LinearMap::CoordinateSelect { input, indices } => {
            let mut hit = vec![false; input.len()];
            indices.iter().for_each(|&i| hit[i] = true);
            hit.into_iter().all(|h| h)
        }
        LinearMap::Dense { matrix, .. } => {
            if matrix.nrows() < matrix.ncols() {
                return false;
            }
            // full column rank iff A^+ A = I
            pseudo_inverse(matrix)
                .map(|p| {
                    let prod = p.dot(matrix);
                    let n = prod.nrows();
                    (0..n).all(|i| (0..n).all(|j| (prod[[i, j]] - f64::from(i == j)).abs() < 1e-8))
                })
                .unwrap_or(false)
        }
    }
}

/// A verified optimum with the shared invariants `y_bar = A(x*)` and
/// `g_bar = grad f(x*)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalityCertificate {
    pub x_star: Element,
    pub y_bar: Element,
    pub g_bar: Element,
    pub residual_norm: f64,
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceOptions {
    /// Fixed-point tolerance of the alternating projections.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for DistanceOptions {
    fn default() -> Self {
        DistanceOptions { tol: 1e-10, max_sweeps: 10_000 }
    }
}

enum Geometry<'a> {
    Unique(&'a Element),
    Orthant(&'a [SignConstraint]),
    Intersection { affine: &'a AffineProjector, y_bar: &'a Element, image: InverseImage },
}

/// Precomputed projection machinery for one certified instance, so that many
/// distances can be evaluated cheaply.
pub struct SolutionSetGeometry<'a> {
    geometry: Geometry<'a>,
    opts: DistanceOptions,
}

impl<'a> SolutionSetGeometry<'a> {
    pub fn new(prob: &'a ProblemInstance, cert: &'a OptimalityCertificate, opts: DistanceOptions) -> Result<Self> {
        let geometry = match &prob.solution_set {
            SolutionSet::Unique => Geometry::Unique(&cert.x_star),
            SolutionSet::Orthant(signs) => Geometry::Orthant(signs),
            SolutionSet::Invariant => {
                let image = prob.reg.inverse_image(&cert.g_bar)?;
                if let Some(reason) = image.empty_reason() {
                    return Err(Error::InfeasibleTarget(format!(
                        "certificate inverse image is empty: {reason}"
                    )));
                }
                Geometry::Intersection { affine: prob.affine_projector()?, y_bar: &cert.y_bar, image }
            }
        };
        Ok(SolutionSetGeometry { geometry, opts })
    }

    /// Nearest point of the optimal set.
    pub fn project(&self, x: &Element) -> Result<Element> {
        match &self.geometry {
            Geometry::Unique(x_star) => Ok((*x_star).clone()),
            Geometry::Orthant(signs) => {
                if signs.len() != x.shape().len() {
                    return Err(Error::InvalidInput("orthant solution set has the wrong size".into()));
                }
                let v: Vec<f64> = x.iter().zip(signs.iter()).map(|(&v, s)| s.clamp(v)).collect();
                Element::from_flat(x.shape(), v)
            }
            Geometry::Intersection { affine, y_bar, image } => {
                dykstra(x, |z| affine.project(z, y_bar), |z| image.project(z), &self.opts)
            }
        }
    }

    pub fn distance(&self, x: &Element) -> Result<f64> {
        match &self.geometry {
            Geometry::Unique(x_star) => Ok(x.distance(x_star)),
            Geometry::Orthant(_) => Ok(x.distance(&self.project(x)?)),
            Geometry::Intersection { affine, y_bar, image } => {
                // members of both sets are reported exactly rather than via
                // Dykstra's rounding
                let tol = self.opts.tol * x.norm().max(1.0);
                if affine.map().apply(x)?.distance(y_bar) <= tol && image.distance(x)? <= tol {
                    return Ok(0.0);
                }
                Ok(x.distance(&self.project(x)?))
            }
        }
    }
}

/// Dykstra's alternating projections onto the intersection of two closed
/// convex sets; converges to the projection of `x` onto the intersection.
pub fn dykstra(
    x: &Element,
    first: impl Fn(&Element) -> Result<Element>,
    second: impl Fn(&Element) -> Result<Element>,
    opts: &DistanceOptions,
) -> Result<Element> {
    let tol = opts.tol * x.norm().max(1.0);
    let mut y = x.clone();
    let mut p = Element::zeros(x.shape());
    let mut q = Element::zeros(x.shape());
    let mut gap = f64::INFINITY;
    for _ in 0..opts.max_sweeps {
        let yp = y.add(&p);
        let a = first(&yp)?;
        p = yp.sub(&a);
        let aq = a.add(&q);
        let b = second(&aq)?;
        q = aq.sub(&b);
        gap = a.distance(&b);
        let change = b.distance(&y);
        y = b;
        if gap <= tol && change <= tol {
            return Ok(y);
        }
    }
    Err(Error::Convergence { sweeps: opts.max_sweeps, gap })
}
