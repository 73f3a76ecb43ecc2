//! Ready-made instances: the nuclear-norm counterexample, a regular nuclear
//! instance, the noncompact two-dimensional example, and seeded random
//! scenario suites.

use std::sync::Arc;

use ndarray::{array, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::diagnostics::CurveFn;
use crate::error::{Error, Result};
use crate::losses::{CompositeSmooth, SmoothLoss};
use crate::problem::{OptimalityCertificate, ProblemInstance, SolutionSet, DEFAULT_CERTIFY_TOL};
use crate::regularizers::{Regularizer, SignConstraint};
use crate::solver::{proximal_gradient, SolveStatus, StepPolicy, StopCriteria};
use crate::space::{Element, LinearMap, Shape};

fn nuclear_diagonal(d: Vec<f64>) -> Result<ProblemInstance> {
    let b = array![[1.5, -2.0], [-2.0, 3.0]];
    let h = SmoothLoss::general_quadratic(b, d)?;
    let map = LinearMap::select_entries(2, 2, &[(0, 0), (1, 1)])?;
    let x0 = Element::zeros(Shape::Matrix(2, 2));
    let f = CompositeSmooth::new(h, map, None, &x0)?;
    ProblemInstance::new(f, Regularizer::nuclear(), x0)
}

/// `min h(X11, X22) + ||X||_*` over 2x2 matrices with `B = [3/2 -2; -2 3]`,
/// `d = (5/2, -1)`. The unique optimum is `diag(1, 0)` with gradient `-I`.
pub fn counterexample() -> Result<ProblemInstance> {
    Ok(nuclear_diagonal(vec![2.5, -1.0])?.with_solution_set(SolutionSet::Unique))
}

pub fn counterexample_optimum() -> Element {
    counterexample_point(0.0)
}

/// `[1 + 2 delta^2, delta; delta, delta^2]`, approaching the optimum along a
/// curve on which the residual is only quadratic in the distance.
pub fn counterexample_point(delta: f64) -> Element {
    Element::matrix_from_rows(&[vec![1.0 + 2.0 * delta * delta, delta], vec![delta, delta * delta]])
}

pub fn counterexample_curve() -> CurveFn {
    Arc::new(counterexample_point)
}

/// Same loss family as the counterexample with `d = (1/2, 2)`, so that the
/// gradient at the identity is `-I` and the optimum has full rank.
pub fn regular_nuclear() -> Result<ProblemInstance> {
    nuclear_diagonal(vec![0.5, 2.0])
}

pub fn regular_nuclear_optimum() -> Element {
    Element::matrix_from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]])
}

/// `f(x, y) = y exp((x - 1)/y)` (0 for `y <= 0`) over `{x <= 0, y >= 0}`.
/// The optimal set is `{x <= 0, y = 0}` and is unbounded.
pub fn noncompact() -> Result<ProblemInstance> {
    let x0 = Element::vector(vec![0.0, 0.0]);
    let f = CompositeSmooth::new(SmoothLoss::NoncompactExample, LinearMap::identity(Shape::Vector(2)), None, &x0)?;
    let reg = Regularizer::orthant(vec![SignConstraint::NonPos, SignConstraint::NonNeg]);
    Ok(ProblemInstance::new(f, reg, x0)?
        .with_solution_set(SolutionSet::Orthant(vec![SignConstraint::NonPos, SignConstraint::Zero])))
}

pub fn noncompact_optimum() -> Element {
    Element::vector(vec![0.0, 0.0])
}

/// `t -> (-t, height)`: a horizontal ray at constant distance `height` from the
/// optimal set.
pub fn noncompact_ray(height: f64) -> CurveFn {
    Arc::new(move |t| Element::vector(vec![-t, height]))
}

/// Seeded random least-squares scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Tall full-column-rank `A` (20x10) with an L1 penalty.
    StronglyConvex,
    /// Wide `A` (10x20) with an L1 penalty.
    Lasso,
    /// Wide `A` (10x20) with groups of four.
    GroupedLasso,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::StronglyConvex, Scenario::Lasso, Scenario::GroupedLasso];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::StronglyConvex => "strongly-convex",
            Scenario::Lasso => "lasso",
            Scenario::GroupedLasso => "grouped-lasso",
        }
    }

    pub fn build(self, seed: u64) -> Result<ProblemInstance> {
        match self {
            Scenario::StronglyConvex => strongly_convex(seed),
            Scenario::Lasso => lasso(seed),
            Scenario::GroupedLasso => grouped_lasso(seed),
        }
    }
}

fn gaussian_data(rows: usize, cols: usize, seed: u64) -> (Array2<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / (rows as f64).sqrt();
    let a = Array2::from_shape_simple_fn((rows, cols), || {
        let z: f64 = StandardNormal.sample(&mut rng);
        scale * z
    });
    let b = (0..rows).map(|_| StandardNormal.sample(&mut rng)).collect::<Vec<f64>>();
    (a, b)
}

fn least_squares_problem(a: Array2<f64>, b: Vec<f64>, reg: Regularizer) -> Result<ProblemInstance> {
    let n = a.ncols();
    let map = LinearMap::dense(Shape::Vector(n), a)?;
    let x0 = Element::zeros(Shape::Vector(n));
    let f = CompositeSmooth::new(SmoothLoss::least_squares(b)?, map, None, &x0)?;
    ProblemInstance::new(f, reg, x0)
}

fn correlations(a: &Array2<f64>, b: &[f64]) -> Vec<f64> {
    a.t().dot(&ndarray::Array1::from(b.to_vec())).to_vec()
}

pub fn strongly_convex(seed: u64) -> Result<ProblemInstance> {
    let (a, b) = gaussian_data(20, 10, seed);
    let lambda = 0.1 * correlations(&a, &b).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    least_squares_problem(a, b, Regularizer::l1(lambda)?)
}

pub fn lasso(seed: u64) -> Result<ProblemInstance> {
    let (a, b) = gaussian_data(10, 20, seed);
    let lambda = 0.1 * correlations(&a, &b).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    least_squares_problem(a, b, Regularizer::l1(lambda)?)
}

pub fn grouped_lasso(seed: u64) -> Result<ProblemInstance> {
    let (a, b) = gaussian_data(10, 20, seed);
    let corr = correlations(&a, &b);
    let groups: Vec<Vec<usize>> = (0..5).map(|k| (4 * k..4 * k + 4).collect()).collect();
    let max_norm = groups
        .iter()
        .map(|g| g.iter().map(|&i| corr[i] * corr[i]).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let weights = vec![0.3 * max_norm; groups.len()];
    least_squares_problem(a, b, Regularizer::grouped_lasso(groups, weights)?)
}

/// Runs backtracking proximal gradient from the instance's feasible point and
/// certifies the result.
pub fn solve_and_certify(prob: &ProblemInstance) -> Result<OptimalityCertificate> {
    let stop = StopCriteria { tol: 1e-12, max_iter: 200_000 };
    let trace = proximal_gradient(prob, &prob.feasible_point, StepPolicy::default(), stop)?;
    if trace.status != SolveStatus::Converged {
        let residual = trace.iterates.last().map_or(f64::INFINITY, |r| r.residual_norm);
        return Err(Error::NotOptimal { residual, tol: stop.tol });
    }
    prob.certify(&trace.terminal, DEFAULT_CERTIFY_TOL)
}
