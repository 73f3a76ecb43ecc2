//! Proximal gradient method and a linear-rate estimate for its traces.

use crate::error::{Error, Result};
use crate::problem::ProblemInstance;
use crate::space::Element;

/// Smallest step the line search may try before giving up.
pub const MIN_STEP: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepPolicy {
    Fixed(f64),
    /// Shrink by `beta` until the quadratic upper bound on `f` holds. Each
    /// iteration starts from the last accepted step (initially `t0`).
    Backtracking { beta: f64, t0: f64 },
}

impl Default for StepPolicy {
    fn default() -> Self {
        StepPolicy::Backtracking { beta: 0.5, t0: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopCriteria {
    /// Stop once `||R(x_k)|| <= tol`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for StopCriteria {
    fn default() -> Self {
        StopCriteria { tol: 1e-10, max_iter: 10_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    IterationLimit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterateRecord {
    pub k: usize,
    pub objective: f64,
    pub residual_norm: f64,
    /// Step used to move from `x_k` to `x_{k+1}`; 0 for the last record.
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveTrace {
    pub iterates: Vec<IterateRecord>,
    pub terminal: Element,
    pub status: SolveStatus,
}

impl SolveTrace {
    /// Number of proximal steps taken.
    pub fn steps(&self) -> usize {
        self.iterates.len().saturating_sub(1)
    }
}

/// `x_{k+1} = prox_{tP}(x_k - t grad f(x_k))`.
pub fn proximal_gradient(
    prob: &ProblemInstance,
    x0: &Element,
    step: StepPolicy,
    stop: StopCriteria,
) -> Result<SolveTrace> {
    match step {
        StepPolicy::Fixed(t) if !(t > 0.0 && t.is_finite()) => {
            return Err(Error::InvalidInput(format!("fixed step must be positive, got {t}")));
        }
        StepPolicy::Backtracking { beta, t0 }
            if !(beta > 0.0 && beta < 1.0) || !(t0 > 0.0 && t0.is_finite()) =>
        {
            return Err(Error::InvalidInput(format!(
                "backtracking needs 0 < beta < 1 and t0 > 0, got beta = {beta}, t0 = {t0}"
            )));
        }
        _ => {}
    }
    prob.reg.check_element(x0)?;
    let mut x = x0.clone();
    let mut f = prob.smooth.value(&x)?;
    let mut obj = f + prob.reg.value(&x)?;
    if !obj.is_finite() {
        return Err(Error::Domain("starting point lies outside dom(P)".into()));
    }
    let mut t = match step {
        StepPolicy::Fixed(t) => t,
        StepPolicy::Backtracking { t0, .. } => t0,
    };
    let mut iterates = Vec::new();
    for k in 0..=stop.max_iter {
        let residual = prob.residual_norm(&x)?;
        iterates.push(IterateRecord { k, objective: obj, residual_norm: residual, step: 0.0 });
        if residual <= stop.tol {
            return Ok(SolveTrace { iterates, terminal: x, status: SolveStatus::Converged });
        }
        if k == stop.max_iter {
            break;
        }
        let grad = prob.smooth.gradient(&x)?;
        let (next, f_next, used) = match step {
            StepPolicy::Fixed(t) => {
                let next = prox_step(prob, &x, &grad, t)?;
                let f_next = prob.smooth.value(&next)?;
                (next, f_next, t)
            }
            StepPolicy::Backtracking { beta, .. } => {
                let (next, f_next) = backtrack(prob, &x, f, &grad, &mut t, beta)?;
                (next, f_next, t)
            }
        };
        iterates.last_mut().expect("pushed above").step = used;
        obj = f_next + prob.reg.value(&next)?;
        f = f_next;
        x = next;
    }
    Ok(SolveTrace { iterates, terminal: x, status: SolveStatus::IterationLimit })
}

fn prox_step(prob: &ProblemInstance, x: &Element, grad: &Element, t: f64) -> Result<Element> {
    prob.reg.scaled(t).prox(&x.axpy(-t, grad))
}

fn backtrack(
    prob: &ProblemInstance,
    x: &Element,
    f: f64,
    grad: &Element,
    t: &mut f64,
    beta: f64,
) -> Result<(Element, f64)> {
    loop {
        if *t < MIN_STEP {
            return Err(Error::LineSearch { step: *t });
        }
        let next = prox_step(prob, x, grad, *t)?;
        match prob.smooth.value(&next) {
            Ok(f_next) => {
                let diff = next.sub(x);
                let bound = f + grad.inner(&diff) + diff.inner(&diff) / (2.0 * *t);
                // slack for rounding once the model and f agree to machine precision
                if f_next <= bound + 1e-15 * f.abs().max(1.0) {
                    return Ok((next, f_next));
                }
            }
            Err(Error::Domain(_)) => {}
            Err(e) => return Err(e),
        }
        *t *= beta;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    /// Per-iteration contraction factor of `||R(x_k)||`, in (0, 1].
    pub rate: f64,
    pub r_squared: f64,
}

/// Fits `log ||R(x_k)||` against `k` on the tail half of the iterates with
/// positive residual. Returns `None` when the fit has `R^2 < 0.9`.
pub fn estimate_linear_rate(trace: &SolveTrace) -> Result<Option<RateEstimate>> {
    let points: Vec<(f64, f64)> = trace
        .iterates
        .iter()
        .filter(|r| r.residual_norm > 0.0 && r.residual_norm.is_finite())
        .map(|r| (r.k as f64, r.residual_norm.ln()))
        .collect();
    if points.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "{} iterates with positive residual, need at least 10",
            points.len()
        )));
    }
    let tail = &points[points.len() / 2..];
    let fit = least_squares_line(tail);
    if fit.r_squared < 0.9 {
        return Ok(None);
    }
    Ok(Some(RateEstimate { rate: fit.slope.exp().min(1.0), r_squared: fit.r_squared }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y = slope * x + intercept`. A flat response is a
/// perfect fit (`R^2 = 1`).
pub(crate) fn least_squares_line(points: &[(f64, f64)]) -> LineFit {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_res: f64 = points.iter().map(|p| (p.1 - slope * p.0 - intercept).powi(2)).sum();
    let r_squared = if syy > 0.0 { (1.0 - ss_res / syy).clamp(0.0, 1.0) } else { 1.0 };
    LineFit { slope, intercept, r_squared }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::{CompositeSmooth, SmoothLoss};
    use crate::regularizers::Regularizer;
    use crate::space::{LinearMap, Shape};
    use ndarray::array;

    fn ridge_problem(lambda: f64) -> ProblemInstance {
        let b = vec![1.0, -2.0, 0.5];
        let h = SmoothLoss::least_squares(b).unwrap();
        let x0 = Element::zeros(Shape::Vector(3));
        let f = CompositeSmooth::new(h, LinearMap::identity(Shape::Vector(3)), None, &x0).unwrap();
        ProblemInstance::new(f, Regularizer::ridge(lambda).unwrap(), x0).unwrap()
    }

    #[test]
    fn ridge_matches_closed_form() {
        // minimize 1/2||x - b||^2 + lambda ||x||^2  =>  x = b / (1 + 2 lambda)
        let p = ridge_problem(0.3);
        let x0 = Element::zeros(Shape::Vector(3));
        let trace = proximal_gradient(&p, &x0, StepPolicy::default(), StopCriteria::default()).unwrap();
        assert_eq!(trace.status, SolveStatus::Converged);
        let expected = Element::vector(vec![1.0 / 1.6, -2.0 / 1.6, 0.5 / 1.6]);
        assert!(trace.terminal.distance(&expected) < 1e-9);
    }

    #[test]
    fn starting_at_optimum_takes_no_steps() {
        let p = ridge_problem(0.5);
        let x = Element::vector(vec![0.5, -1.0, 0.25]);
        let trace = proximal_gradient(&p, &x, StepPolicy::Fixed(1.0), StopCriteria::default()).unwrap();
        assert_eq!(trace.steps(), 0);
        assert_eq!(trace.status, SolveStatus::Converged);
        assert_eq!(trace.terminal, x);
    }

    #[test]
    fn iteration_limit_is_reported() {
        let h = SmoothLoss::least_squares(vec![1.0, 1.0]).unwrap();
        let map = LinearMap::dense(Shape::Vector(2), array![[1.0, 0.0], [0.0, 1e-3]]).unwrap();
        let x0 = Element::zeros(Shape::Vector(2));
        let f = CompositeSmooth::new(h, map, None, &x0).unwrap();
        let p = ProblemInstance::new(f, Regularizer::l1(0.0).unwrap(), x0.clone()).unwrap();
        let stop = StopCriteria { tol: 1e-14, max_iter: 5 };
        let trace = proximal_gradient(&p, &x0, StepPolicy::Fixed(1.0), stop).unwrap();
        assert_eq!(trace.status, SolveStatus::IterationLimit);
        assert_eq!(trace.iterates.len(), 6);
    }

    #[test]
    fn invalid_steps_rejected() {
        let p = ridge_problem(0.5);
        let x = Element::zeros(Shape::Vector(3));
        assert!(proximal_gradient(&p, &x, StepPolicy::Fixed(0.0), StopCriteria::default()).is_err());
        let bad = StepPolicy::Backtracking { beta: 1.0, t0: 1.0 };
        assert!(proximal_gradient(&p, &x, bad, StopCriteria::default()).is_err());
    }

    fn synthetic(residuals: &[f64]) -> SolveTrace {
        SolveTrace {
            iterates: residuals
                .iter()
                .enumerate()
                .map(|(k, &r)| IterateRecord { k, objective: 0.0, residual_norm: r, step: 1.0 })
                .collect(),
            terminal: Element::zeros(Shape::Vector(1)),
            status: SolveStatus::IterationLimit,
        }
    }

    #[test]
    fn geometric_trace_rate() {
        let r: Vec<f64> = (0..40).map(|k| 0.7f64.powi(k)).collect();
        let est = estimate_linear_rate(&synthetic(&r)).unwrap().unwrap();
        assert!((est.rate - 0.7).abs() < 1e-12);
        assert!(est.r_squared > 0.999_999);
    }

    #[test]
    fn constant_trace_has_rate_one() {
        let est = estimate_linear_rate(&synthetic(&[0.3; 20])).unwrap().unwrap();
        assert_eq!(est.rate, 1.0);
        assert_eq!(est.r_squared, 1.0);
    }

    #[test]
    fn short_trace_is_insufficient() {
        assert!(matches!(
            estimate_linear_rate(&synthetic(&[1.0; 9])),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn noisy_trace_fails_gate() {
        let r: Vec<f64> = (0..30).map(|k| if k % 2 == 0 { 1.0 } else { 1e-3 }).collect();
        assert_eq!(estimate_linear_rate(&synthetic(&r)).unwrap(), None);
    }
}
