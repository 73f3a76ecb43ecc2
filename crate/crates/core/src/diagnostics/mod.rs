//! Empirical error-bound probes around a certified optimum, exponent fits, and
//! regularity checks.

mod regularity;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::problem::{DistanceOptions, OptimalityCertificate, ProblemInstance, SolutionSetGeometry};
use crate::solver::least_squares_line;
use crate::space::Element;

pub use regularity::{
    regularity_summary, strict_complementarity, ComplementarityReport, RegularityCondition,
    RegularitySummary,
};

/// A parameterized path `radius -> x` used instead of random directions.
pub type CurveFn = Arc<dyn Fn(f64) -> Element + Send + Sync>;

/// How probe points are generated for each radius.
#[derive(Clone)]
pub enum Directions {
    /// `x = x* + radius * u` for `count` unit Gaussian directions `u`, drawn
    /// once from a ChaCha8 stream seeded with `seed`.
    Random { count: usize, seed: u64 },
    /// `x = curve(radius)`.
    Curve(CurveFn),
}

impl fmt::Debug for Directions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Directions::Random { count, seed } => {
                f.debug_struct("Random").field("count", count).field("seed", seed).finish()
            }
            Directions::Curve(_) => f.write_str("Curve(..)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSample {
    pub radius: f64,
    pub direction_id: usize,
    pub x: Element,
    /// `d(x, X)`
    pub d: f64,
    /// `||R(x)||`
    pub r_prox: f64,
    pub r_alt: f64,
    pub f_val: f64,
}

/// Evaluates distances and residuals at probe points around `cert.x_star`.
/// Points outside `dom(f) ∩ dom(P)` are skipped. Samples are ordered by radius
/// (as given), then by direction index.
pub fn probe(
    prob: &ProblemInstance,
    cert: &OptimalityCertificate,
    radii: &[f64],
    directions: &Directions,
    opts: &DistanceOptions,
) -> Result<Vec<ProbeSample>> {
    if radii.is_empty() {
        return Err(Error::InvalidInput("no probe radii given".into()));
    }
    if radii.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
        return Err(Error::InvalidInput("probe radii must be finite and non-negative".into()));
    }
    if radii.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::InvalidInput("probe radii must be non-increasing".into()));
    }
    let geometry = SolutionSetGeometry::new(prob, cert, *opts)?;
    let points: Vec<(f64, usize, Element)> = match directions {
        Directions::Random { count, seed } => {
            if *count == 0 {
                return Err(Error::InvalidInput("at least one probe direction is required".into()));
            }
            let dirs = random_directions(&cert.x_star, *count, *seed);
            radii
                .iter()
                .flat_map(|&r| dirs.iter().enumerate().map(move |(j, u)| (r, j, u)))
                .map(|(r, j, u)| (r, j, cert.x_star.axpy(r, u)))
                .collect()
        }
        Directions::Curve(curve) => radii.iter().map(|&r| (r, 0, curve(r))).collect(),
    };
    let mut samples = Vec::with_capacity(points.len());
    for (radius, direction_id, x) in points {
        match evaluate(prob, cert, &geometry, &x) {
            Ok((d, r_prox, r_alt, f_val)) => {
                samples.push(ProbeSample { radius, direction_id, x, d, r_prox, r_alt, f_val })
            }
            Err(Error::Domain(_)) => {}
            Err(e) => return Err(e),
        }
    }
    if samples.is_empty() {
        return Err(Error::EmptyProbe);
    }
    Ok(samples)
}

fn evaluate(
    prob: &ProblemInstance,
    cert: &OptimalityCertificate,
    geometry: &SolutionSetGeometry<'_>,
    x: &Element,
) -> Result<(f64, f64, f64, f64)> {
    if !prob.smooth.in_domain(x) {
        return Err(Error::Domain("probe point outside dom(f)".into()));
    }
    let f_val = prob.objective(x)?;
    if !f_val.is_finite() {
        return Err(Error::Domain("probe point outside dom(P)".into()));
    }
    let r_prox = prob.residual_norm(x)?;
    let r_alt = prob.r_alt(cert, x)?;
    let d = geometry.distance(x)?;
    Ok((d, r_prox, r_alt, f_val))
}

fn random_directions(like: &Element, count: usize, seed: u64) -> Vec<Element> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = like.shape();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let raw: Vec<f64> = (0..shape.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
        let u = Element::from_flat(shape, raw).expect("length matches shape");
        let n = u.norm();
        if n > 0.0 {
            out.push(u.scale(1.0 / n));
        }
    }
    out
}

/// Least-squares line through `(ln d, ln r_prox)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `max d / r_prox` over the fitted samples.
    pub kappa_max: f64,
    pub count: usize,
}

fn usable(s: &ProbeSample) -> bool {
    s.d > 0.0 && s.r_prox > 0.0 && s.d.is_finite() && s.r_prox.is_finite()
}

pub fn fit_exponent(samples: &[ProbeSample]) -> Result<ExponentFit> {
    let used: Vec<&ProbeSample> = samples.iter().filter(|s| usable(s)).collect();
    fit_points(&used)
}

/// Fit through the worst sample per radius: the one with the largest
/// `d / r_prox`.
pub fn fit_exponent_envelope(samples: &[ProbeSample]) -> Result<ExponentFit> {
    let used: Vec<&ProbeSample> = worst_by_radius(samples).into_values().collect();
    fit_points(&used)
}

fn fit_points(used: &[&ProbeSample]) -> Result<ExponentFit> {
    if used.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "{} samples with positive d and r_prox, need at least 4",
            used.len()
        )));
    }
    let points: Vec<(f64, f64)> = used.iter().map(|s| (s.d.ln(), s.r_prox.ln())).collect();
    let line = least_squares_line(&points);
    let kappa_max = used.iter().map(|s| s.d / s.r_prox).fold(0.0, f64::max);
    Ok(ExponentFit {
        slope: line.slope,
        intercept: line.intercept,
        r_squared: line.r_squared,
        kappa_max,
        count: used.len(),
    })
}

/// Keyed by the radius bit pattern so equal radii group together; iteration
/// order is by decreasing radius.
fn worst_by_radius(samples: &[ProbeSample]) -> BTreeMap<std::cmp::Reverse<u64>, &ProbeSample> {
    let mut worst: BTreeMap<std::cmp::Reverse<u64>, &ProbeSample> = BTreeMap::new();
    for s in samples.iter().filter(|s| usable(s)) {
        let key = std::cmp::Reverse(s.radius.to_bits());
        match worst.get(&key) {
            Some(w) if w.d / w.r_prox >= s.d / s.r_prox => {}
            _ => {
                worst.insert(key, s);
            }
        }
    }
    worst
}

/// Aggregate view of one probe run.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub samples: Vec<ProbeSample>,
    pub fit: ExponentFit,
    pub envelope: Option<ExponentFit>,
    /// `(radius, max d / r_prox)`, by decreasing radius.
    pub kappa_by_radius: Vec<(f64, f64)>,
    /// `max / min` of the per-radius kappas.
    pub kappa_stability: f64,
    /// `max r_prox / d`: empirical Lipschitz constant of the residual.
    pub residual_lipschitz: f64,
    /// `max / min` of `r_prox / r_alt` over samples with both positive.
    pub residual_ratio_spread: f64,
}

pub fn analyze(samples: Vec<ProbeSample>) -> Result<ProbeReport> {
    let fit = fit_exponent(&samples)?;
    let envelope = fit_exponent_envelope(&samples).ok();
    let kappa_by_radius: Vec<(f64, f64)> = worst_by_radius(&samples)
        .into_values()
        .map(|s| (s.radius, s.d / s.r_prox))
        .collect();
    let (kmin, kmax) = min_max(kappa_by_radius.iter().map(|k| k.1));
    let residual_lipschitz = samples.iter().filter(|s| usable(s)).map(|s| s.r_prox / s.d).fold(0.0, f64::max);
    let (rmin, rmax) = min_max(
        samples
            .iter()
            .filter(|s| s.r_prox > 0.0 && s.r_alt > 0.0)
            .map(|s| s.r_prox / s.r_alt),
    );
    Ok(ProbeReport {
        samples,
        fit,
        envelope,
        kappa_by_radius,
        kappa_stability: kmax / kmin,
        residual_lipschitz,
        residual_ratio_spread: rmax / rmin,
    })
}

fn min_max(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}
