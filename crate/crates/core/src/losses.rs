//! Smooth losses `h` and the composite `f(x) = h(A(x)) + <c, x>`.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::space::{sym_eig, Element, LinearMap, Shape};

/// Largest prediction accepted by the Poisson loss before `exp` overflows in
/// any meaningful sense.
const POISSON_MAX_PREDICTION: f64 = 700.0;

/// The smooth part `h`, evaluated on the flattened entries of its argument.
#[derive(Debug, Clone, PartialEq)]
pub enum SmoothLoss {
    /// `1/2 ||y - b||^2`
    LeastSquares { targets: Array1<f64> },
    /// `1/2 ||B^{1/2} y - B^{-1/2} d||^2 = 1/2 y'By - d'y + 1/2 d'B^{-1}d`
    GeneralQuadratic { b: Array2<f64>, d: Array1<f64>, b_inv_d: Array1<f64> },
    /// `sum_i log(1 + exp(-y_i b_i))`, labels in {-1, 1}
    Logistic { labels: Array1<f64> },
    /// `sum_i (-y_i b_i + exp(y_i))`, counts in {0, 1, ...}
    Poisson { counts: Array1<f64> },
    /// `(x, y) -> y exp((x - 1)/y)` for `y > 0`, `0` for `y <= 0`, on `x < 1`.
    NoncompactExample,
}

impl SmoothLoss {
    pub fn least_squares(targets: Vec<f64>) -> Result<Self> {
        if targets.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("least-squares targets must be finite".into()));
        }
        Ok(SmoothLoss::LeastSquares { targets: Array1::from(targets) })
    }

    /// Checks that `b` is symmetric positive definite.
    pub fn general_quadratic(b: Array2<f64>, d: Vec<f64>) -> Result<Self> {
        let n = d.len();
        if b.dim() != (n, n) {
            return Err(Error::InvalidInput(format!(
                "quadratic needs an {n}x{n} matrix, got {:?}",
                b.dim()
            )));
        }
        let eig = sym_eig(&b)?;
        let min = eig.values.iter().copied().fold(f64::INFINITY, f64::min);
        if !(min > 0.0) {
            return Err(Error::InvalidInput(format!(
                "quadratic matrix is not positive definite (smallest eigenvalue {min:e})"
            )));
        }
        let d = Array1::from(d);
        let inv: Vec<f64> = eig.values.iter().map(|l| 1.0 / l).collect();
        let b_inv_d = eig.compose(&inv).dot(&d);
        Ok(SmoothLoss::GeneralQuadratic { b, d, b_inv_d })
    }

    pub fn logistic(labels: Vec<f64>) -> Result<Self> {
        if labels.iter().any(|&l| l != 1.0 && l != -1.0) {
            return Err(Error::InvalidInput("logistic labels must be -1 or 1".into()));
        }
        Ok(SmoothLoss::Logistic { labels: Array1::from(labels) })
    }

    pub fn poisson(counts: Vec<f64>) -> Result<Self> {
        if counts.iter().any(|&c| !(c >= 0.0 && c.fract() == 0.0 && c.is_finite())) {
            return Err(Error::InvalidInput("Poisson counts must be non-negative integers".into()));
        }
        Ok(SmoothLoss::Poisson { counts: Array1::from(counts) })
    }

    /// Dimension of the argument, when fixed by the loss data.
    pub fn dimension(&self) -> usize {
        match self {
            SmoothLoss::LeastSquares { targets } => targets.len(),
            SmoothLoss::GeneralQuadratic { d, .. } => d.len(),
            SmoothLoss::Logistic { labels } => labels.len(),
            SmoothLoss::Poisson { counts } => counts.len(),
            SmoothLoss::NoncompactExample => 2,
        }
    }

    /// Whether `h` is strongly convex on every compact subset of its domain.
    pub fn is_strongly_convex_on_compacts(&self) -> bool {
        !matches!(self, SmoothLoss::NoncompactExample)
    }

    /// Whether `h` is globally strongly convex.
    pub fn is_strongly_convex(&self) -> bool {
        matches!(self, SmoothLoss::LeastSquares { .. } | SmoothLoss::GeneralQuadratic { .. })
    }

    pub fn in_domain(&self, y: &Element) -> bool {
        self.check_domain(&y.to_flat()).is_ok()
    }

    fn check_domain(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.dimension() {
            return Err(Error::InvalidInput(format!(
                "loss expects {} entries, got {}",
                self.dimension(),
                y.len()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite argument".into()));
        }
        match self {
            SmoothLoss::Poisson { .. } => {
                if let Some(v) = y.iter().find(|&&v| v > POISSON_MAX_PREDICTION) {
                    return Err(Error::Domain(format!("Poisson prediction {v} exceeds 700")));
                }
            }
            SmoothLoss::NoncompactExample => {
                if y[0] >= 1.0 {
                    return Err(Error::Domain(format!("first coordinate {} must be < 1", y[0])));
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn value(&self, y: &Element) -> Result<f64> {
        let y = y.to_flat();
        self.check_domain(&y)?;
        Ok(match self {
            SmoothLoss::LeastSquares { targets } => {
                0.5 * y.iter().zip(targets).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
            }
            SmoothLoss::GeneralQuadratic { b, d, b_inv_d } => {
                let y = Array1::from(y);
                0.5 * y.dot(&b.dot(&y)) - d.dot(&y) + 0.5 * d.dot(b_inv_d)
            }
            SmoothLoss::Logistic { labels } => {
                y.iter().zip(labels).map(|(&p, &l)| softplus(-p * l)).sum()
            }
            SmoothLoss::Poisson { counts } => {
                y.iter().zip(counts).map(|(&p, &c)| -p * c + p.exp()).sum()
            }
            SmoothLoss::NoncompactExample => {
                let (x, t) = (y[0], y[1]);
                if t > 0.0 {
                    // y exp((x-1)/y) formed in log space
                    (t.ln() + (x - 1.0) / t).exp()
                } else {
                    0.0
                }
            }
        })
    }

    pub fn gradient(&self, y: &Element) -> Result<Element> {
        let shape = y.shape();
        let y = y.to_flat();
        self.check_domain(&y)?;
        let g: Vec<f64> = match self {
            SmoothLoss::LeastSquares { targets } => {
                y.iter().zip(targets).map(|(a, b)| a - b).collect()
            }
            SmoothLoss::GeneralQuadratic { b, d, .. } => (b.dot(&Array1::from(y)) - d).to_vec(),
            SmoothLoss::Logistic { labels } => y
                .iter()
                .zip(labels)
                .map(|(&p, &l)| -l * logistic_sigmoid(-p * l))
                .collect(),
            SmoothLoss::Poisson { counts } => {
                y.iter().zip(counts).map(|(&p, &c)| -c + p.exp()).collect()
            }
            SmoothLoss::NoncompactExample => {
                let (x, t) = (y[0], y[1]);
                if t > 0.0 {
                    let s = (x - 1.0) / t;
                    let e = s.exp();
                    vec![e, (1.0 - s) * e]
                } else {
                    vec![0.0, 0.0]
                }
            }
        };
        Element::from_flat(shape, g)
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn logistic_sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `f(x) = h(A(x)) + <c, x>`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeSmooth {
    pub h: SmoothLoss,
    pub map: LinearMap,
    pub c: Element,
}

impl CompositeSmooth {
    /// Assembles `f` and checks `dom(f)` is nonempty by evaluating at `witness`.
    pub fn new(h: SmoothLoss, map: LinearMap, c: Option<Element>, witness: &Element) -> Result<Self> {
        let input = map.input_shape();
        if map.output_shape().len() != h.dimension() {
            return Err(Error::InvalidInput(format!(
                "map outputs {} but the loss expects {} entries",
                map.output_shape(),
                h.dimension()
            )));
        }
        let c = c.unwrap_or_else(|| Element::zeros(input));
        if c.shape() != input {
            return Err(Error::InvalidInput(format!(
                "linear term has shape {}, expected {input}",
                c.shape()
            )));
        }
        let f = CompositeSmooth { h, map, c };
        f.value(witness)?;
        Ok(f)
    }

    pub fn input_shape(&self) -> Shape {
        self.map.input_shape()
    }

    pub fn value(&self, x: &Element) -> Result<f64> {
        let y = self.map.apply(x)?;
        Ok(self.h.value(&y)? + self.c.inner(x))
    }

    /// `A^*(grad h(A(x))) + c`
    pub fn gradient(&self, x: &Element) -> Result<Element> {
        let y = self.map.apply(x)?;
        Ok(self.map.adjoint(&self.h.gradient(&y)?)?.add(&self.c))
    }

    pub fn in_domain(&self, x: &Element) -> bool {
        self.map.apply(x).map(|y| self.h.in_domain(&y)).unwrap_or(false)
    }
}
