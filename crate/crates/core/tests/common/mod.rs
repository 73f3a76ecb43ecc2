//! Independent oracles shared by the integration tests. Nothing here calls the
//! library's prox, SVD or projection code.
#![allow(dead_code)]

use ebound::regularizers::{Regularizer, SignConstraint};
use ebound::space::Element;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Minimizes a convex function of one variable on `[lo, hi]` by repeatedly
/// refining a uniform grid around the best point.
pub fn grid_minimize(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    const POINTS: usize = 41;
    let mut best = lo;
    while hi - lo > 1e-13 * (1.0 + lo.abs().max(hi.abs())) {
        let step = (hi - lo) / (POINTS - 1) as f64;
        let mut best_val = f64::INFINITY;
        for k in 0..POINTS {
            let u = lo + step * k as f64;
            let v = f(u);
            if v < best_val {
                best_val = v;
                best = u;
            }
        }
        let (a, b) = ((best - step).max(lo), (best + step).min(hi));
        lo = a;
        hi = b;
    }
    best
}

fn scalar_prox(penalty: impl Fn(f64) -> f64, z: f64, lo: f64, hi: f64) -> f64 {
    grid_minimize(|u| penalty(u) + 0.5 * (u - z) * (u - z), lo, hi)
}

/// Closed-form SVD of a 2x2 matrix `[[a, b], [c, d]]` as
/// `rot(phi) diag(s1, s2) rot(theta)`, where `s2` may be negative.
pub fn svd2(m: [[f64; 2]; 2]) -> (f64, f64, f64, f64) {
    let [[a, b], [c, d]] = m;
    let e = 0.5 * (a + d);
    let f = 0.5 * (a - d);
    let g = 0.5 * (c + b);
    let h = 0.5 * (c - b);
    let q = e.hypot(h);
    let r = f.hypot(g);
    let a1 = g.atan2(f);
    let a2 = h.atan2(e);
    let theta = 0.5 * (a2 - a1);
    let phi = 0.5 * (a2 + a1);
    (phi, q + r, q - r, theta)
}

fn rot(t: f64) -> [[f64; 2]; 2] {
    [[t.cos(), -t.sin()], [t.sin(), t.cos()]]
}

fn mul2(x: [[f64; 2]; 2], y: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = x[i][0] * y[0][j] + x[i][1] * y[1][j];
        }
    }
    out
}

pub fn compose2(phi: f64, s1: f64, s2: f64, theta: f64) -> [[f64; 2]; 2] {
    mul2(mul2(rot(phi), [[s1, 0.0], [0.0, s2]]), rot(theta))
}

fn as2(x: &Element) -> [[f64; 2]; 2] {
    let v = x.to_flat();
    assert_eq!(v.len(), 4, "2x2 oracle only");
    [[v[0], v[1]], [v[2], v[3]]]
}

fn from2(m: [[f64; 2]; 2]) -> Element {
    Element::matrix_from_rows(&[m[0].to_vec(), m[1].to_vec()])
}

/// Brute-force proximal point of `reg` at `z` (unit step).
pub fn prox_oracle(reg: &Regularizer, z: &Element) -> Element {
    let zv = z.to_flat();
    let span = |v: f64| v.abs() + 1.0;
    match reg {
        Regularizer::L1 { weight } => Element::from_flat(
            z.shape(),
            zv.iter().map(|&v| scalar_prox(|u| weight * u.abs(), v, -span(v), span(v))).collect(),
        )
        .unwrap(),
        Regularizer::Ridge { weight } => Element::from_flat(
            z.shape(),
            zv.iter().map(|&v| scalar_prox(|u| weight * u * u, v, -span(v), span(v))).collect(),
        )
        .unwrap(),
        Regularizer::OrthantIndicator { signs } => Element::from_flat(
            z.shape(),
            zv.iter()
                .zip(signs)
                .map(|(&v, s)| {
                    let (lo, hi) = match s {
                        SignConstraint::Free => (-span(v), span(v)),
                        SignConstraint::NonNeg => (0.0, span(v)),
                        SignConstraint::NonPos => (-span(v), 0.0),
                        SignConstraint::Zero => return 0.0,
                    };
                    scalar_prox(|_| 0.0, v, lo, hi)
                })
                .collect(),
        )
        .unwrap(),
        Regularizer::GroupedLasso { groups, weights } => {
            // the minimizer lies on the segment from 0 to z_J
            let mut out = vec![0.0; zv.len()];
            for (g, &w) in groups.iter().zip(weights) {
                let nz = g.iter().map(|&i| zv[i] * zv[i]).sum::<f64>().sqrt();
                if nz == 0.0 {
                    continue;
                }
                let t = scalar_prox(|t| w * t, nz, 0.0, nz);
                for &i in g {
                    out[i] = zv[i] * t / nz;
                }
            }
            Element::from_flat(z.shape(), out).unwrap()
        }
        Regularizer::NuclearNorm { weight } => {
            let (phi, s1, s2, theta) = svd2(as2(z));
            let shrink = |s: f64| s.signum() * scalar_prox(|t| weight * t, s.abs(), 0.0, s.abs());
            from2(compose2(phi, shrink(s1), shrink(s2), theta))
        }
    }
}

/// Projection onto the unit ball of the dual norm scaled by the weight,
/// i.e. the prox of the conjugate. For ridge and the orthant indicator the
/// conjugate's prox is given in closed form.
pub fn conjugate_prox(reg: &Regularizer, z: &Element) -> Element {
    let zv = z.to_flat();
    match reg {
        Regularizer::L1 { weight } => z.map(|v| v.clamp(-weight, *weight)),
        Regularizer::Ridge { weight } => z.scale(2.0 * weight / (1.0 + 2.0 * weight)),
        Regularizer::OrthantIndicator { signs } => Element::from_flat(
            z.shape(),
            zv.iter()
                .zip(signs)
                .map(|(&v, s)| match s {
                    SignConstraint::Free => 0.0,
                    SignConstraint::NonNeg => v.min(0.0),
                    SignConstraint::NonPos => v.max(0.0),
                    SignConstraint::Zero => v,
                })
                .collect(),
        )
        .unwrap(),
        Regularizer::GroupedLasso { groups, weights } => {
            let mut out = zv.clone();
            for (g, &w) in groups.iter().zip(weights) {
                let nz = g.iter().map(|&i| zv[i] * zv[i]).sum::<f64>().sqrt();
                if nz > w {
                    for &i in g {
                        out[i] = zv[i] * w / nz;
                    }
                }
            }
            Element::from_flat(z.shape(), out).unwrap()
        }
        Regularizer::NuclearNorm { weight } => {
            let (phi, s1, s2, theta) = svd2(as2(z));
            let clip = |s: f64| s.clamp(-weight, *weight);
            from2(compose2(phi, clip(s1), clip(s2), theta))
        }
    }
}

pub fn gaussian(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            scale * z
        })
        .collect()
}

/// One instance of each regularizer variant, with the shape it acts on.
pub fn variants(rng: &mut ChaCha8Rng) -> Vec<(Regularizer, ebound::space::Shape)> {
    use ebound::space::Shape;
    let signs = [SignConstraint::Free, SignConstraint::NonNeg, SignConstraint::NonPos, SignConstraint::Zero];
    vec![
        (Regularizer::l1(rng.gen_range(0.1..2.0)).unwrap(), Shape::Vector(6)),
        (Regularizer::ridge(rng.gen_range(0.1..2.0)).unwrap(), Shape::Vector(6)),
        (
            Regularizer::grouped_lasso(vec![vec![0, 3], vec![1, 2, 5], vec![4]], vec![0.5, 1.2, 0.0]).unwrap(),
            Shape::Vector(6),
        ),
        (Regularizer::nuclear_weighted(rng.gen_range(0.1..2.0)).unwrap(), Shape::Matrix(2, 2)),
        (Regularizer::orthant((0..6).map(|i| signs[i % 4]).collect()), Shape::Vector(6)),
    ]
}

pub fn random_element(rng: &mut ChaCha8Rng, shape: ebound::space::Shape, scale: f64) -> Element {
    Element::from_flat(shape, gaussian(rng, shape.len(), scale)).unwrap()
}
