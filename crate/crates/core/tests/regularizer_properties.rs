mod common;

use ebound::regularizers::{InverseImage, NuclearImage, Regularizer, SignConstraint};
use ebound::space::{svd, Element, Shape, SvdFactorization};
use ndarray::{s, Array1, Array2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random pair `(x, s)` with `s ∈ dP(x)`, with some coordinates, groups or
/// singular values forced to zero.
fn graph_member(reg: &Regularizer, shape: Shape, rng: &mut ChaCha8Rng) -> (Element, Element) {
    match reg {
        Regularizer::L1 { weight } => {
            let x: Vec<f64> = common::gaussian(rng, shape.len(), 1.0)
                .into_iter()
                .map(|v| if rng.gen_bool(0.4) { 0.0 } else { v })
                .collect();
            let s: Vec<f64> = x
                .iter()
                .map(|&v| if v == 0.0 { rng.gen_range(-1.0..=1.0) * weight } else { weight * v.signum() })
                .collect();
            (Element::vector(x), Element::vector(s))
        }
        Regularizer::Ridge { weight } => {
            let x = common::random_element(rng, shape, 1.0);
            let s = x.scale(2.0 * weight);
            (x, s)
        }
        Regularizer::GroupedLasso { groups, weights } => {
            let mut x = common::gaussian(rng, shape.len(), 1.0);
            let mut s = vec![0.0; shape.len()];
            for (g, &w) in groups.iter().zip(weights) {
                let zero = rng.gen_bool(0.4);
                let dir = common::gaussian(rng, g.len(), 1.0);
                let nd = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
                let nx = g.iter().map(|&i| x[i] * x[i]).sum::<f64>().sqrt();
                let radius = if zero { rng.gen_range(0.0..=1.0) } else { 1.0 };
                for (k, &i) in g.iter().enumerate() {
                    if zero {
                        x[i] = 0.0;
                        s[i] = w * radius * dir[k] / nd;
                    } else {
                        s[i] = w * x[i] / nx;
                    }
                }
            }
            (Element::vector(x), Element::vector(s))
        }
        Regularizer::NuclearNorm { weight } => {
            let (m, n) = match shape {
                Shape::Matrix(m, n) => (m, n),
                Shape::Vector(_) => unreachable!(),
            };
            let base = Array2::from_shape_vec((m, n), common::gaussian(rng, m * n, 1.0)).unwrap();
            let f = svd(&base, 1e-8).unwrap();
            let k = m.min(n);
            let sig: Vec<f64> = (0..k).map(|i| if i == 0 || rng.gen_bool(0.5) { rng.gen_range(0.5..2.0) } else { 0.0 }).collect();
            let sub: Vec<f64> = sig.iter().map(|&v| if v > 0.0 { 1.0 } else { rng.gen_range(0.0..=1.0) }).collect();
            let x = f.compose(&sig);
            let s = f.compose(&sub) * *weight;
            (Element::Matrix(x), Element::Matrix(s))
        }
        Regularizer::OrthantIndicator { signs } => {
            let mut x = Vec::new();
            let mut s = Vec::new();
            for sign in signs {
                let mag: f64 = rng.gen_range(0.1..2.0);
                let on_boundary = rng.gen_bool(0.5);
                let (xi, si) = match sign {
                    SignConstraint::Free => (rng.gen_range(-2.0..2.0), 0.0),
                    SignConstraint::Zero => (0.0, rng.gen_range(-2.0..2.0)),
                    SignConstraint::NonNeg if on_boundary => (0.0, -mag),
                    SignConstraint::NonNeg => (mag, 0.0),
                    SignConstraint::NonPos if on_boundary => (0.0, mag),
                    SignConstraint::NonPos => (-mag, 0.0),
                };
                x.push(xi);
                s.push(si);
            }
            (Element::vector(x), Element::vector(s))
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prox_beats_random_perturbations(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (reg, shape) in common::variants(&mut rng) {
            let z = common::random_element(&mut rng, shape, 1.5);
            let p = reg.prox(&z).unwrap();
            let objective = |x: &Element| 0.5 * x.distance(&z).powi(2) + reg.value(x).unwrap();
            let best = objective(&p);
            for k in 0..1000 {
                let scale = 10f64.powi(-(k % 4));
                let mut cand = p.add(&common::random_element(&mut rng, shape, scale));
                if let Regularizer::OrthantIndicator { signs } = &reg {
                    let v = cand.iter().zip(signs).map(|(&v, s)| s.clamp(v)).collect();
                    cand = Element::from_flat(shape, v).unwrap();
                }
                prop_assert!(objective(&cand) - best >= -1e-9, "{}", reg.name());
            }
        }
    }

    #[test]
    fn prox_is_nonexpansive(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (reg, shape) in common::variants(&mut rng) {
            let a = common::random_element(&mut rng, shape, 2.0);
            let b = a.add(&common::random_element(&mut rng, shape, 0.3));
            let d = reg.prox(&a).unwrap().distance(&reg.prox(&b).unwrap());
            prop_assert!(d <= a.distance(&b) + 1e-10);
        }
    }

    #[test]
    fn graph_members_are_fixed_points_and_consistent(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut variants = common::variants(&mut rng);
        variants.push((Regularizer::nuclear_weighted(0.7).unwrap(), Shape::Matrix(3, 4)));
        for (reg, shape) in variants {
            let (x, s) = graph_member(&reg, shape, &mut rng);
            let g = s.scale(-1.0);
            // x = prox(x - g) exactly when -g ∈ dP(x)
            prop_assert!(reg.prox(&x.sub(&g)).unwrap().distance(&x) <= 1e-9, "{}", reg.name());
            prop_assert!(reg.prox_residual(&x, &g).unwrap().norm() <= 1e-9);
            prop_assert!(reg.subdiff_distance(&x, &s).unwrap() <= 1e-9, "{}", reg.name());
            prop_assert!(reg.inverse_image_distance(&g, &x).unwrap() <= 1e-7, "{}", reg.name());
            // a point knocked off the graph registers on both sides
            let y = x.add(&common::random_element(&mut rng, shape, 0.5));
            let moved = reg.inverse_image_distance(&g, &y).unwrap();
            let sub = reg.subdiff_distance(&y, &s);
            if let Ok(sub) = sub {
                prop_assert_eq!(moved <= 1e-9, sub <= 1e-9);
            }
        }
    }
}

#[test]
fn euclidean_norm_subdifferential_is_metrically_subregular() {
    // the grouped LASSO with one group of weight 1 is the Euclidean norm
    let reg = Regularizer::grouped_lasso(vec![(0..4).collect()], vec![1.0]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(46);
    let cases = [
        (Element::vector(vec![1.0, -2.0, 0.5, 0.0]), None),
        (Element::vector(vec![0.0; 4]), Some(0.6)),
        (Element::vector(vec![0.0; 4]), Some(1.0)),
    ];
    let mut worst: f64 = 0.0;
    for (x0, interior) in cases {
        let s0 = match interior {
            None => x0.scale(1.0 / x0.norm()),
            Some(r) => {
                let u = common::random_element(&mut rng, Shape::Vector(4), 1.0);
                u.scale(r / u.norm())
            }
        };
        let g0 = s0.scale(-1.0);
        for _ in 0..1000 {
            let x = x0.add(&common::random_element(&mut rng, Shape::Vector(4), 0.05));
            let num = reg.inverse_image_distance(&g0, &x).unwrap();
            let den = reg.subdiff_distance(&x, &s0).unwrap();
            if den > 0.0 {
                worst = worst.max(num / den);
            } else {
                assert!(num <= 1e-12);
            }
        }
    }
    println!("max inverse-image / subdifferential distance ratio: {worst:.3}");
    assert!(worst.is_finite() && worst < 10.0);
}

/// Rotating the singular vectors inside a block of equal singular values gives
/// another SVD of the same matrix; the inverse-image distance must not change.
#[test]
fn nuclear_inverse_image_distance_is_basis_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..50 {
        let base = Array2::from_shape_vec((4, 4), common::gaussian(&mut rng, 16, 1.0)).unwrap();
        let f = svd(&base, 1e-8).unwrap();
        // -G = U diag(1, 1, 1, 0.4) V^T
        let g = f.compose(&[1.0, 1.0, 1.0, 0.4]) * -1.0;
        let reg = Regularizer::nuclear();
        let original = match reg.inverse_image(&Element::Matrix(g.clone())).unwrap() {
            InverseImage::Nuclear(img) => img,
            other => panic!("unexpected {other:?}"),
        };
        assert_eq!(original.s_bar, 3);
        let q = svd(
            &Array2::from_shape_vec((3, 3), common::gaussian(&mut rng, 9, 1.0)).unwrap(),
            1e-8,
        )
        .unwrap()
        .u;
        let rotate = |m: &Array2<f64>| {
            let mut out = m.clone();
            let block = m.slice(s![.., 0..3]).dot(&q);
            out.slice_mut(s![.., 0..3]).assign(&block);
            out
        };
        let alt = NuclearImage {
            svd: SvdFactorization {
                u: rotate(&original.svd.u),
                sigma: Array1::from(vec![1.0, 1.0, 1.0, 0.4]),
                v: rotate(&original.svd.v),
                group_tol: 1e-8,
            },
            s_bar: 3,
        };
        let x = Element::Matrix(Array2::from_shape_vec((4, 4), common::gaussian(&mut rng, 16, 1.0)).unwrap());
        let d1 = InverseImage::Nuclear(original).distance(&x).unwrap();
        let d2 = InverseImage::Nuclear(alt).distance(&x).unwrap();
        assert!((d1 - d2).abs() <= 1e-10 * d1.max(1.0), "{d1} vs {d2}");
    }
}

#[test]
fn inverse_images_report_emptiness() {
    let l1 = Regularizer::l1(1.0).unwrap();
    let img = l1.inverse_image(&Element::vector(vec![0.5, 1.5])).unwrap();
    assert!(img.is_empty());
    assert!(img.project(&Element::vector(vec![0.0, 0.0])).is_err());
    let nuc = Regularizer::nuclear();
    let g = Element::matrix_from_rows(&[vec![-2.0, 0.0], vec![0.0, 0.0]]);
    assert!(nuc.inverse_image(&g).unwrap().is_empty());
}

#[test]
fn oracle_svd2_reconstructs() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..50 {
        let v = common::gaussian(&mut rng, 4, 1.0);
        let m = [[v[0], v[1]], [v[2], v[3]]];
        let (phi, s1, s2, theta) = common::svd2(m);
        let back = common::compose2(phi, s1, s2, theta);
        for i in 0..2 {
            for j in 0..2 {
                assert!((back[i][j] - m[i][j]).abs() < 1e-12);
            }
        }
        assert!(s1 >= s2.abs());
    }
}
