use ndarray::s;

use crate::error::{Error, Result};
use crate::problem::{OptimalityCertificate, ProblemInstance};
use crate::regularizers::{InverseImage, Regularizer};
use crate::space::{svd, sym_eig, DEFAULT_GROUP_TOL};

/// Strict complementarity for nuclear-norm problems: `x*` has the largest
/// possible rank allowed by `-g_bar`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplementarityReport {
    /// Number of singular values of `-g_bar` (per unit weight) equal to 1.
    pub s_bar: usize,
    pub rank_x: usize,
    pub holds: bool,
    /// Smallest eigenvalue of the symmetrized core `U1^T x* V1`; `+inf` when
    /// `s_bar = 0`.
    pub margin: f64,
}

pub fn strict_complementarity(
    prob: &ProblemInstance,
    cert: &OptimalityCertificate,
) -> Result<ComplementarityReport> {
    if !matches!(prob.reg, Regularizer::NuclearNorm { .. }) {
        return Err(Error::InvalidInput(format!(
            "strict complementarity needs a nuclear-norm regularizer, got {}",
            prob.reg.name()
        )));
    }
    let image = match prob.reg.inverse_image(&cert.g_bar)? {
        InverseImage::Nuclear(image) => image,
        other => {
            return Err(Error::InfeasibleTarget(
                other.empty_reason().unwrap_or_else(|| "unexpected inverse image".into()),
            ))
        }
    };
    let x = cert.x_star.as_matrix().expect("nuclear regularizer acts on matrices");
    let x_svd = svd(x, DEFAULT_GROUP_TOL)?;
    let rank_x = x_svd.rank();
    let s_bar = image.s_bar;
    let margin = if s_bar == 0 {
        f64::INFINITY
    } else {
        let u1 = image.svd.u.slice(s![.., 0..s_bar]);
        let v1 = image.svd.v.slice(s![.., 0..s_bar]);
        let core = u1.t().dot(x).dot(&v1);
        let sym = (&core + &core.t()) * 0.5;
        sym_eig(&sym)?.values[s_bar - 1]
    };
    let holds = rank_x == s_bar && margin > x_svd.threshold();
    Ok(ComplementarityReport { s_bar, rank_x, holds, margin })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegularityCondition {
    /// `F` is strongly convex, so the optimum is unique and stable.
    StronglyConvex,
    /// The inverse image of the regularizer's subdifferential is polyhedral.
    Polyhedral,
    /// Nuclear norm with strict complementarity.
    NuclearWithSc,
    /// No sufficient condition is known to apply.
    Unverified,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularitySummary {
    pub condition: RegularityCondition,
    pub lipschitz_eb_expected: bool,
    pub complementarity: Option<ComplementarityReport>,
}

/// Which sufficient condition for a Lipschitz error bound applies.
pub fn regularity_summary(prob: &ProblemInstance, cert: &OptimalityCertificate) -> RegularitySummary {
    let complementarity = match prob.reg {
        Regularizer::NuclearNorm { .. } => strict_complementarity(prob, cert).ok(),
        _ => None,
    };
    let condition = if prob.is_strongly_convex() {
        RegularityCondition::StronglyConvex
    } else if !prob.smooth.h.is_strongly_convex_on_compacts() {
        RegularityCondition::Unverified
    } else if prob.reg.has_polyhedral_inverse_images()
        || matches!(prob.reg, Regularizer::Ridge { weight } if weight == 0.0)
    {
        RegularityCondition::Polyhedral
    } else if complementarity.is_some_and(|c| c.holds) {
        RegularityCondition::NuclearWithSc
    } else {
        RegularityCondition::Unverified
    };
    RegularitySummary {
        condition,
        lipschitz_eb_expected: condition != RegularityCondition::Unverified,
        complementarity,
    }
}
