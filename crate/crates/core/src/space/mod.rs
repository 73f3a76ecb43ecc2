//! Ambient-space elements, linear maps, and the small dense kernels (SVD,
//! symmetric eigendecomposition, PSD and affine projections) used everywhere
//! else.

mod eig;
mod element;
mod linear_map;
mod projection;
mod svd;

pub use eig::{sym_eig, SymEigen};
pub use element::{Element, Shape};
pub use linear_map::LinearMap;
pub use projection::{affine_project, pseudo_inverse, psd_distance, psd_project, AffineProjector};
pub use svd::{svd, SvdFactorization, DEFAULT_GROUP_TOL};

pub(crate) use svd::block;
