//! Integral invariants of small neighbourhoods on embedded submanifolds.
//!
//! The crate computes volume, barycenter and covariance of spherical and
//! cylindrical neighbourhoods on graph charts by quadrature, predicts the same
//! quantities from curvature through their small-scale expansions, and inverts
//! measured invariants back into curvature descriptors, from exact charts or
//! from sampled point clouds.

pub mod cli;
pub mod error;
pub mod expr;
pub mod geom;
pub mod moments;
pub mod pointcloud;
pub mod predictions;
pub mod rules;
pub mod spectra;
pub mod sphere_quadrature;
pub mod zoo;

pub use error::{Error, Result};
pub use geom::{
    curvature_summary, mean_curvature, ricci_asymmetry, second_fundamental_form, third_form_operator,
    CurvatureSummary, GraphFunction, HessianMode, ManifoldChart, SecondFundamentalForm,
};
pub use zoo::parse_manifold;
