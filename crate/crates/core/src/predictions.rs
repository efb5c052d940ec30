//! Small-scale expansions of volume, barycenter and covariance spectrum in
//! terms of curvature, and their inversion into curvature descriptors.
//!
//! Every prediction is written for a Euclidean ambient space and the chart's
//! coordinate frame at the origin, so vectors live in `R^{n+k}` with the
//! tangent block first.

pub mod descriptors;

use nalgebra::{DMatrix, DVector};

use crate::geom::CurvatureSummary;
use crate::moments::{DomainKind, MomentSet, Normalization, Reference};
use crate::spectra::{sym_eig, EigenDecomposition};
use crate::sphere_quadrature::ball_volume;

/// Shape of the neighbourhood a prediction refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Cylindrical,
    Spherical,
}

impl Kind {
    pub fn tag(self) -> &'static str {
        match self {
            Kind::Cylindrical => "cyl",
            Kind::Spherical => "sph",
        }
    }

    pub fn default_reference(self) -> Reference {
        match self {
            Kind::Cylindrical => Reference::AtCenter,
            Kind::Spherical => Reference::AtBarycenter,
        }
    }
}

impl From<&DomainKind> for Kind {
    fn from(k: &DomainKind) -> Self {
        match k {
            DomainKind::Cylindrical { .. } => Kind::Cylindrical,
            DomainKind::Spherical => Kind::Spherical,
        }
    }
}

/// Volume through second order in `eps`.
pub fn predict_volume(curv: &CurvatureSummary, eps: f64, kind: Kind) -> f64 {
    let n = curv.n as f64;
    let vn = ball_volume(curv.n, eps);
    let e2 = eps * eps;
    match kind {
        Kind::Cylindrical => vn * (1.0 + e2 * curv.tr_iii / (2.0 * (n + 2.0))),
        Kind::Spherical => vn * (1.0 + e2 * (2.0 * curv.tr_iii - curv.mean_curvature_sq()) / (8.0 * (n + 2.0))),
    }
}

/// Leading barycenter: no tangent part, normal part `eps^2 H / (2(n+2))` for both kinds.
pub fn predict_barycenter(curv: &CurvatureSummary, eps: f64, _kind: Kind) -> DVector<f64> {
    let n = curv.n;
    let mut s = DVector::zeros(n + curv.k);
    let scale = eps * eps / (2.0 * (n as f64 + 2.0));
    s.rows_mut(n, curv.k).copy_from(&(&curv.mean_curvature * scale));
    s
}

/// Predicted covariance spectrum together with the operators it comes from.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPrediction {
    /// Tangent eigenvalues through order `eps^{n+4}`, descending.
    pub tangent: Vec<f64>,
    /// Normal eigenvalues at leading order `eps^{n+4}`, descending.
    pub normal: Vec<f64>,
    /// Operator whose eigenvalues give the `eps^4` tangent correction.
    pub tangent_operator: DMatrix<f64>,
    /// Operator whose eigenvalues give the normal eigenvalues.
    pub normal_operator: DMatrix<f64>,
    /// Multiplier of `V_n(eps)` in front of each operator eigenvalue.
    pub tangent_factor: f64,
    pub normal_factor: f64,
    /// Zero-padded operator eigenvectors, tangent then normal, each in the
    /// order of the eigenvalues above.
    pub limit_vectors: DMatrix<f64>,
}

impl EigenPrediction {
    /// All eigenvalues in covariance order: tangent block then normal block.
    pub fn all(&self) -> Vec<f64> {
        self.tangent.iter().chain(&self.normal).copied().collect()
    }
}

pub fn predict_eigenvalues(curv: &CurvatureSummary, eps: f64, kind: Kind) -> EigenPrediction {
    let n = curv.n;
    let k = curv.k;
    let nf = n as f64;
    let vn = ball_volume(n, eps);
    let e2 = eps * eps;
    let e4 = e2 * e2;
    let h = &curv.mean_curvature;
    let hh = h * h.transpose();
    let id = DMatrix::<f64>::identity(n, n);

    let (tangent_operator, tangent_factor, normal_operator, normal_factor) = match kind {
        Kind::Cylindrical => (
            &id * curv.tr_iii + &curv.tr_perp_iii * 2.0,
            1.0 / (2.0 * (nf + 2.0) * (nf + 4.0)),
            &hh + &curv.tr_par_iii * 2.0,
            1.0 / (4.0 * (nf + 2.0) * (nf + 4.0)),
        ),
        Kind::Spherical => (
            &id * (2.0 * curv.tr_iii - curv.mean_curvature_sq()) - &curv.weingarten_h * 4.0,
            1.0 / (8.0 * (nf + 2.0) * (nf + 4.0)),
            &curv.tr_par_iii - &hh / (nf + 2.0),
            1.0 / (2.0 * (nf + 2.0) * (nf + 4.0)),
        ),
    };
    let te = sym_eig(&tangent_operator).expect("tangent operator is symmetric");
    let ne = sym_eig(&normal_operator).expect("normal operator is symmetric");
    let tangent = te
        .values
        .iter()
        .map(|l| vn * (e2 / (nf + 2.0) + e4 * tangent_factor * l))
        .collect();
    let normal = ne.values.iter().map(|l| vn * e4 * normal_factor * l).collect();
    let mut limit_vectors = DMatrix::zeros(n + k, n + k);
    limit_vectors.view_mut((0, 0), (n, n)).copy_from(&te.vectors);
    limit_vectors.view_mut((n, n), (k, k)).copy_from(&ne.vectors);
    EigenPrediction {
        tangent,
        normal,
        tangent_operator,
        normal_operator,
        tangent_factor,
        normal_factor,
        limit_vectors,
    }
}

/// Leading tangent eigenvalues for a cylinder over a plane transversal to the
/// tangent space, in the order of `semi_axes`. Normal eigenvalues vanish at this order.
pub fn predict_generic_cyl_eigs(semi_axes: &[f64], eps: f64) -> Vec<f64> {
    let n = semi_axes.len();
    let vol = ball_volume(n, eps) * semi_axes.iter().product::<f64>();
    semi_axes
        .iter()
        .map(|l| eps * eps * l * l * vol / (n as f64 + 2.0))
        .collect()
}

/// Limits of the normalized eigenvalue differences and of the normal sum.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioLimits {
    /// Entry `(mu, nu)` is the limit of `V_n (l_mu - l_nu) / (l_mu l_nu)` with
    /// `mu, nu` indexing the driving operator's eigenvalues in ascending order.
    pub pairs: DMatrix<f64>,
    /// Limit of `V_n sum_j l_j / (l_mu l_nu)`, the same for every tangent pair.
    pub normal_sum: f64,
    /// Ascending eigenvalues of the operator that orders the tangent eigenvalues
    /// (`tr_perp III` for cylinders, `S_H` for balls).
    pub operator_eigenvalues: Vec<f64>,
}

pub fn predict_ratio_limits(curv: &CurvatureSummary, kind: Kind) -> RatioLimits {
    let n = curv.n;
    let nf = n as f64;
    let hh = curv.mean_curvature_sq();
    let (op, factor, normal_sum) = match kind {
        Kind::Cylindrical => (
            &curv.tr_perp_iii,
            (nf + 2.0) / (nf + 4.0),
            (nf + 2.0) * (hh + 2.0 * curv.tr_iii) / (4.0 * (nf + 4.0)),
        ),
        Kind::Spherical => (
            &curv.weingarten_h,
            -(nf + 2.0) / (2.0 * (nf + 4.0)),
            (nf + 2.0) * (curv.tr_iii - hh / (nf + 2.0)) / (2.0 * (nf + 4.0)),
        ),
    };
    let eig = sym_eig(op).expect("operator is symmetric");
    let asc = eig.ascending_values();
    let pairs = DMatrix::from_fn(n, n, |mu, nu| factor * (asc[mu] - asc[nu]));
    RatioLimits {
        pairs,
        normal_sum,
        operator_eigenvalues: asc,
    }
}

/// Finite-scale counterparts of [`RatioLimits`] from a measured spectrum
/// (descending, tangent block first).
///
/// Tangent eigenvalues are matched to the ascending operator order: for
/// cylinders a larger operator eigenvalue gives a larger covariance eigenvalue,
/// for balls a smaller one. The normal sum is divided by the square of the
/// mean tangent eigenvalue.
pub fn ratio_sequence(eigenvalues: &[f64], n: usize, eps: f64, kind: Kind) -> RatioLimits {
    let vn = ball_volume(n, eps);
    let mut tangent: Vec<f64> = eigenvalues[..n].to_vec();
    if kind == Kind::Cylindrical {
        tangent.reverse();
    }
    let pairs = DMatrix::from_fn(n, n, |mu, nu| {
        vn * (tangent[mu] - tangent[nu]) / (tangent[mu] * tangent[nu])
    });
    let mean = tangent.iter().sum::<f64>() / n as f64;
    let normal: f64 = eigenvalues[n..].iter().sum();
    RatioLimits {
        pairs,
        normal_sum: vn * normal / (mean * mean),
        operator_eigenvalues: tangent,
    }
}

/// Average over the `eps`-ball of the squared first curvatures of curves
/// through the point, summed over the normal eigen-directions.
pub fn curve_curvature_average(curv: &CurvatureSummary, eps: f64) -> f64 {
    let n = curv.n as f64;
    (3.0 * curv.mean_curvature_sq() - 2.0 * curv.scalar) * eps.powi(4) / ((n + 2.0) * (n + 4.0))
}

/// Moments and spectrum that satisfy the truncated expansions exactly.
///
/// The covariance is assembled from the predicted eigenvalues and limit
/// vectors, so feeding it to the descriptor inversion tests the algebra of the
/// inversion alone.
pub fn series_invariants(curv: &CurvatureSummary, eps: f64, kind: Kind) -> (MomentSet, EigenDecomposition) {
    let pred = predict_eigenvalues(curv, eps, kind);
    let values = DVector::from_vec(pred.all());
    let vectors = pred.limit_vectors.clone();
    let cov = &vectors * DMatrix::from_diagonal(&values) * vectors.transpose();
    let s = predict_barycenter(curv, eps, kind);
    let volume = predict_volume(curv, eps, kind);
    let reference = kind.default_reference();
    let other = match reference {
        Reference::AtCenter => &cov - &s * s.transpose() * volume,
        Reference::AtBarycenter => &cov + &s * s.transpose() * volume,
    };
    let (about_center, about_barycenter) = match reference {
        Reference::AtCenter => (cov, other),
        Reference::AtBarycenter => (other, cov),
    };
    let moments = MomentSet {
        volume,
        barycenter: s,
        about_center,
        about_barycenter,
        reference,
        normalization: Normalization::Measure,
        quad_error: None,
        std_error: None,
        flagged: false,
    };
    (moments, EigenDecomposition { values, vectors })
}
