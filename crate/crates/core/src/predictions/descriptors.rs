//! Curvature descriptors at scale: the volume and spectrum expansions of a
//! hypersurface solved for scalar curvature, mean curvature and principal
//! curvatures.

use nalgebra::{DMatrix, DVector};

use super::Kind;
use crate::error::{Error, Result};
use crate::moments::{MomentSet, Normalization};
use crate::spectra::EigenDecomposition;
use crate::sphere_quadrature::ball_volume;

/// Orientation of the reported mean curvature relative to the normal direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Positive,
    Negative,
    Undetermined,
}

impl Orientation {
    pub fn signum(self) -> f64 {
        match self {
            Orientation::Positive => 1.0,
            Orientation::Negative => -1.0,
            Orientation::Undetermined => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DescriptorFlag {
    /// The expression under the square root for `H` was negative; `H` is reported as 0.
    NegativeRadicand(f64),
    /// `|H|` fell below the division tolerance, so principal curvatures were omitted.
    NearZeroMeanCurvature(f64),
    /// The barycenter has no usable component along the normal direction.
    SignUndetermined,
    /// Smallest tangent over largest normal eigenvalue, when below 10.
    Unreliable(f64),
}

/// Principal curvature estimates in the order of the principal directions.
#[derive(Debug, Clone, PartialEq)]
pub enum PrincipalValues {
    /// Signed curvatures `kappa_mu` from a ball.
    Signed(Vec<f64>),
    /// Squared curvatures `kappa_mu^2` from a cylinder.
    Squared(Vec<f64>),
    Omitted,
}

impl PrincipalValues {
    /// Squares of the principal curvatures, when available.
    pub fn squares(&self) -> Option<Vec<f64>> {
        match self {
            PrincipalValues::Signed(v) => Some(v.iter().map(|k| k * k).collect()),
            PrincipalValues::Squared(v) => Some(v.clone()),
            PrincipalValues::Omitted => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorReport {
    pub kind: Kind,
    pub eps: f64,
    pub n: usize,
    pub scalar_curvature: f64,
    /// Signed by the orientation rule, or a non-negative magnitude when undetermined.
    pub mean_curvature: f64,
    pub orientation: Orientation,
    pub principal: PrincipalValues,
    /// Tangent directions as columns, `(n + 1) x n`.
    pub principal_directions: DMatrix<f64>,
    /// Normal direction(s) as columns; `mean_curvature` is measured along the first.
    pub normal_directions: DMatrix<f64>,
    /// Power of `eps` in the truncation error.
    pub error_order: u32,
    pub flags: Vec<DescriptorFlag>,
}

impl DescriptorReport {
    pub fn mean_curvature_sq(&self) -> f64 {
        self.mean_curvature * self.mean_curvature
    }

    pub fn has_flag(&self, pred: impl Fn(&DescriptorFlag) -> bool) -> bool {
        self.flags.iter().any(pred)
    }
}

/// Thresholds used while inverting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescriptorTolerances {
    /// Relative size of `<e_{n+1}, s>` against `|s|` below which the sign is undetermined.
    pub sign: f64,
    /// `|H|` below which principal curvatures of a ball are not divided out.
    pub mean_curvature: f64,
}

impl Default for DescriptorTolerances {
    fn default() -> Self {
        DescriptorTolerances {
            sign: 1e-12,
            mean_curvature: 1e-8,
        }
    }
}

struct Frame {
    tangent: Vec<f64>,
    normal: f64,
    directions: DMatrix<f64>,
    normals: DMatrix<f64>,
    orientation: Orientation,
}

fn frame(moments: &MomentSet, eig: &EigenDecomposition, n: usize, tol: &DescriptorTolerances) -> Result<Frame> {
    let d = eig.len();
    if d != n + 1 || moments.ambient_dim() != d {
        return Err(Error::NotHypersurface(d.saturating_sub(n)));
    }
    let e = eig.vector(n);
    let s = &moments.barycenter;
    let along = e.dot(s);
    let orientation = if !(along.abs() >= tol.sign * s.norm()) || s.norm() == 0.0 {
        Orientation::Undetermined
    } else if along > 0.0 {
        Orientation::Positive
    } else {
        Orientation::Negative
    };
    Ok(Frame {
        tangent: eig.values.rows(0, n).iter().copied().collect(),
        normal: eig.values[n],
        directions: eig.vectors.columns(0, n).into_owned(),
        normals: eig.vectors.columns(n, 1).into_owned(),
        orientation,
    })
}

fn signed_root(radicand: f64, orientation: Orientation, flags: &mut Vec<DescriptorFlag>) -> (f64, Orientation) {
    if radicand < 0.0 {
        flags.push(DescriptorFlag::NegativeRadicand(radicand));
        return (0.0, Orientation::Undetermined);
    }
    if orientation == Orientation::Undetermined {
        flags.push(DescriptorFlag::SignUndetermined);
    }
    (orientation.signum() * radicand.sqrt(), orientation)
}

fn scale_flag(tangent: &[f64], normal: f64, flags: &mut Vec<DescriptorFlag>) {
    let smallest = tangent.iter().copied().fold(f64::INFINITY, f64::min);
    let ratio = smallest / normal.abs();
    if ratio < 10.0 {
        flags.push(DescriptorFlag::Unreliable(ratio));
    }
}

/// Inverts the hypersurface expansions from measure-normalized moments.
///
/// `eig` must be the decomposition of the covariance about the reference that
/// matches `kind`: the barycenter for balls, the center for cylinders.
pub fn descriptors_from_invariants(
    moments: &MomentSet,
    eig: &EigenDecomposition,
    eps: f64,
    n: usize,
    kind: Kind,
) -> Result<DescriptorReport> {
    descriptors_with_tolerances(moments, eig, eps, n, kind, &DescriptorTolerances::default())
}

pub fn descriptors_with_tolerances(
    moments: &MomentSet,
    eig: &EigenDecomposition,
    eps: f64,
    n: usize,
    kind: Kind,
    tol: &DescriptorTolerances,
) -> Result<DescriptorReport> {
    if moments.normalization != Normalization::Measure {
        return Err(Error::InvalidSamples(
            "volume-ratio inversion needs measure-normalized moments".into(),
        ));
    }
    let f = frame(moments, eig, n, tol)?;
    let nf = n as f64;
    let e2 = eps * eps;
    let e4 = e2 * e2;
    let vn = ball_volume(n, eps);
    let ratio = moments.volume / vn;
    let lam_n = f.normal;
    let mut flags = Vec::new();

    let (scalar, mean, orientation, principal, error_order) = match kind {
        Kind::Spherical => {
            let scalar = 2.0 * (nf + 2.0).powi(2) * (nf + 4.0) * lam_n / (nf * e4 * vn)
                - 8.0 * (nf + 1.0) * (nf + 2.0) / (nf * e2) * (ratio - 1.0);
            let radicand = 4.0 * (nf + 2.0).powi(2) * (nf + 4.0) * lam_n / (nf * e4 * vn)
                + 8.0 * (nf + 2.0).powi(2) / (nf * e2) * (1.0 - ratio);
            let (h, o) = signed_root(radicand, f.orientation, &mut flags);
            let principal = if h.abs() <= tol.mean_curvature {
                flags.push(DescriptorFlag::NearZeroMeanCurvature(h));
                PrincipalValues::Omitted
            } else {
                PrincipalValues::Signed(
                    f.tangent
                        .iter()
                        .map(|l| {
                            2.0 * (nf + 2.0) / (e2 * h)
                                * (ratio + (nf + 4.0) / e2 * (e2 / (nf + 2.0) - l / vn) - 1.0)
                        })
                        .collect(),
                )
            };
            (scalar, h, o, principal, 1)
        }
        Kind::Cylindrical => {
            let scalar = 2.0 * (nf + 2.0) / e2 * (2.0 * (nf + 4.0) * lam_n / (e2 * vn) + 3.0 * (1.0 - ratio));
            let radicand = 2.0 * (nf + 2.0) / e2 * (2.0 * (nf + 4.0) * lam_n / (e2 * vn) + 2.0 * (1.0 - ratio));
            let (h, o) = signed_root(radicand, f.orientation, &mut flags);
            let squares = f
                .tangent
                .iter()
                .map(|l| (nf + 2.0) / e2 * ((nf + 4.0) / e2 * (l / vn - e2 / (nf + 2.0)) - ratio + 1.0))
                .collect();
            (scalar, h, o, PrincipalValues::Squared(squares), 2)
        }
    };
    scale_flag(&f.tangent, lam_n, &mut flags);
    Ok(DescriptorReport {
        kind,
        eps,
        n,
        scalar_curvature: scalar,
        mean_curvature: mean,
        orientation,
        principal,
        principal_directions: f.directions,
        normal_directions: f.normals,
        error_order,
        flags,
    })
}

/// Inverts the hypersurface expansions from probability-normalized moments.
///
/// Sample moments carry no absolute volume, so the volume ratio is replaced
/// by dividing every eigenvalue by the domain volume, and `H` is read from the
/// barycenter's normal component, which fixes its sign at the same time.
pub fn descriptors_from_normalized(
    moments: &MomentSet,
    eig: &EigenDecomposition,
    eps: f64,
    n: usize,
    kind: Kind,
) -> Result<DescriptorReport> {
    let tol = DescriptorTolerances::default();
    let m = moments.normalized();
    let f = frame(&m, eig, n, &tol)?;
    let nf = n as f64;
    let e2 = eps * eps;
    let e4 = e2 * e2;
    let mut flags = Vec::new();
    let e = f.normals.column(0).into_owned();
    let h = 2.0 * (nf + 2.0) * e.dot(&m.barycenter) / e2;
    let orientation = if f.orientation == Orientation::Undetermined {
        flags.push(DescriptorFlag::SignUndetermined);
        Orientation::Undetermined
    } else if h >= 0.0 {
        Orientation::Positive
    } else {
        Orientation::Negative
    };
    let h2 = h * h;

    let (scalar, principal, error_order) = match kind {
        Kind::Spherical => {
            let normal = 2.0 * (nf + 2.0) * (nf + 4.0) * f.normal / e4;
            let scalar = (nf + 1.0) * h2 / (nf + 2.0) - normal;
            let principal = if h.abs() <= tol.mean_curvature {
                flags.push(DescriptorFlag::NearZeroMeanCurvature(h));
                PrincipalValues::Omitted
            } else {
                PrincipalValues::Signed(
                    f.tangent
                        .iter()
                        .map(|l| {
                            let t = 8.0 * (nf + 2.0).powi(2) * (nf + 4.0) * (l - e2 / (nf + 2.0)) / e4;
                            -(t + 2.0 * (h2 - 2.0 * scalar)) / (4.0 * (nf + 2.0) * h)
                        })
                        .collect(),
                )
            };
            (scalar, principal, 1)
        }
        Kind::Cylindrical => {
            let b = 4.0 * (nf + 2.0) * (nf + 4.0) * f.normal / e4;
            let scalar = 0.5 * (3.0 * h2 - b);
            let a = h2 - scalar;
            let squares = f
                .tangent
                .iter()
                .map(|l| {
                    let t = (nf + 2.0).powi(2) * (nf + 4.0) * (l - e2 / (nf + 2.0)) / e4;
                    (t + a) / (nf + 2.0)
                })
                .collect();
            (scalar, PrincipalValues::Squared(squares), 2)
        }
    };
    scale_flag(&f.tangent, f.normal, &mut flags);
    Ok(DescriptorReport {
        kind,
        eps,
        n,
        scalar_curvature: scalar,
        mean_curvature: h,
        orientation,
        principal,
        principal_directions: f.directions,
        normal_directions: f.normals,
        error_order,
        flags,
    })
}

/// Normal component of a vector in the report's frame.
pub fn normal_component(report: &DescriptorReport, v: &DVector<f64>) -> f64 {
    report.normal_directions.column(0).dot(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{curvature_summary, second_fundamental_form, CurvatureSummary};
    use crate::predictions::series_invariants;
    use crate::zoo::parse_manifold;

    fn summary(id: &str) -> CurvatureSummary {
        curvature_summary(&second_fundamental_form(&parse_manifold(id).unwrap()).unwrap())
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1.0)
    }

    fn sorted(mut v: Vec<f64>) -> Vec<f64> {
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn unit_sphere_round_trip() {
        let c = summary("sphere");
        let (m, e) = series_invariants(&c, 0.1, Kind::Spherical);
        let r = descriptors_from_invariants(&m, &e, 0.1, 2, Kind::Spherical).unwrap();
        assert!(rel(r.scalar_curvature, 2.0) < 1e-12);
        assert!(rel(r.mean_curvature, 2.0) < 1e-12);
        assert_eq!(r.orientation, Orientation::Positive);
        match &r.principal {
            PrincipalValues::Signed(k) => assert!(k.iter().all(|k| rel(*k, 1.0) < 1e-12)),
            other => panic!("{other:?}"),
        }
        assert_eq!(r.error_order, 1);
    }

    #[test]
    fn paraboloid_round_trip_both_kinds() {
        let c = summary("paraboloid(1,2)");
        for kind in [Kind::Spherical, Kind::Cylindrical] {
            // (V_p/V_n - 1)/eps^2 loses about ulp/eps^2, so stay at eps >= 0.1 for 1e-12
            for eps in [0.3, 0.2, 0.1] {
                let (m, e) = series_invariants(&c, eps, kind);
                let r = descriptors_from_invariants(&m, &e, eps, 2, kind).unwrap();
                assert!(rel(r.scalar_curvature, 4.0) < 1e-12, "{kind:?} {eps} {}", r.scalar_curvature);
                assert!(rel(r.mean_curvature_sq(), 9.0) < 1e-12);
                let sq = sorted(r.principal.squares().unwrap());
                assert!(rel(sq[0], 1.0) < 1e-12 && rel(sq[1], 4.0) < 1e-12, "{sq:?}");
            }
        }
    }

    #[test]
    fn plane_gives_zeros() {
        let c = summary("plane");
        let (m, e) = series_invariants(&c, 0.1, Kind::Cylindrical);
        let r = descriptors_from_invariants(&m, &e, 0.1, 2, Kind::Cylindrical).unwrap();
        assert!(r.scalar_curvature.abs() < 1e-12 && r.mean_curvature.abs() < 1e-6);
        assert!(r.principal.squares().unwrap().iter().all(|k| k.abs() < 1e-12));
        assert!(r.has_flag(|f| matches!(f, DescriptorFlag::SignUndetermined)));

        let (m, e) = series_invariants(&c, 0.1, Kind::Spherical);
        let r = descriptors_from_invariants(&m, &e, 0.1, 2, Kind::Spherical).unwrap();
        assert_eq!(r.principal, PrincipalValues::Omitted);
        assert!(r.has_flag(|f| matches!(f, DescriptorFlag::NearZeroMeanCurvature(_))));
    }

    #[test]
    fn negative_radicand_falls_back() {
        let c = summary("sphere");
        let (mut m, e) = series_invariants(&c, 0.1, Kind::Cylindrical);
        m.volume *= 1.5;
        let r = descriptors_from_invariants(&m, &e, 0.1, 2, Kind::Cylindrical).unwrap();
        assert_eq!(r.mean_curvature, 0.0);
        assert_eq!(r.orientation, Orientation::Undetermined);
        assert!(r.has_flag(|f| matches!(f, DescriptorFlag::NegativeRadicand(_))));
    }

    #[test]
    fn normalized_round_trip() {
        let c = summary("paraboloid(1,2)");
        for kind in [Kind::Spherical, Kind::Cylindrical] {
            let eps = 1e-3;
            let (m, _) = series_invariants(&c, eps, kind);
            let mp = m.normalized();
            let ep = crate::spectra::sym_eig(mp.covariance()).unwrap();
            let r = descriptors_from_normalized(&mp, &ep, eps, 2, kind).unwrap();
            // normalization folds the volume correction in at relative order eps^2
            assert!(rel(r.scalar_curvature, 4.0) < 1e-4, "{kind:?} {}", r.scalar_curvature);
            assert!(rel(r.mean_curvature, 3.0) < 1e-4);
            let sq = sorted(r.principal.squares().unwrap());
            assert!(rel(sq[0], 1.0) < 1e-4 && rel(sq[1], 4.0) < 1e-4, "{sq:?}");
        }
    }

    #[test]
    fn codimension_is_checked() {
        let c = summary("codim2");
        let (m, e) = series_invariants(&c, 0.1, Kind::Spherical);
        assert!(matches!(
            descriptors_from_invariants(&m, &e, 0.1, 2, Kind::Spherical),
            Err(Error::NotHypersurface(2))
        ));
    }
}
