//! Volume, barycenter and covariance of neighbourhoods by direct quadrature.
//!
//! Nothing here is expanded in the scale: the integrand is the exact area
//! element `sqrt(det g)` of the chart and the domain boundary is found by root
//! finding along every quadrature direction. That makes this module the
//! independent reference the asymptotic predictions are checked against.
//!
//! Points are written in tangent polar coordinates `x = r u` with `u` on the
//! unit sphere of the tangent space. A spherical neighbourhood ends where
//! `|(x, f(x))| = eps`; a cylinder over a plane `V` ends where the projection
//! onto `V` has length `eps` (for `V` the tangent space that is simply `r = eps`).

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::{second_fundamental_form, volume_density_from_jacobian, ManifoldChart};
use crate::rules::{gauss_legendre, SphereRule};
use crate::sphere_quadrature::ball_volume;

const ORTHONORMAL_TOL: f64 = 1e-12;
const TRANSVERSAL_TOL: f64 = 1e-8;
const MAX_ROOT_ITERATIONS: usize = 200;

/// Where the covariance is centred.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reference {
    AtCenter,
    AtBarycenter,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DomainKind {
    /// Cylinder over an `n`-plane given by orthonormal columns in `R^{n+k}`;
    /// `None` means the tangent plane.
    Cylindrical { plane: Option<DMatrix<f64>> },
    Spherical,
}

impl DomainKind {
    pub fn cylindrical() -> Self {
        DomainKind::Cylindrical { plane: None }
    }

    pub fn cylindrical_over(plane: DMatrix<f64>) -> Self {
        DomainKind::Cylindrical { plane: Some(plane) }
    }

    pub fn is_spherical(&self) -> bool {
        matches!(self, DomainKind::Spherical)
    }

    pub fn tag(&self) -> &'static str {
        match self {
            DomainKind::Cylindrical { .. } => "cyl",
            DomainKind::Spherical => "sph",
        }
    }

    /// Spherical covariances are taken about the barycenter, cylindrical ones about the center.
    pub fn default_reference(&self) -> Reference {
        match self {
            DomainKind::Cylindrical { .. } => Reference::AtCenter,
            DomainKind::Spherical => Reference::AtBarycenter,
        }
    }
}

/// A neighbourhood of the chart origin at scale `eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    pub kind: DomainKind,
    pub eps: f64,
    pub reference: Reference,
}

impl DomainSpec {
    pub fn new(kind: DomainKind, eps: f64) -> Self {
        let reference = kind.default_reference();
        Self { kind, eps, reference }
    }

    pub fn cylindrical(eps: f64) -> Self {
        Self::new(DomainKind::cylindrical(), eps)
    }

    pub fn spherical(eps: f64) -> Self {
        Self::new(DomainKind::Spherical, eps)
    }

    pub fn with_reference(mut self, reference: Reference) -> Self {
        self.reference = reference;
        self
    }

    pub fn validate(&self, chart: &ManifoldChart) -> Result<()> {
        chart.check_scale(self.eps)?;
        if let DomainKind::Cylindrical { plane: Some(u) } = &self.kind {
            generic_cylinder_ellipsoid(chart, u)?;
        }
        Ok(())
    }
}

/// Plane spanned by `cos(theta) e_1 + sin(theta) e_{n+1}` and `e_2, ..., e_n`.
pub fn tilted_plane(n: usize, k: usize, theta: f64) -> DMatrix<f64> {
    let mut u = DMatrix::zeros(n + k, n);
    for mu in 0..n {
        u[(mu, mu)] = 1.0;
    }
    u[(0, 0)] = theta.cos();
    u[(n, 0)] = theta.sin();
    u
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Gauss-Legendre nodes along each ray.
    pub radial_nodes: usize,
    /// Trapezoid nodes on the azimuth; each further polar angle gets half as many Gauss nodes.
    pub angular_nodes: usize,
    /// Relative volume error above which a result is flagged.
    pub target_rel_error: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            radial_nodes: 24,
            angular_nodes: 64,
            target_rel_error: 1e-10,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.radial_nodes < 2 || self.angular_nodes < 4 {
            return Err(Error::InvalidSamples(format!(
                "quadrature needs at least 2 radial and 4 angular nodes, got {} and {}",
                self.radial_nodes, self.angular_nodes
            )));
        }
        Ok(())
    }

    /// The same rule at half resolution, used for the error estimate.
    pub fn halved(&self) -> Self {
        Self {
            radial_nodes: (self.radial_nodes / 2).max(2),
            angular_nodes: (self.angular_nodes / 2).max(4),
            ..*self
        }
    }

    fn sphere_rule(&self, n: usize) -> SphereRule {
        SphereRule::product(n, self.angular_nodes, (self.angular_nodes / 2).max(2))
    }
}

/// Elementwise uncertainty of a [`MomentSet`], either a quadrature error
/// estimate or a Monte-Carlo standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentErrors {
    pub volume: f64,
    pub barycenter: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// Integrals against the `n`-volume measure.
    Measure,
    /// Divided by the volume, as for sample moments.
    Probability,
}

/// Zeroth, first and second moments of a domain.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSet {
    pub volume: f64,
    pub barycenter: DVector<f64>,
    /// Second moment about the chart origin.
    pub about_center: DMatrix<f64>,
    /// Second moment about the barycenter, accumulated in a separate pass.
    pub about_barycenter: DMatrix<f64>,
    pub reference: Reference,
    pub normalization: Normalization,
    pub quad_error: Option<MomentErrors>,
    pub std_error: Option<MomentErrors>,
    /// Set when the quadrature error estimate exceeds the configured target.
    pub flagged: bool,
}

impl MomentSet {
    /// Covariance about the recorded reference point.
    pub fn covariance(&self) -> &DMatrix<f64> {
        self.covariance_about(self.reference)
    }

    pub fn covariance_about(&self, reference: Reference) -> &DMatrix<f64> {
        match reference {
            Reference::AtCenter => &self.about_center,
            Reference::AtBarycenter => &self.about_barycenter,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.barycenter.len()
    }

    /// Largest elementwise violation of `C_s = C_p - V s s^T`.
    pub fn parallel_axis_defect(&self) -> f64 {
        let s = &self.barycenter;
        (&self.about_center - s * s.transpose() * self.volume - &self.about_barycenter).amax()
    }

    /// Moments of the orthogonal projection onto the orthonormal columns of `q`.
    pub fn project(&self, q: &DMatrix<f64>) -> MomentSet {
        let proj = |c: &DMatrix<f64>| q.transpose() * c * q;
        let proj_err = |e: &MomentErrors| MomentErrors {
            volume: e.volume,
            barycenter: q.abs().tr_mul(&e.barycenter),
            covariance: proj(&e.covariance).abs(),
        };
        MomentSet {
            volume: self.volume,
            barycenter: q.tr_mul(&self.barycenter),
            about_center: proj(&self.about_center),
            about_barycenter: proj(&self.about_barycenter),
            reference: self.reference,
            normalization: self.normalization,
            quad_error: self.quad_error.as_ref().map(proj_err),
            std_error: self.std_error.as_ref().map(proj_err),
            flagged: self.flagged,
        }
    }

    /// Moments per unit volume, comparable with sample moments.
    pub fn normalized(&self) -> MomentSet {
        if self.normalization == Normalization::Probability {
            return self.clone();
        }
        let v = self.volume;
        let scale_err = |e: &MomentErrors| MomentErrors {
            volume: e.volume / v,
            barycenter: e.barycenter.clone(),
            covariance: &e.covariance / v,
        };
        MomentSet {
            volume: 1.0,
            barycenter: self.barycenter.clone(),
            about_center: &self.about_center / v,
            about_barycenter: &self.about_barycenter / v,
            reference: self.reference,
            normalization: Normalization::Probability,
            quad_error: self.quad_error.as_ref().map(scale_err),
            std_error: self.std_error.as_ref().map(scale_err),
            flagged: self.flagged,
        }
    }
}

/// Boundary radius along one tangent direction, with its small-scale series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryRadius {
    /// Root of `r^2 + |f(r u)|^2 = eps^2`.
    pub radius: f64,
    /// `eps - K^2 eps^3 / 8` with `K = |II(u, u)|`.
    pub series: f64,
    pub curvature_sq: f64,
}

/// Where the spherical neighbourhood of radius `eps` meets the ray along `dir`.
pub fn boundary_radius(chart: &ManifoldChart, eps: f64, dir: &[f64]) -> Result<BoundaryRadius> {
    let n = chart.dim();
    if dir.len() != n {
        return Err(Error::Dimension(format!("direction has {} entries, chart dimension is {n}", dir.len())));
    }
    let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::NotOrthonormal((norm - 1.0).abs()));
    }
    chart.check_scale(eps)?;
    let radius = spherical_root(chart, eps, dir)?;
    let sff = second_fundamental_form(chart)?;
    let u = DVector::from_column_slice(dir);
    let curvature_sq = sff.apply(&u, &u).norm_squared();
    Ok(BoundaryRadius {
        radius,
        series: eps - curvature_sq * eps.powi(3) / 8.0,
        curvature_sq,
    })
}

/// Safeguarded Newton iteration for an increasing-through-zero `g` on `[lo, hi]`.
fn bracketed_root(mut lo: f64, mut hi: f64, g: impl Fn(f64) -> (f64, f64), dir: &[f64], eps: f64) -> Result<f64> {
    let (ghi, _) = g(hi);
    if ghi == 0.0 {
        return Ok(hi);
    }
    if !(ghi > 0.0) {
        return Err(Error::NoBracket { direction: dir.to_vec(), eps });
    }
    let mut r = hi;
    for _ in 0..MAX_ROOT_ITERATIONS {
        let (v, dv) = g(r);
        if v == 0.0 {
            return Ok(r);
        }
        if v < 0.0 {
            lo = r;
        } else {
            hi = r;
        }
        let newton = r - v / dv;
        let next = if dv > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - r).abs() <= 4.0 * f64::EPSILON * r.abs() || hi - lo <= 4.0 * f64::EPSILON * hi {
            return Ok(next);
        }
        r = next;
    }
    Ok(r)
}

fn spherical_root(chart: &ManifoldChart, eps: f64, dir: &[f64]) -> Result<f64> {
    let n = chart.dim();
    let k = chart.codim();
    let g = |r: f64| {
        let x: Vec<f64> = dir.iter().map(|u| r * u).collect();
        let mut f = vec![0.0; k];
        chart.eval(&x, &mut f);
        let mut jac = DMatrix::zeros(k, n);
        chart.jacobian(&x, &mut jac);
        let ju = &jac * DVector::from_column_slice(dir);
        let ff: f64 = f.iter().map(|v| v * v).sum();
        let fju: f64 = f.iter().zip(ju.iter()).map(|(a, b)| a * b).sum();
        // scaled by 1/eps^2 so the tolerance is relative
        ((r * r + ff) / (eps * eps) - 1.0, 2.0 * (r + fju) / (eps * eps))
    };
    bracketed_root(0.0, eps, g, dir, eps)
}

fn cylinder_root(chart: &ManifoldChart, eps: f64, dir: &[f64], plane: &DMatrix<f64>, sigma_min: f64) -> Result<f64> {
    let n = chart.dim();
    let k = chart.codim();
    let g = |r: f64| {
        let x: Vec<f64> = dir.iter().map(|u| r * u).collect();
        let point = chart.point(&x);
        let mut jac = DMatrix::zeros(k, n);
        chart.jacobian(&x, &mut jac);
        let mut dpoint = DVector::zeros(n + k);
        dpoint.rows_mut(0, n).copy_from_slice(dir);
        let ju = &jac * DVector::from_column_slice(dir);
        dpoint.rows_mut(n, k).copy_from(&ju);
        let proj = plane.tr_mul(&point);
        let dproj = plane.tr_mul(&dpoint);
        (proj.norm_squared() / (eps * eps) - 1.0, 2.0 * proj.dot(&dproj) / (eps * eps))
    };
    let limit = chart.domain_radius().min(64.0 * eps / sigma_min);
    let mut hi = 1.25 * eps / sigma_min;
    while !(g(hi.min(limit)).0 > 0.0) {
        if hi >= limit {
            return Err(Error::NoBracket { direction: dir.to_vec(), eps });
        }
        hi *= 2.0;
    }
    bracketed_root(0.0, hi.min(limit), g, dir, eps)
}

/// Semi-axes, per unit scale, of the tangent ellipsoid cut out by a cylinder over `plane`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ellipsoid {
    /// Sorted descending.
    pub semi_axes: Vec<f64>,
    /// Tangent direction of each semi-axis, as columns.
    pub axes: DMatrix<f64>,
}

impl Ellipsoid {
    /// Leading-order `n`-volume `V_n(1) prod l eps^n`.
    pub fn leading_volume(&self, eps: f64) -> f64 {
        ball_volume(self.semi_axes.len(), eps) * self.semi_axes.iter().product::<f64>()
    }
}

/// Checks `plane` and returns the ellipsoid `|A x| <= 1`, `A_{alpha mu} = <u_alpha, e_mu>`.
pub fn generic_cylinder_ellipsoid(chart: &ManifoldChart, plane: &DMatrix<f64>) -> Result<Ellipsoid> {
    let n = chart.dim();
    let m = chart.ambient_dim();
    if plane.shape() != (m, n) {
        return Err(Error::Dimension(format!(
            "plane basis is {}x{}, expected {m}x{n}",
            plane.nrows(),
            plane.ncols()
        )));
    }
    let gram_defect = (plane.tr_mul(plane) - DMatrix::identity(n, n)).amax();
    if gram_defect > ORTHONORMAL_TOL {
        return Err(Error::NotOrthonormal(gram_defect));
    }
    let a = plane.rows(0, n).transpose();
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..n).collect();
    // ascending singular value is descending semi-axis
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let smallest = order[0];
    let sigma = svd.singular_values[smallest];
    if sigma <= TRANSVERSAL_TOL {
        return Err(Error::NotTransversal {
            sigma,
            direction: v_t.row(smallest).iter().copied().collect(),
        });
    }
    let semi_axes = order.iter().map(|&i| 1.0 / svd.singular_values[i]).collect();
    let axes = DMatrix::from_fn(n, n, |r, c| v_t[(order[c], r)]);
    Ok(Ellipsoid { semi_axes, axes })
}

struct RawMoments {
    volume: f64,
    barycenter: DVector<f64>,
    about_center: DMatrix<f64>,
    about_barycenter: DMatrix<f64>,
}

fn integrate(chart: &ManifoldChart, spec: &DomainSpec, quad: &QuadratureConfig) -> Result<RawMoments> {
    let n = chart.dim();
    let k = chart.codim();
    let m = n + k;
    let eps = spec.eps;
    let rule = quad.sphere_rule(n);
    let radial = gauss_legendre(quad.radial_nodes);

    let sigma_min = match &spec.kind {
        DomainKind::Cylindrical { plane: Some(u) } => {
            let e = generic_cylinder_ellipsoid(chart, u)?;
            Some(1.0 / e.semi_axes[0])
        }
        _ => None,
    };

    // (weights, points) per direction, collected in rule order for a deterministic sum
    let per_dir: Vec<(Vec<f64>, Vec<f64>)> = (0..rule.len())
        .into_par_iter()
        .map(|i| -> Result<(Vec<f64>, Vec<f64>)> {
            let u = rule.direction(i);
            let rmax = match &spec.kind {
                DomainKind::Spherical => spherical_root(chart, eps, u)?,
                DomainKind::Cylindrical { plane: None } => eps,
                DomainKind::Cylindrical { plane: Some(p) } => cylinder_root(chart, eps, u, p, sigma_min.unwrap())?,
            };
            let mut ws = Vec::with_capacity(radial.nodes.len());
            let mut pts = Vec::with_capacity(radial.nodes.len() * m);
            let mut jac = DMatrix::zeros(k, n);
            let mut x = vec![0.0; n];
            let mut f = vec![0.0; k];
            for (t, wr) in radial.nodes.iter().zip(&radial.weights) {
                let r = 0.5 * rmax * (t + 1.0);
                x.iter_mut().zip(u).for_each(|(xi, ui)| *xi = r * ui);
                chart.eval(&x, &mut f);
                chart.jacobian(&x, &mut jac);
                let w = rule.weights[i] * 0.5 * rmax * wr * r.powi(n as i32 - 1) * volume_density_from_jacobian(&jac);
                ws.push(w);
                pts.extend_from_slice(&x);
                pts.extend_from_slice(&f);
            }
            Ok((ws, pts))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut volume = 0.0;
    let mut first = vec![0.0; m];
    let mut second = vec![0.0; m * m];
    for (ws, pts) in &per_dir {
        for (w, p) in ws.iter().zip(pts.chunks_exact(m)) {
            volume += w;
            for a in 0..m {
                first[a] += w * p[a];
                for b in a..m {
                    second[a * m + b] += w * p[a] * p[b];
                }
            }
        }
    }
    let s: Vec<f64> = first.iter().map(|v| v / volume).collect();
    let mut centred = vec![0.0; m * m];
    let mut d = vec![0.0; m];
    for (ws, pts) in &per_dir {
        for (w, p) in ws.iter().zip(pts.chunks_exact(m)) {
            d.iter_mut().zip(p.iter().zip(&s)).for_each(|(di, (pi, si))| *di = pi - si);
            for a in 0..m {
                for b in a..m {
                    centred[a * m + b] += w * d[a] * d[b];
                }
            }
        }
    }
    let sym = |v: &[f64]| DMatrix::from_fn(m, m, |a, b| if a <= b { v[a * m + b] } else { v[b * m + a] });
    Ok(RawMoments {
        volume,
        barycenter: DVector::from_vec(s),
        about_center: sym(&second),
        about_barycenter: sym(&centred),
    })
}

/// Largest tangent radius of the domain and largest area element over it,
/// sampled along a fixed set of directions. Used to bound rejection samplers.
pub(crate) fn domain_envelope(chart: &ManifoldChart, spec: &DomainSpec) -> Result<(f64, f64)> {
    spec.validate(chart)?;
    let n = chart.dim();
    let k = chart.codim();
    let eps = spec.eps;
    let rule = SphereRule::product(n, 16, 8);
    let sigma_min = match &spec.kind {
        DomainKind::Cylindrical { plane: Some(u) } => Some(1.0 / generic_cylinder_ellipsoid(chart, u)?.semi_axes[0]),
        _ => None,
    };
    let mut rmax = 0.0f64;
    let mut dmax = 1.0f64;
    let mut jac = DMatrix::zeros(k, n);
    for i in 0..rule.len() {
        let u = rule.direction(i);
        let r = match &spec.kind {
            DomainKind::Spherical => spherical_root(chart, eps, u)?,
            DomainKind::Cylindrical { plane: None } => eps,
            DomainKind::Cylindrical { plane: Some(p) } => cylinder_root(chart, eps, u, p, sigma_min.unwrap())?,
        };
        rmax = rmax.max(r);
        for j in 1..=16 {
            let x: Vec<f64> = u.iter().map(|v| v * r * j as f64 / 16.0).collect();
            chart.jacobian(&x, &mut jac);
            dmax = dmax.max(volume_density_from_jacobian(&jac));
        }
    }
    Ok((rmax, dmax))
}

/// Moments of the domain by product quadrature, with an error estimate from
/// the same rule at half resolution.
pub fn domain_moments(chart: &ManifoldChart, spec: &DomainSpec, quad: &QuadratureConfig) -> Result<MomentSet> {
    quad.validate()?;
    spec.validate(chart)?;
    let fine = integrate(chart, spec, quad)?;
    let coarse = integrate(chart, spec, &quad.halved())?;

    // differences below a few ulps of the magnitude are not resolvable
    let floor = |scale: f64| 16.0 * f64::EPSILON * scale;
    let vol_scale = fine.volume.abs();
    let bary_scale = spec.eps;
    let cov_scale = fine.about_center.amax().max(fine.about_barycenter.amax());
    let err = MomentErrors {
        volume: (fine.volume - coarse.volume).abs().max(floor(vol_scale)),
        barycenter: (&fine.barycenter - &coarse.barycenter).map(|v| v.abs().max(floor(bary_scale))),
        covariance: {
            let dc = (&fine.about_center - &coarse.about_center).abs();
            let db = (&fine.about_barycenter - &coarse.about_barycenter).abs();
            dc.zip_map(&db, |a, b| a.max(b).max(floor(cov_scale)))
        },
    };
    let flagged = err.volume > quad.target_rel_error * fine.volume;
    Ok(MomentSet {
        volume: fine.volume,
        barycenter: fine.barycenter,
        about_center: fine.about_center,
        about_barycenter: fine.about_barycenter,
        reference: spec.reference,
        normalization: Normalization::Measure,
        quad_error: Some(err),
        std_error: None,
        flagged,
    })
}
