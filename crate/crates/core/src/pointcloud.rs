//! Sampled neighbourhoods: uniform points on a chart domain, their moments
//! with standard errors, and curvature descriptors read off from them.
//!
//! Sample moments are per unit measure (divided by the total weight), so the
//! descriptor inversion works with volume-normalized eigenvalues and never
//! needs the absolute volume of the sampled region.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::{curvature_summary, ManifoldChart, SecondFundamentalForm};
use crate::moments::{domain_envelope, DomainKind, DomainSpec, MomentErrors, MomentSet, Normalization, Reference};
use crate::predictions::descriptors::{descriptors_from_normalized, DescriptorReport, PrincipalValues};
use crate::predictions::Kind;
use crate::spectra::sym_eig;
use crate::sphere_quadrature::uniform_direction;

const CHUNK: usize = 4096;
/// Give up when fewer than one proposal in this many is accepted.
const MIN_ACCEPTANCE: f64 = 1e-3;

/// Points in `R^{n+k}`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSample {
    pub dim: usize,
    pub points: Vec<f64>,
    pub weights: Option<Vec<f64>>,
    /// Seed the sample was drawn with, if it was drawn here.
    pub seed: Option<u64>,
    pub noise_sigma: f64,
}

impl PointSample {
    pub fn from_points(dim: usize, points: Vec<f64>) -> Result<Self> {
        if dim == 0 || !points.len().is_multiple_of(dim) {
            return Err(Error::InvalidSamples(format!(
                "{} coordinates do not split into points of dimension {dim}",
                points.len()
            )));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSamples("non-finite coordinate".into()));
        }
        Ok(PointSample {
            dim,
            points,
            weights: None,
            seed: None,
            noise_sigma: 0.0,
        })
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.len() {
            return Err(Error::InvalidSamples(format!("{} weights for {} points", weights.len(), self.len())));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidSamples("weights must be finite and non-negative".into()));
        }
        self.weights = Some(weights);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    fn weight(&self, i: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[i])
    }

    /// Keeps the points of a neighbourhood of `center`.
    ///
    /// Balls are cut directly. Cylinders need a tangent plane, which is taken
    /// from the leading eigenvectors of the ball of the same radius.
    pub fn select(&self, center: &[f64], eps: f64, n: usize, kind: Kind) -> Result<PointSample> {
        let d = self.dim;
        let rel = |i: usize| DVector::from_iterator(d, self.point(i).iter().zip(center).map(|(a, b)| a - b));
        let in_ball: Vec<usize> = (0..self.len()).filter(|&i| rel(i).norm() <= eps).collect();
        let keep = match kind {
            Kind::Spherical => in_ball,
            Kind::Cylindrical => {
                let ball = self.subset(&in_ball);
                let m = estimate_moments_at(&ball, center, Reference::AtBarycenter)?;
                let tangent = sym_eig(m.covariance())?.vectors.columns(0, n).into_owned();
                (0..self.len()).filter(|&i| tangent.tr_mul(&rel(i)).norm() <= eps).collect()
            }
        };
        Ok(self.subset(&keep))
    }

    fn subset(&self, idx: &[usize]) -> PointSample {
        PointSample {
            dim: self.dim,
            points: idx.iter().flat_map(|&i| self.point(i).iter().copied()).collect(),
            weights: self.weights.as_ref().map(|w| idx.iter().map(|&i| w[i]).collect()),
            seed: self.seed,
            noise_sigma: self.noise_sigma,
        }
    }
}

fn inside(kind: &DomainKind, eps: f64, x: &[f64], point: &DVector<f64>) -> bool {
    match kind {
        DomainKind::Spherical => point.norm_squared() <= eps * eps,
        DomainKind::Cylindrical { plane: None } => x.iter().map(|v| v * v).sum::<f64>() <= eps * eps,
        DomainKind::Cylindrical { plane: Some(p) } => p.tr_mul(point).norm_squared() <= eps * eps,
    }
}

/// Draws `count` points uniformly with respect to the area measure of the
/// domain, then adds isotropic Gaussian noise of size `noise_sigma`.
///
/// Proposals are uniform in a tangent ball enclosing the domain and are kept
/// with probability `sqrt(det g) / sup sqrt(det g)`. Each chunk of points owns
/// one stream of the generator, so the result depends on the seed only.
pub fn sample_domain(
    chart: &ManifoldChart,
    spec: &DomainSpec,
    count: usize,
    seed: u64,
    noise_sigma: f64,
) -> Result<PointSample> {
    if count == 0 {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::InvalidSamples(format!("noise level {noise_sigma}")));
    }
    let (rmax, dmax) = domain_envelope(chart, spec)?;
    let radius = match spec.kind {
        DomainKind::Cylindrical { plane: Some(_) } => (1.05 * rmax).min(chart.domain_radius()),
        _ => rmax,
    };
    let dsup = 1.02 * dmax;
    let n = chart.dim();
    let d = chart.ambient_dim();
    let chunks = count.div_ceil(CHUNK);

    let parts: Vec<Result<Vec<f64>>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let quota = CHUNK.min(count - c * CHUNK);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let mut out = Vec::with_capacity(quota * d);
            let mut u = vec![0.0; n];
            let mut proposed = 0usize;
            let mut accepted = 0usize;
            while accepted < quota {
                proposed += 1;
                if proposed > 10_000 && (accepted as f64) < MIN_ACCEPTANCE * proposed as f64 {
                    return Err(Error::RejectionCollapse { accepted, proposed });
                }
                uniform_direction(&mut rng, &mut u);
                let r = radius * rng.gen::<f64>().powf(1.0 / n as f64);
                let x: Vec<f64> = u.iter().map(|v| r * v).collect();
                let point = chart.point(&x);
                if !point.iter().all(|v| v.is_finite()) || !inside(&spec.kind, spec.eps, &x, &point) {
                    continue;
                }
                if rng.gen::<f64>() * dsup > chart.volume_density(&x) {
                    continue;
                }
                accepted += 1;
                for v in point.iter() {
                    let noise: f64 = if noise_sigma > 0.0 { rng.sample(StandardNormal) } else { 0.0 };
                    out.push(v + noise_sigma * noise);
                }
            }
            Ok(out)
        })
        .collect();
    let mut points = Vec::with_capacity(count * d);
    for p in parts {
        points.extend(p?);
    }
    Ok(PointSample {
        dim: d,
        points,
        weights: None,
        seed: Some(seed),
        noise_sigma,
    })
}

/// Weighted count, mean and centred scatter of a batch of points.
#[derive(Debug, Clone)]
struct Accumulator {
    w: f64,
    w2: f64,
    mean: Vec<f64>,
    scatter: Vec<f64>,
}

impl Accumulator {
    fn new(d: usize) -> Self {
        Accumulator {
            w: 0.0,
            w2: 0.0,
            mean: vec![0.0; d],
            scatter: vec![0.0; d * d],
        }
    }

    fn push(&mut self, x: &[f64], w: f64) {
        if w == 0.0 {
            return;
        }
        let d = self.mean.len();
        self.w += w;
        self.w2 += w * w;
        let f = w / self.w;
        let delta: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        self.mean.iter_mut().zip(&delta).for_each(|(m, dl)| *m += f * dl);
        for a in 0..d {
            for b in 0..d {
                self.scatter[a * d + b] += w * delta[a] * (x[b] - self.mean[b]);
            }
        }
    }

    fn merge(mut self, other: Accumulator) -> Accumulator {
        if other.w == 0.0 {
            return self;
        }
        if self.w == 0.0 {
            return other;
        }
        let d = self.mean.len();
        let w = self.w + other.w;
        let delta: Vec<f64> = other.mean.iter().zip(&self.mean).map(|(a, b)| a - b).collect();
        let f = self.w * other.w / w;
        for a in 0..d {
            for b in 0..d {
                self.scatter[a * d + b] += other.scatter[a * d + b] + f * delta[a] * delta[b];
            }
        }
        self.mean.iter_mut().zip(&delta).for_each(|(m, dl)| *m += other.w / w * dl);
        self.w = w;
        self.w2 += other.w2;
        self
    }
}

/// Merges neighbours level by level so the result does not depend on threading.
fn pairwise<T>(mut items: Vec<T>, merge: impl Fn(T, T) -> T) -> Option<T> {
    while items.len() > 1 {
        let mut next = Vec::with_capacity(items.len().div_ceil(2));
        let mut it = items.into_iter();
        while let Some(a) = it.next() {
            next.push(match it.next() {
                Some(b) => merge(a, b),
                None => a,
            });
        }
        items = next;
    }
    items.pop()
}

/// Probability-normalized moments about the chart origin.
pub fn estimate_moments(sample: &PointSample, spec: &DomainSpec) -> Result<MomentSet> {
    estimate_moments_at(sample, &vec![0.0; sample.dim], spec.reference)
}

/// Probability-normalized moments of `sample` in coordinates centred at `center`,
/// with Monte-Carlo standard errors.
pub fn estimate_moments_at(sample: &PointSample, center: &[f64], reference: Reference) -> Result<MomentSet> {
    let d = sample.dim;
    if center.len() != d {
        return Err(Error::Dimension(format!("center has {} entries, points have {d}", center.len())));
    }
    if sample.len() < d + 1 {
        return Err(Error::TooFewSamples {
            needed: d + 1,
            got: sample.len(),
        });
    }
    let shifted = |i: usize| -> Vec<f64> { sample.point(i).iter().zip(center).map(|(a, b)| a - b).collect() };
    let chunks = sample.len().div_ceil(CHUNK);
    let range = |c: usize| c * CHUNK..((c + 1) * CHUNK).min(sample.len());

    let accs: Vec<Accumulator> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = Accumulator::new(d);
            for i in range(c) {
                acc.push(&shifted(i), sample.weight(i));
            }
            acc
        })
        .collect();
    let acc = pairwise(accs, Accumulator::merge).expect("at least one chunk");
    if acc.w <= 0.0 {
        return Err(Error::InvalidSamples("total weight is zero".into()));
    }
    let s = DVector::from_vec(acc.mean.clone());
    let about_barycenter = DMatrix::from_fn(d, d, |a, b| 0.5 * (acc.scatter[a * d + b] + acc.scatter[b * d + a]) / acc.w);
    let about_center = &about_barycenter + &s * s.transpose();

    // spread of the per-point products behind each second-moment entry
    let spreads: Vec<(Vec<f64>, Vec<f64>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut vc = vec![0.0; d * d];
            let mut vb = vec![0.0; d * d];
            for i in range(c) {
                let w = sample.weight(i);
                let y = shifted(i);
                for a in 0..d {
                    for b in 0..d {
                        let pc = y[a] * y[b] - about_center[(a, b)];
                        let pb = (y[a] - s[a]) * (y[b] - s[b]) - about_barycenter[(a, b)];
                        vc[a * d + b] += w * pc * pc;
                        vb[a * d + b] += w * pb * pb;
                    }
                }
            }
            (vc, vb)
        })
        .collect();
    let (vc, vb) = pairwise(spreads, |(mut a1, mut b1), (a2, b2)| {
        a1.iter_mut().zip(&a2).for_each(|(x, y)| *x += y);
        b1.iter_mut().zip(&b2).for_each(|(x, y)| *x += y);
        (a1, b1)
    })
    .expect("at least one chunk");
    let n_eff = acc.w * acc.w / acc.w2;
    let se = |v: f64| (v / acc.w / n_eff).sqrt();
    let cov_err = DMatrix::from_fn(d, d, |a, b| {
        let i = a * d + b;
        match reference {
            Reference::AtCenter => se(vc[i]),
            Reference::AtBarycenter => se(vb[i]),
        }
    });
    let std_error = MomentErrors {
        volume: 0.0,
        barycenter: DVector::from_fn(d, |a, _| (about_barycenter[(a, a)] / n_eff).sqrt()),
        covariance: cov_err,
    };
    Ok(MomentSet {
        volume: 1.0,
        barycenter: s,
        about_center,
        about_barycenter,
        reference,
        normalization: Normalization::Probability,
        quad_error: None,
        std_error: Some(std_error),
        flagged: false,
    })
}

/// Descriptors of a sampled neighbourhood.
#[derive(Debug, Clone)]
pub struct CloudDescriptors {
    /// One hypersurface report per estimated normal direction.
    pub reports: Vec<DescriptorReport>,
    /// Estimated tangent and normal frames as columns.
    pub tangent_frame: DMatrix<f64>,
    pub normal_frame: DMatrix<f64>,
    /// Sum of the per-normal scalar curvatures.
    pub scalar_curvature: f64,
    /// Second fundamental form in the estimated frames, assembled from signed
    /// principal curvatures when every report has them.
    pub second_fundamental_form: Option<SecondFundamentalForm>,
    /// Scalar curvature of the assembled form through the Gauss equation.
    pub gauss_scalar: Option<f64>,
    /// Smallest tangent over largest normal eigenvalue of the full sample.
    pub scale_ratio: f64,
    pub moments: MomentSet,
}

impl CloudDescriptors {
    pub fn unreliable(&self) -> bool {
        self.scale_ratio < 10.0
    }
}

/// Descriptors from a sample of the neighbourhood of `center` at scale `eps`.
///
/// The codimension is read from the point dimension. For codimension above one
/// the trailing eigenvectors of the covariance serve as normals and each normal
/// gets its own report on the projection to the tangent space plus that normal.
pub fn estimate_descriptors(
    sample: &PointSample,
    center: &[f64],
    eps: f64,
    n: usize,
    kind: Kind,
) -> Result<CloudDescriptors> {
    let d = sample.dim;
    if n == 0 || n >= d {
        return Err(Error::Dimension(format!("tangent dimension {n} in ambient dimension {d}")));
    }
    let k = d - n;
    let moments = estimate_moments_at(sample, center, kind.default_reference())?;
    let eig = sym_eig(moments.covariance())?;
    let tangent_frame = eig.vectors.columns(0, n).into_owned();
    let normal_frame = eig.vectors.columns(n, k).into_owned();
    let scale_ratio = eig.values[n - 1] / eig.values[n].abs();

    let mut reports = Vec::with_capacity(k);
    let mut slices = Vec::with_capacity(k);
    for j in 0..k {
        let mut q = DMatrix::zeros(d, n + 1);
        q.columns_mut(0, n).copy_from(&tangent_frame);
        q.column_mut(n).copy_from(&normal_frame.column(j));
        let projected = moments.project(&q);
        let peig = sym_eig(projected.covariance())?;
        let mut report = descriptors_from_normalized(&projected, &peig, eps, n, kind)?;
        // measure the curvature along the estimated normal rather than the eigenvector sign
        if report.normal_directions[(n, 0)] < 0.0 {
            report.normal_directions *= -1.0;
            report.mean_curvature = -report.mean_curvature;
            if let PrincipalValues::Signed(v) = &mut report.principal {
                v.iter_mut().for_each(|x| *x = -*x);
            }
        }
        slices.push(match &report.principal {
            PrincipalValues::Signed(kappa) => {
                let v = report.principal_directions.rows(0, n).into_owned();
                Some(&v * DMatrix::from_diagonal(&DVector::from_column_slice(kappa)) * v.transpose())
            }
            _ => None,
        });
        reports.push(report);
    }
    let scalar_curvature = reports.iter().map(|r| r.scalar_curvature).sum();
    let second_fundamental_form = slices
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .map(SecondFundamentalForm::new)
        .transpose()?;
    let gauss_scalar = second_fundamental_form.as_ref().map(|s| curvature_summary(s).scalar);
    Ok(CloudDescriptors {
        reports,
        tangent_frame,
        normal_frame,
        scalar_curvature,
        second_fundamental_form,
        gauss_scalar,
        scale_ratio,
        moments,
    })
}

/// Reads whitespace-separated points, one per line; `#` starts a comment.
pub fn read_xyz(path: &Path) -> Result<PointSample> {
    let text = fs::read_to_string(path)?;
    let mut dim = None;
    let mut points = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        match dim {
            None => dim = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(Error::Parse(format!("line {}: {} columns, expected {d}", lineno + 1, row.len())))
            }
            _ => {}
        }
        points.extend(row);
    }
    let dim = dim.ok_or_else(|| Error::Parse("no points in file".into()))?;
    PointSample::from_points(dim, points)
}

pub fn write_xyz(path: &Path, sample: &PointSample) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    for i in 0..sample.len() {
        let row: Vec<String> = sample.point(i).iter().map(|v| format!("{v:.17e}")).collect();
        writeln!(out, "{}", row.join(" "))?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{domain_moments, QuadratureConfig};
    use crate::zoo::parse_manifold;

    #[test]
    fn plane_disk_second_moment() {
        let chart = parse_manifold("plane").unwrap();
        let eps = 0.5;
        let s = sample_domain(&chart, &DomainSpec::cylindrical(eps), 200_000, 7, 0.0).unwrap();
        assert_eq!(s.len(), 200_000);
        let mut r2 = 0.0;
        for i in 0..s.len() {
            let p = s.point(i);
            assert!(p[0] * p[0] + p[1] * p[1] <= eps * eps && p[2] == 0.0);
            r2 += p[0] * p[0] + p[1] * p[1];
        }
        r2 /= s.len() as f64;
        assert!((r2 - eps * eps / 2.0).abs() < 0.01 * eps * eps);
    }

    #[test]
    fn seeded_samples_repeat() {
        let chart = parse_manifold("sphere").unwrap();
        let spec = DomainSpec::spherical(0.4);
        let a = sample_domain(&chart, &spec, 10_000, 3, 0.01).unwrap();
        let b = sample_domain(&chart, &spec, 10_000, 3, 0.01).unwrap();
        assert_eq!(a, b);
        let c = sample_domain(&chart, &spec, 10_000, 4, 0.01).unwrap();
        assert_ne!(a.points, c.points);
    }

    #[test]
    fn noiseless_sphere_points_are_on_the_sphere() {
        let chart = parse_manifold("sphere").unwrap();
        let s = sample_domain(&chart, &DomainSpec::spherical(0.5), 5000, 1, 0.0).unwrap();
        for i in 0..s.len() {
            let p = s.point(i);
            let on = p[0] * p[0] + p[1] * p[1] + (p[2] - 1.0).powi(2);
            assert!((on - 1.0).abs() < 1e-12);
            assert!(p.iter().map(|v| v * v).sum::<f64>() <= 0.25);
        }
    }

    #[test]
    fn identical_points_have_zero_spread() {
        let s = PointSample::from_points(3, [0.1, 0.2, 0.3].repeat(4)).unwrap();
        let m = estimate_moments_at(&s, &[0.1, 0.2, 0.3], Reference::AtBarycenter).unwrap();
        assert_eq!(m.about_center.amax(), 0.0);
        assert!(m.about_barycenter.amax() < 1e-18);
        let one = PointSample::from_points(3, vec![0.0; 3]).unwrap();
        assert!(matches!(
            estimate_moments_at(&one, &[0.0; 3], Reference::AtCenter),
            Err(Error::TooFewSamples { needed: 4, got: 1 })
        ));
    }

    #[test]
    fn sample_moments_match_quadrature() {
        let chart = parse_manifold("sphere").unwrap();
        let spec = DomainSpec::spherical(0.3);
        let quad = domain_moments(&chart, &spec, &QuadratureConfig::default()).unwrap().normalized();
        let s = sample_domain(&chart, &spec, 100_000, 11, 0.0).unwrap();
        let m = estimate_moments(&s, &spec).unwrap();
        let se = &m.std_error.as_ref().unwrap().covariance;
        for a in 0..3 {
            for b in 0..3 {
                let diff = (m.covariance()[(a, b)] - quad.covariance()[(a, b)]).abs();
                assert!(diff <= 4.0 * se[(a, b)] + 1e-15, "({a},{b}) {diff} vs {}", se[(a, b)]);
            }
        }
        assert!(m.parallel_axis_defect() < 1e-15);
    }

    #[test]
    fn weights_change_the_mean() {
        let s = PointSample::from_points(2, vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0])
            .unwrap()
            .with_weights(vec![2.0, 1.0, 1.0])
            .unwrap();
        let m = estimate_moments_at(&s, &[0.0, 0.0], Reference::AtCenter).unwrap();
        assert!((m.barycenter[0] - 0.25).abs() < 1e-15);
        assert!((m.about_center[(0, 0)] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn xyz_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cloud.xyz");
        let s = PointSample::from_points(3, vec![0.1, -2.0, 3.5e-9, 1.0 / 3.0, 0.0, 7.0]).unwrap();
        write_xyz(&path, &s).unwrap();
        let back = read_xyz(&path).unwrap();
        assert_eq!(back.points, s.points);
        fs::write(&path, "1 2 3\n4 5\n").unwrap();
        assert!(matches!(read_xyz(&path), Err(Error::Parse(_))));
    }

    #[test]
    fn plane_descriptors_vanish() {
        let chart = parse_manifold("plane").unwrap();
        let s = sample_domain(&chart, &DomainSpec::spherical(0.3), 2000, 5, 0.0).unwrap();
        let d = estimate_descriptors(&s, &[0.0; 3], 0.3, 2, Kind::Spherical).unwrap();
        assert_eq!(d.reports.len(), 1);
        assert_eq!(d.scalar_curvature, 0.0);
        assert_eq!(d.reports[0].principal, PrincipalValues::Omitted);
    }

    #[test]
    fn cylinder_selection_keeps_cylinder_points() {
        let chart = parse_manifold("sphere").unwrap();
        let s = sample_domain(&chart, &DomainSpec::cylindrical(0.2), 5000, 9, 0.0).unwrap();
        let kept = s.select(&[0.0; 3], 0.2, 2, Kind::Cylindrical).unwrap();
        assert!(kept.len() >= s.len() - 5, "{}", kept.len());
    }
}
