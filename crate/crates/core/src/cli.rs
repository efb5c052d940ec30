//! Experiment runner behind the `intinv` binary: scale sweeps comparing
//! quadrature against the expansions, descriptor tables, and CSV output.
//!
//! Every CSV starts with `#` lines carrying the library version, a hash of the
//! resolved configuration and the configuration itself, followed by a header
//! row. Summary checks trail as `# check` lines. Output depends only on the
//! configuration, so equal configurations give byte-identical files.

pub mod config;

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::Error;
use crate::geom::{curvature_summary, second_fundamental_form, CurvatureSummary, ManifoldChart, SecondFundamentalForm};
use crate::moments::{domain_moments, DomainKind, DomainSpec, MomentSet};
use crate::pointcloud::{estimate_descriptors, sample_domain};
use crate::predictions::descriptors::{descriptors_from_invariants, descriptors_from_normalized, DescriptorReport, Orientation, PrincipalValues};
use crate::predictions::{predict_barycenter, predict_eigenvalues, predict_volume, Kind};
use crate::spectra::{fit_expansion, loglog_slope, sym_eig, EigenDecomposition};
use crate::sphere_quadrature::{ball_volume, mc_sphere_integrals, monomial_sphere_integral, patterns, SphereConstants};
use crate::zoo::parse_manifold;
pub use config::{ConfigError, ExperimentConfig, Settings};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Shortest round-trip form, in exponent notation.
fn num(v: f64) -> String {
    format!("{v:e}")
}

/// Failure of a run, carrying the process exit code it maps to.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("domain validity: {0}")]
    Domain(Error),
    #[error("{0}")]
    Failed(Error),
    #[error("{} check(s) failed: {}", .0.len(), .0.join("; "))]
    Assertion(Vec<String>),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Assertion(_) | RunError::Failed(_) => 1,
            RunError::Config(_) => 2,
            RunError::Domain(_) => 3,
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::AboveCeiling { .. }
            | Error::NonPositiveRadius(_)
            | Error::NoBracket { .. }
            | Error::NotTransversal { .. }
            | Error::RejectionCollapse { .. } => RunError::Domain(e),
            Error::Parse(_)
            | Error::Dimension(_)
            | Error::NotCentered { .. }
            | Error::RankDeficient(_)
            | Error::InvalidSamples(_)
            | Error::Io(_) => RunError::Config(ConfigError(e.to_string())),
            other => RunError::Failed(other),
        }
    }
}

/// One summary quantity, optionally compared against a reference or threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub reference: Option<f64>,
    pub threshold: Option<f64>,
    pub passed: Option<bool>,
}

impl Check {
    fn report(name: impl Into<String>, value: f64) -> Self {
        Check {
            name: name.into(),
            value,
            reference: None,
            threshold: None,
            passed: None,
        }
    }

    fn against(mut self, reference: f64) -> Self {
        self.reference = Some(reference);
        self
    }

    fn at_least(mut self, threshold: Option<f64>) -> Self {
        if let Some(t) = threshold {
            self.threshold = Some(t);
            self.passed = Some(self.value >= t);
        }
        self
    }

    fn line(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_else(|| "-".into());
        let status = match self.passed {
            Some(true) => "pass",
            Some(false) => "FAIL",
            None => "info",
        };
        format!(
            "# check {} value={} reference={} threshold={} {status}",
            self.name,
            self.value,
            opt(self.reference),
            opt(self.threshold)
        )
    }
}

fn failures(checks: &[Check]) -> Vec<String> {
    checks
        .iter()
        .filter(|c| c.passed == Some(false))
        .map(|c| format!("{} = {} below {}", c.name, c.value, c.threshold.unwrap_or(f64::NAN)))
        .collect()
}

fn header(cfg: &ExperimentConfig, command: &str) -> String {
    let mut out = format!("# intinv {VERSION} {command}\n# config_hash {}\n", cfg.hash());
    for line in cfg.canonical() {
        writeln!(out, "# config {line}").expect("writing to a string");
    }
    out
}

pub fn load_chart(cfg: &ExperimentConfig) -> Result<ManifoldChart, RunError> {
    let chart = parse_manifold(&cfg.manifold)?.with_hessian_mode(cfg.hessian);
    // the schedule is decreasing, so the first entry decides validity
    chart.check_scale(cfg.eps[0])?;
    Ok(chart)
}

fn domain_spec(kind: Kind, eps: f64) -> DomainSpec {
    match kind {
        Kind::Spherical => DomainSpec::spherical(eps),
        Kind::Cylindrical => DomainSpec::new(DomainKind::cylindrical(), eps),
    }
}

/// Quadrature result at one scale next to the predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub eps: f64,
    pub ball_volume: f64,
    pub volume: f64,
    pub volume_pred: f64,
    pub volume_err: f64,
    pub barycenter_normal: Vec<f64>,
    pub barycenter_pred: Vec<f64>,
    pub barycenter_err: f64,
    /// Covariance eigenvalues, descending, tangent block first.
    pub eigenvalues: Vec<f64>,
    pub eigen_pred: Vec<f64>,
    pub covariance_err: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub config: ExperimentConfig,
    pub n: usize,
    pub k: usize,
    pub rows: Vec<SweepRow>,
    pub checks: Vec<Check>,
}

impl SweepReport {
    pub fn passed(&self) -> bool {
        failures(&self.checks).is_empty()
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_csv(&self) -> String {
        let mut out = header(&self.config, "sweep");
        let d = self.n + self.k;
        let mut cols = vec!["eps", "volume", "volume_pred", "volume_err"]
            .into_iter()
            .map(String::from)
            .collect::<Vec<_>>();
        for j in 0..self.k {
            cols.push(format!("bary_n{j}"));
            cols.push(format!("bary_n{j}_pred"));
        }
        for i in 0..d {
            cols.push(format!("lambda{i}"));
            cols.push(format!("lambda{i}_pred"));
        }
        cols.extend(["covariance_err", "flagged"].map(String::from));
        writeln!(out, "{}", cols.join(",")).expect("writing to a string");
        for r in &self.rows {
            let mut f = vec![r.eps, r.volume, r.volume_pred, r.volume_err];
            for j in 0..self.k {
                f.push(r.barycenter_normal[j]);
                f.push(r.barycenter_pred[j]);
            }
            for i in 0..d {
                f.push(r.eigenvalues[i]);
                f.push(r.eigen_pred[i]);
            }
            f.push(r.covariance_err);
            let mut line: Vec<String> = f.iter().map(|v| num(*v)).collect();
            line.push((r.flagged as u8).to_string());
            writeln!(out, "{}", line.join(",")).expect("writing to a string");
        }
        for c in &self.checks {
            writeln!(out, "{}", c.line()).expect("writing to a string");
        }
        out
    }
}

/// Quadrature moments over the schedule against the predicted series.
///
/// Checks report residual slopes of volume, barycenter and eigenvalues, and
/// the leading coefficients recovered by least squares against the predicted
/// ones. Configured slope thresholds turn the slopes into assertions, but the
/// report itself is returned either way.
pub fn sweep(cfg: &ExperimentConfig) -> Result<SweepReport, RunError> {
    let chart = load_chart(cfg)?;
    let n = chart.dim();
    let k = chart.codim();
    let curv = curvature_summary(&second_fundamental_form(&chart)?);
    let kind = cfg.kind;

    let rows = cfg
        .eps
        .par_iter()
        .map(|&eps| -> Result<SweepRow, Error> {
            let m = domain_moments(&chart, &domain_spec(kind, eps), &cfg.quadrature)?;
            let eig = sym_eig(m.covariance())?;
            let pred = predict_eigenvalues(&curv, eps, kind);
            let bp = predict_barycenter(&curv, eps, kind);
            let err = m.quad_error.as_ref().expect("quadrature attaches errors");
            Ok(SweepRow {
                eps,
                ball_volume: ball_volume(n, eps),
                volume: m.volume,
                volume_pred: predict_volume(&curv, eps, kind),
                volume_err: err.volume,
                barycenter_normal: m.barycenter.rows(n, k).iter().copied().collect(),
                barycenter_pred: bp.rows(n, k).iter().copied().collect(),
                barycenter_err: err.barycenter.amax(),
                eigenvalues: eig.values.iter().copied().collect(),
                eigen_pred: pred.all(),
                covariance_err: err.covariance.amax(),
                flagged: m.flagged,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let checks = sweep_checks(cfg, &curv, &rows)?;
    Ok(SweepReport {
        config: cfg.clone(),
        n,
        k,
        rows,
        checks,
    })
}

fn sweep_checks(cfg: &ExperimentConfig, curv: &CurvatureSummary, rows: &[SweepRow]) -> Result<Vec<Check>, Error> {
    let n = curv.n;
    let k = curv.k;
    let nf = n as f64;
    let ulp = 64.0 * f64::EPSILON;
    let eps: Vec<f64> = rows.iter().map(|r| r.eps).collect();
    let a = &cfg.assertions;
    let mut checks = Vec::new();

    let vres: Vec<f64> = rows.iter().map(|r| (r.volume - r.volume_pred) / r.ball_volume).collect();
    let vfloor: Vec<f64> = rows.iter().map(|r| (r.volume_err + ulp * r.volume) / r.ball_volume).collect();
    checks.push(Check::report("volume_slope", loglog_slope(&eps, &vres, &vfloor).slope).at_least(a.volume));

    let bres: Vec<f64> = rows
        .iter()
        .map(|r| {
            r.barycenter_normal
                .iter()
                .zip(&r.barycenter_pred)
                .map(|(x, p)| (x - p).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let bfloor: Vec<f64> = rows.iter().map(|r| r.barycenter_err + ulp * r.eps * r.eps).collect();
    checks.push(Check::report("barycenter_slope", loglog_slope(&eps, &bres, &bfloor).slope).at_least(a.barycenter));

    let mut tangent_slope = f64::INFINITY;
    let mut normal_slope = f64::INFINITY;
    for i in 0..n + k {
        let res: Vec<f64> = rows.iter().map(|r| (r.eigenvalues[i] - r.eigen_pred[i]) / r.ball_volume).collect();
        let floor: Vec<f64> = rows
            .iter()
            .map(|r| (r.covariance_err + ulp * r.eigenvalues[0]) / r.ball_volume)
            .collect();
        let s = loglog_slope(&eps, &res, &floor).slope;
        checks.push(Check::report(format!("lambda{i}_slope"), s));
        if i < n {
            tangent_slope = tangent_slope.min(s);
        } else {
            normal_slope = normal_slope.min(s);
        }
    }
    checks.push(Check::report("tangent_slope", tangent_slope).at_least(a.tangent));
    checks.push(Check::report("normal_slope", normal_slope).at_least(a.normal));

    // leading coefficients by least squares, when the schedule allows a fit
    if rows.len() >= 5 {
        let samples: Vec<(f64, f64)> = rows.iter().map(|r| (r.eps, r.volume / r.ball_volume - 1.0)).collect();
        let fit = fit_expansion(&samples, &[2, 4, 6])?;
        let predicted = match cfg.kind {
            Kind::Cylindrical => curv.tr_iii / (2.0 * (nf + 2.0)),
            Kind::Spherical => (2.0 * curv.tr_iii - curv.mean_curvature_sq()) / (8.0 * (nf + 2.0)),
        };
        checks.push(Check::report("volume_c2", fit.coefficient(2).unwrap()).against(predicted));

        let pred = predict_eigenvalues(curv, 1.0, cfg.kind);
        let top = sym_eig(&pred.tangent_operator)?.values;
        let bottom = sym_eig(&pred.normal_operator)?.values;
        for i in 0..n + k {
            let samples: Vec<(f64, f64)> = rows
                .iter()
                .map(|r| {
                    let y = r.eigenvalues[i] / r.ball_volume;
                    (r.eps, if i < n { y - r.eps * r.eps / (nf + 2.0) } else { y })
                })
                .collect();
            let fit = fit_expansion(&samples, &[4, 6, 8])?;
            let predicted = if i < n {
                pred.tangent_factor * top[i]
            } else {
                pred.normal_factor * bottom[i - n]
            };
            checks.push(Check::report(format!("lambda{i}_c4"), fit.coefficient(4).unwrap()).against(predicted));
        }
    }
    Ok(checks)
}

/// Sweep that fails with [`RunError::Assertion`] when a configured threshold is missed.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepReport, RunError> {
    let report = sweep(cfg)?;
    let failed = failures(&report.checks);
    if failed.is_empty() {
        Ok(report)
    } else {
        Err(RunError::Assertion(failed))
    }
}

/// Exact curvature of one normal slice of a chart.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceTruth {
    pub scalar_curvature: f64,
    pub mean_curvature: f64,
    /// Principal curvatures, ascending.
    pub principal: Vec<f64>,
}

pub fn slice_truth(sff: &SecondFundamentalForm, j: usize) -> Result<SliceTruth, Error> {
    let s = sff.slice(j);
    let h = s.trace();
    let principal = sym_eig(s)?.ascending_values();
    Ok(SliceTruth {
        scalar_curvature: h * h - s.norm_squared(),
        mean_curvature: h,
        principal,
    })
}

#[derive(Debug, Clone)]
pub struct DescriptorRow {
    pub eps: f64,
    pub source: &'static str,
    pub normal: usize,
    pub report: DescriptorReport,
    /// Propagated numerical floor of the principal values and scalar curvature.
    pub floor: (f64, f64),
}

#[derive(Debug, Clone)]
pub struct DescriptorTable {
    pub config: ExperimentConfig,
    pub n: usize,
    pub truth: Vec<SliceTruth>,
    pub rows: Vec<DescriptorRow>,
    pub checks: Vec<Check>,
}

impl DescriptorTable {
    pub fn passed(&self) -> bool {
        failures(&self.checks).is_empty()
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_csv(&self) -> String {
        let mut out = header(&self.config, "descriptors");
        for (j, t) in self.truth.iter().enumerate() {
            let p: Vec<String> = t.principal.iter().map(|v| v.to_string()).collect();
            writeln!(
                out,
                "# truth normal={j} scalar_curvature={} mean_curvature={} principal={}",
                t.scalar_curvature,
                t.mean_curvature,
                p.join(" ")
            )
            .expect("writing to a string");
        }
        let value = match self.config.kind {
            Kind::Spherical => "kappa",
            Kind::Cylindrical => "kappa_sq",
        };
        let mut cols: Vec<String> = ["eps", "source", "normal", "scalar_curvature", "mean_curvature", "orientation"]
            .map(String::from)
            .into();
        cols.extend((0..self.n).map(|i| format!("{value}{i}")));
        cols.push("flags".into());
        writeln!(out, "{}", cols.join(",")).expect("writing to a string");
        for row in &self.rows {
            let r = &row.report;
            let orientation = match r.orientation {
                Orientation::Positive => "+",
                Orientation::Negative => "-",
                Orientation::Undetermined => "?",
            };
            let mut line = vec![
                num(row.eps),
                row.source.to_string(),
                row.normal.to_string(),
                num(r.scalar_curvature),
                num(r.mean_curvature),
                orientation.to_string(),
            ];
            match &r.principal {
                PrincipalValues::Signed(v) | PrincipalValues::Squared(v) => line.extend(v.iter().map(|x| num(*x))),
                PrincipalValues::Omitted => line.extend((0..self.n).map(|_| String::new())),
            }
            let flags: Vec<String> = r.flags.iter().map(|f| format!("{f:?}")).collect();
            line.push(flags.join(" "));
            writeln!(out, "{}", line.join(",")).expect("writing to a string");
        }
        for c in &self.checks {
            writeln!(out, "{}", c.line()).expect("writing to a string");
        }
        out
    }
}

/// Largest deviation of sorted principal estimates from the sorted truth.
pub fn principal_error(report: &DescriptorReport, truth: &SliceTruth) -> Option<f64> {
    let (mut est, mut exact): (Vec<f64>, Vec<f64>) = match &report.principal {
        PrincipalValues::Signed(v) => (v.clone(), truth.principal.clone()),
        PrincipalValues::Squared(v) => (v.clone(), truth.principal.iter().map(|x| x * x).collect()),
        PrincipalValues::Omitted => return None,
    };
    est.sort_by(f64::total_cmp);
    exact.sort_by(f64::total_cmp);
    Some(est.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

/// Values of a report that a perturbation can move.
fn report_values(r: &DescriptorReport) -> (f64, Option<Vec<f64>>) {
    let p = match &r.principal {
        PrincipalValues::Signed(v) | PrincipalValues::Squared(v) => Some(v.clone()),
        PrincipalValues::Omitted => None,
    };
    (r.scalar_curvature, p)
}

/// Linearized effect of the quadrature error estimates on a report: the volume
/// and each eigenvalue are moved by their error one at a time and the changes
/// summed. Returns `(principal, scalar)` bounds with a safety factor of 4.
fn propagated_floor(
    invert: Inversion,
    m: &MomentSet,
    eig: &EigenDecomposition,
    base: &DescriptorReport,
    eps: f64,
    n: usize,
    kind: Kind,
) -> Result<(f64, f64), Error> {
    let Some(err) = m.quad_error.as_ref() else {
        return Ok((0.0, 0.0));
    };
    let (s0, p0) = report_values(base);
    let mut ds = 0.0;
    let mut dp = vec![0.0; n];
    let mut add = |r: DescriptorReport| {
        let (s, p) = report_values(&r);
        ds += (s - s0).abs();
        if let (Some(p), Some(p0)) = (p, &p0) {
            dp.iter_mut().zip(p.iter().zip(p0)).for_each(|(d, (a, b))| *d += (a - b).abs());
        }
    };
    let mut mv = m.clone();
    mv.volume += err.volume;
    add(invert(&mv, eig, eps, n, kind)?);
    let dl = err.covariance.amax();
    for i in 0..eig.len() {
        let mut e = eig.clone();
        e.values[i] += dl;
        add(invert(m, &e, eps, n, kind)?);
    }
    Ok((4.0 * dp.iter().copied().fold(0.0, f64::max), 4.0 * ds))
}

type Inversion = fn(&MomentSet, &EigenDecomposition, f64, usize, Kind) -> Result<DescriptorReport, Error>;

/// Hypersurface slices of quadrature moments, one per chart normal, with the
/// propagated quadrature floor of each.
///
/// A hypersurface uses the volume-ratio inversion directly. In higher
/// codimension the volume carries curvature of every normal, so each slice is
/// inverted from its volume-normalized moments instead.
fn quadrature_reports(
    m: &MomentSet,
    n: usize,
    k: usize,
    eps: f64,
    kind: Kind,
) -> Result<Vec<(DescriptorReport, (f64, f64))>, Error> {
    (0..k)
        .map(|j| {
            let q = DMatrix::from_fn(n + k, n + 1, |r, c| if (c < n && r == c) || (c == n && r == n + j) { 1.0 } else { 0.0 });
            let (slice, invert): (MomentSet, Inversion) = if k == 1 {
                (m.clone(), descriptors_from_invariants)
            } else {
                (m.project(&q).normalized(), descriptors_from_normalized)
            };
            let eig = sym_eig(slice.covariance())?;
            let report = invert(&slice, &eig, eps, n, kind)?;
            let floor = propagated_floor(invert, &slice, &eig, &report, eps, n, kind)?;
            Ok((report, floor))
        })
        .collect()
}

/// Descriptor reports per scale from quadrature and, when enabled, from samples.
pub fn descriptors(cfg: &ExperimentConfig) -> Result<DescriptorTable, RunError> {
    let chart = load_chart(cfg)?;
    let n = chart.dim();
    let k = chart.codim();
    let sff = second_fundamental_form(&chart)?;
    let truth = (0..k).map(|j| slice_truth(&sff, j)).collect::<Result<Vec<_>, _>>()?;
    let kind = cfg.kind;
    let pc = &cfg.pointcloud;

    let per_eps = cfg
        .eps
        .par_iter()
        .enumerate()
        .map(|(i, &eps)| -> Result<Vec<DescriptorRow>, Error> {
            let spec = domain_spec(kind, eps);
            let m = domain_moments(&chart, &spec, &cfg.quadrature)?;
            let mut rows: Vec<DescriptorRow> = quadrature_reports(&m, n, k, eps, kind)?
                .into_iter()
                .enumerate()
                .map(|(j, (report, floor))| DescriptorRow {
                    eps,
                    source: "quadrature",
                    normal: j,
                    report,
                    floor,
                })
                .collect();
            if pc.enabled {
                let sample = sample_domain(&chart, &spec, pc.n_points, pc.seed.wrapping_add(i as u64), pc.noise)?;
                let cloud = estimate_descriptors(&sample, &vec![0.0; n + k], eps, n, kind)?;
                rows.extend(cloud.reports.into_iter().enumerate().map(|(j, report)| DescriptorRow {
                    eps,
                    source: "pointcloud",
                    normal: j,
                    report,
                    floor: (0.0, 0.0),
                }));
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let rows: Vec<DescriptorRow> = per_eps.into_iter().flatten().collect();

    let mut checks = Vec::new();
    let quad: Vec<&DescriptorRow> = rows.iter().filter(|r| r.source == "quadrature").collect();
    let eps: Vec<f64> = cfg.eps.clone();
    let mut principal_slope = f64::INFINITY;
    for (j, t) in truth.iter().enumerate() {
        let slice: Vec<&&DescriptorRow> = quad.iter().filter(|r| r.normal == j).collect();
        let pfloor: Vec<f64> = slice.iter().map(|r| r.floor.0).collect();
        let perr: Option<Vec<f64>> = slice.iter().map(|r| principal_error(&r.report, t)).collect();
        if let Some(perr) = perr {
            principal_slope = principal_slope.min(loglog_slope(&eps, &perr, &pfloor).slope);
        }
    }
    // the scalar curvature of the whole neighbourhood is the sum over normals
    let total = curvature_summary(&sff).scalar;
    let (rerr, sfloor): (Vec<f64>, Vec<f64>) = eps
        .iter()
        .map(|&e| {
            let at: Vec<&&DescriptorRow> = quad.iter().filter(|r| r.eps == e).collect();
            let est: f64 = at.iter().map(|r| r.report.scalar_curvature).sum();
            (est - total, at.iter().map(|r| r.floor.1).sum::<f64>())
        })
        .unzip();
    let scalar_slope = loglog_slope(&eps, &rerr, &sfloor).slope;
    // per-normal principal values are consistent only for hypersurfaces
    if k == 1 {
        checks.push(Check::report("principal_slope", principal_slope).at_least(cfg.assertions.descriptor));
    }
    checks.push(Check::report("scalar_curvature_slope", scalar_slope));
    Ok(DescriptorTable {
        config: cfg.clone(),
        n,
        truth,
        rows,
        checks,
    })
}

pub fn run_descriptors(cfg: &ExperimentConfig) -> Result<DescriptorTable, RunError> {
    let table = descriptors(cfg)?;
    let failed = failures(&table.checks);
    if failed.is_empty() {
        Ok(table)
    } else {
        Err(RunError::Assertion(failed))
    }
}

/// Sphere-integral constants for each dimension, optionally with a Monte-Carlo
/// cross-check of every monomial up to degree 6.
pub fn constants_csv(dims: &[usize], mc_samples: usize, seed: u64) -> Result<String, RunError> {
    let mut out = format!("# intinv {VERSION} constants\n# mc_samples {mc_samples}\n# seed {seed}\n");
    out.push_str("n,c2,c22,c4,c222,c24,c6\n");
    for &n in dims {
        let c = SphereConstants::new(n)?;
        writeln!(out, "{n},{},{},{},{},{},{}", c.c2, c.c22, c.c4, c.c222, c.c24, c.c6).expect("writing to a string");
    }
    if mc_samples > 0 {
        out.push_str("# monte carlo\nn,pattern,exact,estimate,std_error,z\n");
        for &n in dims {
            let pats = patterns(n, 6);
            let est = mc_sphere_integrals(n, &pats, mc_samples, seed)?;
            for (p, e) in pats.iter().zip(&est) {
                let exact = monomial_sphere_integral(n, p)?;
                let z = if e.std_error > 0.0 { (e.value - exact) / e.std_error } else { 0.0 };
                writeln!(out, "{n},{p},{exact},{},{},{z}", e.value, e.std_error).expect("writing to a string");
            }
        }
    }
    Ok(out)
}

/// Quadrature moments at one scale next to the predictions, as `quantity,index,quadrature,prediction,error`.
pub fn moments_csv(cfg: &ExperimentConfig, eps: f64) -> Result<String, RunError> {
    let chart = load_chart(cfg)?;
    chart.check_scale(eps)?;
    let curv = curvature_summary(&second_fundamental_form(&chart)?);
    let m = domain_moments(&chart, &domain_spec(cfg.kind, eps), &cfg.quadrature)?;
    let eig = sym_eig(m.covariance())?;
    let err = m.quad_error.as_ref().expect("quadrature attaches errors");
    let pred = predict_eigenvalues(&curv, eps, cfg.kind);
    let bp = predict_barycenter(&curv, eps, cfg.kind);

    let mut out = header(cfg, "moments");
    writeln!(out, "# eps {eps}\nquantity,index,quadrature,prediction,error").expect("writing to a string");
    let mut row = |q: &str, i: usize, v: f64, p: f64, e: f64| {
        writeln!(out, "{q},{i},{v},{p},{e}").expect("writing to a string");
    };
    row("volume", 0, m.volume, predict_volume(&curv, eps, cfg.kind), err.volume);
    for i in 0..m.ambient_dim() {
        row("barycenter", i, m.barycenter[i], bp[i], err.barycenter[i]);
    }
    let pv = pred.all();
    for i in 0..eig.len() {
        row("eigenvalue", i, eig.values[i], pv[i], err.covariance.amax());
    }
    let c = m.covariance();
    for a in 0..c.nrows() {
        for b in a..c.ncols() {
            row("covariance", a * c.ncols() + b, c[(a, b)], f64::NAN, err.covariance[(a, b)]);
        }
    }
    Ok(out)
}

/// Moments and descriptors of one point sample, as CSV.
pub fn pointcloud_csv(
    cfg: &ExperimentConfig,
    sample: &crate::pointcloud::PointSample,
    center: &[f64],
    eps: f64,
    n: usize,
) -> Result<String, RunError> {
    let cloud = estimate_descriptors(sample, center, eps, n, cfg.kind)?;
    let mut out = header(cfg, "pointcloud");
    writeln!(out, "# points {}\n# eps {eps}\n# scale_ratio {}", sample.len(), cloud.scale_ratio).expect("writing to a string");
    let m = &cloud.moments;
    let eig = sym_eig(m.covariance())?;
    let se = m.std_error.as_ref().expect("sample moments carry standard errors");
    out.push_str("quantity,index,value,std_error\n");
    for i in 0..m.ambient_dim() {
        writeln!(out, "barycenter,{i},{},{}", m.barycenter[i], se.barycenter[i]).expect("writing to a string");
    }
    for i in 0..eig.len() {
        writeln!(out, "eigenvalue,{i},{},", eig.values[i]).expect("writing to a string");
    }
    for (j, r) in cloud.reports.iter().enumerate() {
        writeln!(out, "scalar_curvature_n{j},0,{},", r.scalar_curvature).expect("writing to a string");
        writeln!(out, "mean_curvature_n{j},0,{},", r.mean_curvature).expect("writing to a string");
        if let Some(v) = match &r.principal {
            PrincipalValues::Signed(v) | PrincipalValues::Squared(v) => Some(v),
            PrincipalValues::Omitted => None,
        } {
            let name = if r.kind == Kind::Spherical { "kappa" } else { "kappa_sq" };
            for (i, x) in v.iter().enumerate() {
                writeln!(out, "{name}_n{j},{i},{x},").expect("writing to a string");
            }
        }
    }
    writeln!(out, "scalar_curvature,0,{},", cloud.scalar_curvature).expect("writing to a string");
    if let Some(g) = cloud.gauss_scalar {
        writeln!(out, "gauss_scalar,0,{g},").expect("writing to a string");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::from_settings(&Settings::defaults().merge(&Settings::parse(text).unwrap())).unwrap()
    }

    #[test]
    fn plane_sweep_is_exact() {
        let c = cfg("[manifold]\nid = plane\n[domain]\nkind = cyl\neps_count = 4\n[assert]\nvolume_slope = 3.5");
        let r = run_sweep(&c).unwrap();
        assert!(r.check("volume_slope").unwrap().value.is_infinite());
        let csv = r.to_csv();
        assert!(csv.starts_with("# intinv "));
        assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 5);
        assert_eq!(csv, run_sweep(&c).unwrap().to_csv());
    }

    #[test]
    fn ceiling_maps_to_exit_three() {
        let c = cfg("[manifold]\nid = paraboloid(1,2)\n[domain]\neps = 0.6, 0.1");
        let e = sweep(&c).unwrap_err();
        assert_eq!(e.exit_code(), 3);
        assert!(e.to_string().contains("paraboloid"));
    }

    #[test]
    fn unmet_threshold_is_exit_one() {
        let c = cfg("[manifold]\nid = paraboloid(1,2)\n[domain]\neps_max = 0.2\neps_count = 4\n[assert]\nvolume_slope = 1e9");
        assert_eq!(run_sweep(&c).unwrap_err().exit_code(), 1);
    }

    #[test]
    fn plane_descriptors_are_zero() {
        let c = cfg("[manifold]\nid = plane\n[domain]\nkind = cyl\neps_count = 3");
        let t = descriptors(&c).unwrap();
        for r in &t.rows {
            assert!(r.report.scalar_curvature.abs() < 1e-9);
            assert!(r.report.principal.squares().unwrap().iter().all(|v| v.abs() < 1e-9));
        }
    }

    #[test]
    fn constants_table() {
        let csv = constants_csv(&[2, 3], 0, 0).unwrap();
        assert!(csv.contains("\n2,3.14159"));
    }
}
