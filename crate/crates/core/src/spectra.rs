//! Symmetric eigendecomposition, the block perturbation expansion and
//! coefficient extraction from scale sweeps.

use nalgebra::{DMatrix, DVector};
use std::cmp::Ordering;

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-10;
const MAX_SWEEPS: usize = 64;

/// Eigenpairs sorted by descending eigenvalue, eigenvectors as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl EigenDecomposition {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn vector(&self, i: usize) -> DVector<f64> {
        self.vectors.column(i).into_owned()
    }

    /// `V diag(values) V^T`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.vectors * DMatrix::from_diagonal(&self.values) * self.vectors.transpose()
    }

    /// Eigenvalues in ascending order.
    pub fn ascending_values(&self) -> Vec<f64> {
        self.values.iter().rev().copied().collect()
    }
}

/// Full spectrum of a symmetric matrix by cyclic Jacobi rotations.
///
/// Off-diagonal entries are annihilated until each is negligible relative to
/// the geometric mean of its diagonal pair, which keeps small eigenvalues
/// accurate relative to themselves rather than to the matrix norm.
pub fn sym_eig(m: &DMatrix<f64>) -> Result<EigenDecomposition> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::Dimension(format!("matrix is {}x{}", n, m.ncols())));
    }
    let asym = (m - m.transpose()).amax();
    if asym > SYMMETRY_TOL * m.amax() {
        return Err(Error::NotSymmetric(asym));
    }
    let mut a = (m + m.transpose()) * 0.5;
    let mut v = DMatrix::<f64>::identity(n, n);

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                if apq.abs() <= f64::EPSILON * (app * aqq).abs().sqrt() {
                    a[(p, q)] = 0.0;
                    a[(q, p)] = 0.0;
                    continue;
                }
                rotated = true;
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + theta.hypot(1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / t.hypot(1.0);
                let s = t * c;
                for r in 0..n {
                    let arp = a[(r, p)];
                    let arq = a[(r, q)];
                    a[(r, p)] = c * arp - s * arq;
                    a[(r, q)] = s * arp + c * arq;
                }
                for r in 0..n {
                    let apr = a[(p, r)];
                    let aqr = a[(q, r)];
                    a[(p, r)] = c * apr - s * aqr;
                    a[(q, r)] = s * apr + c * aqr;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                a[(p, p)] = app - t * apq;
                a[(q, q)] = aqq + t * apq;
                for r in 0..n {
                    let vrp = v[(r, p)];
                    let vrq = v[(r, q)];
                    v[(r, p)] = c * vrp - s * vrq;
                    v[(r, q)] = s * vrp + c * vrq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut pairs: Vec<(f64, DVector<f64>)> = (0..n)
        .map(|i| (a[(i, i)], canonical_sign(v.column(i).into_owned())))
        .collect();
    pairs.sort_by(|x, y| match y.0.total_cmp(&x.0) {
        Ordering::Equal => lexicographic(&y.1, &x.1),
        o => o,
    });
    let values = DVector::from_iterator(n, pairs.iter().map(|p| p.0));
    let mut vectors = DMatrix::zeros(n, n);
    for (i, (_, vec)) in pairs.iter().enumerate() {
        vectors.set_column(i, vec);
    }
    Ok(EigenDecomposition { values, vectors })
}

fn canonical_sign(mut v: DVector<f64>) -> DVector<f64> {
    let pivot = v.iter().copied().fold(0.0_f64, |best, x| if x.abs() > best.abs() { x } else { best });
    if pivot < 0.0 {
        v.neg_mut();
    }
    v
}

fn lexicographic(a: &DVector<f64>, b: &DVector<f64>) -> Ordering {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| *o != Ordering::Equal)
        .unwrap_or(Ordering::Equal)
}

/// Largest principal angle between the column spans of `a` and `b`.
pub fn subspace_angle(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let qa = a.clone().qr().q();
    let qb = b.clone().qr().q();
    let s = (qa.transpose() * qb).singular_values();
    let smallest = s.iter().copied().fold(f64::INFINITY, f64::min).clamp(0.0, 1.0);
    smallest.acos()
}

/// Angle between the lines spanned by two vectors.
pub fn line_angle(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let c = a.dot(b).abs() / (a.norm() * b.norm());
    // the arcsine form keeps resolution for nearly parallel lines
    let cross = (1.0 - c * c).max(0.0).sqrt();
    cross.atan2(c)
}

/// Blocks of `C(eps) = eps^2 diag(a I_n, 0) + eps^4 [[A, B], [B^T, Gamma]] + eps^6 E`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationBlocks {
    pub a: f64,
    pub tangent: DMatrix<f64>,
    pub coupling: DMatrix<f64>,
    pub normal: DMatrix<f64>,
    /// Optional higher-order remainder, `(n+k) x (n+k)` symmetric.
    pub remainder: Option<DMatrix<f64>>,
}

impl PerturbationBlocks {
    pub fn n(&self) -> usize {
        self.tangent.nrows()
    }

    pub fn k(&self) -> usize {
        self.normal.nrows()
    }

    pub fn assemble(&self, eps: f64) -> DMatrix<f64> {
        let n = self.n();
        let k = self.k();
        let e2 = eps * eps;
        let e4 = e2 * e2;
        let mut c = DMatrix::zeros(n + k, n + k);
        for i in 0..n {
            c[(i, i)] = self.a * e2;
        }
        let mut tangent = c.view_mut((0, 0), (n, n));
        tangent += &self.tangent * e4;
        c.view_mut((0, n), (n, k)).copy_from(&(&self.coupling * e4));
        c.view_mut((n, 0), (k, n)).copy_from(&(self.coupling.transpose() * e4));
        c.view_mut((n, n), (k, k)).copy_from(&(&self.normal * e4));
        if let Some(r) = &self.remainder {
            c += r * (e4 * e2);
        }
        c
    }
}

/// Second- and fourth-order eigenvalue coefficients and limit eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationPrediction {
    /// `a` for each of the first `n` eigenvalues, `0` for the last `k`.
    pub lambda2: Vec<f64>,
    /// Eigenvalues of `A` then of `Gamma`, each block descending.
    pub lambda4: Vec<f64>,
    /// Zero-padded eigenvectors of `A` and `Gamma`, as columns in the same order.
    pub limit_vectors: DMatrix<f64>,
}

/// Predicts the expansion of the eigenvalues of `C(eps)`. The coupling block
/// does not enter at this order and is not read.
pub fn perturbation_predict(blocks: &PerturbationBlocks) -> Result<PerturbationPrediction> {
    if blocks.a == 0.0 {
        return Err(Error::ZeroLeadingCoefficient);
    }
    let n = blocks.n();
    let k = blocks.k();
    let ea = sym_eig(&blocks.tangent)?;
    let eg = sym_eig(&blocks.normal)?;
    let mut limit_vectors = DMatrix::zeros(n + k, n + k);
    limit_vectors.view_mut((0, 0), (n, n)).copy_from(&ea.vectors);
    limit_vectors.view_mut((n, n), (k, k)).copy_from(&eg.vectors);
    let mut lambda2 = vec![blocks.a; n];
    lambda2.extend(std::iter::repeat_n(0.0, k));
    Ok(PerturbationPrediction {
        lambda2,
        lambda4: ea.values.iter().chain(eg.values.iter()).copied().collect(),
        limit_vectors,
    })
}

/// Richardson extrapolation to `h -> 0` of values `g(h_0 / 2^j)` whose error
/// is a power series in `h` starting at `h^1`.
pub fn richardson(values: &[f64]) -> f64 {
    let mut t = values.to_vec();
    for level in 1..t.len() {
        let f = 2f64.powi(level as i32);
        for j in (level..t.len()).rev() {
            t[j] = (f * t[j] - t[j - 1]) / (f - 1.0);
        }
    }
    *t.last().expect("at least one value")
}

/// Log-log slope of residuals against scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeEstimate {
    /// `+inf` when every residual sits at the rounding floor.
    pub slope: f64,
    pub r_squared: f64,
    pub points_used: usize,
}

impl SlopeEstimate {
    pub fn is_exact(&self) -> bool {
        self.slope == f64::INFINITY
    }

    pub fn at_least(&self, order: f64) -> bool {
        self.slope >= order
    }
}

/// Regression slope of `ln|residual|` on `ln eps`, skipping residuals at or below `floor`.
pub fn loglog_slope(eps: &[f64], residuals: &[f64], floor: &[f64]) -> SlopeEstimate {
    let pts: Vec<(f64, f64)> = eps
        .iter()
        .zip(residuals)
        .zip(floor)
        .filter(|((_, r), fl)| r.abs() > **fl && r.is_finite())
        .map(|((e, r), _)| (e.ln(), r.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return SlopeEstimate {
            slope: f64::INFINITY,
            r_squared: 1.0,
            points_used: pts.len(),
        };
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    SlopeEstimate {
        slope,
        r_squared,
        points_used: pts.len(),
    }
}

/// Least-squares fit of `value = sum_p c_p eps^p`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionFit {
    pub powers: Vec<i32>,
    pub coefficients: Vec<f64>,
    /// Order of the first neglected term, from residuals at the two largest scales
    /// against a refit on the small-scale half of the sweep.
    pub residual_slope: f64,
    /// Coefficient of determination of the weighted fit.
    pub r_squared: f64,
    /// Condition number of the column-equilibrated design.
    pub condition: f64,
}

impl ExpansionFit {
    pub fn coefficient(&self, power: i32) -> Option<f64> {
        self.powers.iter().position(|&p| p == power).map(|i| self.coefficients[i])
    }

    pub fn eval(&self, eps: f64) -> f64 {
        self.powers.iter().zip(&self.coefficients).map(|(&p, c)| c * eps.powi(p)).sum()
    }
}

const MAX_CONDITION: f64 = 1e10;

fn weighted_lsq(samples: &[(f64, f64)], powers: &[i32]) -> Result<(Vec<f64>, f64, f64)> {
    let pmin = *powers.iter().min().expect("powers nonempty");
    let rows = samples.len();
    let cols = powers.len();
    // each row divided by its leading-power magnitude, so small scales are not drowned out
    let mut design = DMatrix::from_fn(rows, cols, |i, j| samples[i].0.powi(powers[j] - pmin));
    let rhs = DVector::from_iterator(rows, samples.iter().map(|(e, v)| v / e.powi(pmin)));
    let col_norms: Vec<f64> = (0..cols).map(|j| design.column(j).norm()).collect();
    for (j, s) in col_norms.iter().enumerate() {
        if *s == 0.0 {
            return Err(Error::RankDeficient(f64::INFINITY));
        }
        design.column_mut(j).scale_mut(1.0 / s);
    }
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = smax / smin;
    if !(condition <= MAX_CONDITION) {
        return Err(Error::RankDeficient(condition));
    }
    let sol = svd.solve(&rhs, 0.0).map_err(|e| Error::InvalidSamples(e.to_string()))?;
    let coefficients: Vec<f64> = sol.iter().zip(&col_norms).map(|(c, s)| c / s).collect();

    let fitted = &design * &sol;
    let mean = rhs.mean();
    let ss_res = (&rhs - &fitted).norm_squared();
    let ss_tot: f64 = rhs.iter().map(|v| (v - mean).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok((coefficients, condition, r_squared))
}

/// Fits `value = sum_p c_p eps^p` over a decreasing scale sweep.
///
/// Residuals at rounding level give an infinite residual slope: the model is exact.
pub fn fit_expansion(samples: &[(f64, f64)], powers: &[i32]) -> Result<ExpansionFit> {
    if powers.is_empty() {
        return Err(Error::InvalidSamples("no powers requested".into()));
    }
    let needed = powers.len() + 2;
    if samples.len() < needed {
        return Err(Error::TooFewSamples {
            needed,
            got: samples.len(),
        });
    }
    if samples.iter().any(|(e, v)| !(e.is_finite() && *e > 0.0 && v.is_finite())) {
        return Err(Error::InvalidSamples("scales must be positive and values finite".into()));
    }
    if samples.windows(2).any(|w| !(w[1].0 < w[0].0)) {
        return Err(Error::InvalidSamples("scales must be strictly decreasing".into()));
    }

    let (coefficients, condition, r_squared) = weighted_lsq(samples, powers)?;

    // refit on the small-scale half, where the neglected terms matter least,
    // and watch the residual grow across the two largest scales
    let keep = (samples.len() / 2).max(powers.len() + 1).min(samples.len() - 2);
    let held = &samples[..2];
    let tail = &samples[samples.len() - keep..];
    let residual_slope = match weighted_lsq(tail, powers) {
        Ok((c, _, _)) => {
            let model = |e: f64| powers.iter().zip(&c).map(|(&p, ci)| ci * e.powi(p)).sum::<f64>();
            let res: Vec<f64> = held.iter().map(|(e, v)| v - model(*e)).collect();
            let floor: Vec<f64> = held.iter().map(|(_, v)| 64.0 * f64::EPSILON * v.abs()).collect();
            let eps: Vec<f64> = held.iter().map(|s| s.0).collect();
            loglog_slope(&eps, &res, &floor).slope
        }
        Err(_) => f64::NAN,
    };

    Ok(ExpansionFit {
        powers: powers.to_vec(),
        coefficients,
        residual_slope,
        r_squared,
        condition,
    })
}

/// `count` log-spaced scales from `hi` down to `lo`.
pub fn log_sweep(hi: f64, lo: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![hi];
    }
    let (a, b) = (hi.ln(), lo.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_spectra() {
        let e = sym_eig(&DMatrix::identity(3, 3)).unwrap();
        assert_eq!(e.values.as_slice(), &[1.0, 1.0, 1.0]);
        assert_eq!(e.vectors, DMatrix::identity(3, 3));

        let e = sym_eig(&DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0, 2.0]))).unwrap();
        assert_eq!(e.values.as_slice(), &[3.0, 2.0, 1.0]);
        assert_eq!(e.vector(1), DVector::from_vec(vec![0.0, 0.0, 1.0]));

        let e = sym_eig(&DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0])).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-15 && (e.values[1] - 1.0).abs() < 1e-15);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((e.vector(0) - DVector::from_vec(vec![r, r])).amax() < 1e-15);
        assert!(line_angle(&e.vector(1), &DVector::from_vec(vec![r, -r])) < 1e-15);
    }

    #[test]
    fn rejects_asymmetric() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(sym_eig(&m), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn small_eigenvalues_keep_relative_accuracy() {
        // graded matrix: eigenvalues ~1 and ~1e-20
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1e-10, 1e-10, 2e-20]);
        let e = sym_eig(&m).unwrap();
        assert!((e.values[1] - 1e-20).abs() < 1e-34);
    }

    #[test]
    fn perturbation_scalar_blocks() {
        let blocks = PerturbationBlocks {
            a: 1.0,
            tangent: DMatrix::from_element(1, 1, 2.0),
            coupling: DMatrix::from_element(1, 1, 3.0),
            normal: DMatrix::from_element(1, 1, 5.0),
            remainder: None,
        };
        let p = perturbation_predict(&blocks).unwrap();
        let eps = 1e-2;
        let num = sym_eig(&blocks.assemble(eps)).unwrap();
        let e2 = eps * eps;
        let pred = [p.lambda2[0] * e2 + p.lambda4[0] * e2 * e2, p.lambda4[1] * e2 * e2];
        assert!((num.values[0] / pred[0] - 1.0).abs() < 1e-6);
        // the coupling moves the normal eigenvalue by -B^2 eps^6 / a at the next order,
        // so the fourth-order prediction is only good to ~9 eps^2 / 5 relative here
        let shift = (num.values[1] - pred[1]) / e2.powi(3);
        assert!((shift + 9.0).abs() < 0.01, "{shift}");

        let louder = PerturbationBlocks {
            coupling: &blocks.coupling * 10.0,
            ..blocks.clone()
        };
        assert_eq!(perturbation_predict(&louder).unwrap(), p);
    }

    #[test]
    fn perturbation_zero_blocks() {
        let blocks = PerturbationBlocks {
            a: 1.5,
            tangent: DMatrix::zeros(2, 2),
            coupling: DMatrix::zeros(2, 1),
            normal: DMatrix::zeros(1, 1),
            remainder: None,
        };
        let p = perturbation_predict(&blocks).unwrap();
        assert_eq!(p.lambda2, vec![1.5, 1.5, 0.0]);
        assert_eq!(p.lambda4, vec![0.0; 3]);
        assert_eq!(p.limit_vectors, DMatrix::identity(3, 3));
        let zero_a = PerturbationBlocks { a: 0.0, ..blocks };
        assert!(matches!(perturbation_predict(&zero_a), Err(Error::ZeroLeadingCoefficient)));
    }

    #[test]
    fn richardson_removes_linear_and_quadratic_terms() {
        let g = |h: f64| 2.0 + 3.0 * h - 5.0 * h * h + 0.5 * h * h * h;
        let vals: Vec<f64> = (0..4).map(|j| g(0.1 / 2f64.powi(j))).collect();
        assert!((richardson(&vals) - 2.0).abs() < 1e-13);
    }

    #[test]
    fn exact_model_fit() {
        let eps = log_sweep(0.4, 0.05, 10);
        let samples: Vec<(f64, f64)> = eps.iter().map(|&e| (e, 3.0 * e * e + 7.0 * e.powi(4))).collect();
        let fit = fit_expansion(&samples, &[2, 4]).unwrap();
        assert!((fit.coefficients[0] - 3.0).abs() < 1e-9);
        assert!((fit.coefficients[1] - 7.0).abs() < 1e-9);
        assert!(fit.residual_slope.is_infinite());
        assert!(fit.r_squared > 1.0 - 1e-12);
    }

    #[test]
    fn residual_order_of_truncated_model() {
        let eps = log_sweep(0.3, 0.02, 12);
        let samples: Vec<(f64, f64)> = eps.iter().map(|&e| (e, e * e + e.powi(4) + e.powi(6))).collect();
        let fit = fit_expansion(&samples, &[2, 4]).unwrap();
        assert!((fit.residual_slope - 6.0).abs() < 0.3, "{}", fit.residual_slope);
    }

    #[test]
    fn fit_preconditions() {
        let s = vec![(0.4, 1.0), (0.3, 1.0), (0.2, 1.0)];
        assert!(matches!(fit_expansion(&s, &[2, 4]), Err(Error::TooFewSamples { .. })));
        let s = vec![(0.1, 1.0), (0.2, 1.0), (0.3, 1.0), (0.4, 1.0)];
        assert!(matches!(fit_expansion(&s, &[2]), Err(Error::InvalidSamples(_))));
        let narrow: Vec<(f64, f64)> = (0..6).map(|i| (1.0 - 1e-13 * i as f64, 1.0)).collect();
        assert!(matches!(fit_expansion(&narrow, &[2, 4]), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn slopes_and_sweeps() {
        let eps = log_sweep(0.3, 0.02, 12);
        assert_eq!(eps.len(), 12);
        assert!((eps[0] - 0.3).abs() < 1e-15 && (eps[11] - 0.02).abs() < 1e-15);
        let res: Vec<f64> = eps.iter().map(|e| 2.0 * e.powi(4)).collect();
        let s = loglog_slope(&eps, &res, &[0.0; 12]);
        assert!((s.slope - 4.0).abs() < 1e-12 && s.r_squared > 1.0 - 1e-12);
        let s = loglog_slope(&eps, &[0.0; 12], &[1e-16; 12]);
        assert!(s.is_exact());
    }
}
