//! Graph charts of embedded submanifolds and their curvature tensors at the
//! chart origin.
//!
//! A chart represents an `n`-manifold in `R^{n+k}` as `x -> (x, f(x))` with
//! `f(0) = 0` and `grad f(0) = 0`, so the coordinate basis is orthonormal at
//! the origin and the second fundamental form is read off the Hessians of `f`.
//! Everything downstream (the Weingarten operators, Ricci operator, scalar
//! curvature and the traces of the third fundamental form) is assembled from
//! those Hessians with the ambient curvature fixed to zero.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Tolerance on `|f(0)|` at chart construction.
const CENTER_VALUE_TOL: f64 = 1e-10;
/// Tolerance on `|grad f(0)|` at chart construction.
const CENTER_GRADIENT_TOL: f64 = 1e-7;

/// Normal-coordinate functions `f = (f^1, ..., f^k)` of a graph chart.
pub trait GraphFunction: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn codim(&self) -> usize;

    fn eval(&self, x: &[f64], out: &mut [f64]);

    /// Writes `d f^j / d x^mu` into row `j`, column `mu` of `jac` (`k x n`).
    ///
    /// The default uses central differences.
    fn jacobian(&self, x: &[f64], jac: &mut DMatrix<f64>) {
        central_jacobian(self, x, jac)
    }

    /// Analytic Hessians of each `f^j` at the origin, when known.
    fn hessians_at_origin(&self) -> Option<Vec<DMatrix<f64>>> {
        None
    }

    /// Radius of the tangent ball on which `f` is defined.
    fn domain_radius(&self) -> f64 {
        f64::INFINITY
    }
}

fn central_jacobian<F: GraphFunction + ?Sized>(f: &F, x: &[f64], jac: &mut DMatrix<f64>) {
    let n = f.dim();
    let k = f.codim();
    let mut xp = x.to_vec();
    let mut plus = vec![0.0; k];
    let mut minus = vec![0.0; k];
    for mu in 0..n {
        let h = f64::EPSILON.cbrt() * x[mu].abs().max(1.0);
        xp[mu] = x[mu] + h;
        f.eval(&xp, &mut plus);
        xp[mu] = x[mu] - h;
        f.eval(&xp, &mut minus);
        xp[mu] = x[mu];
        for j in 0..k {
            jac[(j, mu)] = (plus[j] - minus[j]) / (2.0 * h);
        }
    }
}

/// Step used for second differences at the origin.
pub fn default_hessian_step() -> f64 {
    f64::EPSILON.powf(0.25)
}

/// Central-difference Hessians of every `f^j` at the origin.
pub fn finite_difference_hessians<F: GraphFunction + ?Sized>(f: &F, h: f64) -> Vec<DMatrix<f64>> {
    let n = f.dim();
    let k = f.codim();
    let mut x = vec![0.0; n];
    let mut f0 = vec![0.0; k];
    f.eval(&x, &mut f0);
    let mut hess = vec![DMatrix::zeros(n, n); k];

    let at = |a: usize, sa: f64, b: Option<(usize, f64)>, x: &mut [f64], out: &mut [f64]| {
        x.iter_mut().for_each(|v| *v = 0.0);
        x[a] += sa * h;
        if let Some((b, sb)) = b {
            x[b] += sb * h;
        }
        f.eval(x, out);
    };
    let mut p = vec![0.0; k];
    let mut m = vec![0.0; k];
    let mut q = vec![0.0; k];
    for a in 0..n {
        at(a, 1.0, None, &mut x, &mut p);
        at(a, -1.0, None, &mut x, &mut m);
        for j in 0..k {
            hess[j][(a, a)] = (p[j] - 2.0 * f0[j] + m[j]) / (h * h);
        }
        for b in (a + 1)..n {
            // mixed partial from the four diagonal neighbours
            let mut acc = vec![0.0; k];
            for (sa, sb, w) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
                at(a, sa, Some((b, sb)), &mut x, &mut q);
                for j in 0..k {
                    acc[j] += w * q[j];
                }
            }
            for j in 0..k {
                let v = acc[j] / (4.0 * h * h);
                hess[j][(a, b)] = v;
                hess[j][(b, a)] = v;
            }
        }
    }
    hess
}

/// The flat chart `f = 0`.
#[derive(Debug, Clone)]
pub struct Plane {
    pub n: usize,
    pub k: usize,
}

impl GraphFunction for Plane {
    fn dim(&self) -> usize {
        self.n
    }
    fn codim(&self) -> usize {
        self.k
    }
    fn eval(&self, _x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
    }
    fn jacobian(&self, _x: &[f64], jac: &mut DMatrix<f64>) {
        jac.fill(0.0);
    }
    fn hessians_at_origin(&self) -> Option<Vec<DMatrix<f64>>> {
        Some(vec![DMatrix::zeros(self.n, self.n); self.k])
    }
}

/// Hypersurface `f = sum_i a_i x_i^2 / 2`.
#[derive(Debug, Clone)]
pub struct Paraboloid {
    pub coeffs: Vec<f64>,
}

impl GraphFunction for Paraboloid {
    fn dim(&self) -> usize {
        self.coeffs.len()
    }
    fn codim(&self) -> usize {
        1
    }
    fn eval(&self, x: &[f64], out: &mut [f64]) {
        out[0] = 0.5 * self.coeffs.iter().zip(x).map(|(a, v)| a * v * v).sum::<f64>();
    }
    fn jacobian(&self, x: &[f64], jac: &mut DMatrix<f64>) {
        for (mu, (a, v)) in self.coeffs.iter().zip(x).enumerate() {
            jac[(0, mu)] = a * v;
        }
    }
    fn hessians_at_origin(&self) -> Option<Vec<DMatrix<f64>>> {
        Some(vec![DMatrix::from_diagonal(&DVector::from_vec(self.coeffs.clone()))])
    }
}

/// Lower cap of the round sphere of radius `R` through the origin,
/// `f = R - sqrt(R^2 - |x|^2)`, written in a cancellation-free form.
#[derive(Debug, Clone)]
pub struct Sphere {
    pub radius: f64,
    pub n: usize,
}

impl GraphFunction for Sphere {
    fn dim(&self) -> usize {
        self.n
    }
    fn codim(&self) -> usize {
        1
    }
    fn eval(&self, x: &[f64], out: &mut [f64]) {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let root = (self.radius * self.radius - r2).sqrt();
        out[0] = r2 / (self.radius + root);
    }
    fn jacobian(&self, x: &[f64], jac: &mut DMatrix<f64>) {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let root = (self.radius * self.radius - r2).sqrt();
        for (mu, v) in x.iter().enumerate() {
            jac[(0, mu)] = v / root;
        }
    }
    fn hessians_at_origin(&self) -> Option<Vec<DMatrix<f64>>> {
        Some(vec![DMatrix::identity(self.n, self.n) / self.radius])
    }
    fn domain_radius(&self) -> f64 {
        self.radius
    }
}

/// General quadratic chart `f^j = x^T H_j x / 2` with arbitrary symmetric slices.
#[derive(Debug, Clone)]
pub struct Quadratic {
    slices: Vec<DMatrix<f64>>,
}

impl Quadratic {
    pub fn new(slices: Vec<DMatrix<f64>>) -> Result<Self> {
        let n = check_slices(&slices)?;
        if n == 0 {
            return Err(Error::ZeroDimension);
        }
        Ok(Self { slices })
    }
}

impl GraphFunction for Quadratic {
    fn dim(&self) -> usize {
        self.slices[0].nrows()
    }
    fn codim(&self) -> usize {
        self.slices.len()
    }
    fn eval(&self, x: &[f64], out: &mut [f64]) {
        let n = self.dim();
        for (j, h) in self.slices.iter().enumerate() {
            let mut acc = 0.0;
            for a in 0..n {
                for b in 0..n {
                    acc += h[(a, b)] * x[a] * x[b];
                }
            }
            out[j] = 0.5 * acc;
        }
    }
    fn jacobian(&self, x: &[f64], jac: &mut DMatrix<f64>) {
        let n = self.dim();
        for (j, h) in self.slices.iter().enumerate() {
            for mu in 0..n {
                jac[(j, mu)] = (0..n).map(|b| h[(mu, b)] * x[b]).sum();
            }
        }
    }
    fn hessians_at_origin(&self) -> Option<Vec<DMatrix<f64>>> {
        Some(self.slices.clone())
    }
}

/// Chart whose normal functions are user expressions; derivatives by finite differences.
#[derive(Debug, Clone)]
pub struct ExprGraph {
    n: usize,
    exprs: Vec<crate::expr::Expr>,
}

impl ExprGraph {
    pub fn parse(n: usize, sources: &[&str]) -> Result<Self> {
        if n == 0 || sources.is_empty() {
            return Err(Error::ZeroDimension);
        }
        let exprs = sources
            .iter()
            .map(|s| crate::expr::Expr::parse(s, n))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n, exprs })
    }
}

impl GraphFunction for ExprGraph {
    fn dim(&self) -> usize {
        self.n
    }
    fn codim(&self) -> usize {
        self.exprs.len()
    }
    fn eval(&self, x: &[f64], out: &mut [f64]) {
        for (o, e) in out.iter_mut().zip(&self.exprs) {
            *o = e.eval(x);
        }
    }
}

fn check_slices(slices: &[DMatrix<f64>]) -> Result<usize> {
    let first = slices.first().ok_or(Error::ZeroDimension)?;
    let n = first.nrows();
    for s in slices {
        if s.nrows() != n || s.ncols() != n {
            return Err(Error::Dimension(format!(
                "slice is {}x{}, expected {n}x{n}",
                s.nrows(),
                s.ncols()
            )));
        }
        let asym = (s - s.transpose()).amax();
        if asym > 1e-10 * s.amax().max(1.0) {
            return Err(Error::NotSymmetric(asym));
        }
    }
    Ok(n)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HessianMode {
    Analytic,
    FiniteDifference { step: f64 },
}

/// A validated graph chart together with how its Hessians are obtained.
#[derive(Clone)]
pub struct ManifoldChart {
    func: Arc<dyn GraphFunction>,
    mode: HessianMode,
    label: String,
}

impl fmt::Debug for ManifoldChart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ManifoldChart")
            .field("label", &self.label)
            .field("n", &self.dim())
            .field("k", &self.codim())
            .field("mode", &self.mode)
            .finish()
    }
}

impl ManifoldChart {
    /// Wraps `func`, checking `f(0) = 0` and `grad f(0) = 0`.
    ///
    /// Analytic Hessians are used when the function provides them.
    pub fn new(func: impl GraphFunction + 'static, label: impl Into<String>) -> Result<Self> {
        let func: Arc<dyn GraphFunction> = Arc::new(func);
        let n = func.dim();
        let k = func.codim();
        if n == 0 || k == 0 {
            return Err(Error::ZeroDimension);
        }
        let mut value = vec![0.0; k];
        func.eval(&vec![0.0; n], &mut value);
        let mut jac = DMatrix::zeros(k, n);
        func.jacobian(&vec![0.0; n], &mut jac);
        let value_norm = value.iter().map(|v| v * v).sum::<f64>().sqrt();
        let grad_norm = jac.norm();
        if !(value_norm <= CENTER_VALUE_TOL && grad_norm <= CENTER_GRADIENT_TOL) {
            return Err(Error::NotCentered {
                value: value_norm,
                gradient: grad_norm,
            });
        }
        let mode = if func.hessians_at_origin().is_some() {
            HessianMode::Analytic
        } else {
            HessianMode::FiniteDifference {
                step: default_hessian_step(),
            }
        };
        Ok(Self {
            func,
            mode,
            label: label.into(),
        })
    }

    pub fn with_hessian_mode(mut self, mode: HessianMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn relabel(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.func.dim()
    }

    pub fn codim(&self) -> usize {
        self.func.codim()
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim() + self.codim()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn hessian_mode(&self) -> HessianMode {
        self.mode
    }

    pub fn function(&self) -> &dyn GraphFunction {
        self.func.as_ref()
    }

    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        self.func.eval(x, out)
    }

    pub fn jacobian(&self, x: &[f64], jac: &mut DMatrix<f64>) {
        self.func.jacobian(x, jac)
    }

    /// Embedded point `(x, f(x))`.
    pub fn point(&self, x: &[f64]) -> DVector<f64> {
        let n = self.dim();
        let mut p = DVector::zeros(self.ambient_dim());
        p.rows_mut(0, n).copy_from_slice(x);
        let mut f = vec![0.0; self.codim()];
        self.eval(x, &mut f);
        p.rows_mut(n, self.codim()).copy_from_slice(&f);
        p
    }

    /// `sqrt(det g(x))` with `g = I + J^T J`, evaluated through the smaller Gram matrix.
    pub fn volume_density(&self, x: &[f64]) -> f64 {
        let n = self.dim();
        let k = self.codim();
        let mut jac = DMatrix::zeros(k, n);
        self.jacobian(x, &mut jac);
        volume_density_from_jacobian(&jac)
    }

    pub fn domain_radius(&self) -> f64 {
        self.func.domain_radius()
    }

    /// Largest scale at which domains around the origin are accepted:
    /// one curvature radius `1/max|kappa|`, capped by the chart's own domain.
    pub fn validity_ceiling(&self) -> Result<f64> {
        let sff = second_fundamental_form(self)?;
        let rho = sff.spectral_radius();
        let curvature_cap = if rho > 0.0 { 1.0 / rho } else { f64::INFINITY };
        Ok(curvature_cap.min(self.domain_radius()))
    }

    pub fn check_scale(&self, eps: f64) -> Result<()> {
        if !(eps > 0.0) {
            return Err(Error::NonPositiveRadius(eps));
        }
        let ceiling = self.validity_ceiling()?;
        if eps > ceiling {
            return Err(Error::AboveCeiling {
                manifold: self.label.clone(),
                eps,
                ceiling,
            });
        }
        Ok(())
    }
}

pub(crate) fn volume_density_from_jacobian(jac: &DMatrix<f64>) -> f64 {
    let (k, n) = jac.shape();
    if k == 1 {
        return (1.0 + jac.norm_squared()).sqrt();
    }
    let gram = if k <= n {
        DMatrix::identity(k, k) + jac * jac.transpose()
    } else {
        DMatrix::identity(n, n) + jac.transpose() * jac
    };
    gram.determinant().sqrt()
}

/// Components `kappa[i][(a, b)]` of the second fundamental form at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondFundamentalForm {
    kappa: Vec<DMatrix<f64>>,
}

impl SecondFundamentalForm {
    pub fn new(kappa: Vec<DMatrix<f64>>) -> Result<Self> {
        check_slices(&kappa)?;
        // symmetrize away round-off from finite differences
        let kappa = kappa.into_iter().map(|s| (&s + s.transpose()) * 0.5).collect();
        Ok(Self { kappa })
    }

    pub fn zero(n: usize, k: usize) -> Self {
        Self {
            kappa: vec![DMatrix::zeros(n, n); k],
        }
    }

    pub fn dim(&self) -> usize {
        self.kappa[0].nrows()
    }

    pub fn codim(&self) -> usize {
        self.kappa.len()
    }

    /// Weingarten matrix `S_j` of the `j`-th coordinate normal.
    pub fn slice(&self, j: usize) -> &DMatrix<f64> {
        &self.kappa[j]
    }

    pub fn slices(&self) -> &[DMatrix<f64>] {
        &self.kappa
    }

    /// Weingarten matrix along an arbitrary normal vector `sum_j v^j n_j`.
    pub fn weingarten(&self, normal: &DVector<f64>) -> DMatrix<f64> {
        let n = self.dim();
        self.kappa
            .iter()
            .zip(normal.iter())
            .fold(DMatrix::zeros(n, n), |acc, (s, c)| acc + s * *c)
    }

    /// `II(x, y)` as a vector of normal components.
    pub fn apply(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.codim(), self.kappa.iter().map(|s| x.dot(&(s * y))))
    }

    /// `<R(e_a, e_b) e_c, e_d>` from the Gauss equation with flat ambient space.
    pub fn riemann(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.kappa
            .iter()
            .map(|s| s[(a, d)] * s[(b, c)] - s[(a, c)] * s[(b, d)])
            .sum()
    }

    /// Largest absolute principal curvature over all normal slices.
    pub fn spectral_radius(&self) -> f64 {
        self.kappa
            .iter()
            .map(|s| {
                s.clone()
                    .symmetric_eigenvalues()
                    .iter()
                    .fold(0.0_f64, |m, v| m.max(v.abs()))
            })
            .fold(0.0, f64::max)
    }
}

/// Hessians of the chart functions at the origin.
pub fn second_fundamental_form(chart: &ManifoldChart) -> Result<SecondFundamentalForm> {
    let slices = match chart.hessian_mode() {
        HessianMode::Analytic => chart
            .function()
            .hessians_at_origin()
            .unwrap_or_else(|| finite_difference_hessians(chart.function(), default_hessian_step())),
        HessianMode::FiniteDifference { step } => finite_difference_hessians(chart.function(), step),
    };
    SecondFundamentalForm::new(slices)
}

/// `H^j = trace(S_j)`.
pub fn mean_curvature(sff: &SecondFundamentalForm) -> DVector<f64> {
    DVector::from_iterator(sff.codim(), sff.slices().iter().map(|s| s.trace()))
}

/// Curvature quantities at the chart origin, ambient curvature fixed to zero.
#[derive(Debug, Clone)]
pub struct CurvatureSummary {
    pub n: usize,
    pub k: usize,
    /// Mean curvature vector `H` in normal coordinates.
    pub mean_curvature: DVector<f64>,
    /// Weingarten matrix `S_H` along the mean curvature vector.
    pub weingarten_h: DMatrix<f64>,
    pub ricci: DMatrix<f64>,
    pub scalar: f64,
    /// Normal trace of the third fundamental form, an `n x n` operator.
    pub tr_perp_iii: DMatrix<f64>,
    /// Tangent trace of the third fundamental form, a `k x k` operator.
    pub tr_par_iii: DMatrix<f64>,
    pub tr_iii: f64,
    pub ambient_ricci: DMatrix<f64>,
    pub ambient_scalar: f64,
}

impl CurvatureSummary {
    pub fn mean_curvature_sq(&self) -> f64 {
        self.mean_curvature.norm_squared()
    }
}

pub fn curvature_summary(sff: &SecondFundamentalForm) -> CurvatureSummary {
    let n = sff.dim();
    let k = sff.codim();
    let h = mean_curvature(sff);
    let weingarten_h = sff.weingarten(&h);

    // Ricci operator by contracting the Gauss-equation Riemann tensor.
    let ricci = DMatrix::from_fn(n, n, |a, b| (0..n).map(|mu| sff.riemann(mu, a, b, mu)).sum());
    let scalar = ricci.trace();

    let tr_perp_iii = sff
        .slices()
        .iter()
        .fold(DMatrix::zeros(n, n), |acc, s| acc + s * s);
    let tr_par_iii = DMatrix::from_fn(k, k, |i, j| (sff.slice(i) * sff.slice(j)).trace());
    let tr_iii = tr_perp_iii.trace();

    CurvatureSummary {
        n,
        k,
        mean_curvature: h,
        weingarten_h,
        ricci,
        scalar,
        tr_perp_iii,
        tr_par_iii,
        tr_iii,
        ambient_ricci: DMatrix::zeros(n, n),
        ambient_scalar: 0.0,
    }
}

/// `<III(x, y) n_i, n_j> = <S_j x, S_i y>` as a `k x k` matrix.
pub fn third_form_operator(sff: &SecondFundamentalForm, x: &DVector<f64>, y: &DVector<f64>) -> DMatrix<f64> {
    let k = sff.codim();
    let sx: Vec<DVector<f64>> = sff.slices().iter().map(|s| s * x).collect();
    let sy: Vec<DVector<f64>> = sff.slices().iter().map(|s| s * y).collect();
    DMatrix::from_fn(k, k, |i, j| sx[j].dot(&sy[i]))
}

/// Antisymmetric part of `III(e_mu, e_nu)`, which equals the normal curvature
/// `R_perp(e_mu, e_nu)` when the ambient space is flat.
pub fn ricci_asymmetry(sff: &SecondFundamentalForm, mu: usize, nu: usize) -> Result<DMatrix<f64>> {
    let n = sff.dim();
    for idx in [mu, nu] {
        if idx >= n {
            return Err(Error::IndexOutOfRange { index: idx, dim: n });
        }
    }
    let e = |i: usize| {
        let mut v = DVector::zeros(n);
        v[i] = 1.0;
        v
    };
    let iii = third_form_operator(sff, &e(mu), &e(nu));
    Ok(&iii - iii.transpose())
}
