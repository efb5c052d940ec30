//! Bringing your own surface: implement `GraphFunction` for a chart with
//! analytic derivatives, or write the graph as an expression.
//!
//! Run with `cargo run --release --example custom_chart`.

use intinv::geom::HessianMode;
use intinv::moments::{domain_moments, DomainSpec, QuadratureConfig};
use intinv::predictions::descriptors::descriptors_from_invariants;
use intinv::predictions::Kind;
use intinv::spectra::sym_eig;
use intinv::{curvature_summary, second_fundamental_form, GraphFunction, ManifoldChart};
use nalgebra::DMatrix;

/// Monkey saddle `f = (x^3 - 3 x y^2) / 3` plus a mild bowl `(x^2 + y^2) / 4`.
#[derive(Debug)]
struct Saddle;

impl GraphFunction for Saddle {
    fn dim(&self) -> usize {
        2
    }
    fn codim(&self) -> usize {
        1
    }
    fn eval(&self, x: &[f64], out: &mut [f64]) {
        let (a, b) = (x[0], x[1]);
        out[0] = (a * a * a - 3.0 * a * b * b) / 3.0 + (a * a + b * b) / 4.0;
    }
    fn jacobian(&self, x: &[f64], jac: &mut DMatrix<f64>) {
        let (a, b) = (x[0], x[1]);
        jac[(0, 0)] = a * a - b * b + a / 2.0;
        jac[(0, 1)] = -2.0 * a * b + b / 2.0;
    }
    fn hessians_at_origin(&self) -> Option<Vec<DMatrix<f64>>> {
        Some(vec![DMatrix::identity(2, 2) * 0.5])
    }
}

fn main() -> intinv::Result<()> {
    let chart = ManifoldChart::new(Saddle, "saddle")?;
    let fd = chart.clone().with_hessian_mode(HessianMode::FiniteDifference { step: 1e-3 });
    let exact = curvature_summary(&second_fundamental_form(&chart)?);
    let approx = curvature_summary(&second_fundamental_form(&fd)?);
    println!("scalar curvature {} (finite differences {:.9})", exact.scalar, approx.scalar);

    // the same surface as an expression chart
    let expr = intinv::parse_manifold("graph-expr(2; (x^3 - 3*x*y^2)/3 + (x^2 + y^2)/4)")?;
    let quad = QuadratureConfig::default();
    for c in [&chart, &expr] {
        let m = domain_moments(c, &DomainSpec::spherical(0.05), &quad)?;
        let r = descriptors_from_invariants(&m, &sym_eig(m.covariance())?, 0.05, 2, Kind::Spherical)?;
        println!("{:<40} R {:.5}  H {:.5}", c.label(), r.scalar_curvature, r.mean_curvature);
    }
    Ok(())
}
