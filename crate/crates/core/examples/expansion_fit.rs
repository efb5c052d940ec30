//! Recovering expansion coefficients and convergence orders from a scale sweep.
//!
//! Run with `cargo run --release --example expansion_fit`.

use intinv::moments::{domain_moments, DomainSpec, QuadratureConfig};
use intinv::predictions::{predict_volume, Kind};
use intinv::spectra::{fit_expansion, log_sweep, loglog_slope};
use intinv::sphere_quadrature::ball_volume;
use intinv::{curvature_summary, parse_manifold, second_fundamental_form};

fn main() -> intinv::Result<()> {
    let chart = parse_manifold("paraboloid(1,2)")?;
    let curv = curvature_summary(&second_fundamental_form(&chart)?);
    let eps = log_sweep(0.3, 0.02, 12);
    let quad = QuadratureConfig::default();

    let mut ratio = Vec::new();
    let mut residual = Vec::new();
    let mut floor = Vec::new();
    for &e in &eps {
        let m = domain_moments(&chart, &DomainSpec::spherical(e), &quad)?;
        let vn = ball_volume(2, e);
        ratio.push((e, m.volume / vn - 1.0));
        residual.push((m.volume - predict_volume(&curv, e, Kind::Spherical)) / vn);
        floor.push(m.quad_error.unwrap().volume / vn);
    }
    let fit = fit_expansion(&ratio, &[2, 4, 6])?;
    // (2 tr III - |H|^2) / (8 (n + 2)) = 1/32 for this paraboloid
    println!("eps^2 coefficient {:.6} (expected {:.6})", fit.coefficient(2).unwrap(), 1.0 / 32.0);
    println!("eps^4 coefficient {:.6}", fit.coefficient(4).unwrap());
    println!("fit condition {:.1e}, residual order {:.2}", fit.condition, fit.residual_slope);
    let s = loglog_slope(&eps, &residual, &floor);
    println!("volume residual slope {:.3} over {} points", s.slope, s.points_used);
    Ok(())
}
