//! Quadrature moments: closed forms, identities and the error estimate.

use intinv::moments::{domain_moments, DomainSpec, QuadratureConfig};
use intinv::parse_manifold;
use intinv::spectra::{log_sweep, loglog_slope};
use intinv::sphere_quadrature::ball_volume;

#[test]
fn plane_moments_are_closed_form() {
    let chart = parse_manifold("plane(3, 1)").unwrap();
    for eps in [1.0, 0.3, 0.01] {
        for spec in [DomainSpec::spherical(eps), DomainSpec::cylindrical(eps)] {
            let m = domain_moments(&chart, &spec, &QuadratureConfig::default()).unwrap();
            let v = ball_volume(3, eps);
            assert!((m.volume - v).abs() <= 1e-13 * v);
            assert!(m.barycenter.amax() <= 1e-15 * eps);
            for i in 0..3 {
                let want = v * eps * eps / 5.0;
                assert!((m.covariance()[(i, i)] - want).abs() <= 1e-13 * want);
            }
            assert!(m.covariance()[(3, 3)].abs() <= 1e-30);
        }
    }
}

#[test]
fn parallel_axis_identity_and_positivity() {
    for id in ["sphere", "paraboloid(1,2)", "codim2", "graph-expr(2; x*y + x^3)"] {
        let chart = parse_manifold(id).unwrap();
        for spec in [DomainSpec::spherical(0.2), DomainSpec::cylindrical(0.2)] {
            let m = domain_moments(&chart, &spec, &QuadratureConfig::default()).unwrap();
            assert!(m.volume > 0.0);
            let scale = m.about_center.amax();
            assert!(m.parallel_axis_defect() <= 1e-12 * scale, "{id}");
            let c = m.covariance();
            assert!((c - c.transpose()).amax() <= 1e-15 * scale);
            assert!(c.clone().symmetric_eigenvalues().min() >= -1e-14 * scale);
        }
    }
}

#[test]
fn ball_and_cylinder_volumes_agree_at_leading_order() {
    let chart = parse_manifold("paraboloid(1,2)").unwrap();
    let eps = log_sweep(0.2, 0.02, 8);
    let quad = QuadratureConfig::default();
    let res: Vec<f64> = eps
        .iter()
        .map(|&e| {
            let s = domain_moments(&chart, &DomainSpec::spherical(e), &quad).unwrap();
            let c = domain_moments(&chart, &DomainSpec::cylindrical(e), &quad).unwrap();
            s.volume / c.volume - 1.0
        })
        .collect();
    let slope = loglog_slope(&eps, &res, &vec![1e-14; eps.len()]).slope;
    assert!((slope - 2.0).abs() < 0.1, "{slope}");
}

#[test]
fn error_estimate_bounds_the_effect_of_halving() {
    let chart = parse_manifold("graph-expr(2; sin(x)*cos(y) - x + x*y*y)").unwrap();
    let full = QuadratureConfig::default();
    for spec in [DomainSpec::spherical(0.3), DomainSpec::cylindrical(0.3)] {
        let a = domain_moments(&chart, &spec, &full).unwrap();
        let b = domain_moments(&chart, &spec, &full.halved()).unwrap();
        let err = a.quad_error.as_ref().unwrap();
        // the estimate is the full-versus-half difference itself, so the
        // halved rule must sit within it
        assert!((a.volume - b.volume).abs() <= err.volume * (1.0 + 1e-9) + 1e-300);
        assert!((a.covariance() - b.covariance()).amax() <= err.covariance.amax() * (1.0 + 1e-9) + 1e-300);
    }
}

#[test]
fn scales_above_the_ceiling_are_rejected() {
    let chart = parse_manifold("paraboloid(1,2)").unwrap();
    assert!(domain_moments(&chart, &DomainSpec::spherical(0.6), &QuadratureConfig::default()).is_err());
}
