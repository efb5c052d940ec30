//! Volume, barycenter and covariance of ball and cylinder neighbourhoods by
//! quadrature, against the leading-order predictions.
//!
//! Run with `cargo run --release --example neighbourhood_moments`.

use intinv::moments::{domain_moments, generic_cylinder_ellipsoid, tilted_plane, DomainKind, DomainSpec, QuadratureConfig};
use intinv::predictions::{predict_eigenvalues, predict_generic_cyl_eigs, predict_volume, Kind};
use intinv::spectra::sym_eig;
use intinv::{curvature_summary, parse_manifold, second_fundamental_form};

fn main() -> intinv::Result<()> {
    let chart = parse_manifold("paraboloid(1,2)")?;
    let curv = curvature_summary(&second_fundamental_form(&chart)?);
    let quad = QuadratureConfig::default();
    let eps = 0.1;

    for (kind, spec) in [
        (Kind::Cylindrical, DomainSpec::cylindrical(eps)),
        (Kind::Spherical, DomainSpec::spherical(eps)),
    ] {
        let m = domain_moments(&chart, &spec, &quad)?;
        let eig = sym_eig(m.covariance())?;
        let pred = predict_eigenvalues(&curv, eps, kind);
        println!("{} at eps = {eps}", kind.tag());
        println!("  volume      {:.12e}  predicted {:.12e}", m.volume, predict_volume(&curv, eps, kind));
        println!("  barycenter  {:?}", m.barycenter.as_slice());
        for (l, p) in eig.values.iter().zip(pred.all()) {
            println!("  eigenvalue  {l:.12e}  predicted {p:.12e}");
        }
        println!("  quadrature error on volume {:.1e}", m.quad_error.as_ref().unwrap().volume);
    }

    // a cylinder over a plane tilted 30 degrees off the tangent plane cuts an
    // ellipse; its semi-axes set the leading eigenvalues
    let plane = tilted_plane(2, 1, std::f64::consts::FRAC_PI_6);
    let ell = generic_cylinder_ellipsoid(&chart, &plane)?;
    let spec = DomainSpec::new(DomainKind::cylindrical_over(plane), 0.02);
    let m = domain_moments(&chart, &spec, &quad)?;
    let eig = sym_eig(m.covariance())?;
    println!("tilted cylinder, semi-axes {:?}", ell.semi_axes);
    println!("  eigenvalues {:?}", &eig.values.as_slice()[..2]);
    println!("  leading     {:?}", predict_generic_cyl_eigs(&ell.semi_axes, 0.02));
    Ok(())
}
