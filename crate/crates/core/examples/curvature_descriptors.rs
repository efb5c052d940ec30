//! Curvature read back from integral invariants: exact series first, then
//! quadrature moments at shrinking scales.
//!
//! Run with `cargo run --release --example curvature_descriptors`.

use intinv::moments::{domain_moments, DomainSpec, QuadratureConfig};
use intinv::predictions::descriptors::descriptors_from_invariants;
use intinv::predictions::{series_invariants, Kind};
use intinv::spectra::sym_eig;
use intinv::{curvature_summary, parse_manifold, second_fundamental_form};

fn main() -> intinv::Result<()> {
    let chart = parse_manifold("paraboloid(1,2)")?;
    let curv = curvature_summary(&second_fundamental_form(&chart)?);

    // the inversion undoes the truncated series exactly
    let (m, eig) = series_invariants(&curv, 0.1, Kind::Spherical);
    let r = descriptors_from_invariants(&m, &eig, 0.1, 2, Kind::Spherical)?;
    println!("series: R = {:.12}  H = {:.12}  {:?}", r.scalar_curvature, r.mean_curvature, r.principal);

    let quad = QuadratureConfig::default();
    for kind in [Kind::Spherical, Kind::Cylindrical] {
        println!("{} from quadrature (truth R = 4, H = 3, kappa = 1, 2)", kind.tag());
        for eps in [0.2, 0.1, 0.05, 0.025] {
            let spec = match kind {
                Kind::Spherical => DomainSpec::spherical(eps),
                Kind::Cylindrical => DomainSpec::cylindrical(eps),
            };
            let m = domain_moments(&chart, &spec, &quad)?;
            let eig = sym_eig(m.covariance())?;
            let r = descriptors_from_invariants(&m, &eig, eps, 2, kind)?;
            println!(
                "  eps {eps:<6} R {:.6}  H {:.6}  principal {:?}",
                r.scalar_curvature,
                r.mean_curvature,
                r.principal.squares().map(|v| v.iter().map(|x| x.sqrt()).collect::<Vec<_>>())
            );
        }
    }
    Ok(())
}
