//! Samples neighbourhoods of the unit sphere and of a codimension-2 saddle,
//! then reads curvature back off the sample covariance.
//!
//! Run with `cargo run --release --example pointcloud_descriptors`.

use intinv::moments::DomainSpec;
use intinv::pointcloud::{estimate_descriptors, sample_domain};
use intinv::predictions::descriptors::PrincipalValues;
use intinv::predictions::Kind;
use intinv::parse_manifold;

fn main() -> intinv::Result<()> {
    let sphere = parse_manifold("sphere")?;
    let eps = 0.2;
    for (kind, spec) in [
        (Kind::Spherical, DomainSpec::spherical(eps)),
        (Kind::Cylindrical, DomainSpec::cylindrical(eps)),
    ] {
        for count in [10_000, 100_000, 1_000_000] {
            let sample = sample_domain(&sphere, &spec, count, 42, 0.0)?;
            let d = estimate_descriptors(&sample, &[0.0; 3], eps, 2, kind)?;
            let r = &d.reports[0];
            let principal = match &r.principal {
                PrincipalValues::Signed(k) => format!("kappa   {:?}", k),
                PrincipalValues::Squared(k) => format!("kappa^2 {:?}", k),
                PrincipalValues::Omitted => "omitted".to_string(),
            };
            println!(
                "sphere {:<3} N={count:<8} R={:8.4}  H={:8.4}  {principal}",
                kind.tag(),
                r.scalar_curvature,
                r.mean_curvature
            );
        }
    }

    // f1 = (x^2 - y^2)/2, f2 = xy: minimal, scalar curvature -4
    let saddle = parse_manifold("codim2")?;
    let eps = 0.15;
    let sample = sample_domain(&saddle, &DomainSpec::spherical(eps), 1_000_000, 7, 0.0)?;
    let d = estimate_descriptors(&sample, &[0.0; 4], eps, 2, Kind::Spherical)?;
    for (j, r) in d.reports.iter().enumerate() {
        println!("codim2 normal {j}: R_j={:8.4}  H_j={:8.4}", r.scalar_curvature, r.mean_curvature);
    }
    println!("codim2 assembled R = {:.4} (scale ratio {:.1})", d.scalar_curvature, d.scale_ratio);
    Ok(())
}
