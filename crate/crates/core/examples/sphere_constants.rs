//! Monomial integrals over the unit sphere: closed form next to a Monte-Carlo
//! estimate, and the constants the expansions are written in.
//!
//! Run with `cargo run --release --example sphere_constants`.

use intinv::sphere_quadrature::{mc_sphere_integrals, monomial_sphere_integral, patterns, SphereConstants};

fn main() -> intinv::Result<()> {
    println!("{:>2} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}", "n", "C2", "C22", "C4", "C222", "C24", "C6");
    for n in 2..=6 {
        let c = SphereConstants::new(n)?;
        println!(
            "{n:>2} {:>10.6} {:>10.6} {:>10.6} {:>10.6} {:>10.6} {:>10.6}",
            c.c2, c.c22, c.c4, c.c222, c.c24, c.c6
        );
    }

    let n = 3;
    let pats = patterns(n, 4);
    let est = mc_sphere_integrals(n, &pats, 1_000_000, 2024)?;
    println!("\nS^{} monomials up to degree 4, 10^6 samples", n - 1);
    for (p, e) in pats.iter().zip(&est) {
        let exact = monomial_sphere_integral(n, p)?;
        println!("  {p:<12} exact {exact:.6}  mc {:.6} +- {:.1e}", e.value, e.std_error);
    }
    Ok(())
}
