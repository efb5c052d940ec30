//! Second fundamental form and the curvature quantities built from it, for a
//! few charts from the built-in zoo.
//!
//! Run with `cargo run --example curvature_at_a_point`.

use intinv::{curvature_summary, parse_manifold, ricci_asymmetry, second_fundamental_form, third_form_operator};
use nalgebra::DVector;

fn main() -> intinv::Result<()> {
    for id in ["plane", "sphere", "paraboloid(1,2)", "codim2", "graph-expr(2; x*x/2 + sin(x*y))"] {
        let chart = parse_manifold(id)?;
        let sff = second_fundamental_form(&chart)?;
        let c = curvature_summary(&sff);
        println!("{id}");
        println!("  n = {}, k = {}, validity ceiling {:.4}", c.n, c.k, chart.validity_ceiling()?);
        println!("  H = {:?}", c.mean_curvature.as_slice());
        println!("  scalar curvature {:.6}, tr III {:.6}", c.scalar, c.tr_iii);
        println!("  tr_perp III = {:?}", c.tr_perp_iii.as_slice());
    }

    // III(x, y) for the paraboloid along the principal axes, and the
    // antisymmetric part that drives the ratio limits
    let sff = second_fundamental_form(&parse_manifold("paraboloid(1,2)")?)?;
    let e1 = DVector::from_vec(vec![1.0, 0.0]);
    let e2 = DVector::from_vec(vec![0.0, 1.0]);
    println!("III(e1, e1) = {}", third_form_operator(&sff, &e1, &e1)[(0, 0)]);
    println!("III(e2, e2) = {}", third_form_operator(&sff, &e2, &e2)[(0, 0)]);
    println!("ricci asymmetry (0, 1) = {:?}", ricci_asymmetry(&sff, 0, 1)?.as_slice());
    Ok(())
}
