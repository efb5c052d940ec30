//! Eigenvalues of `C(eps) = eps^2 diag(a, .., 0, ..) + eps^4 M + eps^6 E`:
//! predicted fourth-order coefficients against Richardson-extrapolated ones.
//!
//! Run with `cargo run --example eigen_perturbation`.

use intinv::spectra::{perturbation_predict, richardson, sym_eig, PerturbationBlocks};
use nalgebra::DMatrix;

fn main() -> intinv::Result<()> {
    let blocks = PerturbationBlocks {
        a: 1.5,
        tangent: DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, -1.0]),
        coupling: DMatrix::from_row_slice(2, 1, &[3.0, -2.0]),
        normal: DMatrix::from_row_slice(1, 1, &[4.0]),
        remainder: Some(DMatrix::from_fn(3, 3, |i, j| 0.1 * (i + j) as f64)),
    };
    let pred = perturbation_predict(&blocks)?;
    println!("predicted eps^4 coefficients {:?}", pred.lambda4);

    // (lambda - a eps^2) / eps^4 is a series in h = eps^2
    let h0: f64 = 1e-3;
    let levels: Vec<Vec<f64>> = (0..5)
        .map(|j| {
            let h = h0 / 2f64.powi(j);
            let eig = sym_eig(&blocks.assemble(h.sqrt())).unwrap();
            eig.values
                .iter()
                .zip(&pred.lambda2)
                .map(|(l, l2)| (l - l2 * h) / (h * h))
                .collect()
        })
        .collect();
    for i in 0..3 {
        let column: Vec<f64> = levels.iter().map(|v| v[i]).collect();
        println!("  eigenvalue {i}: extrapolated {:.8}  predicted {:.8}", richardson(&column), pred.lambda4[i]);
    }
    Ok(())
}
