//! Gauss rules on intervals and product rules on spheres.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use statrs::function::gamma::ln_gamma;

/// Nodes and weights of a 1-D rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule1d {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule1d {
    /// Maps a rule on `[-1, 1]` to `[a, b]`.
    pub fn on_interval(&self, a: f64, b: f64) -> Rule1d {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        Rule1d {
            nodes: self.nodes.iter().map(|t| mid + half * t).collect(),
            weights: self.weights.iter().map(|w| half * w).collect(),
        }
    }
}

/// Gauss rule on `[-1, 1]` for the weight `(1 - t^2)^a`, `a > -1`, by Golub-Welsch.
///
/// `a = 0` is Gauss-Legendre and `a = 1/2` Gauss-Chebyshev of the second kind.
pub fn gauss_gegenbauer(m: usize, a: f64) -> Rule1d {
    assert!(m >= 1, "rule needs at least one node");
    assert!(a > -1.0, "weight exponent must exceed -1");
    let mut jac = DMatrix::zeros(m, m);
    for k in 1..m {
        let kf = k as f64;
        let b = (kf * (kf + 2.0 * a) / (4.0 * (kf + a) * (kf + a) - 1.0)).sqrt();
        jac[(k, k - 1)] = b;
        jac[(k - 1, k)] = b;
    }
    // total mass B(1/2, a + 1)
    let mu0 = (ln_gamma(0.5) + ln_gamma(a + 1.0) - ln_gamma(a + 1.5)).exp();
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..m)
        .map(|i| (eig.eigenvalues[i], mu0 * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    // the rule is symmetric; enforce it exactly
    for i in 0..m / 2 {
        let j = m - 1 - i;
        let t = 0.5 * (pairs[j].0 - pairs[i].0);
        let w = 0.5 * (pairs[i].1 + pairs[j].1);
        pairs[i] = (-t, w);
        pairs[j] = (t, w);
    }
    if m % 2 == 1 {
        pairs[m / 2].0 = 0.0;
    }
    Rule1d {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

pub fn gauss_legendre(m: usize) -> Rule1d {
    gauss_gegenbauer(m, 0.0)
}

/// Product rule on `S^{n-1}`: unit directions (row-major, `n` per node) and weights
/// summing to the sphere area.
#[derive(Debug, Clone)]
pub struct SphereRule {
    pub n: usize,
    pub directions: Vec<f64>,
    pub weights: Vec<f64>,
}

impl SphereRule {
    /// Hyperspherical product rule with `azimuth` trapezoid nodes on the last
    /// angle and `polar` Gauss-Gegenbauer nodes on each of the other `n - 2` angles.
    ///
    /// Exact for polynomials of degree below `min(azimuth, 2 polar)`.
    pub fn product(n: usize, azimuth: usize, polar: usize) -> SphereRule {
        assert!(n >= 1);
        if n == 1 {
            return SphereRule {
                n,
                directions: vec![1.0, -1.0],
                weights: vec![1.0, 1.0],
            };
        }
        assert!(azimuth >= 1 && polar >= 1);
        // polar angle i (0-based) carries sin^{n-2-i}, i.e. weight exponent (n-3-i)/2
        let polar_rules: Vec<Rule1d> = (0..n - 2)
            .map(|i| gauss_gegenbauer(polar, (n as f64 - 3.0 - i as f64) / 2.0))
            .collect();
        let h = 2.0 * PI / azimuth as f64;

        let mut directions = Vec::new();
        let mut weights = Vec::new();
        let mut idx = vec![0usize; n - 2];
        loop {
            let mut prefix = 1.0;
            let mut w = 1.0;
            let mut head = Vec::with_capacity(n);
            for (rule, &i) in polar_rules.iter().zip(&idx) {
                let t = rule.nodes[i];
                head.push(prefix * t);
                prefix *= (1.0 - t * t).max(0.0).sqrt();
                w *= rule.weights[i];
            }
            for j in 0..azimuth {
                let th = j as f64 * h;
                directions.extend_from_slice(&head);
                directions.push(prefix * th.cos());
                directions.push(prefix * th.sin());
                weights.push(w * h);
            }
            // odometer over polar indices
            let mut d = 0;
            loop {
                if d == idx.len() {
                    return SphereRule { n, directions, weights };
                }
                idx[d] += 1;
                if idx[d] < polar {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn direction(&self, i: usize) -> &[f64] {
        &self.directions[i * self.n..(i + 1) * self.n]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere_quadrature::{monomial_sphere_integral, patterns, sphere_area};

    #[test]
    fn legendre_low_order_closed_form() {
        let r = gauss_legendre(2);
        let t = 1.0 / 3f64.sqrt();
        assert!((r.nodes[0] + t).abs() < 1e-15 && (r.nodes[1] - t).abs() < 1e-15);
        assert!((r.weights[0] - 1.0).abs() < 1e-14);
        let r = gauss_legendre(3);
        assert!((r.nodes[2] - 0.6f64.sqrt()).abs() < 1e-15);
        assert!((r.weights[1] - 8.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn legendre_integrates_polynomials() {
        let r = gauss_legendre(10);
        for p in 0..20 {
            let q: f64 = r.nodes.iter().zip(&r.weights).map(|(t, w)| w * t.powi(p)).sum();
            let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "degree {p}");
        }
    }

    #[test]
    fn chebyshev_second_kind_nodes() {
        // closed form cos(k pi / (m + 1))
        let m = 7;
        let r = gauss_gegenbauer(m, 0.5);
        for (k, t) in r.nodes.iter().rev().enumerate() {
            let exact = ((k + 1) as f64 * PI / (m as f64 + 1.0)).cos();
            assert!((t - exact).abs() < 1e-14);
        }
        assert!((r.weights.iter().sum::<f64>() - PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn sphere_rules_are_exact_on_monomials() {
        for n in 1..=5 {
            let rule = SphereRule::product(n, 12, 6);
            assert!((rule.weights.iter().sum::<f64>() - sphere_area(n)).abs() < 1e-12 * sphere_area(n));
            for p in patterns(n, 6) {
                let q: f64 = (0..rule.len()).map(|i| rule.weights[i] * p.eval(rule.direction(i))).sum();
                let exact = monomial_sphere_integral(n, &p).unwrap();
                assert!((q - exact).abs() < 1e-12, "n={n} p={p}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn directions_are_unit() {
        let rule = SphereRule::product(4, 8, 4);
        for i in 0..rule.len() {
            let norm: f64 = rule.direction(i).iter().map(|v| v * v).sum();
            assert!((norm - 1.0).abs() < 1e-14);
        }
    }
}
