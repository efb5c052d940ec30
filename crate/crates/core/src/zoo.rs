//! Manifold identifiers used by configs and the command line.
//!
//! | id | chart |
//! |----|-------|
//! | `plane`, `plane(n,k)` | `f = 0`, default `n = 2, k = 1` |
//! | `paraboloid(a,b,...)` | `f = sum a_i x_i^2 / 2` |
//! | `sphere`, `sphere(R)`, `sphere(R,n)` | round sphere of radius `R`, default `R = 1, n = 2` |
//! | `quadratic(k, h...)` | `k` symmetric Hessian slices, row-major, `n` inferred |
//! | `codim2` | shorthand for `quadratic(2, 1,0,0,-1, 0,1,1,0)` |
//! | `graph-expr(n; e1; ...; ek)` | expression charts, Hessians by finite differences |

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geom::{ExprGraph, ManifoldChart, Paraboloid, Plane, Quadratic, Sphere};

pub fn parse_manifold(id: &str) -> Result<ManifoldChart> {
    let id = id.trim();
    let (name, args) = match id.find('(') {
        Some(open) => {
            let inner = id[open + 1..]
                .strip_suffix(')')
                .ok_or_else(|| Error::Parse(format!("missing `)` in `{id}`")))?;
            (id[..open].trim(), Some(inner))
        }
        None => (id, None),
    };

    match name {
        "plane" => {
            let v = numbers(args.unwrap_or("2,1"))?;
            let [n, k] = as_counts::<2>(&v, id)?;
            ManifoldChart::new(Plane { n, k }, id)
        }
        "paraboloid" => {
            let coeffs = numbers(args.ok_or_else(|| Error::Parse("paraboloid needs coefficients".into()))?)?;
            if coeffs.is_empty() {
                return Err(Error::ZeroDimension);
            }
            ManifoldChart::new(Paraboloid { coeffs }, id)
        }
        "sphere" => {
            let v = numbers(args.unwrap_or("1,2"))?;
            let (radius, n) = match v.as_slice() {
                [r] => (*r, 2),
                [r, n] => (*r, as_count(*n, id)?),
                _ => return Err(Error::Parse(format!("`{id}`: expected sphere(R) or sphere(R,n)"))),
            };
            if !(radius > 0.0) {
                return Err(Error::NonPositiveRadius(radius));
            }
            if n == 0 {
                return Err(Error::ZeroDimension);
            }
            ManifoldChart::new(Sphere { radius, n }, id)
        }
        "quadratic" => {
            let v = numbers(args.ok_or_else(|| Error::Parse("quadratic needs arguments".into()))?)?;
            let (&k, entries) = v
                .split_first()
                .ok_or_else(|| Error::Parse(format!("`{id}`: missing codimension")))?;
            let k = as_count(k, id)?;
            if k == 0 {
                return Err(Error::ZeroDimension);
            }
            let per = entries.len() / k;
            let n = (per as f64).sqrt().round() as usize;
            if n == 0 || n * n * k != entries.len() {
                return Err(Error::Dimension(format!(
                    "`{id}`: {} entries do not form {k} square slices",
                    entries.len()
                )));
            }
            let slices = entries
                .chunks(n * n)
                .map(|c| DMatrix::from_row_slice(n, n, c))
                .collect();
            ManifoldChart::new(Quadratic::new(slices)?, id)
        }
        "codim2" if args.is_none() => parse_manifold("quadratic(2, 1,0,0,-1, 0,1,1,0)").map(|c| c.relabel(id)),
        "graph-expr" => {
            let inner = args.ok_or_else(|| Error::Parse("graph-expr needs `(n; f1; ...)`".into()))?;
            let mut parts = inner.split(';').map(str::trim);
            let n = parts
                .next()
                .and_then(|s| s.parse::<usize>().ok())
                .ok_or_else(|| Error::Parse(format!("`{id}`: leading dimension missing")))?;
            let exprs: Vec<&str> = parts.filter(|s| !s.is_empty()).collect();
            ManifoldChart::new(ExprGraph::parse(n, &exprs)?, id)
        }
        _ => Err(Error::Parse(format!("unknown manifold `{id}`"))),
    }
}

fn numbers(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| Error::Parse(format!("bad number `{t}`"))))
        .collect()
}

fn as_count(v: f64, id: &str) -> Result<usize> {
    if v >= 0.0 && v.fract() == 0.0 {
        Ok(v as usize)
    } else {
        Err(Error::Parse(format!("`{id}`: expected a non-negative integer, got {v}")))
    }
}

fn as_counts<const N: usize>(v: &[f64], id: &str) -> Result<[usize; N]> {
    if v.len() != N {
        return Err(Error::Parse(format!("`{id}`: expected {N} integers")));
    }
    let mut out = [0; N];
    for (o, x) in out.iter_mut().zip(v) {
        *o = as_count(*x, id)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{curvature_summary, second_fundamental_form, HessianMode};

    #[test]
    fn parses_every_family() {
        let p = parse_manifold("plane(3,2)").unwrap();
        assert_eq!((p.dim(), p.codim()), (3, 2));
        assert_eq!(parse_manifold("plane").unwrap().dim(), 2);

        let s = parse_manifold("sphere(2,3)").unwrap();
        assert_eq!((s.dim(), s.codim()), (3, 1));
        assert_eq!(s.domain_radius(), 2.0);

        let q = parse_manifold("codim2").unwrap();
        let c = curvature_summary(&second_fundamental_form(&q).unwrap());
        assert!((c.scalar + 4.0).abs() < 1e-14);
        assert_eq!(q.label(), "codim2");

        let g = parse_manifold("graph-expr(2; (x^2 - y^2)/2; x*y)").unwrap();
        assert!(matches!(g.hessian_mode(), HessianMode::FiniteDifference { .. }));
        let c = curvature_summary(&second_fundamental_form(&g).unwrap());
        assert!((c.scalar + 4.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_malformed_ids() {
        for bad in [
            "torus",
            "paraboloid(",
            "paraboloid()",
            "sphere(-1)",
            "plane(2)",
            "quadratic(2, 1, 0, 0)",
            "quadratic(1, 1,2,3,4)",
            "graph-expr(2; x + y^2)",
        ] {
            assert!(parse_manifold(bad).is_err(), "{bad} should be rejected");
        }
    }
}
