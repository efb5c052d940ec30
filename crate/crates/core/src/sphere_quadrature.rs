//! Exact monomial integrals over unit spheres and balls.
//!
//! For `p = (p_1, ..., p_n)` with every `p_i` even,
//!
//! ```text
//! int_{S^{n-1}} x^p dsigma = 2 prod Gamma(b_i) / Gamma(sum b_i),   b_i = (p_i + 1) / 2
//! ```
//!
//! and the integral vanishes as soon as one exponent is odd. Ball integrals
//! follow by integrating the radial factor `r^{n - 1 + |p|}`. Contractions of
//! unit-vector components such as `x_a x_a x_b x_b` reduce to these through
//! [`index_pattern_integral`], which counts index multiplicities instead of
//! enumerating pairings by hand.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Exponents `(p_1, ..., p_n)` of a monomial in `n` variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    powers: Vec<u32>,
}

impl MultiIndex {
    pub fn new(powers: Vec<u32>) -> Result<Self> {
        if powers.is_empty() {
            return Err(Error::ZeroDimension);
        }
        Ok(Self { powers })
    }

    /// The constant monomial in `n` variables.
    pub fn zero(n: usize) -> Result<Self> {
        Self::new(vec![0; n])
    }

    /// Multi-index of a product of coordinates listed by (0-based) index.
    pub fn from_indices(n: usize, indices: &[usize]) -> Result<Self> {
        if n == 0 {
            return Err(Error::ZeroDimension);
        }
        let mut powers = vec![0; n];
        for &i in indices {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, dim: n });
            }
            powers[i] += 1;
        }
        Ok(Self { powers })
    }

    pub fn dim(&self) -> usize {
        self.powers.len()
    }

    pub fn powers(&self) -> &[u32] {
        &self.powers
    }

    pub fn degree(&self) -> u32 {
        self.powers.iter().sum()
    }

    pub fn is_even(&self) -> bool {
        self.powers.iter().all(|p| p % 2 == 0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.powers
            .iter()
            .zip(x)
            .map(|(&p, &v)| v.powi(p as i32))
            .product()
    }
}

impl std::fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.powers.iter().map(|p| p.to_string()).collect();
        write!(f, "({})", parts.join(" "))
    }
}

fn check_dim(n: usize, p: &MultiIndex) -> Result<()> {
    if n == 0 {
        return Err(Error::ZeroDimension);
    }
    if p.dim() != n {
        return Err(Error::Dimension(format!("multi-index has {} entries, dimension is {n}", p.dim())));
    }
    Ok(())
}

/// Integral of `x^p` over the unit sphere `S^{n-1}` in `R^n`.
pub fn monomial_sphere_integral(n: usize, p: &MultiIndex) -> Result<f64> {
    check_dim(n, p)?;
    if !p.is_even() {
        return Ok(0.0);
    }
    let b: Vec<f64> = p.powers().iter().map(|&q| (q as f64 + 1.0) / 2.0).collect();
    let log = b.iter().map(|&bi| ln_gamma(bi)).sum::<f64>() - ln_gamma(b.iter().sum());
    Ok(2.0 * log.exp())
}

/// Integral of `x^p` over the ball of radius `eps` in `R^n`.
pub fn monomial_ball_integral(n: usize, p: &MultiIndex, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::NonPositiveRadius(eps));
    }
    let c = monomial_sphere_integral(n, p)?;
    let m = (n as u32 + p.degree()) as i32;
    Ok(eps.powi(m) / m as f64 * c)
}

/// Sphere integral of the product `x_{i_1} ... x_{i_m}` (0-based indices,
/// repeated indices multiply).
pub fn index_pattern_integral(n: usize, indices: &[usize]) -> Result<f64> {
    monomial_sphere_integral(n, &MultiIndex::from_indices(n, indices)?)
}

/// Volume `V_n(eps)` of the `n`-ball.
pub fn ball_volume(n: usize, eps: f64) -> f64 {
    let n = n as f64;
    (0.5 * n * std::f64::consts::PI.ln() - ln_gamma(0.5 * n + 1.0) + n * eps.ln()).exp()
}

/// Area of the unit sphere `S^{n-1}` in `R^n`.
pub fn sphere_area(n: usize) -> f64 {
    n as f64 * ball_volume(n, 1.0)
}

/// Sphere integrals of the low-degree monomials that appear in the moment
/// expansions: `c2 = int x_1^2`, `c22 = int x_1^2 x_2^2`, `c4 = int x_1^4`,
/// `c222`, `c24 = int x_1^2 x_2^4` and `c6`, all over `S^{n-1}`.
///
/// Patterns that need more coordinates than `n` has are filled in from their
/// ratio to `c2` so every field is defined for every `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereConstants {
    pub n: usize,
    pub c2: f64,
    pub c22: f64,
    pub c4: f64,
    pub c222: f64,
    pub c24: f64,
    pub c6: f64,
}

impl SphereConstants {
    /// Evaluates every constant independently from the Gamma-function formula.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::ZeroDimension);
        }
        let s = |idx: &[usize]| index_pattern_integral(n, idx);
        let nf = n as f64;
        let c2 = s(&[0, 0])?;
        let c22 = if n >= 2 { s(&[0, 0, 1, 1])? } else { c2 / (nf + 2.0) };
        let c4 = s(&[0, 0, 0, 0])?;
        let c222 = if n >= 3 {
            s(&[0, 0, 1, 1, 2, 2])?
        } else {
            c2 / ((nf + 2.0) * (nf + 4.0))
        };
        let c24 = if n >= 2 { s(&[0, 0, 1, 1, 1, 1])? } else { 3.0 * c2 / ((nf + 2.0) * (nf + 4.0)) };
        let c6 = s(&[0, 0, 0, 0, 0, 0])?;
        Ok(Self { n, c2, c22, c4, c222, c24, c6 })
    }
}

/// Canonical exponent patterns (non-increasing, length `n`) of total degree at most `max_degree`.
pub fn patterns(n: usize, max_degree: u32) -> Vec<MultiIndex> {
    fn rec(n: usize, remaining: u32, cap: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for p in (0..=remaining.min(cap)).rev() {
            cur.push(p);
            rec(n, remaining - p, p, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        return Vec::new();
    }
    rec(n, max_degree, max_degree, &mut Vec::new(), &mut out);
    out.sort_by_key(|p| (p.iter().sum::<u32>(), std::cmp::Reverse(p.clone())));
    out.into_iter().map(|powers| MultiIndex { powers }).collect()
}

/// Monte-Carlo estimate of a sphere integral with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
}

const MC_CHUNK: usize = 1 << 14;

/// Estimates the sphere integrals of several monomials from one shared set of
/// `samples` uniform directions. Deterministic for a given seed and thread count.
pub fn mc_sphere_integrals(n: usize, patterns: &[MultiIndex], samples: usize, seed: u64) -> Result<Vec<McEstimate>> {
    if n == 0 {
        return Err(Error::ZeroDimension);
    }
    for p in patterns {
        check_dim(n, p)?;
    }
    if samples < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: samples });
    }
    let m = patterns.len();
    let chunks = samples.div_ceil(MC_CHUNK);
    let partial: Vec<(Vec<f64>, Vec<f64>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let count = MC_CHUNK.min(samples - c * MC_CHUNK);
            let mut sum = vec![0.0; m];
            let mut sq = vec![0.0; m];
            let mut x = vec![0.0; n];
            for _ in 0..count {
                uniform_direction(&mut rng, &mut x);
                for (i, p) in patterns.iter().enumerate() {
                    let v = p.eval(&x);
                    sum[i] += v;
                    sq[i] += v * v;
                }
            }
            (sum, sq)
        })
        .collect();

    let area = sphere_area(n);
    let total = samples as f64;
    Ok((0..m)
        .map(|i| {
            let s: f64 = partial.iter().map(|(s, _)| s[i]).sum();
            let q: f64 = partial.iter().map(|(_, q)| q[i]).sum();
            let mean = s / total;
            let var = ((q / total - mean * mean) * total / (total - 1.0)).max(0.0);
            McEstimate {
                value: area * mean,
                std_error: area * (var / total).sqrt(),
            }
        })
        .collect())
}

/// Fills `x` with a uniformly distributed unit vector.
pub fn uniform_direction<R: rand::Rng + ?Sized>(rng: &mut R, x: &mut [f64]) {
    loop {
        let mut norm2 = 0.0;
        for v in x.iter_mut() {
            *v = StandardNormal.sample(rng);
            norm2 += *v * *v;
        }
        if norm2 > 1e-300 {
            let inv = norm2.sqrt().recip();
            x.iter_mut().for_each(|v| *v *= inv);
            return;
        }
    }
}
