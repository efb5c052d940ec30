//! Acceptance suite: one test per criterion, each printing a single
//! `criterion N: PASS|FAIL ...` line before it asserts.
//!
//! Run with `cargo test --test acceptance -- --nocapture --test-threads 1` to
//! see the lines in order.

use intinv::cli::{descriptors, pointcloud_csv, sweep, DescriptorTable, ExperimentConfig, Settings, SweepReport};
use intinv::moments::{domain_moments, DomainSpec, QuadratureConfig};
use intinv::pointcloud::{estimate_descriptors, estimate_moments, sample_domain};
use intinv::predictions::descriptors::{descriptors_from_invariants, PrincipalValues};
use intinv::predictions::{predict_barycenter, predict_eigenvalues, predict_ratio_limits, ratio_sequence, series_invariants, Kind};
use intinv::spectra::{line_angle, perturbation_predict, richardson, sym_eig, PerturbationBlocks};
use intinv::sphere_quadrature::{mc_sphere_integrals, monomial_sphere_integral, patterns, SphereConstants};
use intinv::{curvature_summary, parse_manifold, second_fundamental_form, SecondFundamentalForm};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(id: u32, passed: bool, detail: &str) {
    println!("criterion {id}: {} {detail}", if passed { "PASS" } else { "FAIL" });
}

fn config(pairs: &[(&str, &str)]) -> ExperimentConfig {
    let mut s = Settings::default();
    for (k, v) in pairs {
        s.set(*k, *v);
    }
    ExperimentConfig::from_settings(&Settings::defaults().merge(&s)).expect("valid config")
}

fn run_sweep(id: &str, kind: &str) -> SweepReport {
    sweep(&config(&[("manifold.id", id), ("domain.kind", kind)])).expect("sweep runs")
}

fn check_value(r: &SweepReport, name: &str) -> f64 {
    r.check(name).unwrap_or_else(|| panic!("missing check {name}")).value
}

fn random_symmetric(rng: &mut impl Rng, n: usize, scale: f64) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-scale..scale));
    (&m + m.transpose()) * 0.5
}

#[test]
fn criterion_01_trace_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let n = rng.gen_range(1..=4);
        let k = rng.gen_range(1..=3);
        let slices = (0..k).map(|_| random_symmetric(&mut rng, n, 2.0)).collect();
        let c = curvature_summary(&SecondFundamentalForm::new(slices).unwrap());
        let perp = (&c.tr_perp_iii - (&c.weingarten_h - &c.ricci)).amax();
        let total = (c.tr_iii - (c.mean_curvature_sq() - c.scalar)).abs();
        worst = worst.max(perp).max(total);
    }
    let passed = worst <= 1e-10;
    report(1, passed, &format!("10^4 random forms, worst defect {worst:.1e} (tol 1e-10)"));
    assert!(passed);
}

#[test]
fn criterion_02_sphere_constants() {
    let mut worst_sigma: f64 = 0.0;
    let mut worst_ratio: f64 = 0.0;
    for n in 2..=6 {
        let pats = patterns(n, 6);
        let est = mc_sphere_integrals(n, &pats, 1_000_000, 2000 + n as u64).unwrap();
        for (p, e) in pats.iter().zip(&est) {
            let exact = monomial_sphere_integral(n, p).unwrap();
            let dev = (e.value - exact).abs();
            // constant patterns have zero variance and must agree to rounding
            let z = if e.std_error > 0.0 { dev / e.std_error } else if dev <= 1e-12 * exact.abs() { 0.0 } else { f64::INFINITY };
            worst_sigma = worst_sigma.max(z);
        }
        let c = SphereConstants::new(n).unwrap();
        let nf = n as f64;
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
        let c222 = c.c2 / ((nf + 2.0) * (nf + 4.0));
        for r in [
            rel(c.c22, c.c2 / (nf + 2.0)),
            rel(c.c4, 3.0 * c.c22),
            rel(c.c222, c222),
            rel(c.c24, 3.0 * c222),
            rel(c.c6, 15.0 * c222),
        ] {
            worst_ratio = worst_ratio.max(r);
        }
    }
    let passed = worst_sigma <= 4.0 && worst_ratio <= 1e-12;
    report(
        2,
        passed,
        &format!("worst Monte-Carlo deviation {worst_sigma:.2} sigma (tol 4), ratio identities {worst_ratio:.1e} (tol 1e-12)"),
    );
    assert!(passed);
}

#[test]
fn criterion_03_cylindrical_volume() {
    let slopes: Vec<(&str, f64)> = ["paraboloid(1,2)", "codim2"]
        .iter()
        .map(|id| (*id, check_value(&run_sweep(id, "cyl"), "volume_slope")))
        .collect();
    let passed = slopes.iter().all(|(_, s)| *s >= 3.5);
    report(3, passed, &format!("volume residual slopes {slopes:?} (min 3.5)"));
    assert!(passed);
}

#[test]
fn criterion_04_spherical_volume() {
    let sphere = run_sweep("sphere", "sph");
    let tail: Vec<f64> = sphere.rows.iter().map(|r| (r.volume / r.ball_volume - 1.0).abs()).collect();
    let eps: Vec<f64> = sphere.rows.iter().map(|r| r.eps).collect();
    let floor: Vec<f64> = sphere.rows.iter().map(|r| (r.volume_err + 64.0 * f64::EPSILON * r.volume) / r.ball_volume).collect();
    let slope = intinv::spectra::loglog_slope(&eps, &tail, &floor).slope;

    let para = run_sweep("paraboloid(1,2)", "sph");
    // (2 tr III - |H|^2) / (8 (n + 2)) with 2 tr III - |H|^2 = 1
    let c2 = check_value(&para, "volume_c2");
    let rel = (c2 * 32.0 - 1.0).abs();
    let passed = slope >= 4.0 && rel <= 0.02;
    report(
        4,
        passed,
        &format!("sphere |V/V_n - 1| slope {slope} (min 4; inf = rounding level), paraboloid coefficient {:.5} vs 1 ({:.2}%)", c2 * 32.0, rel * 100.0),
    );
    assert!(passed);
}

#[test]
fn criterion_05_barycenter() {
    let eps = 0.02;
    let quad = QuadratureConfig::default();
    let mut worst: f64 = 0.0;
    for id in ["plane", "sphere", "paraboloid(1,2)", "codim2", "quadratic(3, 1,0,0,-1, 0,1,1,0, 2,0,0,1)"] {
        let chart = parse_manifold(id).unwrap();
        let curv = curvature_summary(&second_fundamental_form(&chart).unwrap());
        let n = curv.n;
        for (kind, spec) in [(Kind::Spherical, DomainSpec::spherical(eps)), (Kind::Cylindrical, DomainSpec::cylindrical(eps))] {
            let m = domain_moments(&chart, &spec, &quad).unwrap();
            let pred = predict_barycenter(&curv, 1.0, kind);
            for j in 0..curv.k {
                let got = m.barycenter[n + j] / (eps * eps);
                let want = pred[n + j];
                // a vanishing mean curvature is held to 1% of the unit-curvature value
                let scale = want.abs().max(1.0 / (2.0 * (n as f64 + 2.0)));
                worst = worst.max((got - want).abs() / scale);
            }
        }
    }
    let passed = worst <= 0.01;
    report(5, passed, &format!("worst relative barycenter defect at eps = {eps}: {:.3}% (tol 1%)", worst * 100.0));
    assert!(passed);
}

#[test]
fn criterion_06_covariance_eigenvalues() {
    let mut worst: f64 = 0.0;
    let mut slopes = Vec::new();
    for id in ["paraboloid(1,2)", "codim2"] {
        for kind in ["cyl", "sph"] {
            let r = run_sweep(id, kind);
            for i in 0..r.n + r.k {
                let c = r.check(&format!("lambda{i}_c4")).unwrap();
                let reference = c.reference.unwrap();
                worst = worst.max((c.value - reference).abs() / reference.abs());
            }
            slopes.push(format!(
                "{id} {kind} tangent {:.2} normal {:.2}",
                check_value(&r, "tangent_slope"),
                check_value(&r, "normal_slope")
            ));
        }
    }
    let passed = worst <= 0.02;
    report(6, passed, &format!("worst eps^4 coefficient defect {:.3}% (tol 2%); residual slopes: {}", worst * 100.0, slopes.join(", ")));
    assert!(passed);
}

#[test]
fn criterion_07_limit_eigenvectors() {
    let chart = parse_manifold("paraboloid(1,2)").unwrap();
    let curv = curvature_summary(&second_fundamental_form(&chart).unwrap());
    let eps = 0.02;
    let mut worst: f64 = 0.0;
    for (kind, spec) in [(Kind::Spherical, DomainSpec::spherical(eps)), (Kind::Cylindrical, DomainSpec::cylindrical(eps))] {
        let m = domain_moments(&chart, &spec, &QuadratureConfig::default()).unwrap();
        let eig = sym_eig(m.covariance()).unwrap();
        let pred = predict_eigenvalues(&curv, eps, kind);
        for i in 0..3 {
            worst = worst.max(line_angle(&eig.vector(i), &DVector::from_column_slice(pred.limit_vectors.column(i).as_slice())));
        }
    }
    let passed = worst <= 1e-2;
    report(7, passed, &format!("largest eigenvector angle at eps = {eps}: {worst:.2e} rad (tol 1e-2)"));
    assert!(passed);
}

#[test]
fn criterion_08_perturbation_lemma() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    let mut coupling_free = true;
    let h0: f64 = 1e-4;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=3);
        let k = rng.gen_range(1..=3);
        let blocks = PerturbationBlocks {
            a: rng.gen_range(0.5..2.0),
            tangent: random_symmetric(&mut rng, n, 3.0),
            coupling: DMatrix::from_fn(n, k, |_, _| rng.gen_range(-3.0..3.0)),
            normal: random_symmetric(&mut rng, k, 3.0),
            remainder: Some(random_symmetric(&mut rng, n + k, 3.0)),
        };
        let pred = perturbation_predict(&blocks).unwrap();
        let levels: Vec<Vec<f64>> = (0..4)
            .map(|j| {
                let h = h0 / 2f64.powi(j);
                let eig = sym_eig(&blocks.assemble(h.sqrt())).unwrap();
                eig.values.iter().zip(&pred.lambda2).map(|(l, l2)| (l - l2 * h) / (h * h)).collect()
            })
            .collect();
        for i in 0..n + k {
            let column: Vec<f64> = levels.iter().map(|v| v[i]).collect();
            let err = (richardson(&column) - pred.lambda4[i]).abs() / pred.lambda4[i].abs().max(1.0);
            worst = worst.max(err);
        }
        let mut shifted = blocks.clone();
        shifted.coupling = DMatrix::from_fn(n, k, |_, _| rng.gen_range(-30.0..30.0));
        coupling_free &= perturbation_predict(&shifted).unwrap().lambda4 == pred.lambda4;
    }
    let passed = worst <= 1e-4 && coupling_free;
    report(
        8,
        passed,
        &format!("10^3 random systems, worst relative error {worst:.1e} (tol 1e-4), coupling-independent: {coupling_free}"),
    );
    assert!(passed);
}

fn principal_slope(t: &DescriptorTable) -> f64 {
    t.check("principal_slope").expect("hypersurface table").value
}

#[test]
fn criterion_09_descriptors() {
    let mut slopes = Vec::new();
    let mut slopes_ok = true;
    for id in ["sphere", "paraboloid(1,2)"] {
        for (kind, min) in [("sph", 0.8), ("cyl", 1.8)] {
            let t = descriptors(&config(&[("manifold.id", id), ("domain.kind", kind)])).unwrap();
            let s = principal_slope(&t);
            slopes_ok &= s >= min;
            slopes.push(format!("{id} {kind} {s:.2}"));
        }
    }

    let mut round_trip: f64 = 0.0;
    for id in ["sphere", "paraboloid(1,2)"] {
        let curv = curvature_summary(&second_fundamental_form(&parse_manifold(id).unwrap()).unwrap());
        let truth = sym_eig(&curv_slice(&curv)).unwrap().values;
        for kind in [Kind::Spherical, Kind::Cylindrical] {
            for eps in [0.3, 0.2, 0.1] {
                let (m, eig) = series_invariants(&curv, eps, kind);
                let r = descriptors_from_invariants(&m, &eig, eps, 2, kind).unwrap();
                let mut est = match &r.principal {
                    PrincipalValues::Signed(v) => v.clone(),
                    PrincipalValues::Squared(v) => v.iter().map(|x| x.sqrt()).collect(),
                    PrincipalValues::Omitted => vec![f64::NAN; 2],
                };
                est.sort_by(f64::total_cmp);
                let mut want: Vec<f64> = truth.iter().copied().collect();
                want.sort_by(f64::total_cmp);
                for (a, b) in est.iter().zip(&want) {
                    round_trip = round_trip.max((a - b).abs());
                }
                round_trip = round_trip.max((r.scalar_curvature - curv.scalar).abs());
            }
        }
    }
    let passed = slopes_ok && round_trip <= 1e-12;
    report(
        9,
        passed,
        &format!("error slopes [{}] (sph >= 0.8, cyl >= 1.8), series round trip {round_trip:.1e} (tol 1e-12)", slopes.join(", ")),
    );
    assert!(passed);
}

fn curv_slice(curv: &intinv::CurvatureSummary) -> DMatrix<f64> {
    // for a hypersurface S_H = H S, so the shape operator is S_H / H
    &curv.weingarten_h / curv.mean_curvature[0]
}

#[test]
fn criterion_10_ratio_limits() {
    let chart = parse_manifold("paraboloid(1,2)").unwrap();
    let curv = curvature_summary(&second_fundamental_form(&chart).unwrap());
    let eps = 0.02;
    let mut worst: f64 = 0.0;
    let mut detail = Vec::new();
    for (kind, spec, expected) in [
        (Kind::Cylindrical, DomainSpec::cylindrical(eps), -2.0),
        (Kind::Spherical, DomainSpec::spherical(eps), 1.0),
    ] {
        let limit = predict_ratio_limits(&curv, kind).pairs[(0, 1)];
        assert!((limit - expected).abs() < 1e-12, "closed form {limit} vs {expected}");
        let m = domain_moments(&chart, &spec, &QuadratureConfig::default()).unwrap();
        let values: Vec<f64> = sym_eig(m.covariance()).unwrap().values.iter().copied().collect();
        let got = ratio_sequence(&values, 2, eps, kind).pairs[(0, 1)];
        worst = worst.max((got - limit).abs() / limit.abs());
        detail.push(format!("{} {got:.4} -> {limit}", kind.tag()));
    }
    let passed = worst <= 0.05;
    report(10, passed, &format!("pair ratios at eps = {eps}: {} (worst {:.2}%, tol 5%)", detail.join(", "), worst * 100.0));
    assert!(passed);
}

#[test]
fn criterion_11_point_cloud() {
    let sphere = parse_manifold("sphere").unwrap();
    let eps = 0.2;

    // sample covariance against the quadrature covariance, RMS over seeds
    let spec = DomainSpec::spherical(eps);
    let exact = domain_moments(&sphere, &spec, &QuadratureConfig::default()).unwrap().normalized();
    let counts = [1_000usize, 4_000, 16_000, 64_000, 256_000];
    let rms: Vec<f64> = counts
        .iter()
        .map(|&count| {
            let sq: f64 = (0..8)
                .map(|s| {
                    let sample = sample_domain(&sphere, &spec, count, 100 + s, 0.0).unwrap();
                    let m = estimate_moments(&sample, &spec).unwrap();
                    (m.covariance() - exact.covariance()).norm_squared()
                })
                .sum();
            (sq / 8.0).sqrt()
        })
        .collect();
    let x: Vec<f64> = counts.iter().map(|&c| (c as f64).ln()).collect();
    let y: Vec<f64> = rms.iter().map(|r| r.ln()).collect();
    let mx = x.iter().sum::<f64>() / x.len() as f64;
    let my = y.iter().sum::<f64>() / y.len() as f64;
    let slope = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / x.iter().map(|a| (a - mx).powi(2)).sum::<f64>();
    let slope_ok = (slope + 0.5).abs() <= 0.1;

    // principal curvatures of the unit sphere from 10^6 points
    let mut kappa_err: f64 = 0.0;
    let mut kappas = Vec::new();
    for (kind, spec) in [(Kind::Spherical, DomainSpec::spherical(eps)), (Kind::Cylindrical, DomainSpec::cylindrical(eps))] {
        let sample = sample_domain(&sphere, &spec, 1_000_000, 11, 0.0).unwrap();
        let d = estimate_descriptors(&sample, &[0.0; 3], eps, 2, kind).unwrap();
        let values: Vec<f64> = match &d.reports[0].principal {
            PrincipalValues::Signed(v) => v.iter().map(|x| x.abs()).collect(),
            PrincipalValues::Squared(v) => v.iter().map(|x| x.max(0.0).sqrt()).collect(),
            PrincipalValues::Omitted => vec![f64::NAN; 2],
        };
        for v in &values {
            kappa_err = kappa_err.max((v - 1.0).abs());
        }
        kappas.push(format!("{} {:.3?}", kind.tag(), values));
    }
    let kappa_ok = kappa_err <= 0.05;

    // byte-identical output under a fixed seed
    let cfg = config(&[("manifold.id", "sphere"), ("domain.kind", "sph"), ("domain.eps", "0.2")]);
    let csv = || {
        let s = sample_domain(&sphere, &spec, 50_000, 5, 0.0).unwrap();
        pointcloud_csv(&cfg, &s, &[0.0; 3], eps, 2).unwrap()
    };
    let deterministic = csv() == csv();

    let passed = slope_ok && kappa_ok && deterministic;
    report(
        11,
        passed,
        &format!(
            "moment error slope {slope:.3} (-0.5 +- 0.1); kappa at N = 10^6 [{}], worst error {:.1}% (tol 5%); deterministic: {deterministic}",
            kappas.join(", "),
            kappa_err * 100.0
        ),
    );
    assert!(slope_ok, "moment convergence slope {slope}");
    assert!(deterministic, "pointcloud CSV differs between identical runs");
    assert!(kappa_ok, "unit-sphere kappa error {kappa_err} at N = 10^6");
}
