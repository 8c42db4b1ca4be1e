//! Acceptance criteria 1–10. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::f64::consts::PI;
use std::time::Instant;

use khessian::energy::{energy_ik, energy_jk, mixed_energy_complex, mixed_energy_real};
use khessian::funcspace::{FunctionSpec, Monomial, Polynomial, Richness, Space};
use khessian::quadrature::QuadratureScheme;
use khessian::symfun::{
    factorial, polarized_sk_kronecker, polarized_sk_subsets, HermitianMatrix, SymmetricMatrix,
};
use khessian::verify::{
    divergence_residual, run_suite, write_csv, CaseKind, CaseStatus, SuiteConfig, SuiteKind,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

struct Verdict {
    passed: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Verdict);

fn verdict(passed: bool, detail: String) -> Verdict {
    Verdict { passed, detail }
}

fn jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

#[derive(Default)]
struct Tally {
    cases: usize,
    failures: usize,
    aborted: usize,
    min_margin: f64,
    max_equality: f64,
}

impl Tally {
    fn clean(&self) -> bool {
        self.failures == 0 && self.aborted == 0 && self.cases > 0
    }
}

fn run_all(configs: &[SuiteConfig]) -> Tally {
    let mut t = Tally {
        min_margin: f64::INFINITY,
        ..Tally::default()
    };
    for cfg in configs {
        let run = run_suite(cfg, jobs()).unwrap_or_else(|e| panic!("{cfg:?}: {e}"));
        for c in &run.cases {
            match c.status {
                CaseStatus::Pass => {}
                CaseStatus::Violation => t.failures += 1,
                CaseStatus::Aborted => t.aborted += 1,
                CaseStatus::Skipped => continue,
            }
            match c.kind {
                CaseKind::Random => {
                    t.cases += 1;
                    t.min_margin = t.min_margin.min(c.margin);
                }
                CaseKind::Equality => t.max_equality = t.max_equality.max(c.margin.abs()),
            }
        }
    }
    t
}

fn pairs(max_n: usize, ns: impl Iterator<Item = usize>) -> Vec<(usize, usize)> {
    ns.filter(|&n| n <= max_n)
        .flat_map(|n| (1..=n).map(move |k| (n, k)))
        .collect()
}

fn split(total: usize, parts: usize, i: usize) -> usize {
    total / parts + usize::from(i < total % parts)
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let q = QuadratureScheme::RadialGauss { nodes: 64 };
    let mut worst = 0.0f64;
    for n in 1..=4 {
        let u = FunctionSpec::unit_paraboloid(Space::Complex, n);
        let want = PI.powi(n as i32) / factorial(n + 1);
        for k in 1..=n {
            let got = energy_ik(&u, k, &q).unwrap().value;
            worst = worst.max((got - want).abs() / want);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst <= 1e-8 && secs < 1.0,
        format!("max rel err {worst:.2e} (<= 1e-8), {secs:.3}s (< 1s)"),
    )
}

fn criterion_2() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut g = move || -> f64 { rng.sample(StandardNormal) };
    let mut worst_cross = 0.0f64;
    let mut worst_diag = 0.0f64;
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
    for t in 0..200 {
        let n = 1 + t % 5;
        let k = 1 + (t / 5) % n;
        let (cross, diag) = if t % 2 == 0 {
            let mut herm = || {
                let m = DMatrix::from_fn(n, n, |_, _| Complex64::new(g(), g()));
                HermitianMatrix::new((&m + m.adjoint()) * Complex64::new(0.5, 0.0)).unwrap()
            };
            let args: Vec<_> = (0..k).map(|_| herm()).collect();
            let a = polarized_sk_subsets(&args).unwrap();
            let b = polarized_sk_kronecker(&args).unwrap();
            let same = vec![args[0].clone(); k];
            let d = polarized_sk_subsets(&same).unwrap();
            (rel(a, b), rel(d, args[0].s_k(k).unwrap()))
        } else {
            let mut sym = || {
                let m = DMatrix::from_fn(n, n, |_, _| g());
                SymmetricMatrix::new((&m + m.transpose()) * 0.5).unwrap()
            };
            let args: Vec<_> = (0..k).map(|_| sym()).collect();
            let a = polarized_sk_subsets(&args).unwrap();
            let b = polarized_sk_kronecker(&args).unwrap();
            let same = vec![args[0].clone(); k];
            let d = polarized_sk_subsets(&same).unwrap();
            (rel(a, b), rel(d, args[0].s_k(k).unwrap()))
        };
        worst_cross = worst_cross.max(cross);
        worst_diag = worst_diag.max(diag);
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst_cross <= 1e-10 && worst_diag <= 1e-12 && secs < 10.0,
        format!(
            "subsets vs kronecker {worst_cross:.2e} (<= 1e-10), diagonal {worst_diag:.2e} (<= 1e-12), {secs:.2}s (< 10s)"
        ),
    )
}

fn criterion_3() -> Verdict {
    let start = Instant::now();
    let ps = pairs(3, 1..=3);
    let mut configs = Vec::new();
    for (i, &(n, k)) in ps.iter().enumerate() {
        configs.push(SuiteConfig::new(SuiteKind::Hoelder, n, k, split(500, ps.len(), i), 300 + i as u64));
        configs.push(
            SuiteConfig::new(SuiteKind::Hoelder, n, k, split(100, ps.len(), i), 310 + i as u64)
                .with_richness(Richness::Perturbed),
        );
    }
    let t = run_all(&configs);
    let secs = start.elapsed().as_secs_f64();
    verdict(
        t.clean() && t.cases == 600 && t.max_equality <= 1e-9 && secs < 120.0,
        format!(
            "{} cases, {} violations, {} aborted, min margin {:.2e}, equality {:.2e} (<= 1e-9), {secs:.1}s (< 120s)",
            t.cases, t.failures, t.aborted, t.min_margin, t.max_equality
        ),
    )
}

fn criterion_4() -> Verdict {
    let triples: Vec<(usize, usize, usize)> = pairs(3, 1..=3)
        .into_iter()
        .flat_map(|(n, k)| (0..k).map(move |m| (n, k, m)))
        .collect();
    let configs: Vec<SuiteConfig> = triples
        .iter()
        .enumerate()
        .map(|(i, &(n, k, m))| {
            SuiteConfig::new(SuiteKind::Convexity, n, k, split(300, triples.len(), i), 400 + i as u64)
                .with_m(m)
        })
        .collect();
    let t = run_all(&configs);
    verdict(
        t.clean() && t.cases == 300 && t.max_equality <= 1e-9,
        format!(
            "{} cases over {} (n,k,m), {} violations, {} aborted, min margin {:.2e}, equality {:.2e} (<= 1e-9)",
            t.cases,
            triples.len(),
            t.failures,
            t.aborted,
            t.min_margin,
            t.max_equality
        ),
    )
}

fn criterion_5() -> Verdict {
    let ps = pairs(3, 1..=3);
    let mut configs = Vec::new();
    for space in [Space::Complex, Space::Real] {
        for (i, &(n, k)) in ps.iter().enumerate() {
            configs.push(
                SuiteConfig::new(SuiteKind::CauchySchwarz, n, k, split(300, ps.len(), i), 500 + i as u64)
                    .with_space(space),
            );
        }
    }
    let t = run_all(&configs);
    let tol = QuadratureScheme::default().tau();
    verdict(
        t.clean() && t.cases == 600 && t.max_equality <= 10.0 * tol,
        format!(
            "{} cases (complex + real), {} violations, {} aborted, min margin {:.2e}, equality {:.2e} (<= {:.0e})",
            t.cases,
            t.failures,
            t.aborted,
            t.min_margin,
            t.max_equality,
            10.0 * tol
        ),
    )
}

fn random_poly(rng: &mut ChaCha8Rng, dim: usize, max_degree: u32) -> Polynomial {
    let mut terms = Vec::new();
    let mut powers = vec![0u32; dim];
    loop {
        if powers.iter().sum::<u32>() <= max_degree {
            terms.push(Monomial {
                coeff: rng.sample(StandardNormal),
                powers: powers.clone(),
            });
        }
        let mut i = 0;
        while i < dim {
            powers[i] += 1;
            if powers[i] <= max_degree {
                break;
            }
            powers[i] = 0;
            i += 1;
        }
        if i == dim {
            return Polynomial::new(terms);
        }
    }
}

fn criterion_6() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let n = 3;
    let point = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-0.5..0.5)).collect()
    };
    let zero = FunctionSpec::zero(Space::Real, n);
    let bump = |rng: &mut ChaCha8Rng, degree: u32| {
        FunctionSpec::perturbed(&zero, random_poly(rng, n, degree), 1.0).unwrap()
    };
    let quadratic = |rng: &mut ChaCha8Rng| {
        let m = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let s = SymmetricMatrix::new((&m + m.transpose()) * 0.5).unwrap();
        FunctionSpec::quadratic_real(n, &s, None, 0.0).unwrap()
    };
    let h = 1e-2;
    let mut worst_quadratic = 0.0f64;
    let mut worst_cubic = 0.0f64;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for _ in 0..100 {
        let q = vec![quadratic(&mut rng), quadratic(&mut rng)];
        let r = divergence_residual(&q, &point(&mut rng), h).unwrap();
        worst_quadratic = worst_quadratic.max(r.coarse).max(r.fine);

        let c = vec![bump(&mut rng, 1)];
        let r = divergence_residual(&c, &point(&mut rng), h).unwrap();
        worst_cubic = worst_cubic.max(r.coarse.max(r.fine) / r.magnitude.max(1.0));

        let quartic = vec![bump(&mut rng, 2), bump(&mut rng, 2)];
        let r = divergence_residual(&quartic, &point(&mut rng), h).unwrap();
        let ratio = r.coarse / r.fine;
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    let t = run_all(&[SuiteConfig::new(SuiteKind::Divergence, 3, 3, 100, 600)]);
    verdict(
        worst_quadratic <= 1e-12 && worst_cubic <= 1e-12 && lo >= 3.5 && hi <= 4.5 && t.clean(),
        format!(
            "quadratic {worst_quadratic:.2e} (<= 1e-12), cubic k=2 {worst_cubic:.2e} (roundoff <= 1e-12), quartic k=3 ratio [{lo:.4}, {hi:.4}] (in [3.5, 4.5]), suite {} cases {} violations",
            t.cases, t.failures
        ),
    )
}

fn criterion_7() -> Verdict {
    let triples: Vec<(usize, usize, usize)> = pairs(3, 1..=3)
        .into_iter()
        .flat_map(|(n, k)| (0..k).map(move |m| (n, k, m)))
        .collect();
    let mut configs = Vec::new();
    for (offset, suite) in [(700, SuiteKind::PoincareComplex), (750, SuiteKind::PoincareReal)] {
        for (i, &(n, k, m)) in triples.iter().enumerate() {
            configs.push(
                SuiteConfig::new(suite, n, k, split(200, triples.len(), i), offset + i as u64).with_m(m),
            );
        }
    }
    let t = run_all(&configs);

    let q = QuadratureScheme::default();
    let u = FunctionSpec::unit_paraboloid(Space::Complex, 1);
    let f = mixed_energy_complex(&[&u, &u], &q).unwrap().value;
    let i1 = energy_ik(&u, 1, &q).unwrap().value;
    let complex_gap = (f - PI / 2.0).abs().max((i1.sqrt() * i1.sqrt() - PI / 2.0).abs());
    let r = FunctionSpec::unit_paraboloid(Space::Real, 1);
    let g = mixed_energy_real(&[&r, &r], &q).unwrap().value;
    let j1 = energy_jk(&r, 1, &q).unwrap().value;
    let real_gap = (g - j1.sqrt() * j1.sqrt()).abs();
    verdict(
        t.clean() && t.cases == 400 && complex_gap <= 1e-10 && real_gap <= 1e-10,
        format!(
            "{} cases (complex + real), {} violations, {} aborted, min margin {:.2e}; n=1 equality gap {complex_gap:.2e}, real twin {real_gap:.2e} (<= 1e-10)",
            t.cases, t.failures, t.aborted, t.min_margin
        ),
    )
}

fn criterion_8() -> Verdict {
    let radial = [
        SuiteConfig::new(SuiteKind::Symmetry, 2, 2, 34, 800).with_richness(Richness::Perturbed),
        SuiteConfig::new(SuiteKind::Symmetry, 3, 2, 33, 801).with_space(Space::Real),
        SuiteConfig::new(SuiteKind::Symmetry, 2, 1, 33, 802).with_richness(Richness::Perturbed),
    ];
    let grid = QuadratureScheme::Grid { resolution: 48 };
    let gridded = [SuiteConfig::new(SuiteKind::Symmetry, 2, 2, 100, 810)
        .with_space(Space::Real)
        .with_richness(Richness::Perturbed)
        .with_quadrature(grid)];
    let a = run_all(&radial);
    let b = run_all(&gridded);
    verdict(
        a.clean() && b.clean() && a.cases == 100 && b.cases == 100 && -a.min_margin <= 1e-9,
        format!(
            "radial: {} cases, max residual {:.2e} (<= 1e-9); grid: {} cases, max residual {:.2e} (<= {:.2e}); {} violations",
            a.cases,
            -a.min_margin,
            b.cases,
            -b.min_margin,
            grid.tau(),
            a.failures + b.failures
        ),
    )
}

fn criterion_9() -> Verdict {
    let ps = pairs(4, 1..=4);
    let configs: Vec<SuiteConfig> = ps
        .iter()
        .enumerate()
        .map(|(i, &(n, k))| SuiteConfig::new(SuiteKind::Garding, n, k, split(1000, ps.len(), i), 900 + i as u64))
        .collect();
    let t = run_all(&configs);
    verdict(
        t.clean() && t.cases == 1000 && t.min_margin >= -1e-10,
        format!(
            "{} cone triples, {} violations, min margin {:.2e} (>= -1e-10)",
            t.cases, t.failures, t.min_margin
        ),
    )
}

fn criterion_10() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let configs = [
        SuiteConfig::new(SuiteKind::Hoelder, 2, 2, 20, 10).with_richness(Richness::Perturbed),
        SuiteConfig::new(SuiteKind::Convexity, 3, 2, 20, 10).with_m(1),
        SuiteConfig::new(SuiteKind::CauchySchwarz, 2, 2, 20, 10).with_space(Space::Real),
        SuiteConfig::new(SuiteKind::PoincareComplex, 2, 2, 20, 10).with_m(0),
        SuiteConfig::new(SuiteKind::PoincareReal, 3, 2, 20, 10).with_m(1),
        SuiteConfig::new(SuiteKind::Divergence, 3, 3, 20, 10),
        SuiteConfig::new(SuiteKind::Symmetry, 2, 2, 20, 10),
        SuiteConfig::new(SuiteKind::Garding, 4, 3, 200, 10),
    ];
    let mut identical = 0;
    for (i, cfg) in configs.iter().enumerate() {
        let mut bytes = Vec::new();
        for jobs in [1, 8] {
            let path = dir.path().join(format!("{i}_{jobs}.csv"));
            write_csv(&path, &run_suite(cfg, jobs).unwrap().cases).unwrap();
            bytes.push(std::fs::read(&path).unwrap());
        }
        if bytes[0] == bytes[1] && !bytes[0].is_empty() {
            identical += 1;
        }
    }
    verdict(
        identical == configs.len(),
        format!("{identical}/{} suites give identical CSV bytes with --jobs 1 and 8", configs.len()),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("closed-form energy", criterion_1),
        ("polarization cross-check", criterion_2),
        ("hoelder suite", criterion_3),
        ("convexity suite", criterion_4),
        ("cauchy-schwarz suites", criterion_5),
        ("divergence suite", criterion_6),
        ("poincare chains", criterion_7),
        ("energy symmetry", criterion_8),
        ("garding cone", criterion_9),
        ("determinism", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        let tag = if v.passed { "PASS" } else { "FAIL" };
        println!("criterion {:>2} [{tag}] {name}: {}", i + 1, v.detail);
        failed += usize::from(!v.passed);
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
