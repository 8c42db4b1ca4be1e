use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{CaseInput, ConeChecks, SuiteConfig, SuiteKind, MAX_REGENERATIONS};
use crate::energy::{mixed_energy, symmetry_residual, RESIDUAL_FLOOR};
use crate::error::{Error, Result};
use crate::funcspace::{
    check_boundary_vanishing, random_admissible, random_cone_quadratic, random_psh_radial,
    FunctionSpec, Monomial, Polynomial, Space,
};
use crate::symfun::{
    garding_superadditivity_check, lemma_mk_check, newton_tensor_matrix, sample_cone_point,
    SpectrumVector, SymmetricMatrix,
};

/// Richardson steps of the divergence suite.
pub const DIVERGENCE_STEP: f64 = 1e-2;
/// Accepted range of the `h → h/2` residual ratio.
pub const RICHARDSON_RANGE: (f64, f64) = (3.5, 4.5);
/// Residuals below this fraction of the field magnitude count as roundoff.
pub const ROUNDOFF_FLOOR: f64 = 1e-10;

pub(super) struct Outcome {
    pub margin: f64,
    pub extra: Option<f64>,
    pub failed_check: Option<String>,
}

impl Outcome {
    fn plain(margin: f64) -> Self {
        Self {
            margin,
            extra: None,
            failed_check: None,
        }
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
}

fn admissible(cfg: &SuiteConfig, rng: &mut ChaCha8Rng) -> Result<FunctionSpec> {
    let u = random_admissible(rng.next_u64(), cfg.n, cfg.k, cfg.space(), cfg.richness)?;
    if !check_boundary_vanishing(&u, crate::energy::BOUNDARY_TOLERANCE) {
        return Err(Error::HypothesisViolation(
            "generated function does not vanish on the sphere".into(),
        ));
    }
    Ok(u)
}

/// Radial plurisubharmonic (or convex) function plus a positive constant.
fn psh_without_boundary(cfg: &SuiteConfig, rng: &mut ChaCha8Rng) -> Result<FunctionSpec> {
    let space = cfg.space();
    let base = random_psh_radial(rng, space, cfg.n)?;
    let shift = FunctionSpec::affine(space, cfg.n, vec![0.0; space.real_dim(cfg.n)], rng.random::<f64>() + 0.1)?;
    base.sum(&shift)
}

fn auxiliary(cfg: &SuiteConfig, rng: &mut ChaCha8Rng, count: usize, allow_quadratic: bool) -> Result<Vec<FunctionSpec>> {
    (0..count)
        .map(|_| {
            if allow_quadratic && cfg.space().real_dim(cfg.n) <= 4 && rng.random_bool(0.5) {
                random_cone_quadratic(rng, cfg.space(), cfg.n, cfg.k)
            } else {
                psh_without_boundary(cfg, rng)
            }
        })
        .collect()
}

fn random_polynomial(rng: &mut ChaCha8Rng, dim: usize, degree: u32) -> Polynomial {
    Polynomial::new(
        Polynomial::monomial_exponents(dim, degree)
            .into_iter()
            .map(|powers| Monomial {
                coeff: normal(rng),
                powers,
            })
            .collect(),
    )
}

/// `p(w)(t − 1)` with a random polynomial `p`; vanishes on the sphere, no convexity.
fn free_bump(space: Space, n: usize, rng: &mut ChaCha8Rng, degree: u32) -> Result<FunctionSpec> {
    let p = random_polynomial(rng, space.real_dim(n), degree);
    FunctionSpec::perturbed(&FunctionSpec::zero(space, n), p, 1.0)
}

/// Polynomial of total degree 2, 3 or 4 for the divergence suite.
fn divergence_polynomial(n: usize, degree: usize, rng: &mut ChaCha8Rng) -> Result<FunctionSpec> {
    match degree {
        2 => {
            let g = DMatrix::from_fn(n, n, |_, _| normal(rng));
            let s = SymmetricMatrix::new(&g + g.transpose())?;
            FunctionSpec::quadratic_real(n, &s, None, 0.0)
        }
        3 => free_bump(Space::Real, n, rng, 1),
        _ => free_bump(Space::Real, n, rng, 2),
    }
}

fn random_interior_point(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let p: Vec<f64> = (0..dim).map(|_| rng.random_range(-0.9..0.9)).collect();
        if p.iter().map(|v| v * v).sum::<f64>() < 0.81 {
            return p;
        }
    }
}

fn draw_m(cfg: &SuiteConfig, rng: &mut ChaCha8Rng) -> usize {
    cfg.m.unwrap_or_else(|| rng.random_range(0..cfg.k))
}

fn generate(cfg: &SuiteConfig, case_index: u64, rng: &mut ChaCha8Rng) -> Result<CaseInput> {
    let (n, k) = (cfg.n, cfg.k);
    Ok(match cfg.suite {
        SuiteKind::Hoelder => {
            CaseInput::functions((0..=k).map(|_| admissible(cfg, rng)).collect::<Result<_>>()?)
        }
        SuiteKind::Convexity => {
            let m = cfg.m.unwrap_or(0);
            let mut specs = vec![admissible(cfg, rng)?, admissible(cfg, rng)?];
            specs.extend(auxiliary(cfg, rng, m, false)?);
            CaseInput::functions(specs)
        }
        SuiteKind::CauchySchwarz => {
            let u0 = admissible(cfg, rng)?;
            // The real twin also draws non-convex boundary-vanishing u_1.
            let u1 = if cfg.space() == Space::Real && rng.random_bool(0.25) {
                free_bump(Space::Real, n, rng, 2)?
            } else {
                admissible(cfg, rng)?
            };
            let mut specs = vec![u0, u1];
            specs.extend(auxiliary(cfg, rng, k - 1, true)?);
            CaseInput::functions(specs)
        }
        SuiteKind::PoincareComplex | SuiteKind::PoincareReal => {
            CaseInput::functions(vec![admissible(cfg, rng)?])
        }
        SuiteKind::Symmetry => {
            let specs: Vec<FunctionSpec> = (0..=k).map(|_| admissible(cfg, rng)).collect::<Result<_>>()?;
            let mut permutation: Vec<usize> = (0..=k).collect();
            permutation.shuffle(rng);
            CaseInput::Functions {
                specs,
                permutation: Some(permutation),
            }
        }
        SuiteKind::Divergence => {
            let degree = 2 + (case_index % 3) as usize;
            let specs = (0..k - 1)
                .map(|_| divergence_polynomial(n, degree, rng))
                .collect::<Result<_>>()?;
            CaseInput::Divergence {
                specs,
                point: random_interior_point(rng, n),
            }
        }
        SuiteKind::Garding => {
            let m = draw_m(cfg, rng);
            let mut draw = || sample_cone_point(rng, n, k).map(|v| v.entries().to_vec());
            CaseInput::Cone {
                lambda: draw()?,
                a: draw()?,
                b: draw()?,
                mu: draw()?,
                m,
                checks: ConeChecks::Both,
            }
        }
    })
}

fn is_rejection(e: &Error) -> bool {
    matches!(
        e,
        Error::Capacity(_) | Error::HypothesisViolation(_) | Error::Precondition(_)
    )
}

/// Draws an input, retrying rejected draws on the same stream.
pub(super) fn generate_with_retries(cfg: &SuiteConfig, rng: &mut ChaCha8Rng) -> Result<(CaseInput, usize)> {
    let index = rng.get_stream();
    let mut last = None;
    for attempt in 0..MAX_REGENERATIONS {
        match generate(cfg, index, rng) {
            Ok(input) => return Ok((input, attempt)),
            Err(e) if is_rejection(&e) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(Error::HypothesisViolation(format!(
        "no admissible input after {MAX_REGENERATIONS} draws: {}",
        last.map(|e| e.to_string()).unwrap_or_default()
    )))
}

/// `|x|² − 1` on `C^n`, `(|x|² − 1)/2` on `R^n`: identity Hessian in both.
fn unit_hessian_potential(space: Space, n: usize) -> FunctionSpec {
    let slope = match space {
        Space::Complex => 1.0,
        Space::Real => 0.5,
    };
    FunctionSpec::radial(space, n, vec![slope]).expect("valid radial spec")
}

/// Documented equality cases of each suite.
pub(super) fn equality_inputs(cfg: &SuiteConfig, rng: &mut ChaCha8Rng) -> Result<Vec<(String, CaseInput)>> {
    let (n, k, space) = (cfg.n, cfg.k, cfg.space());
    let mut out: Vec<(String, CaseInput)> = Vec::new();
    let mut push = |label: &str, input: CaseInput| out.push((label.to_string(), input));
    match cfg.suite {
        SuiteKind::Hoelder => {
            let u = admissible(cfg, rng)?;
            push("all_equal", CaseInput::functions(vec![u.clone(); k + 1]));
            let scaled = (0..=k)
                .map(|j| u.scaled(0.5 + 0.75 * j as f64))
                .collect::<Result<_>>()?;
            push("proportional", CaseInput::functions(scaled));
            let p = FunctionSpec::unit_paraboloid(space, n);
            let scaled = (0..=k)
                .map(|j| p.scaled(1.0 + 0.5 * j as f64))
                .collect::<Result<_>>()?;
            push("proportional_paraboloid", CaseInput::functions(scaled));
        }
        SuiteKind::Convexity => {
            let m = cfg.m.unwrap_or(0);
            let u = admissible(cfg, rng)?;
            let vs = auxiliary(cfg, rng, m, false)?;
            let with = |a: FunctionSpec, b: FunctionSpec| {
                let mut specs = vec![a, b];
                specs.extend(vs.iter().cloned());
                CaseInput::functions(specs)
            };
            push("v_zero", with(u.clone(), FunctionSpec::zero(space, n)));
            push("u_equals_v", with(u.clone(), u.clone()));
        }
        SuiteKind::CauchySchwarz => {
            let u = admissible(cfg, rng)?;
            let vs = auxiliary(cfg, rng, k - 1, true)?;
            let with = |a: FunctionSpec, b: FunctionSpec| {
                let mut specs = vec![a, b];
                specs.extend(vs.iter().cloned());
                CaseInput::functions(specs)
            };
            push("u1_equals_u0", with(u.clone(), u.clone()));
            push("u1_proportional", with(u.clone(), u.scaled(1.7)?));
        }
        SuiteKind::PoincareComplex | SuiteKind::PoincareReal => {
            let v = unit_hessian_potential(space, n);
            push("u_equals_v", CaseInput::functions(vec![v.clone()]));
            push("u_proportional_v", CaseInput::functions(vec![v.scaled(2.3)?]));
        }
        SuiteKind::Symmetry => {
            let specs: Vec<FunctionSpec> = (0..=k).map(|_| admissible(cfg, rng)).collect::<Result<_>>()?;
            push(
                "identity_permutation",
                CaseInput::Functions {
                    specs: specs.clone(),
                    permutation: Some((0..=k).collect()),
                },
            );
            let mut reversed: Vec<usize> = (0..=k).collect();
            reversed.reverse();
            push(
                "all_equal",
                CaseInput::Functions {
                    specs: vec![specs[0].clone(); k + 1],
                    permutation: Some(reversed),
                },
            );
        }
        SuiteKind::Divergence => {
            let specs = (0..k - 1)
                .map(|_| divergence_polynomial(n, 2, rng))
                .collect::<Result<_>>()?;
            push(
                "quadratic",
                CaseInput::Divergence {
                    specs,
                    point: random_interior_point(rng, n),
                },
            );
        }
        SuiteKind::Garding => {
            let m = draw_m(cfg, rng);
            let lambda = sample_cone_point(rng, n, k)?.entries().to_vec();
            let b = sample_cone_point(rng, n, k)?;
            push(
                "proportional",
                CaseInput::Cone {
                    lambda,
                    a: b.scaled(2.5).entries().to_vec(),
                    b: b.entries().to_vec(),
                    mu: vec![1.0; n],
                    m,
                    checks: ConeChecks::Superadditivity,
                },
            );
            push(
                "unit_point",
                CaseInput::Cone {
                    lambda: vec![1.0; n],
                    a: vec![1.0; n],
                    b: vec![1.0; n],
                    mu: vec![1.0; n],
                    m,
                    checks: ConeChecks::LemmaMk,
                },
            );
        }
    }
    Ok(out)
}

fn energy(cfg: &SuiteConfig, specs: &[&FunctionSpec]) -> Result<f64> {
    Ok(mixed_energy(specs, cfg.space(), &cfg.quadrature)?.value)
}

/// `I_j[u]`, clamped at zero.
fn diagonal_energy(cfg: &SuiteConfig, u: &FunctionSpec, order: usize) -> Result<f64> {
    Ok(energy(cfg, &vec![u; order + 1])?.max(0.0))
}

fn relative(margin: f64, scale: f64) -> f64 {
    margin / scale.abs().max(RESIDUAL_FLOOR)
}

fn function_specs(input: &CaseInput) -> Result<(&[FunctionSpec], Option<&[usize]>)> {
    match input {
        CaseInput::Functions { specs, permutation } => Ok((specs, permutation.as_deref())),
        _ => Err(Error::InvalidInput("case input does not match the suite".into())),
    }
}

fn check_count(specs: &[FunctionSpec], want: usize) -> Result<()> {
    if specs.len() != want {
        return Err(Error::DimensionMismatch {
            expected: want,
            got: specs.len(),
        });
    }
    Ok(())
}

pub(super) fn evaluate(cfg: &SuiteConfig, input: &CaseInput) -> Result<Outcome> {
    let k = cfg.k;
    match cfg.suite {
        SuiteKind::Hoelder => {
            let (specs, _) = function_specs(input)?;
            check_count(specs, k + 1)?;
            let root = 1.0 / (k + 1) as f64;
            let mut rhs = 1.0;
            for u in specs {
                rhs *= diagonal_energy(cfg, u, k)?.powf(root);
            }
            let refs: Vec<&FunctionSpec> = specs.iter().collect();
            let f = energy(cfg, &refs)?;
            Ok(Outcome::plain(relative(rhs - f, rhs)))
        }
        SuiteKind::Convexity => {
            let (specs, _) = function_specs(input)?;
            let m = cfg.m.unwrap_or(0);
            check_count(specs, m + 2)?;
            let vs: Vec<&FunctionSpec> = specs[2..].iter().collect();
            let p = (k - m + 1) as f64;
            let lower = |x: &FunctionSpec| -> Result<f64> {
                let mut slots = vec![x; k - m + 1];
                slots.extend_from_slice(&vs);
                Ok(energy(cfg, &slots)?.max(0.0).powf(1.0 / p))
            };
            let (u, v) = (&specs[0], &specs[1]);
            let sum = u.sum(v)?;
            let lhs = lower(u)? + lower(v)?;
            Ok(Outcome::plain(relative(lhs - lower(&sum)?, lhs)))
        }
        SuiteKind::CauchySchwarz => {
            let (specs, _) = function_specs(input)?;
            check_count(specs, k + 1)?;
            let vs: Vec<&FunctionSpec> = specs[2..].iter().collect();
            let f = |a: &FunctionSpec, b: &FunctionSpec| -> Result<f64> {
                let mut slots = vec![a, b];
                slots.extend_from_slice(&vs);
                energy(cfg, &slots)
            };
            let (u0, u1) = (&specs[0], &specs[1]);
            let product = f(u0, u0)? * f(u1, u1)?;
            let cross = f(u0, u1)?;
            Ok(Outcome::plain(relative(product - cross * cross, product)))
        }
        SuiteKind::PoincareComplex | SuiteKind::PoincareReal => {
            let (specs, _) = function_specs(input)?;
            check_count(specs, 1)?;
            let m = cfg.m.unwrap_or(0);
            let u = &specs[0];
            let v = unit_hessian_potential(cfg.space(), cfg.n);
            let i_m = diagonal_energy(cfg, u, m)?;
            let i_k = diagonal_energy(cfg, u, k)?;
            let i_k_v = diagonal_energy(cfg, &v, k)?;
            let mut slots = vec![u; m + 1];
            slots.extend(std::iter::repeat_n(&v, k - m));
            let f = energy(cfg, &slots)?;
            let chain_i = relative(f - i_m, f);
            let rhs = i_k.powf((m + 1) as f64 / (k + 1) as f64)
                * i_k_v.powf((k - m) as f64 / (k + 1) as f64);
            let chain_ii = relative(rhs - i_m, rhs);
            let ratio = i_m.powf(1.0 / (m + 1) as f64) / i_k.powf(1.0 / (k + 1) as f64);
            Ok(Outcome {
                margin: chain_i.min(chain_ii),
                extra: Some(ratio),
                failed_check: None,
            })
        }
        SuiteKind::Symmetry => {
            let (specs, permutation) = function_specs(input)?;
            check_count(specs, k + 1)?;
            let permutation = permutation
                .ok_or_else(|| Error::InvalidInput("symmetry case without a permutation".into()))?;
            let refs: Vec<&FunctionSpec> = specs.iter().collect();
            Ok(Outcome::plain(-symmetry_residual(&refs, &cfg.quadrature, permutation)?))
        }
        SuiteKind::Divergence => {
            let CaseInput::Divergence { specs, point } = input else {
                return Err(Error::InvalidInput("case input does not match the suite".into()));
            };
            let r = divergence_residual(specs, point, DIVERGENCE_STEP)?;
            let failed_check = match r.ratio {
                Some(q) if !(RICHARDSON_RANGE.0..=RICHARDSON_RANGE.1).contains(&q) => Some(format!(
                    "residual ratio {q:.4} outside [{}, {}]",
                    RICHARDSON_RANGE.0, RICHARDSON_RANGE.1
                )),
                _ => None,
            };
            Ok(Outcome {
                margin: -relative(r.extrapolated, r.magnitude),
                extra: r.ratio,
                failed_check,
            })
        }
        SuiteKind::Garding => {
            let CaseInput::Cone {
                lambda,
                a,
                b,
                mu,
                m,
                checks,
            } = input
            else {
                return Err(Error::InvalidInput("case input does not match the suite".into()));
            };
            let sv = |v: &[f64]| SpectrumVector::new(v.to_vec());
            let (lambda, a, b, mu) = (sv(lambda)?, sv(a)?, sv(b)?, sv(mu)?);
            let mut margin = f64::INFINITY;
            if matches!(checks, ConeChecks::Both | ConeChecks::Superadditivity) {
                margin = margin.min(garding_superadditivity_check(&lambda, &a, &b, *m, k)?);
            }
            if matches!(checks, ConeChecks::Both | ConeChecks::LemmaMk) {
                margin = margin.min(lemma_mk_check(&lambda, &mu, *m, k)?.margin);
            }
            Ok(Outcome::plain(margin))
        }
    }
}

/// Central-difference divergence of the Newton tensor field at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceResidual {
    /// `max_i |Σ_j ∂_j T^{ij}|` with step `h`.
    pub coarse: f64,
    /// Same with step `h/2`.
    pub fine: f64,
    /// Richardson combination `(4·fine − coarse)/3`, max norm.
    pub extrapolated: f64,
    /// `max_i Σ_j |∂_j T^{ij}|` at step `h/2`.
    pub magnitude: f64,
    /// `coarse / fine` when the tensor has degree ≥ 3 and `fine` is above roundoff.
    pub ratio: Option<f64>,
}

fn divergence_vector(
    fns: &[crate::funcspace::CompiledFunction],
    point: &[f64],
    h: f64,
) -> Result<(Vec<f64>, f64)> {
    let n = point.len();
    let tensor = |x: &[f64]| -> Result<DMatrix<f64>> {
        let mut hess = DMatrix::zeros(n, n);
        let mats = fns
            .iter()
            .map(|f| {
                f.hessian_into(x, &mut hess);
                SymmetricMatrix::new(hess.clone())
            })
            .collect::<Result<Vec<_>>>()?;
        newton_tensor_matrix(&mats, n)
    };
    let mut div = vec![0.0; n];
    let mut mag = vec![0.0; n];
    let mut x = point.to_vec();
    for j in 0..n {
        x[j] = point[j] + h;
        let plus = tensor(&x)?;
        x[j] = point[j] - h;
        let minus = tensor(&x)?;
        x[j] = point[j];
        for i in 0..n {
            let d = (plus[(i, j)] - minus[(i, j)]) / (2.0 * h);
            div[i] += d;
            mag[i] += d.abs();
        }
    }
    Ok((div, mag.into_iter().fold(0.0, f64::max)))
}

/// Row divergence of `S̃^{ij}_{k−1}(Hess u_1, ..., Hess u_{k−1})` at `point`.
pub fn divergence_residual(specs: &[FunctionSpec], point: &[f64], h: f64) -> Result<DivergenceResidual> {
    let n = point.len();
    for s in specs {
        if s.space != Space::Real || s.n != n {
            return Err(Error::InvalidInput(
                "divergence check needs real functions matching the point".into(),
            ));
        }
    }
    let fns: Vec<_> = specs.iter().map(FunctionSpec::compile).collect();
    let (coarse, _) = divergence_vector(&fns, point, h)?;
    let (fine, magnitude) = divergence_vector(&fns, point, 0.5 * h)?;
    let norm = |v: &[f64]| v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let extrapolated: Vec<f64> = fine.iter().zip(&coarse).map(|(f, c)| (4.0 * f - c) / 3.0).collect();
    let tensor_degree: usize = specs.iter().map(|s| s.degree().saturating_sub(2)).sum();
    let (c, f) = (norm(&coarse), norm(&fine));
    let ratio = (tensor_degree >= 3 && f > ROUNDOFF_FLOOR * magnitude).then(|| c / f);
    Ok(DivergenceResidual {
        coarse: c,
        fine: f,
        extrapolated: norm(&extrapolated),
        magnitude,
        ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn quadratic_inputs_have_zero_divergence() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let specs: Vec<_> = (0..2).map(|_| divergence_polynomial(3, 2, &mut rng).unwrap()).collect();
        let r = divergence_residual(&specs, &[0.1, 0.2, -0.3], DIVERGENCE_STEP).unwrap();
        assert!(r.coarse <= 1e-12 && r.fine <= 1e-12);
        assert_eq!(r.ratio, None);
    }

    #[test]
    fn quartic_inputs_converge_at_second_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let specs: Vec<_> = (0..2).map(|_| divergence_polynomial(3, 4, &mut rng).unwrap()).collect();
        let r = divergence_residual(&specs, &[0.3, -0.1, 0.2], DIVERGENCE_STEP).unwrap();
        let q = r.ratio.unwrap();
        assert!((3.5..=4.5).contains(&q), "{q}");
        assert!(r.extrapolated <= 1e-6 * r.magnitude);
    }

    #[test]
    fn unit_potential_has_identity_hessian() {
        for space in [Space::Complex, Space::Real] {
            let v = unit_hessian_potential(space, 2);
            let spec = v.radial_spectrum(0.4).unwrap();
            assert_eq!(spec.entries(), &[1.0, 1.0]);
        }
    }
}
