//! Hessian energy integrals over the unit ball.
//!
//! All integrals are against Lebesgue measure. For `C^n` the mixed energy is
//! `∫ (−u_0) S̃_k(Hess_C u_1, ..., Hess_C u_k) dV`, for `R^n` the same with real
//! Hessians.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcspace::{
    check_boundary_vanishing, complex_from_coordinate_hessian, radial_spectrum, CompiledFunction,
    FunctionSpec, RadialForm, Space,
};
use crate::quadrature::{
    ball_rule, gauss_legendre_unit, grid_rule, sphere_area, BallRule, CompensatedSum,
    QuadratureScheme,
};
use crate::symfun::{factorial, polarized_sk_grouped, Matrix, SpectrumVector, SymmetricMatrix};

/// Denominator floor of relative residuals.
pub const RESIDUAL_FLOOR: f64 = 1e-300;
/// Sphere tolerance used to decide whether an argument vanishes on the boundary.
pub const BOUNDARY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyValue {
    pub value: f64,
    /// Absolute error estimate: `τ_quad · Σ w |integrand|`.
    pub tau: f64,
    pub scheme: QuadratureScheme,
}

/// Slot layout after merging equal arguments: `(spec, multiplicity)`.
fn group_slots<'a>(slots: &[&'a FunctionSpec]) -> Vec<(&'a FunctionSpec, usize)> {
    let mut groups: Vec<(&FunctionSpec, usize)> = Vec::new();
    for s in slots {
        match groups.iter_mut().find(|(g, _)| std::ptr::eq(*g, *s) || *g == *s) {
            Some(entry) => entry.1 += 1,
            None => groups.push((s, 1)),
        }
    }
    groups
}

fn check_args(specs: &[&FunctionSpec], space: Space) -> Result<(usize, usize)> {
    if specs.is_empty() {
        return Err(Error::InvalidInput("a mixed energy needs a weight slot".into()));
    }
    let n = specs[0].n;
    for s in specs {
        if s.space != space {
            return Err(Error::InvalidInput(format!(
                "expected {space} functions, got a {} one",
                s.space
            )));
        }
        if s.n != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: s.n,
            });
        }
    }
    let k = specs.len() - 1;
    if k > n {
        return Err(Error::OrderOutOfRange { k, n });
    }
    Ok((n, k))
}

/// `F_k[u_0, ..., u_k]` on the unit ball of `C^n`.
pub fn mixed_energy_complex(specs: &[&FunctionSpec], scheme: &QuadratureScheme) -> Result<EnergyValue> {
    mixed_energy(specs, Space::Complex, scheme)
}

/// `G_k[u_0, ..., u_k]` on the unit ball of `R^n`.
pub fn mixed_energy_real(specs: &[&FunctionSpec], scheme: &QuadratureScheme) -> Result<EnergyValue> {
    mixed_energy(specs, Space::Real, scheme)
}

/// Dispatches on `space`; every argument must live there.
pub fn mixed_energy(specs: &[&FunctionSpec], space: Space, scheme: &QuadratureScheme) -> Result<EnergyValue> {
    scheme.validate()?;
    let (n, _k) = check_args(specs, space)?;
    let weight = specs[0];
    let groups = group_slots(&specs[1..]);
    let (sum, abs) = match *scheme {
        QuadratureScheme::RadialGauss { nodes } => {
            let radial: Option<Vec<RadialForm>> = specs.iter().map(|s| s.as_radial()).collect();
            match radial {
                Some(forms) => radial_path(space, n, &forms, &groups, nodes)?,
                None => {
                    let degree = weight.degree()
                        + groups
                            .iter()
                            .map(|(s, m)| s.degree().saturating_sub(2) * m)
                            .sum::<usize>();
                    let per_axis = degree / 2 + 1;
                    let rule = ball_rule(space.real_dim(n), per_axis)?;
                    cubature_path(space, n, weight, &groups, &rule)?
                }
            }
        }
        QuadratureScheme::Grid { resolution } => {
            let rule = grid_rule(space.real_dim(n), resolution)?;
            cubature_path(space, n, weight, &groups, &rule)?
        }
    };
    Ok(EnergyValue {
        value: sum,
        tau: scheme.tau() * abs,
        scheme: *scheme,
    })
}

fn not_radial() -> Error {
    Error::InvalidInput("radial path needs radial arguments".into())
}

fn radial_path(
    space: Space,
    n: usize,
    forms: &[RadialForm],
    groups: &[(&FunctionSpec, usize)],
    nodes: usize,
) -> Result<(f64, f64)> {
    let deg_t = |c: &[f64]| c.iter().rposition(|&b| b != 0.0).map_or(0, |m| m + 1);
    let weight_form = &forms[0];
    let group_coeffs: Vec<(Vec<f64>, usize)> = groups
        .iter()
        .map(|(s, m)| Ok((s.as_radial().ok_or_else(not_radial)?.coeffs, *m)))
        .collect::<Result<_>>()?;
    // Integrand degree in t: weight, plus φ′ (degree M−1) per Hessian slot.
    let t_degree = deg_t(&weight_form.coeffs)
        + group_coeffs
            .iter()
            .map(|(c, m)| deg_t(c).saturating_sub(1) * m)
            .sum::<usize>();
    let (variable_degree, prefactor) = match space {
        // ∫_B f(|z|²) dV = π^n/(n−1)! ∫₀¹ f(t) t^{n−1} dt
        Space::Complex => (
            t_degree + n - 1,
            std::f64::consts::PI.powi(n as i32) / factorial(n - 1),
        ),
        // ∫_B f(|x|²) dV = |S^{n−1}| ∫₀¹ f(r²) r^{n−1} dr
        Space::Real => (2 * t_degree + n - 1, sphere_area(n)),
    };
    let points = nodes.max(variable_degree / 2 + 1);
    let mut sum = CompensatedSum::default();
    let mut abs = CompensatedSum::default();
    for (x, w) in gauss_legendre_unit(points) {
        let (t, jac) = match space {
            Space::Complex => (x, x.powi(n as i32 - 1)),
            Space::Real => (x * x, x.powi(n as i32 - 1)),
        };
        let spectra: Vec<SpectrumVector> = group_coeffs
            .iter()
            .map(|(c, _)| radial_spectrum(space, n, c, t))
            .collect::<Result<_>>()?;
        let refs: Vec<(&SpectrumVector, usize)> =
            spectra.iter().zip(&group_coeffs).map(|(s, (_, m))| (s, *m)).collect();
        let mixed = polarized_sk_grouped(&refs)?;
        let weight = -weight_form.value(t);
        let f = prefactor * w * jac * weight * mixed;
        sum.add(f);
        abs.add(f.abs());
    }
    Ok((sum.value(), abs.value()))
}

fn hessian_matrix(space: Space, n: usize, h: &DMatrix<f64>) -> Result<Matrix> {
    Ok(match space {
        Space::Real => Matrix::Symmetric(SymmetricMatrix::new(h.clone())?),
        Space::Complex => Matrix::Hermitian(complex_from_coordinate_hessian(h, n)?),
    })
}

fn cubature_path(
    space: Space,
    n: usize,
    weight: &FunctionSpec,
    groups: &[(&FunctionSpec, usize)],
    rule: &BallRule,
) -> Result<(f64, f64)> {
    let d = space.real_dim(n);
    let w_fn = weight.compile();
    let compiled: Vec<CompiledFunction> = groups.iter().map(|(s, _)| s.compile()).collect();
    let mut h = DMatrix::zeros(d, d);
    let mut sum = CompensatedSum::default();
    let mut abs = CompensatedSum::default();
    for i in 0..rule.len() {
        let p = rule.node(i);
        let u0 = w_fn.value(p);
        if u0 == 0.0 {
            continue;
        }
        let mut hessians = Vec::with_capacity(compiled.len());
        for c in &compiled {
            c.hessian_into(p, &mut h);
            hessians.push(hessian_matrix(space, n, &h)?);
        }
        let refs: Vec<(&Matrix, usize)> =
            hessians.iter().zip(groups).map(|(m, (_, k))| (m, *k)).collect();
        let f = rule.weights[i] * (-u0) * polarized_sk_grouped(&refs)?;
        sum.add(f);
        abs.add(f.abs());
    }
    Ok((sum.value(), abs.value()))
}

/// `I_k[u] = F_k[u, ..., u]`.
pub fn energy_ik(u: &FunctionSpec, k: usize, scheme: &QuadratureScheme) -> Result<EnergyValue> {
    let slots = vec![u; k + 1];
    mixed_energy_complex(&slots, scheme)
}

/// `J_k[u] = G_k[u, ..., u]`.
pub fn energy_jk(u: &FunctionSpec, k: usize, scheme: &QuadratureScheme) -> Result<EnergyValue> {
    let slots = vec![u; k + 1];
    mixed_energy_real(&slots, scheme)
}

/// `∫ (−u) S̃_k(Hess u, ..., Hess u, Hess v_1, ..., Hess v_m)` with `u` in the
/// weight slot and `k − m` Hessian slots.
pub fn mixed_lower_energy(
    u: &FunctionSpec,
    vs: &[&FunctionSpec],
    k: usize,
    scheme: &QuadratureScheme,
) -> Result<EnergyValue> {
    let m = vs.len();
    if m >= k {
        return Err(Error::Precondition(format!(
            "need fewer auxiliary functions than the order, got m = {m}, k = {k}"
        )));
    }
    let mut slots = vec![u; k - m + 1];
    slots.extend_from_slice(vs);
    mixed_energy(&slots, u.space, scheme)
}

/// `|F[permuted] − F[original]| / max(|F[original]|, floor)`.
///
/// `permutation[i]` names the original slot placed at position `i`.
pub fn symmetry_residual(
    specs: &[&FunctionSpec],
    scheme: &QuadratureScheme,
    permutation: &[usize],
) -> Result<f64> {
    if permutation.len() != specs.len() {
        return Err(Error::DimensionMismatch {
            expected: specs.len(),
            got: permutation.len(),
        });
    }
    let mut seen = vec![false; specs.len()];
    for &p in permutation {
        if p >= specs.len() || std::mem::replace(&mut seen[p], true) {
            return Err(Error::InvalidInput(format!(
                "{permutation:?} is not a permutation"
            )));
        }
    }
    for (i, s) in specs.iter().enumerate() {
        if !check_boundary_vanishing(s, BOUNDARY_TOLERANCE) {
            return Err(Error::Precondition(format!(
                "argument {i} does not vanish on the unit sphere"
            )));
        }
    }
    let space = specs[0].space;
    let original = mixed_energy(specs, space, scheme)?;
    let permuted: Vec<&FunctionSpec> = permutation.iter().map(|&p| specs[p]).collect();
    let other = mixed_energy(&permuted, space, scheme)?;
    Ok((other.value - original.value).abs() / original.value.abs().max(RESIDUAL_FLOOR))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::{random_admissible, Richness};
    use crate::quadrature::ball_volume;
    use std::f64::consts::PI;

    fn gauss() -> QuadratureScheme {
        QuadratureScheme::default()
    }

    #[test]
    fn paraboloid_complex_closed_form() {
        for n in 1..=3 {
            let u = FunctionSpec::unit_paraboloid(Space::Complex, n);
            let want = PI.powi(n as i32) / factorial(n + 1);
            for k in 1..=n {
                let got = energy_ik(&u, k, &gauss()).unwrap();
                assert!((got.value - want).abs() < 1e-13 * want, "n={n} k={k}");
            }
        }
        let u = FunctionSpec::unit_paraboloid(Space::Complex, 1);
        assert!((energy_ik(&u, 1, &gauss()).unwrap().value - PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn paraboloid_real_closed_form() {
        for n in 1..=4 {
            let u = FunctionSpec::unit_paraboloid(Space::Real, n);
            for k in 1..=n {
                let want = 2f64.powi(k as i32) * ball_volume(n) * 2.0 / (n as f64 + 2.0);
                let got = energy_jk(&u, k, &gauss()).unwrap();
                assert!((got.value - want).abs() < 1e-13 * want);
            }
        }
    }

    #[test]
    fn zero_hessian_slot_vanishes() {
        let u = FunctionSpec::unit_paraboloid(Space::Complex, 2);
        let a = FunctionSpec::affine(Space::Complex, 2, vec![1.0, 0.0, 2.0, 0.0], 3.0).unwrap();
        let v = mixed_energy_complex(&[&u, &a, &u], &gauss()).unwrap();
        assert_eq!(v.value, 0.0);
    }

    #[test]
    fn cubature_agrees_with_radial_path() {
        // A radial function wrapped with a zero bump is forced onto the cubature path.
        let u = FunctionSpec::radial(Space::Complex, 2, vec![0.7, 1.3]).unwrap();
        let bump = crate::funcspace::Polynomial::new(vec![crate::funcspace::Monomial {
            coeff: 1.0,
            powers: vec![1, 0, 0, 0],
        }]);
        let pu = FunctionSpec::perturbed(&u, bump, 1e-300).unwrap();
        assert!(pu.as_radial().is_none());
        for k in 1..=2 {
            let a = energy_ik(&u, k, &gauss()).unwrap().value;
            let b = energy_ik(&pu, k, &gauss()).unwrap().value;
            assert!((a - b).abs() < 1e-12 * a, "k={k}: {a} vs {b}");
        }
    }

    #[test]
    fn grid_agrees_within_tau() {
        let u = FunctionSpec::radial(Space::Real, 2, vec![0.5, 1.0]).unwrap();
        let exact = energy_jk(&u, 2, &gauss()).unwrap().value;
        let scheme = QuadratureScheme::Grid { resolution: 200 };
        let grid = energy_jk(&u, 2, &scheme).unwrap();
        assert!((grid.value - exact).abs() <= scheme.tau() * exact.abs());
    }

    #[test]
    fn mixed_lower_with_identity_slots() {
        // With v = |z|² the slots are the identity, so the value is ∫(−u) S_{k−m}(Hess u).
        let u = random_admissible(4, 3, 3, Space::Complex, Richness::Radial).unwrap();
        let v = FunctionSpec::radial(Space::Complex, 3, vec![1.0]).unwrap();
        let lower = mixed_lower_energy(&u, &[&v], 3, &gauss()).unwrap().value;
        let direct = energy_ik(&u, 2, &gauss()).unwrap().value;
        assert!((lower - direct).abs() < 1e-12 * direct);
        let m0 = mixed_lower_energy(&u, &[], 3, &gauss()).unwrap().value;
        assert_eq!(m0, energy_ik(&u, 3, &gauss()).unwrap().value);
        assert!(mixed_lower_energy(&u, &[&v, &v, &v], 3, &gauss()).is_err());
    }

    #[test]
    fn scaling_is_homogeneous() {
        let u = random_admissible(8, 2, 2, Space::Complex, Richness::Perturbed).unwrap();
        let c = 1.7;
        let cu = u.scaled(c).unwrap();
        let a = energy_ik(&u, 2, &gauss()).unwrap().value;
        let b = energy_ik(&cu, 2, &gauss()).unwrap().value;
        assert!((b - c.powi(3) * a).abs() < 1e-10 * b.abs());
    }

    #[test]
    fn symmetry_residual_cases() {
        let a = random_admissible(1, 2, 2, Space::Complex, Richness::Radial).unwrap();
        let b = random_admissible(2, 2, 2, Space::Complex, Richness::Perturbed).unwrap();
        let specs = [&a, &b, &a];
        assert_eq!(symmetry_residual(&specs, &gauss(), &[0, 1, 2]).unwrap(), 0.0);
        assert_eq!(symmetry_residual(&[&a, &a, &a], &gauss(), &[2, 0, 1]).unwrap(), 0.0);
        let r = symmetry_residual(&specs, &gauss(), &[1, 0, 2]).unwrap();
        assert!(r <= gauss().tau(), "{r}");
        let sq = FunctionSpec::affine(Space::Complex, 2, vec![0.0; 4], 1.0).unwrap();
        assert!(matches!(
            symmetry_residual(&[&a, &sq, &a], &gauss(), &[1, 0, 2]),
            Err(Error::Precondition(_))
        ));
    }
}
