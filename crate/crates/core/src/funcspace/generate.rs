use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{check_boundary_vanishing, check_membership, FunctionSpec, Monomial, Polynomial, Space};
use crate::error::{Error, Result};
use crate::quadrature::QuadratureScheme;
use crate::symfun::{sample_cone_point, HermitianMatrix, SymmetricMatrix};

/// Smallest perturbation amplitude tried before falling back to the radial base.
pub const MIN_AMPLITUDE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Richness {
    /// Radial polynomials with non-negative coefficients.
    #[default]
    Radial,
    /// A radial base plus a backtracked polynomial bump times `(t − 1)`.
    Perturbed,
}

impl std::str::FromStr for Richness {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "radial" => Ok(Richness::Radial),
            "perturbed" => Ok(Richness::Perturbed),
            other => Err(Error::config(
                "richness",
                format!("expected radial or perturbed, got `{other}`"),
            )),
        }
    }
}

fn exp1<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    <Exp1 as Distribution<f64>>::sample(&Exp1, rng)
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
}

/// `M ∈ 1..=4` coefficients drawn from `Exp(1)`; plurisubharmonic and zero on the sphere.
pub fn random_psh_radial<R: Rng + ?Sized>(rng: &mut R, space: Space, n: usize) -> Result<FunctionSpec> {
    let m = rng.random_range(1..=4usize);
    let coeffs = (0..m).map(|_| exp1(rng)).collect();
    FunctionSpec::radial(space, n, coeffs)
}

/// Random orthogonal (real) or unitary (complex) conjugate of `diag(μ)` with
/// `μ` sampled from the cone of order `k`, as a pure quadratic form.
pub fn random_cone_quadratic<R: Rng + ?Sized>(
    rng: &mut R,
    space: Space,
    n: usize,
    k: usize,
) -> Result<FunctionSpec> {
    let mu = sample_cone_point(rng, n, k)?;
    match space {
        Space::Real => {
            let g = DMatrix::from_fn(n, n, |_, _| normal(rng));
            let q = g.qr().q();
            let a = &q * DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(mu.entries())) * q.transpose();
            FunctionSpec::quadratic_real(n, &SymmetricMatrix::new(a)?, None, 0.0)
        }
        Space::Complex => {
            let g = DMatrix::from_fn(n, n, |_, _| Complex64::new(normal(rng), normal(rng)));
            let q = g.qr().q();
            let d = DMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    Complex64::new(mu.entries()[i], 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            });
            let a = &q * d * q.adjoint();
            FunctionSpec::quadratic_complex(n, &HermitianMatrix::new(a)?, None, 0.0)
        }
    }
}

fn random_bump<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Polynomial {
    Polynomial::new(
        Polynomial::monomial_exponents(dim, 2)
            .into_iter()
            .map(|powers| Monomial {
                coeff: normal(rng),
                powers,
            })
            .collect(),
    )
}

/// Seeded admissible function vanishing on the unit sphere.
pub fn random_admissible(seed: u64, n: usize, k: usize, space: Space, richness: Richness) -> Result<FunctionSpec> {
    if k == 0 || k > n {
        return Err(Error::OrderOutOfRange { k, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match richness {
        Richness::Radial => random_psh_radial(&mut rng, space, n),
        Richness::Perturbed => {
            let mut coeffs = vec![0.5 + exp1(&mut rng)];
            if rng.random_bool(0.5) {
                coeffs.push(exp1(&mut rng));
            }
            let base = FunctionSpec::radial(space, n, coeffs)?;
            let bump = random_bump(&mut rng, space.real_dim(n));
            let sampler = QuadratureScheme::default();
            let mut amplitude = 0.5;
            while amplitude >= MIN_AMPLITUDE {
                let candidate = FunctionSpec::perturbed(&base, bump.clone(), amplitude)?;
                if check_membership(&candidate, k, &sampler)?.passed {
                    debug_assert!(check_boundary_vanishing(&candidate, 1e-12));
                    return Ok(candidate);
                }
                amplitude *= 0.5;
            }
            Ok(base)
        }
    }
}
