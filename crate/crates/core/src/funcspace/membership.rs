use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{complex_from_coordinate_hessian, FunctionSpec, Space};
use crate::error::{Error, Result};
use crate::quadrature::{sphere_points, QuadratureScheme};
use crate::symfun::{elementary_symmetric, SpectrumVector, SymmetricMatrix};

/// Default tolerance on the least `S_j` value.
pub const MEMBERSHIP_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipReport {
    pub k: usize,
    /// Minimum over sample points of `min_{j ≤ k} S_j` of the Hessian spectrum.
    pub min_slack: f64,
    pub worst_point: Vec<f64>,
    pub passed: bool,
}

/// Hessian spectrum appropriate to the function's space at a real-coordinate point.
pub(crate) fn spectrum_from_coordinate_hessian(
    space: Space,
    n: usize,
    h: &DMatrix<f64>,
) -> Result<SpectrumVector> {
    Ok(match space {
        Space::Real => SymmetricMatrix::new(h.clone())?.eigenvalues(),
        Space::Complex => complex_from_coordinate_hessian(h, n)?.eigenvalues(),
    })
}

fn least_normalized(mu: &SpectrumVector, k: usize) -> f64 {
    let n = mu.dim();
    let e = elementary_symmetric(mu.entries(), k);
    (1..=k)
        .map(|j| e[j] / crate::symfun::binomial(n, j))
        .fold(f64::INFINITY, f64::min)
}

/// Samples the Hessian spectrum on the interior nodes of `sampler` and on the
/// unit sphere, and reports the worst cone slack.
pub fn check_membership(u: &FunctionSpec, k: usize, sampler: &QuadratureScheme) -> Result<MembershipReport> {
    check_membership_with(u, k, sampler, MEMBERSHIP_TOLERANCE)
}

pub fn check_membership_with(
    u: &FunctionSpec,
    k: usize,
    sampler: &QuadratureScheme,
    tolerance: f64,
) -> Result<MembershipReport> {
    if k == 0 || k > u.n {
        return Err(Error::OrderOutOfRange { k, n: u.n });
    }
    let d = u.real_dim();
    let f = u.compile();
    let mut h = DMatrix::zeros(d, d);
    let mut worst = f64::INFINITY;
    let mut worst_point = vec![0.0; d];
    if let Some(form) = u.as_radial() {
        // The spectrum depends only on t; sample t on a fine grid of [0, 1].
        const STEPS: usize = 2048;
        for i in 0..=STEPS {
            let t = i as f64 / STEPS as f64;
            let mu = super::radial_spectrum(u.space, u.n, &form.coeffs, t)?;
            let s = least_normalized(&mu, k);
            if s < worst {
                worst = s;
                worst_point = vec![0.0; d];
                worst_point[0] = t.sqrt();
            }
        }
    } else {
        let points = sampler
            .membership_points(d)?
            .into_iter()
            .chain(sphere_points(d));
        for p in points {
            f.hessian_into(&p, &mut h);
            let mu = spectrum_from_coordinate_hessian(u.space, u.n, &h)?;
            let s = least_normalized(&mu, k);
            if s < worst {
                worst = s;
                worst_point = p;
            }
        }
    }
    Ok(MembershipReport {
        k,
        min_slack: worst,
        worst_point,
        passed: worst >= -tolerance,
    })
}

/// `|u| ≤ tol` on a lattice-plus-random sample of the unit sphere.
pub fn check_boundary_vanishing(u: &FunctionSpec, tol: f64) -> bool {
    let f = u.compile();
    sphere_points(u.real_dim())
        .iter()
        .all(|p| f.value(p).abs() <= tol)
}
