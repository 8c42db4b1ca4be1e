use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{polarized_sk_grouped, s_k, SpectrumVector};
use crate::error::{Error, Result};

/// Absolute bisection tolerance for the cone slack.
pub const SLACK_TOLERANCE: f64 = 1e-12;

/// Membership of `μ` in the closed cone `Γ_k` and its distance along `e` to
/// the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeSlack {
    pub k: usize,
    pub member: bool,
    /// Largest `ε ≥ 0` with `μ − ε·e ∈ Γ_k`; 0 when not a member.
    pub slack: f64,
}

/// `S_j(μ) ≥ 0` for `j = 1..=k`.
pub fn in_cone(mu: &SpectrumVector, k: usize) -> Result<bool> {
    let n = mu.dim();
    if k == 0 || k > n {
        return Err(Error::OrderOutOfRange { k, n });
    }
    let e = super::elementary_symmetric(mu.entries(), k);
    Ok(e[1..].iter().all(|&v| v >= 0.0))
}

pub fn cone_check(mu: &SpectrumVector, k: usize) -> Result<ConeSlack> {
    if !in_cone(mu, k)? {
        return Ok(ConeSlack {
            k,
            member: false,
            slack: 0.0,
        });
    }
    // Membership of μ − ε·e is monotone in ε because e lies in the cone.
    let mut lo = 0.0;
    let mut hi = mu.max_entry();
    if hi <= 0.0 {
        return Ok(ConeSlack {
            k,
            member: true,
            slack: 0.0,
        });
    }
    if in_cone(&mu.shifted(-hi), k)? {
        return Ok(ConeSlack {
            k,
            member: true,
            slack: hi,
        });
    }
    while hi - lo > SLACK_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if in_cone(&mu.shifted(-mid), k)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ConeSlack {
        k,
        member: true,
        slack: lo,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaMkOutcome {
    pub bound_constant: f64,
    pub holds: bool,
    /// `C·S̃_k(λ^m, μ^{k−m}) − S_m(λ)`.
    pub margin: f64,
}

fn require_member(v: &SpectrumVector, k: usize, name: &str) -> Result<()> {
    if in_cone(v, k)? {
        Ok(())
    } else {
        Err(Error::Precondition(format!("{name} is not in the cone of order {k}")))
    }
}

fn check_orders(m: usize, k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::OrderOutOfRange { k, n });
    }
    if m >= k {
        return Err(Error::Precondition(format!("need m < k, got m = {m}, k = {k}")));
    }
    Ok(())
}

/// Checks `S_m(λ) ≤ ε^{-(k−m)} S̃_k(λ^m, μ^{k−m})` where `ε` is the slack of `μ`.
pub fn lemma_mk_check(
    lambda: &SpectrumVector,
    mu: &SpectrumVector,
    m: usize,
    k: usize,
) -> Result<LemmaMkOutcome> {
    let n = lambda.dim();
    super::check_dim(n, mu.dim())?;
    check_orders(m, k, n)?;
    require_member(lambda, k, "lambda")?;
    let slack = cone_check(mu, k)?;
    if !slack.member {
        return Err(Error::Precondition(format!("mu is not in the cone of order {k}")));
    }
    if slack.slack <= 0.0 {
        return Err(Error::DegenerateMu { slack: slack.slack });
    }
    let c = slack.slack.powi(-((k - m) as i32));
    let mixed = polarized_sk_grouped(&[(lambda, m), (mu, k - m)])?;
    let margin = c * mixed - s_k(lambda, m)?;
    Ok(LemmaMkOutcome {
        bound_constant: c,
        holds: margin >= 0.0,
        margin,
    })
}

fn signed_root(x: f64, p: usize) -> f64 {
    if p == 1 {
        x
    } else {
        x.signum() * x.abs().powf(1.0 / p as f64)
    }
}

/// `S̃^{1/(k−m)}(λ^m, (a+b)^{k−m}) − S̃^{1/(k−m)}(λ^m, a^{k−m}) − S̃^{1/(k−m)}(λ^m, b^{k−m})`.
pub fn garding_superadditivity_check(
    lambda: &SpectrumVector,
    a: &SpectrumVector,
    b: &SpectrumVector,
    m: usize,
    k: usize,
) -> Result<f64> {
    let n = lambda.dim();
    super::check_dim(n, a.dim())?;
    super::check_dim(n, b.dim())?;
    check_orders(m, k, n)?;
    require_member(lambda, k, "lambda")?;
    require_member(a, k, "a")?;
    require_member(b, k, "b")?;
    let sum = a.add(b)?;
    let p = k - m;
    let root = |x: &SpectrumVector| -> Result<f64> {
        Ok(signed_root(polarized_sk_grouped(&[(lambda, m), (x, p)])?, p))
    };
    Ok(root(&sum)? - root(a)? - root(b)?)
}

/// Rejection sample from `N(e, I)` until the draw lies in `Γ_k`.
pub fn sample_cone_point<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> Result<SpectrumVector> {
    const MAX_TRIES: usize = 100_000;
    for _ in 0..MAX_TRIES {
        let v: Vec<f64> = (0..n)
            .map(|_| 1.0 + <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
            .collect();
        let v = SpectrumVector::new(v)?;
        if in_cone(&v, k)? {
            return Ok(v);
        }
    }
    Err(Error::Capacity(format!(
        "no cone point of order {k} in dimension {n} after {MAX_TRIES} draws"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sv(v: &[f64]) -> SpectrumVector {
        SpectrumVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn all_ones_has_unit_slack() {
        for k in 1..=3 {
            let c = cone_check(&SpectrumVector::ones(3), k).unwrap();
            assert!(c.member);
            assert_eq!(c.slack, 1.0);
        }
    }

    #[test]
    fn boundary_point_is_member_with_zero_slack() {
        let c = cone_check(&sv(&[-1.0, 2.0, 2.0]), 2).unwrap();
        assert!(c.member);
        assert_eq!(c.slack, 0.0);
    }

    #[test]
    fn negative_vector_is_outside() {
        let c = cone_check(&sv(&[-1.0, -1.0]), 1).unwrap();
        assert!(!c.member);
        assert_eq!(c.slack, 0.0);
    }

    #[test]
    fn slack_matches_closed_form_for_positive_orthant() {
        // Γ_n is the closed orthant, so the slack is the smallest entry.
        let c = cone_check(&sv(&[0.3, 2.0, 1.1]), 3).unwrap();
        assert!((c.slack - 0.3).abs() < 1e-11);
    }

    #[test]
    fn slack_shifts_with_e() {
        let mu = sv(&[-0.2, 1.5, 0.9, 2.0]);
        let base = cone_check(&mu, 2).unwrap();
        assert!(base.member);
        for t in [0.1, 0.75, 3.0] {
            let shifted = cone_check(&mu.shifted(t), 2).unwrap();
            assert!((shifted.slack - base.slack - t).abs() < 1e-10);
        }
    }

    #[test]
    fn lemma_mk_equality_at_e() {
        let e = SpectrumVector::ones(3);
        let out = lemma_mk_check(&e, &e, 1, 2).unwrap();
        assert_eq!(out.bound_constant, 1.0);
        assert!(out.holds);
        assert!(out.margin.abs() < 1e-14);
    }

    #[test]
    fn lemma_mk_zero_lambda() {
        let mu = sv(&[1.0, 2.0, 0.5]);
        let out = lemma_mk_check(&SpectrumVector::zeros(3), &mu, 1, 2).unwrap();
        assert!(out.holds);
    }

    #[test]
    fn lemma_mk_rejects_boundary_mu() {
        let lam = SpectrumVector::ones(3);
        let mu = sv(&[-1.0, 2.0, 2.0]);
        assert_eq!(
            lemma_mk_check(&lam, &mu, 1, 2),
            Err(Error::DegenerateMu { slack: 0.0 })
        );
    }

    #[test]
    fn lemma_mk_random_batch() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let lam = sample_cone_point(&mut rng, 3, 2).unwrap();
            let mu = sample_cone_point(&mut rng, 3, 2).unwrap();
            match lemma_mk_check(&lam, &mu, 1, 2) {
                Ok(out) => assert!(out.margin >= -1e-10, "{out:?}"),
                Err(Error::DegenerateMu { .. }) => {}
                Err(e) => panic!("{e}"),
            }
        }
    }

    #[test]
    fn superadditivity_linear_case_is_exact() {
        let lam = sv(&[1.0, 0.5, 2.0]);
        let a = sv(&[0.2, 1.0, 1.0]);
        let b = sv(&[3.0, 0.1, 0.4]);
        let margin = garding_superadditivity_check(&lam, &a, &b, 1, 2).unwrap();
        assert!(margin.abs() < 1e-14);
    }

    #[test]
    fn superadditivity_equality_for_proportional() {
        let e = SpectrumVector::ones(3);
        let margin = garding_superadditivity_check(&e, &e, &e, 1, 3).unwrap();
        assert!(margin.abs() < 1e-14);
    }

    #[test]
    fn superadditivity_random_batch() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..300 {
            let l = sample_cone_point(&mut rng, 4, 3).unwrap();
            let a = sample_cone_point(&mut rng, 4, 3).unwrap();
            let b = sample_cone_point(&mut rng, 4, 3).unwrap();
            let margin = garding_superadditivity_check(&l, &a, &b, 1, 3).unwrap();
            assert!(margin >= -1e-10);
        }
    }

    #[test]
    fn superadditivity_rejects_outside_points() {
        let e = SpectrumVector::ones(2);
        let bad = sv(&[-1.0, -1.0]);
        assert!(matches!(
            garding_superadditivity_check(&e, &bad, &e, 0, 1),
            Err(Error::Precondition(_))
        ));
    }
}
