//! Normalized elementary symmetric functions and the algebra built on them.
//!
//! Every `S_k` in this crate carries the normalization `k!(n-k)!/n!`, so that
//! `S_k(1, ..., 1) = 1` for all `k`. Polarizations, Newton tensors and cone
//! tests inherit that convention.

mod cone;
mod kronecker;
mod lemmas;
mod matrix;
mod polarize;

pub use cone::{
    cone_check, garding_superadditivity_check, in_cone, lemma_mk_check, sample_cone_point,
    ConeSlack, LemmaMkOutcome, SLACK_TOLERANCE,
};
pub use kronecker::{
    kronecker_delta, newton_tensor, newton_tensor_matrix, polarized_sk_kronecker,
    polarized_sk_kronecker_raw, MultiIndex, KRONECKER_MAX_DIM,
};
pub use lemmas::{algebraic_lemma_check, AlgebraicMargins};
pub use matrix::{HermitianMatrix, Matrix, MatrixKind, SymmetricMatrix};
pub use polarize::{polarized_sk_grouped, polarized_sk_subsets, Polarizable};

use crate::error::{Error, Result};

/// A point of `R^n`, usually the eigenvalues of a Hessian.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumVector {
    entries: Vec<f64>,
}

impl SpectrumVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidInput("spectrum vector must have n >= 1".into()));
        }
        if let Some(bad) = entries.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "spectrum vector entry {bad} is not finite"
            )));
        }
        Ok(Self { entries })
    }

    /// The all-ones vector `e`.
    pub fn ones(n: usize) -> Self {
        Self {
            entries: vec![1.0; n.max(1)],
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            entries: vec![0.0; n.max(1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn max_entry(&self) -> f64 {
        self.entries.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `self + t·e`.
    pub fn shifted(&self, t: f64) -> Self {
        Self {
            entries: self.entries.iter().map(|x| x + t).collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            entries: self.entries.iter().map(|x| c * x).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self {
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

/// Binomial coefficient as a float; exact for every size used here.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Unnormalized elementary symmetric polynomials `e_0..=e_k` of `values`.
pub(crate) fn elementary_symmetric(values: &[f64], k: usize) -> Vec<f64> {
    let mut e = vec![0.0; k + 1];
    e[0] = 1.0;
    for (i, &x) in values.iter().enumerate() {
        for j in (1..=k.min(i + 1)).rev() {
            e[j] += x * e[j - 1];
        }
    }
    e
}

/// Normalized `S_k(λ) = e_k(λ) / C(n, k)`; `S_0 = 1`.
pub fn s_k(lambda: &SpectrumVector, k: usize) -> Result<f64> {
    let n = lambda.dim();
    if k > n {
        return Err(Error::OrderOutOfRange { k, n });
    }
    let e = elementary_symmetric(&lambda.entries, k);
    Ok(e[k] / binomial(n, k))
}

/// Normalized `S_k` of a Hessian value, through its principal minors.
pub fn s_k_matrix(a: &Matrix, k: usize) -> Result<f64> {
    a.s_k(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force_e(values: &[f64], k: usize) -> f64 {
        let n = values.len();
        (0u32..(1 << n))
            .filter(|mask| mask.count_ones() as usize == k)
            .map(|mask| {
                (0..n)
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| values[i])
                    .product::<f64>()
            })
            .sum()
    }

    #[test]
    fn all_ones_is_normalized() {
        let e = SpectrumVector::ones(3);
        for k in 0..=3 {
            assert_eq!(s_k(&e, k).unwrap(), 1.0);
        }
    }

    #[test]
    fn small_example_matches_enumeration() {
        let v = SpectrumVector::new(vec![3.0, 1.0, 2.0]).unwrap();
        let oracle = brute_force_e(v.entries(), 2) / 3.0;
        assert_eq!(oracle, 11.0 / 3.0);
        assert!((s_k(&v, 2).unwrap() - 11.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn order_zero_is_one() {
        let v = SpectrumVector::new(vec![-4.0, 0.5]).unwrap();
        assert_eq!(s_k(&v, 0).unwrap(), 1.0);
    }

    #[test]
    fn order_above_dimension_is_rejected() {
        let v = SpectrumVector::new(vec![1.0, 2.0]).unwrap();
        assert_eq!(s_k(&v, 3), Err(Error::OrderOutOfRange { k: 3, n: 2 }));
    }

    #[test]
    fn dp_matches_enumeration_on_mixed_signs() {
        let v = [0.3, -1.7, 2.2, 0.9, -0.4];
        let sv = SpectrumVector::new(v.to_vec()).unwrap();
        for k in 0..=5 {
            let want = brute_force_e(&v, k) / binomial(5, k);
            assert!((s_k(&sv, k).unwrap() - want).abs() < 1e-13);
        }
    }

    #[test]
    fn constructor_rejects_bad_entries() {
        assert!(SpectrumVector::new(vec![]).is_err());
        assert!(SpectrumVector::new(vec![1.0, f64::NAN]).is_err());
    }
}
