use super::matrix::{HermitianMatrix, Matrix, SymmetricMatrix};
use super::{binomial, check_dim, factorial, s_k, SpectrumVector};
use crate::error::{Error, Result};

/// Arguments of the complete polarization of `S_k`.
pub trait Polarizable: Sized {
    fn dim(&self) -> usize;
    /// `Σ c_i · x_i` over a non-empty list.
    fn linear_combination(terms: &[(&Self, f64)]) -> Result<Self>;
    fn s_k(&self, k: usize) -> Result<f64>;
}

impl Polarizable for SpectrumVector {
    fn dim(&self) -> usize {
        SpectrumVector::dim(self)
    }

    fn linear_combination(terms: &[(&Self, f64)]) -> Result<Self> {
        let n = terms[0].0.dim();
        let mut out = vec![0.0; n];
        for (x, c) in terms {
            check_dim(n, x.dim())?;
            for (o, v) in out.iter_mut().zip(x.entries()) {
                *o += c * v;
            }
        }
        SpectrumVector::new(out)
    }

    fn s_k(&self, k: usize) -> Result<f64> {
        s_k(self, k)
    }
}

impl Polarizable for SymmetricMatrix {
    fn dim(&self) -> usize {
        SymmetricMatrix::dim(self)
    }

    fn linear_combination(terms: &[(&Self, f64)]) -> Result<Self> {
        let mut acc = terms[0].0.scaled(terms[0].1);
        for (x, c) in &terms[1..] {
            acc = acc.add(&x.scaled(*c))?;
        }
        Ok(acc)
    }

    fn s_k(&self, k: usize) -> Result<f64> {
        SymmetricMatrix::s_k(self, k)
    }
}

impl Polarizable for HermitianMatrix {
    fn dim(&self) -> usize {
        HermitianMatrix::dim(self)
    }

    fn linear_combination(terms: &[(&Self, f64)]) -> Result<Self> {
        let mut acc = terms[0].0.scaled(terms[0].1);
        for (x, c) in &terms[1..] {
            acc = acc.add(&x.scaled(*c))?;
        }
        Ok(acc)
    }

    fn s_k(&self, k: usize) -> Result<f64> {
        HermitianMatrix::s_k(self, k)
    }
}

impl Polarizable for Matrix {
    fn dim(&self) -> usize {
        Matrix::dim(self)
    }

    fn linear_combination(terms: &[(&Self, f64)]) -> Result<Self> {
        match terms[0].0 {
            Matrix::Symmetric(_) => {
                let inner = terms
                    .iter()
                    .map(|(x, c)| match x {
                        Matrix::Symmetric(a) => Ok((a, *c)),
                        Matrix::Hermitian(_) => Err(mixed_kinds()),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Matrix::Symmetric(SymmetricMatrix::linear_combination(&inner)?))
            }
            Matrix::Hermitian(_) => {
                let inner = terms
                    .iter()
                    .map(|(x, c)| match x {
                        Matrix::Hermitian(a) => Ok((a, *c)),
                        Matrix::Symmetric(_) => Err(mixed_kinds()),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Matrix::Hermitian(HermitianMatrix::linear_combination(&inner)?))
            }
        }
    }

    fn s_k(&self, k: usize) -> Result<f64> {
        Matrix::s_k(self, k)
    }
}

fn mixed_kinds() -> Error {
    Error::InvalidInput("polarization arguments mix symmetric and Hermitian matrices".into())
}

/// Complete polarization `S̃_k(A_1, ..., A_k)` by inclusion–exclusion over
/// subsets: `(1/k!) Σ_T (-1)^{k-|T|} S_k(Σ_{i∈T} A_i)`.
pub fn polarized_sk_subsets<P: Polarizable>(args: &[P]) -> Result<f64> {
    let groups: Vec<(&P, usize)> = args.iter().map(|a| (a, 1)).collect();
    polarized_sk_grouped(&groups)
}

/// The subset formula with repeated arguments collapsed: argument `g` appears
/// `c_g` times, and subsets are counted by how many copies of each they take.
///
/// An empty argument list is `S̃_0 = 1`.
pub fn polarized_sk_grouped<P: Polarizable>(groups: &[(&P, usize)]) -> Result<f64> {
    let groups: Vec<(&P, usize)> = groups.iter().copied().filter(|(_, c)| *c > 0).collect();
    let k: usize = groups.iter().map(|(_, c)| c).sum();
    if k == 0 {
        return Ok(1.0);
    }
    let n = groups[0].0.dim();
    for (g, _) in &groups {
        check_dim(n, g.dim())?;
    }
    if k > n {
        return Err(Error::OrderOutOfRange { k, n });
    }
    if let [(single, _)] = groups[..] {
        return single.s_k(k);
    }

    let mut taken = vec![0usize; groups.len()];
    let mut total = 0.0;
    loop {
        let size: usize = taken.iter().sum();
        if size > 0 {
            let mut weight = if (k - size).is_multiple_of(2) { 1.0 } else { -1.0 };
            for (a, (_, c)) in taken.iter().zip(&groups) {
                weight *= binomial(*c, *a);
            }
            let terms: Vec<(&P, f64)> = taken
                .iter()
                .zip(&groups)
                .filter(|(a, _)| **a > 0)
                .map(|(a, (g, _))| (*g, *a as f64))
                .collect();
            total += weight * P::linear_combination(&terms)?.s_k(k)?;
        }
        // odometer over 0..=c_g for each group
        let mut pos = 0;
        loop {
            if pos == groups.len() {
                return Ok(total / factorial(k));
            }
            if taken[pos] < groups[pos].1 {
                taken[pos] += 1;
                break;
            }
            taken[pos] = 0;
            pos += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_with_diagonal_gives_half_trace() {
        let (a, b) = (0.7, -2.5);
        let args = [
            SymmetricMatrix::identity(2),
            SymmetricMatrix::diagonal(&[a, b]).unwrap(),
        ];
        // ½(det(I+B) − det I − det B) = (a+b)/2
        let want = 0.5 * ((1.0 + a) * (1.0 + b) - 1.0 - a * b);
        assert!((want - (a + b) / 2.0).abs() < 1e-15);
        assert!((polarized_sk_subsets(&args).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn two_diagonals() {
        let args = [
            SymmetricMatrix::diagonal(&[1.0, 2.0]).unwrap(),
            SymmetricMatrix::diagonal(&[3.0, 4.0]).unwrap(),
        ];
        assert_eq!(polarized_sk_subsets(&args).unwrap(), 5.0);
    }

    #[test]
    fn diagonal_repetition_reproduces_sk() {
        let a = SymmetricMatrix::from_rows(&[
            vec![1.0, 0.2, -0.3],
            vec![0.2, -0.5, 0.8],
            vec![-0.3, 0.8, 2.0],
        ])
        .unwrap();
        for k in 1..=3 {
            let args = vec![a.clone(); k];
            let got = polarized_sk_subsets(&args).unwrap();
            let grouped = polarized_sk_grouped(&[(&a, k)]).unwrap();
            let want = a.s_k(k).unwrap();
            assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));
            assert!((grouped - want).abs() <= 1e-12 * want.abs().max(1.0));
        }
    }

    #[test]
    fn grouping_matches_expanded_arguments() {
        let l = SpectrumVector::new(vec![0.3, 1.2, -0.1, 2.0]).unwrap();
        let m = SpectrumVector::new(vec![1.0, 0.4, 0.9, 0.2]).unwrap();
        let expanded = polarized_sk_subsets(&[l.clone(), l.clone(), m.clone()]).unwrap();
        let grouped = polarized_sk_grouped(&[(&l, 2), (&m, 1)]).unwrap();
        assert!((expanded - grouped).abs() < 1e-13);
    }

    #[test]
    fn mixed_kinds_rejected() {
        let args = [
            Matrix::Symmetric(SymmetricMatrix::identity(2)),
            Matrix::Hermitian(HermitianMatrix::identity(2)),
        ];
        assert!(matches!(
            polarized_sk_subsets(&args),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn mismatched_dims_rejected() {
        let args = [SymmetricMatrix::identity(2), SymmetricMatrix::identity(3)];
        assert!(polarized_sk_subsets(&args).is_err());
    }

    #[test]
    fn too_many_arguments_rejected() {
        let args = vec![SymmetricMatrix::identity(2); 3];
        assert_eq!(
            polarized_sk_subsets(&args),
            Err(Error::OrderOutOfRange { k: 3, n: 2 })
        );
    }
}
