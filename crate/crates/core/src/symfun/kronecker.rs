//! Generalized Kronecker deltas and the delta-weighted forms of the
//! polarization and of its Newton tensor.

use nalgebra::{ComplexField, DMatrix};

use super::matrix::{HermitianMatrix, SymmetricMatrix};
use super::{binomial, check_dim, factorial};
use crate::error::{Error, Result};

/// Largest dimension accepted by the `n^{2k}` delta sums.
pub const KRONECKER_MAX_DIM: usize = 6;

/// An ordered list of 0-based indices into `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    indices: Vec<usize>,
}

impl MultiIndex {
    pub fn new(indices: Vec<usize>, n: usize) -> Result<Self> {
        if n > 16 {
            return Err(Error::Capacity(format!("multi-indices support n <= 16, got {n}")));
        }
        if indices.len() > n {
            return Err(Error::InvalidInput(format!(
                "multi-index of length {} exceeds dimension {n}",
                indices.len()
            )));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return Err(Error::InvalidInput(format!(
                "index {bad} out of range for dimension {n}"
            )));
        }
        Ok(Self { indices })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// `δ^{upper}_{lower}`: the sign of the permutation taking `upper` to `lower`,
/// or 0 when either has a repeat or they are not permutations of each other.
pub fn kronecker_delta(upper: &MultiIndex, lower: &MultiIndex) -> i8 {
    delta(&upper.indices, &lower.indices)
}

fn delta(upper: &[usize], lower: &[usize]) -> i8 {
    let k = upper.len();
    if lower.len() != k {
        return 0;
    }
    // perm[p] = position in `upper` of lower[p]
    let mut perm = [0usize; 16];
    let mut seen_upper = 0u64;
    for &u in upper {
        if seen_upper & (1 << u) != 0 {
            return 0;
        }
        seen_upper |= 1 << u;
    }
    let mut seen_lower = 0u64;
    for (p, &l) in lower.iter().enumerate() {
        if seen_lower & (1 << l) != 0 || seen_upper & (1 << l) == 0 {
            return 0;
        }
        seen_lower |= 1 << l;
        perm[p] = upper.iter().position(|&u| u == l).unwrap_or(usize::MAX);
    }
    let mut sign = 1i8;
    let mut visited = [false; 16];
    for start in 0..k {
        if visited[start] {
            continue;
        }
        let mut len = 0;
        let mut p = start;
        while !visited[p] {
            visited[p] = true;
            p = perm[p];
            len += 1;
        }
        if len % 2 == 0 {
            sign = -sign;
        }
    }
    sign
}

/// Matrix arguments accepted by the delta-weighted sums.
pub trait KroneckerArg {
    type Scalar: ComplexField<RealField = f64> + Copy;
    fn entries(&self) -> &DMatrix<Self::Scalar>;
}

impl KroneckerArg for SymmetricMatrix {
    type Scalar = f64;
    fn entries(&self) -> &DMatrix<f64> {
        self.as_matrix()
    }
}

impl KroneckerArg for HermitianMatrix {
    type Scalar = num_complex::Complex64;
    fn entries(&self) -> &DMatrix<num_complex::Complex64> {
        self.as_matrix()
    }
}

/// Calls `f` on every tuple in `0..n` of length `k` (odometer order).
fn for_each_tuple(k: usize, n: usize, mut f: impl FnMut(&[usize])) {
    let mut cur = vec![0usize; k];
    loop {
        f(&cur);
        let mut pos = 0;
        loop {
            if pos == k {
                return;
            }
            cur[pos] += 1;
            if cur[pos] < n {
                break;
            }
            cur[pos] = 0;
            pos += 1;
        }
    }
}

fn has_repeat(t: &[usize]) -> bool {
    let mut seen = 0u64;
    for &i in t {
        if seen & (1 << i) != 0 {
            return true;
        }
        seen |= 1 << i;
    }
    false
}

fn check_args<M: KroneckerArg>(args: &[M], n: usize) -> Result<()> {
    if n > KRONECKER_MAX_DIM {
        return Err(Error::Capacity(format!(
            "Kronecker-delta sums are limited to n <= {KRONECKER_MAX_DIM}, got n = {n}"
        )));
    }
    if args.len() > n {
        return Err(Error::OrderOutOfRange { k: args.len(), n });
    }
    for a in args {
        check_dim(n, a.entries().nrows())?;
    }
    Ok(())
}

/// Normalized `S̃_k` through the generalized Kronecker delta, returning the
/// raw scalar (complex for Hermitian input; its imaginary part is rounding).
pub fn polarized_sk_kronecker_raw<M: KroneckerArg>(args: &[M]) -> Result<M::Scalar> {
    let k = args.len();
    if k == 0 {
        return Ok(nalgebra::one::<M::Scalar>());
    }
    let n = args[0].entries().nrows();
    check_args(args, n)?;
    let mut total = nalgebra::zero::<M::Scalar>();
    for_each_tuple(k, n, |upper| {
        if has_repeat(upper) {
            return;
        }
        for_each_tuple(k, n, |lower| {
            let d = delta(upper, lower);
            if d == 0 {
                return;
            }
            let mut prod = M::Scalar::from_real(d as f64);
            for (m, a) in args.iter().enumerate() {
                prod *= a.entries()[(upper[m], lower[m])];
            }
            total += prod;
        });
    });
    let norm = factorial(k) * binomial(n, k);
    Ok(total / M::Scalar::from_real(norm))
}

pub fn polarized_sk_kronecker<M: KroneckerArg>(args: &[M]) -> Result<f64> {
    Ok(polarized_sk_kronecker_raw(args)?.real())
}

/// `S̃^{ij}_{k-1}(A_1, ..., A_{k-1}) = ∂ S̃_k(A_1, ..., A_{k-1}, B) / ∂B_{ij}`.
///
/// `n` is passed explicitly so that the `k = 1` case (no arguments) is defined.
pub fn newton_tensor(args: &[SymmetricMatrix], n: usize, i: usize, j: usize) -> Result<f64> {
    if i >= n || j >= n {
        return Err(Error::InvalidInput(format!(
            "tensor index ({i}, {j}) out of range for dimension {n}"
        )));
    }
    Ok(newton_tensor_matrix(args, n)?[(i, j)])
}

/// All entries of the Newton tensor as an `n × n` matrix.
pub fn newton_tensor_matrix(args: &[SymmetricMatrix], n: usize) -> Result<DMatrix<f64>> {
    let k = args.len() + 1;
    check_args(args, n)?;
    if k > n {
        return Err(Error::OrderOutOfRange { k, n });
    }
    let mut out = DMatrix::zeros(n, n);
    let mut upper = vec![0usize; k];
    let mut lower = vec![0usize; k];
    for_each_tuple(k - 1, n, |u| {
        if has_repeat(u) {
            return;
        }
        for_each_tuple(k - 1, n, |l| {
            let mut prod = 1.0;
            for (m, a) in args.iter().enumerate() {
                prod *= a.get(u[m], l[m]);
            }
            if prod == 0.0 {
                return;
            }
            upper[..k - 1].copy_from_slice(u);
            lower[..k - 1].copy_from_slice(l);
            for i in 0..n {
                upper[k - 1] = i;
                for j in 0..n {
                    lower[k - 1] = j;
                    let d = delta(&upper, &lower);
                    if d != 0 {
                        out[(i, j)] += d as f64 * prod;
                    }
                }
            }
        });
    });
    let norm = factorial(k) * binomial(n, k);
    Ok(out / norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symfun::polarized_sk_subsets;

    fn mi(v: &[usize], n: usize) -> MultiIndex {
        MultiIndex::new(v.to_vec(), n).unwrap()
    }

    #[test]
    fn delta_examples() {
        assert_eq!(kronecker_delta(&mi(&[0, 1], 2), &mi(&[0, 1], 2)), 1);
        assert_eq!(kronecker_delta(&mi(&[0, 1], 2), &mi(&[1, 0], 2)), -1);
        assert_eq!(kronecker_delta(&mi(&[0, 0], 2), &mi(&[0, 1], 2)), 0);
        assert_eq!(kronecker_delta(&mi(&[0, 1, 2], 3), &mi(&[1, 2, 0], 3)), 1);
        assert_eq!(kronecker_delta(&mi(&[0, 1], 3), &mi(&[0, 2], 3)), 0);
    }

    #[test]
    fn delta_antisymmetry_exhaustive() {
        for n in 1..=4usize {
            for k in 1..=3usize.min(n) {
                for_each_tuple(k, n, |up| {
                    for_each_tuple(k, n, |lo| {
                        let d = delta(up, lo);
                        if has_repeat(up) || has_repeat(lo) {
                            assert_eq!(d, 0);
                        }
                        for a in 0..k {
                            for b in (a + 1)..k {
                                let mut sw = lo.to_vec();
                                sw.swap(a, b);
                                assert_eq!(delta(up, &sw), -d);
                            }
                        }
                    });
                });
            }
        }
    }

    #[test]
    fn multi_index_validates() {
        assert!(MultiIndex::new(vec![0, 3], 3).is_err());
        assert!(MultiIndex::new(vec![0, 1, 2, 0], 3).is_err());
    }

    #[test]
    fn kronecker_examples() {
        let a = SymmetricMatrix::diagonal(&[1.0, 2.0]).unwrap();
        let b = SymmetricMatrix::diagonal(&[3.0, 4.0]).unwrap();
        assert!((polarized_sk_kronecker(&[a.clone(), b.clone()]).unwrap() - 5.0).abs() < 1e-14);
        assert_eq!(
            polarized_sk_kronecker(&[a.clone(), b.clone()]).unwrap(),
            polarized_sk_subsets(&[a, b]).unwrap()
        );

        let c = SymmetricMatrix::from_rows(&[
            vec![1.0, 0.5, 0.0],
            vec![0.5, -2.0, 0.3],
            vec![0.0, 0.3, 4.0],
        ])
        .unwrap();
        let k1 = polarized_sk_kronecker(std::slice::from_ref(&c)).unwrap();
        assert!((k1 - c.trace() / 3.0).abs() < 1e-15);
        for k in 1..=3 {
            let got = polarized_sk_kronecker(&vec![c.clone(); k]).unwrap();
            assert!((got - c.s_k(k).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn size_guard() {
        let args = vec![SymmetricMatrix::identity(7)];
        assert!(matches!(polarized_sk_kronecker(&args), Err(Error::Capacity(_))));
    }

    #[test]
    fn newton_tensor_order_one_is_scaled_identity() {
        let t = newton_tensor_matrix(&[], 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 / 3.0 } else { 0.0 };
                assert!((t[(i, j)] - want).abs() < 1e-16);
            }
        }
    }

    #[test]
    fn newton_tensor_two_by_two_diagonal() {
        let (a, b) = (1.5, -0.25);
        let d = SymmetricMatrix::diagonal(&[a, b]).unwrap();
        let args = [d.clone()];
        assert!((newton_tensor(&args, 2, 0, 0).unwrap() - b / 2.0).abs() < 1e-16);
        assert!((newton_tensor(&args, 2, 1, 1).unwrap() - a / 2.0).abs() < 1e-16);
        assert_eq!(newton_tensor(&args, 2, 0, 1).unwrap(), 0.0);
        // contracting with the argument itself gives S_2
        let t = newton_tensor_matrix(&args, 2).unwrap();
        let s2: f64 = t.component_mul(d.as_matrix()).sum();
        assert!((s2 - d.s_k(2).unwrap()).abs() < 1e-15);
    }
}
