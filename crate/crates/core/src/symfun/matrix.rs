use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;

use super::{binomial, check_dim, SpectrumVector};
use crate::error::{Error, Result};

/// Real symmetric `n × n` matrix; symmetry is exact as stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    data: DMatrix<f64>,
}

/// Complex Hermitian `n × n` matrix; `a[j][k] == conj(a[k][j])` exactly as stored.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    data: DMatrix<Complex64>,
}

impl SymmetricMatrix {
    /// Symmetrizes `(A + Aᵀ)/2`.
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        if !a.is_square() || a.nrows() == 0 {
            return Err(Error::InvalidInput(format!(
                "expected a non-empty square matrix, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if a.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        let n = a.nrows();
        let data = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                a[(i, i)]
            } else {
                0.5 * (a[(i, j)] + a[(j, i)])
            }
        });
        Ok(Self { data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("rows must form a square matrix".into()));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn identity(n: usize) -> Self {
        Self {
            data: DMatrix::identity(n, n),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            data: DMatrix::zeros(n, n),
        }
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(values)))
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        self.data.trace()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self {
            data: &self.data + &other.data,
        })
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            data: &self.data * c,
        }
    }

    pub fn s_k(&self, k: usize) -> Result<f64> {
        normalized_minor_sum(&self.data, k)
    }

    /// Eigenvalues in ascending order (cross-check route only).
    pub fn eigenvalues(&self) -> SpectrumVector {
        sorted_spectrum(self.data.clone().symmetric_eigenvalues().iter().copied())
    }
}

impl HermitianMatrix {
    /// Hermitizes `(A + Aᴴ)/2`.
    pub fn new(a: DMatrix<Complex64>) -> Result<Self> {
        if !a.is_square() || a.nrows() == 0 {
            return Err(Error::InvalidInput(format!(
                "expected a non-empty square matrix, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        let n = a.nrows();
        let mut data = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
        for i in 0..n {
            data[(i, i)] = Complex64::new(a[(i, i)].re, 0.0);
            for j in (i + 1)..n {
                let z = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
                data[(i, j)] = z;
                data[(j, i)] = z.conj();
            }
        }
        Ok(Self { data })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            data: DMatrix::identity(n, n),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            data: DMatrix::from_element(n, n, Complex64::new(0.0, 0.0)),
        }
    }

    pub fn from_real(a: &SymmetricMatrix) -> Self {
        Self {
            data: a.data.map(|x| Complex64::new(x, 0.0)),
        }
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        Ok(Self::from_real(&SymmetricMatrix::diagonal(values)?))
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        self.data.trace().re
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self {
            data: &self.data + &other.data,
        })
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            data: self.data.map(|z| z * c),
        }
    }

    pub fn s_k(&self, k: usize) -> Result<f64> {
        normalized_minor_sum(&self.data, k)
    }

    /// Imaginary part of the principal-minor sum; zero up to rounding.
    pub fn s_k_imaginary_residue(&self, k: usize) -> Result<f64> {
        let n = self.dim();
        if k > n {
            return Err(Error::OrderOutOfRange { k, n });
        }
        Ok(principal_minor_sum(&self.data, k).im)
    }

    pub fn eigenvalues(&self) -> SpectrumVector {
        sorted_spectrum(self.data.clone().symmetric_eigenvalues().iter().copied())
    }
}

fn sorted_spectrum(values: impl Iterator<Item = f64>) -> SpectrumVector {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    SpectrumVector::new(v).expect("eigenvalues of a finite matrix are finite")
}

pub(crate) fn normalized_minor_sum<T>(a: &DMatrix<T>, k: usize) -> Result<f64>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let n = a.nrows();
    if k > n {
        return Err(Error::OrderOutOfRange { k, n });
    }
    Ok(principal_minor_sum(a, k).real() / binomial(n, k))
}

/// Sum of all `k × k` principal minors (the unnormalized `e_k` of the spectrum).
pub(crate) fn principal_minor_sum<T>(a: &DMatrix<T>, k: usize) -> T
where
    T: ComplexField<RealField = f64> + Copy,
{
    let n = a.nrows();
    if k == 0 {
        return T::one();
    }
    let mut idx: Vec<usize> = (0..k).collect();
    let mut buf = vec![T::zero(); k * k];
    let mut total = T::zero();
    loop {
        for (r, &i) in idx.iter().enumerate() {
            for (c, &j) in idx.iter().enumerate() {
                buf[r * k + c] = a[(i, j)];
            }
        }
        total += determinant_in_place(&mut buf, k);
        if !next_combination(&mut idx, n) {
            break;
        }
    }
    total
}

/// Advances `idx` to the next increasing k-subset of `0..n`.
pub(crate) fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut pos = k;
    while pos > 0 {
        pos -= 1;
        if idx[pos] < n - k + pos {
            idx[pos] += 1;
            for q in (pos + 1)..k {
                idx[q] = idx[q - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Gaussian elimination with partial pivoting on a row-major `k × k` buffer.
pub(crate) fn determinant_in_place<T>(m: &mut [T], k: usize) -> T
where
    T: ComplexField<RealField = f64> + Copy,
{
    let mut det = T::one();
    for col in 0..k {
        let mut pivot = col;
        let mut best = m[col * k + col].modulus();
        for row in (col + 1)..k {
            let v = m[row * k + col].modulus();
            if v > best {
                best = v;
                pivot = row;
            }
        }
        if best == 0.0 {
            return T::zero();
        }
        if pivot != col {
            for c in 0..k {
                m.swap(col * k + c, pivot * k + c);
            }
            det = -det;
        }
        let p = m[col * k + col];
        det *= p;
        for row in (col + 1)..k {
            let factor = m[row * k + col] / p;
            if factor == T::zero() {
                continue;
            }
            for c in (col + 1)..k {
                let sub = factor * m[col * k + c];
                m[row * k + c] -= sub;
            }
        }
    }
    det
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    Symmetric,
    Hermitian,
}

/// A Hessian value whose kind is only known at run time.
#[derive(Debug, Clone, PartialEq)]
pub enum Matrix {
    Symmetric(SymmetricMatrix),
    Hermitian(HermitianMatrix),
}

impl Matrix {
    pub fn kind(&self) -> MatrixKind {
        match self {
            Matrix::Symmetric(_) => MatrixKind::Symmetric,
            Matrix::Hermitian(_) => MatrixKind::Hermitian,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Matrix::Symmetric(a) => a.dim(),
            Matrix::Hermitian(a) => a.dim(),
        }
    }

    pub fn s_k(&self, k: usize) -> Result<f64> {
        match self {
            Matrix::Symmetric(a) => a.s_k(k),
            Matrix::Hermitian(a) => a.s_k(k),
        }
    }

    pub fn eigenvalues(&self) -> SpectrumVector {
        match self {
            Matrix::Symmetric(a) => a.eigenvalues(),
            Matrix::Hermitian(a) => a.eigenvalues(),
        }
    }
}

impl From<SymmetricMatrix> for Matrix {
    fn from(a: SymmetricMatrix) -> Self {
        Matrix::Symmetric(a)
    }
}

impl From<HermitianMatrix> for Matrix {
    fn from(a: HermitianMatrix) -> Self {
        Matrix::Hermitian(a)
    }
}
