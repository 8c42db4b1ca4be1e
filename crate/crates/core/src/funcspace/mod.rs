//! Smooth test functions on the unit ball of `C^n` or `R^n`.
//!
//! Functions are global polynomial formulas in the real coordinates of the
//! ambient space. For `C^n` the coordinates are laid out as
//! `(x_1, ..., x_n, y_1, ..., y_n)` with `z_j = x_j + i y_j`, so a complex
//! point has `2n` real coordinates.

mod compiled;
mod generate;
mod membership;
mod poly;

pub use compiled::CompiledFunction;
pub use generate::{
    random_admissible, random_cone_quadratic, random_psh_radial, Richness, MIN_AMPLITUDE,
};
pub use membership::{
    check_boundary_vanishing, check_membership, check_membership_with, MembershipReport,
    MEMBERSHIP_TOLERANCE,
};
pub use poly::{Monomial, Polynomial};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symfun::{HermitianMatrix, Matrix, SpectrumVector, SymmetricMatrix};

/// Default central-difference step for finite-difference Hessians.
pub const DEFAULT_FD_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Space {
    Complex,
    Real,
}

impl Space {
    /// Number of real coordinates of `C^n` or `R^n`.
    pub fn real_dim(self, n: usize) -> usize {
        match self {
            Space::Complex => 2 * n,
            Space::Real => n,
        }
    }
}

impl std::fmt::Display for Space {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Space::Complex => "complex",
            Space::Real => "real",
        })
    }
}

/// Formula of a test function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Variant {
    /// `φ(t) = Σ_m b_m (t^m − 1)`, `t = |z|²` or `|x|²`, `m = 1..=M`.
    RadialPoly { coeffs: Vec<f64> },
    /// Real space: `½ xᵀQx + b·x + c`. Complex space: `Σ Q_{jk} z_j z̄_k + b·w + c`
    /// with `Q = matrix + i·matrix_im` Hermitian and `w` the real coordinates.
    QuadraticForm {
        matrix: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        matrix_im: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        linear: Option<Vec<f64>>,
        #[serde(default)]
        constant: f64,
    },
    /// `base + amplitude · p(w) · (t − 1)`.
    Perturbed {
        base: Box<Variant>,
        bump: Polynomial,
        amplitude: f64,
    },
    /// `Σ weights_i · specs_i` with non-negative weights.
    LinearCombination { specs: Vec<Variant>, weights: Vec<f64> },
}

/// `Σ_m b_m (t^m − 1) + offset`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RadialForm {
    pub coeffs: Vec<f64>,
    pub offset: f64,
}

impl RadialForm {
    pub fn value(&self, t: f64) -> f64 {
        radial_value(&self.coeffs, t) + self.offset
    }
}

/// A validated test function together with its ambient space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionSpec {
    pub space: Space,
    pub n: usize,
    pub variant: Variant,
}

impl FunctionSpec {
    pub fn new(space: Space, n: usize, variant: Variant) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("dimension n must be at least 1".into()));
        }
        validate_variant(&variant, space, n)?;
        Ok(Self { space, n, variant })
    }

    pub fn radial(space: Space, n: usize, coeffs: Vec<f64>) -> Result<Self> {
        Self::new(space, n, Variant::RadialPoly { coeffs })
    }

    /// `|z|² − 1` or `|x|² − 1`.
    pub fn unit_paraboloid(space: Space, n: usize) -> Self {
        Self::radial(space, n, vec![1.0]).expect("valid radial spec")
    }

    pub fn zero(space: Space, n: usize) -> Self {
        Self::radial(space, n, vec![]).expect("valid radial spec")
    }

    pub fn quadratic_real(n: usize, matrix: &SymmetricMatrix, linear: Option<Vec<f64>>, constant: f64) -> Result<Self> {
        let rows = (0..n)
            .map(|i| (0..n).map(|j| matrix.get(i, j)).collect())
            .collect();
        Self::new(
            Space::Real,
            n,
            Variant::QuadraticForm {
                matrix: rows,
                matrix_im: None,
                linear,
                constant,
            },
        )
    }

    pub fn quadratic_complex(n: usize, matrix: &HermitianMatrix, linear: Option<Vec<f64>>, constant: f64) -> Result<Self> {
        let re = (0..n)
            .map(|i| (0..n).map(|j| matrix.get(i, j).re).collect())
            .collect();
        let im: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| matrix.get(i, j).im).collect())
            .collect();
        let has_im = im.iter().flatten().any(|v| *v != 0.0);
        Self::new(
            Space::Complex,
            n,
            Variant::QuadraticForm {
                matrix: re,
                matrix_im: has_im.then_some(im),
                linear,
                constant,
            },
        )
    }

    /// Affine function `b·w + c` (zero Hessian).
    pub fn affine(space: Space, n: usize, linear: Vec<f64>, constant: f64) -> Result<Self> {
        Self::new(
            space,
            n,
            Variant::QuadraticForm {
                matrix: vec![vec![0.0; n]; n],
                matrix_im: None,
                linear: Some(linear),
                constant,
            },
        )
    }

    pub fn perturbed(base: &FunctionSpec, bump: Polynomial, amplitude: f64) -> Result<Self> {
        Self::new(
            base.space,
            base.n,
            Variant::Perturbed {
                base: Box::new(base.variant.clone()),
                bump,
                amplitude,
            },
        )
    }

    pub fn linear_combination(specs: &[&FunctionSpec], weights: &[f64]) -> Result<Self> {
        let first = specs
            .first()
            .ok_or_else(|| Error::InvalidInput("empty linear combination".into()))?;
        for s in specs {
            if s.space != first.space || s.n != first.n {
                return Err(Error::InvalidInput(
                    "linear combination members live in different spaces".into(),
                ));
            }
        }
        Self::new(
            first.space,
            first.n,
            Variant::LinearCombination {
                specs: specs.iter().map(|s| s.variant.clone()).collect(),
                weights: weights.to_vec(),
            },
        )
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::linear_combination(&[self], &[c])
    }

    pub fn sum(&self, other: &FunctionSpec) -> Result<Self> {
        Self::linear_combination(&[self, other], &[1.0, 1.0])
    }

    pub fn real_dim(&self) -> usize {
        self.space.real_dim(self.n)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("function specs serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: FunctionSpec = serde_json::from_str(text)
            .map_err(|e| Error::InvalidInput(format!("function spec JSON: {e}")))?;
        Self::new(raw.space, raw.n, raw.variant)
    }

    /// Total polynomial degree in the real coordinates.
    pub fn degree(&self) -> usize {
        variant_degree(&self.variant)
    }

    /// `φ(t) + offset` form when the function depends on `t` only.
    pub fn as_radial(&self) -> Option<RadialForm> {
        radial_form(&self.variant, self.space)
    }

    pub fn compile(&self) -> CompiledFunction {
        CompiledFunction::new(self)
    }

    fn check_point(&self, point: &[f64]) -> Result<()> {
        if point.len() != self.real_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.real_dim(),
                got: point.len(),
            });
        }
        Ok(())
    }

    /// Value at a point given by its real coordinates.
    pub fn eval(&self, point: &[f64]) -> Result<f64> {
        self.check_point(point)?;
        Ok(self.compile().value(point))
    }

    /// Value at a complex point (complex space only).
    pub fn eval_complex(&self, z: &[Complex64]) -> Result<f64> {
        self.require_space(Space::Complex)?;
        self.eval(&complex_to_real(z))
    }

    fn require_space(&self, space: Space) -> Result<()> {
        if self.space != space {
            return Err(Error::InvalidInput(format!(
                "operation needs a {space} function, got a {} one",
                self.space
            )));
        }
        Ok(())
    }

    /// Hessian in real coordinates (`2n × 2n` for complex space).
    pub fn coordinate_hessian(&self, point: &[f64]) -> Result<DMatrix<f64>> {
        self.check_point(point)?;
        let d = self.real_dim();
        let mut h = DMatrix::zeros(d, d);
        self.compile().hessian_into(point, &mut h);
        Ok(h)
    }

    /// Analytic real Hessian (real space only).
    pub fn real_hessian(&self, point: &[f64]) -> Result<SymmetricMatrix> {
        self.require_space(Space::Real)?;
        SymmetricMatrix::new(self.coordinate_hessian(point)?)
    }

    /// Analytic complex Hessian `∂²u/∂z_j∂z̄_k` (complex space only).
    pub fn complex_hessian(&self, point: &[f64]) -> Result<HermitianMatrix> {
        self.require_space(Space::Complex)?;
        complex_from_coordinate_hessian(&self.coordinate_hessian(point)?, self.n)
    }

    /// The Hessian appropriate to the space.
    pub fn hessian(&self, point: &[f64]) -> Result<Matrix> {
        match self.space {
            Space::Real => Ok(Matrix::Symmetric(self.real_hessian(point)?)),
            Space::Complex => Ok(Matrix::Hermitian(self.complex_hessian(point)?)),
        }
    }

    /// Central-difference real-coordinate Hessian with step `h`.
    pub fn coordinate_hessian_fd(&self, point: &[f64], h: f64) -> Result<DMatrix<f64>> {
        self.check_point(point)?;
        let f = self.compile();
        let d = point.len();
        let mut out = DMatrix::zeros(d, d);
        let mut x = point.to_vec();
        let f0 = f.value(point);
        for i in 0..d {
            x[i] = point[i] + h;
            let fp = f.value(&x);
            x[i] = point[i] - h;
            let fm = f.value(&x);
            x[i] = point[i];
            out[(i, i)] = (fp - 2.0 * f0 + fm) / (h * h);
            for j in (i + 1)..d {
                let mut corner = |si: f64, sj: f64| {
                    x[i] = point[i] + si * h;
                    x[j] = point[j] + sj * h;
                    let v = f.value(&x);
                    x[i] = point[i];
                    x[j] = point[j];
                    v
                };
                let v = (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0)
                    + corner(-1.0, -1.0))
                    / (4.0 * h * h);
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        Ok(out)
    }

    pub fn real_hessian_fd(&self, point: &[f64], h: f64) -> Result<SymmetricMatrix> {
        self.require_space(Space::Real)?;
        SymmetricMatrix::new(self.coordinate_hessian_fd(point, h)?)
    }

    pub fn complex_hessian_fd(&self, point: &[f64], h: f64) -> Result<HermitianMatrix> {
        self.require_space(Space::Complex)?;
        complex_from_coordinate_hessian(&self.coordinate_hessian_fd(point, h)?, self.n)
    }

    /// Closed-form Hessian spectrum of a radial function at `t = |·|²`.
    pub fn radial_spectrum(&self, t: f64) -> Result<SpectrumVector> {
        let form = self.as_radial().ok_or_else(|| {
            Error::InvalidInput("radial spectrum requested for a non-radial function".into())
        })?;
        radial_spectrum(self.space, self.n, &form.coeffs, t)
    }
}

/// `(φ′, …, φ′, φ′ + tφ″)` on `C^n`, `(2φ′, …, 2φ′, 2φ′ + 4tφ″)` on `R^n`.
pub fn radial_spectrum(space: Space, n: usize, coeffs: &[f64], t: f64) -> Result<SpectrumVector> {
    if !(t >= 0.0) {
        return Err(Error::InvalidInput(format!("radius squared must be >= 0, got {t}")));
    }
    let (d1, d2) = radial_derivatives(coeffs, t);
    let (tangential, normal) = match space {
        Space::Complex => (d1, d1 + t * d2),
        Space::Real => (2.0 * d1, 2.0 * d1 + 4.0 * t * d2),
    };
    let mut v = vec![tangential; n];
    v[n - 1] = normal;
    SpectrumVector::new(v)
}

/// `φ(t)`.
pub(crate) fn radial_value(coeffs: &[f64], t: f64) -> f64 {
    let mut acc = 0.0;
    let mut tm = 1.0;
    for &b in coeffs {
        tm *= t;
        acc += b * (tm - 1.0);
    }
    acc
}

/// `(φ′(t), φ″(t))`.
pub(crate) fn radial_derivatives(coeffs: &[f64], t: f64) -> (f64, f64) {
    let mut d1 = 0.0;
    let mut d2 = 0.0;
    let mut tm1 = 1.0; // t^{m-1}
    let mut tm2 = 0.0; // t^{m-2}
    for (idx, &b) in coeffs.iter().enumerate() {
        let m = (idx + 1) as f64;
        d1 += m * b * tm1;
        d2 += m * (m - 1.0) * b * tm2;
        tm2 = tm1;
        tm1 *= t;
    }
    (d1, d2)
}

/// `¼[(H_{x_j x_k} + H_{y_j y_k}) + i(H_{x_j y_k} − H_{y_j x_k})]`.
pub fn complex_from_coordinate_hessian(h: &DMatrix<f64>, n: usize) -> Result<HermitianMatrix> {
    if h.nrows() != 2 * n || h.ncols() != 2 * n {
        return Err(Error::DimensionMismatch {
            expected: 2 * n,
            got: h.nrows(),
        });
    }
    let c = DMatrix::from_fn(n, n, |j, k| {
        Complex64::new(
            0.25 * (h[(j, k)] + h[(n + j, n + k)]),
            0.25 * (h[(j, n + k)] - h[(n + j, k)]),
        )
    });
    HermitianMatrix::new(c)
}

pub fn complex_to_real(z: &[Complex64]) -> Vec<f64> {
    z.iter().map(|c| c.re).chain(z.iter().map(|c| c.im)).collect()
}

fn validate_square(rows: &[Vec<f64>], n: usize, what: &str) -> Result<()> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidInput(format!("{what} must be {n}x{n}")));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("{what} has non-finite entries")));
    }
    Ok(())
}

fn validate_variant(v: &Variant, space: Space, n: usize) -> Result<()> {
    let d = space.real_dim(n);
    match v {
        Variant::RadialPoly { coeffs } => {
            if coeffs.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidInput("radial coefficients must be finite".into()));
            }
        }
        Variant::QuadraticForm {
            matrix,
            matrix_im,
            linear,
            constant,
        } => {
            validate_square(matrix, n, "matrix")?;
            for i in 0..n {
                for j in 0..n {
                    if matrix[i][j] != matrix[j][i] {
                        return Err(Error::InvalidInput("matrix must be symmetric".into()));
                    }
                }
            }
            if let Some(im) = matrix_im {
                if space == Space::Real {
                    return Err(Error::InvalidInput(
                        "matrix_im is only meaningful in complex space".into(),
                    ));
                }
                validate_square(im, n, "matrix_im")?;
                for i in 0..n {
                    for j in 0..n {
                        if im[i][j] != -im[j][i] {
                            return Err(Error::InvalidInput(
                                "matrix_im must be antisymmetric (Hermitian Q)".into(),
                            ));
                        }
                    }
                }
            }
            if let Some(b) = linear {
                if b.len() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        got: b.len(),
                    });
                }
                if b.iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidInput("linear part must be finite".into()));
                }
            }
            if !constant.is_finite() {
                return Err(Error::InvalidInput("constant must be finite".into()));
            }
        }
        Variant::Perturbed {
            base,
            bump,
            amplitude,
        } => {
            validate_variant(base, space, n)?;
            bump.validate(d)?;
            if !amplitude.is_finite() {
                return Err(Error::InvalidInput("amplitude must be finite".into()));
            }
        }
        Variant::LinearCombination { specs, weights } => {
            if specs.len() != weights.len() || specs.is_empty() {
                return Err(Error::InvalidInput(
                    "linear combination needs one weight per member".into(),
                ));
            }
            if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
                return Err(Error::InvalidInput(
                    "linear combination weights must be finite and non-negative".into(),
                ));
            }
            for s in specs {
                validate_variant(s, space, n)?;
            }
        }
    }
    Ok(())
}

fn variant_degree(v: &Variant) -> usize {
    match v {
        Variant::RadialPoly { coeffs } => coeffs
            .iter()
            .rposition(|&c| c != 0.0)
            .map_or(0, |m| 2 * (m + 1)),
        Variant::QuadraticForm {
            matrix,
            matrix_im,
            linear,
            ..
        } => {
            let quad = matrix.iter().flatten().any(|v| *v != 0.0)
                || matrix_im
                    .as_ref()
                    .is_some_and(|im| im.iter().flatten().any(|v| *v != 0.0));
            if quad {
                2
            } else if linear.as_ref().is_some_and(|b| b.iter().any(|v| *v != 0.0)) {
                1
            } else {
                0
            }
        }
        Variant::Perturbed {
            base,
            bump,
            amplitude,
        } => {
            let bump_deg = if *amplitude != 0.0 && !bump.is_zero() {
                bump.degree() + 2
            } else {
                0
            };
            variant_degree(base).max(bump_deg)
        }
        Variant::LinearCombination { specs, weights } => specs
            .iter()
            .zip(weights)
            .filter(|(_, w)| **w != 0.0)
            .map(|(s, _)| variant_degree(s))
            .max()
            .unwrap_or(0),
    }
}

fn radial_form(v: &Variant, space: Space) -> Option<RadialForm> {
    match v {
        Variant::RadialPoly { coeffs } => Some(RadialForm {
            coeffs: coeffs.clone(),
            offset: 0.0,
        }),
        Variant::QuadraticForm {
            matrix,
            matrix_im,
            linear,
            constant,
        } => {
            // c·I is radial: c·t on C^n, (c/2)·t on R^n.
            let n = matrix.len();
            let c = matrix[0][0];
            let scalar = (0..n).all(|i| (0..n).all(|j| matrix[i][j] == if i == j { c } else { 0.0 }));
            let no_im = matrix_im
                .as_ref()
                .is_none_or(|im| im.iter().flatten().all(|v| *v == 0.0));
            let no_lin = linear.as_ref().is_none_or(|b| b.iter().all(|v| *v == 0.0));
            if !(scalar && no_im && no_lin) {
                return None;
            }
            let slope = match space {
                Space::Complex => c,
                Space::Real => 0.5 * c,
            };
            Some(RadialForm {
                coeffs: if slope == 0.0 { vec![] } else { vec![slope] },
                offset: slope + constant,
            })
        }
        Variant::Perturbed {
            base,
            bump,
            amplitude,
        } => {
            if *amplitude == 0.0 || bump.is_zero() {
                radial_form(base, space)
            } else {
                None
            }
        }
        Variant::LinearCombination { specs, weights } => {
            let mut acc = RadialForm::default();
            for (s, &w) in specs.iter().zip(weights) {
                if w == 0.0 {
                    continue;
                }
                let r = radial_form(s, space)?;
                if acc.coeffs.len() < r.coeffs.len() {
                    acc.coeffs.resize(r.coeffs.len(), 0.0);
                }
                for (a, b) in acc.coeffs.iter_mut().zip(&r.coeffs) {
                    *a += w * b;
                }
                acc.offset += w * r.offset;
            }
            Some(acc)
        }
    }
}
