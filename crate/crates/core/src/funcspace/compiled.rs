use nalgebra::DMatrix;

use super::{radial_derivatives, radial_value, FunctionSpec, Polynomial, Space, Variant};

/// A function spec flattened into `φ(t) + ½wᵀMw + b·w + c + p(w)(t − 1)`
/// in real coordinates `w`, `t = |w|²`.
#[derive(Debug, Clone)]
pub struct CompiledFunction {
    dim: usize,
    radial: Vec<f64>,
    quad: DMatrix<f64>,
    linear: Vec<f64>,
    constant: f64,
    has_quad: bool,
    bump: Option<Polynomial>,
}

impl CompiledFunction {
    pub fn new(spec: &FunctionSpec) -> Self {
        let dim = spec.real_dim();
        let mut out = Self {
            dim,
            radial: Vec::new(),
            quad: DMatrix::zeros(dim, dim),
            linear: vec![0.0; dim],
            constant: 0.0,
            has_quad: false,
            bump: None,
        };
        out.absorb(&spec.variant, 1.0, spec.space, spec.n);
        out
    }

    fn absorb(&mut self, v: &Variant, w: f64, space: Space, n: usize) {
        if w == 0.0 {
            return;
        }
        match v {
            Variant::RadialPoly { coeffs } => {
                if self.radial.len() < coeffs.len() {
                    self.radial.resize(coeffs.len(), 0.0);
                }
                for (a, b) in self.radial.iter_mut().zip(coeffs) {
                    *a += w * b;
                }
            }
            Variant::QuadraticForm {
                matrix,
                matrix_im,
                linear,
                constant,
            } => {
                self.has_quad = true;
                match space {
                    Space::Real => {
                        for i in 0..n {
                            for j in 0..n {
                                self.quad[(i, j)] += w * matrix[i][j];
                            }
                        }
                    }
                    Space::Complex => {
                        // M = 2[[A, B], [−B, A]] for Q = A + iB
                        for i in 0..n {
                            for j in 0..n {
                                let a = 2.0 * w * matrix[i][j];
                                self.quad[(i, j)] += a;
                                self.quad[(n + i, n + j)] += a;
                                if let Some(im) = matrix_im {
                                    let b = 2.0 * w * im[i][j];
                                    self.quad[(i, n + j)] += b;
                                    self.quad[(n + i, j)] -= b;
                                }
                            }
                        }
                    }
                }
                if let Some(b) = linear {
                    for (a, x) in self.linear.iter_mut().zip(b) {
                        *a += w * x;
                    }
                }
                self.constant += w * constant;
            }
            Variant::Perturbed {
                base,
                bump,
                amplitude,
            } => {
                self.absorb(base, w, space, n);
                if *amplitude != 0.0 && !bump.is_zero() {
                    self.bump
                        .get_or_insert_with(Polynomial::default)
                        .add_scaled(bump, w * amplitude);
                }
            }
            Variant::LinearCombination { specs, weights } => {
                for (s, &c) in specs.iter().zip(weights) {
                    self.absorb(s, w * c, space, n);
                }
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self, w: &[f64]) -> f64 {
        let t: f64 = w.iter().map(|x| x * x).sum();
        let mut v = radial_value(&self.radial, t);
        if self.has_quad {
            let mw = &self.quad * nalgebra::DVector::from_column_slice(w);
            v += 0.5 * w.iter().zip(mw.iter()).map(|(a, b)| a * b).sum::<f64>();
            v += self.linear.iter().zip(w).map(|(a, b)| a * b).sum::<f64>();
            v += self.constant;
        }
        if let Some(p) = &self.bump {
            v += p.eval(w) * (t - 1.0);
        }
        v
    }

    /// Writes the real-coordinate Hessian at `w` into `out` (`d × d`).
    pub fn hessian_into(&self, w: &[f64], out: &mut DMatrix<f64>) {
        let d = self.dim;
        let t: f64 = w.iter().map(|x| x * x).sum();
        let (d1, d2) = radial_derivatives(&self.radial, t);
        for i in 0..d {
            for j in 0..d {
                let mut h = 4.0 * d2 * w[i] * w[j];
                if i == j {
                    h += 2.0 * d1;
                }
                out[(i, j)] = h;
            }
        }
        if self.has_quad {
            *out += &self.quad;
        }
        if let Some(p) = &self.bump {
            let mut grad = vec![0.0; d];
            let mut hp = DMatrix::zeros(d, d);
            // ∂²[p(t−1)] = (t−1)∂²p + 2(∂p wᵀ + w ∂pᵀ) + 2p I
            let pv = p.jet(w, &mut grad, &mut hp);
            for i in 0..d {
                for j in 0..d {
                    let mut h = (t - 1.0) * hp[(i, j)] + 2.0 * (grad[i] * w[j] + w[i] * grad[j]);
                    if i == j {
                        h += 2.0 * pv;
                    }
                    out[(i, j)] += h;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::Monomial;
    use super::*;

    #[test]
    fn bump_hessian_matches_finite_differences() {
        let bump = Polynomial::new(vec![
            Monomial {
                coeff: 0.7,
                powers: vec![1, 1, 0],
            },
            Monomial {
                coeff: -0.4,
                powers: vec![0, 0, 2],
            },
            Monomial {
                coeff: 0.2,
                powers: vec![1, 0, 0],
            },
        ]);
        let base = FunctionSpec::radial(Space::Real, 3, vec![1.0, 0.5]).unwrap();
        let u = FunctionSpec::perturbed(&base, bump, 0.3).unwrap();
        let x = [0.3, -0.2, 0.45];
        let exact = u.coordinate_hessian(&x).unwrap();
        let fd = u.coordinate_hessian_fd(&x, 1e-4).unwrap();
        assert!((exact - fd).amax() < 1e-6);
    }

    #[test]
    fn complex_quadratic_value() {
        // u = 2|z1|² + Re((0.5+0.3i) z1 z̄2)·2 + |z2|²
        let u = FunctionSpec::new(
            Space::Complex,
            2,
            Variant::QuadraticForm {
                matrix: vec![vec![2.0, 0.5], vec![0.5, 1.0]],
                matrix_im: Some(vec![vec![0.0, 0.3], vec![-0.3, 0.0]]),
                linear: None,
                constant: 0.0,
            },
        )
        .unwrap();
        let z1 = num_complex::Complex64::new(0.3, -0.1);
        let z2 = num_complex::Complex64::new(-0.2, 0.6);
        let q12 = num_complex::Complex64::new(0.5, 0.3);
        let want = 2.0 * z1.norm_sqr() + z2.norm_sqr() + 2.0 * (q12 * z1 * z2.conj()).re;
        let got = u.eval_complex(&[z1, z2]).unwrap();
        assert!((got - want).abs() < 1e-15);
    }
}
