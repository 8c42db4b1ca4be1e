use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coeff: f64,
    /// One exponent per real coordinate.
    pub powers: Vec<u32>,
}

/// Sparse real polynomial in the real coordinates of the ambient space.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Polynomial {
    pub terms: Vec<Monomial>,
}

impl Polynomial {
    pub fn new(terms: Vec<Monomial>) -> Self {
        Self { terms }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        for t in &self.terms {
            if t.powers.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: t.powers.len(),
                });
            }
            if !t.coeff.is_finite() {
                return Err(Error::InvalidInput("polynomial coefficient is not finite".into()));
            }
        }
        Ok(())
    }

    /// Total degree of the terms with non-zero coefficient (0 for the zero polynomial).
    pub fn degree(&self) -> usize {
        self.terms
            .iter()
            .filter(|t| t.coeff != 0.0)
            .map(|t| t.powers.iter().sum::<u32>() as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.coeff == 0.0)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|t| Monomial {
                    coeff: c * t.coeff,
                    powers: t.powers.clone(),
                })
                .collect(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                t.coeff
                    * t.powers
                        .iter()
                        .zip(x)
                        .map(|(&p, &v)| v.powi(p as i32))
                        .product::<f64>()
            })
            .sum()
    }

    /// Value, gradient and Hessian at `x`; `grad` and `hess` are overwritten.
    pub fn jet(&self, x: &[f64], grad: &mut [f64], hess: &mut DMatrix<f64>) -> f64 {
        let d = x.len();
        grad.iter_mut().for_each(|g| *g = 0.0);
        hess.fill(0.0);
        let top = self
            .terms
            .iter()
            .flat_map(|t| t.powers.iter().copied())
            .max()
            .unwrap_or(0) as usize;
        // pow[i * (top + 1) + e] = x_i^e
        let stride = top + 1;
        let mut pow = vec![1.0; d * stride];
        for i in 0..d {
            for e in 1..stride {
                pow[i * stride + e] = pow[i * stride + e - 1] * x[i];
            }
        }
        let pw = |i: usize, e: u32| pow[i * stride + e as usize];
        let mut value = 0.0;
        for t in &self.terms {
            if t.coeff == 0.0 {
                continue;
            }
            let p = &t.powers;
            let active: usize = p.iter().filter(|&&e| e > 0).count();
            if active == 0 {
                value += t.coeff;
                continue;
            }
            let full: f64 = (0..d).map(|i| pw(i, p[i])).product();
            value += t.coeff * full;
            // products with one or two factors lowered
            let except = |skip_a: usize, skip_b: usize| -> f64 {
                (0..d)
                    .filter(|&i| i != skip_a && i != skip_b && p[i] > 0)
                    .map(|i| pw(i, p[i]))
                    .product()
            };
            for i in 0..d {
                if p[i] == 0 {
                    continue;
                }
                let ei = p[i] as f64;
                let rest = except(i, i);
                grad[i] += t.coeff * ei * pw(i, p[i] - 1) * rest;
                if p[i] >= 2 {
                    hess[(i, i)] += t.coeff * ei * (ei - 1.0) * pw(i, p[i] - 2) * rest;
                }
                for j in (i + 1)..d {
                    if p[j] == 0 {
                        continue;
                    }
                    let v = t.coeff
                        * ei
                        * p[j] as f64
                        * pw(i, p[i] - 1)
                        * pw(j, p[j] - 1)
                        * except(i, j);
                    hess[(i, j)] += v;
                    hess[(j, i)] += v;
                }
            }
        }
        value
    }

    /// Sum of two polynomials (terms concatenated, equal exponents merged).
    pub fn add_scaled(&mut self, other: &Polynomial, c: f64) {
        for t in &other.terms {
            match self.terms.iter_mut().find(|s| s.powers == t.powers) {
                Some(s) => s.coeff += c * t.coeff,
                None => self.terms.push(Monomial {
                    coeff: c * t.coeff,
                    powers: t.powers.clone(),
                }),
            }
        }
    }

    /// All monomials of total degree `≤ degree` in `dim` variables, graded order.
    pub fn monomial_exponents(dim: usize, degree: u32) -> Vec<Vec<u32>> {
        let mut out = Vec::new();
        for total in 0..=degree {
            let mut cur = vec![0u32; dim];
            fill_exponents(&mut cur, 0, total, &mut out);
        }
        out
    }
}

fn fill_exponents(cur: &mut Vec<u32>, pos: usize, remaining: u32, out: &mut Vec<Vec<u32>>) {
    if pos + 1 == cur.len() {
        cur[pos] = remaining;
        out.push(cur.clone());
        return;
    }
    for e in (0..=remaining).rev() {
        cur[pos] = e;
        fill_exponents(cur, pos + 1, remaining - e, out);
    }
    cur[pos] = 0;
}
