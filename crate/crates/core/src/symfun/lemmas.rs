use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgebraicMargins {
    /// `∏_j f(x_j, ..., x_j)^{1/k} − f(x_1, ..., x_k)`.
    pub hoelder: f64,
    /// `f(x, ..)^{1/k} + f(y, ..)^{1/k} − f(x+y, ..)^{1/k}`.
    pub minkowski: f64,
}

/// Evaluates both conclusions of the algebraic lemma on one instance.
///
/// `f` is a symmetric `k`-ary functional with `k = points.len()`. Values in
/// `[-tolerance, 0)` are treated as quadrature noise and clamped to zero;
/// anything more negative is a hypothesis violation.
pub fn algebraic_lemma_check<X, F>(
    f: F,
    points: &[X],
    x: &X,
    y: &X,
    x_plus_y: &X,
    tolerance: f64,
) -> Result<AlgebraicMargins>
where
    X: Clone,
    F: Fn(&[X]) -> Result<f64>,
{
    let k = points.len();
    if k == 0 {
        return Err(Error::InvalidInput("the functional needs at least one slot".into()));
    }
    let eval = |args: &[X]| -> Result<f64> {
        let v = f(args)?;
        if !v.is_finite() || v < -tolerance {
            return Err(Error::HypothesisViolation(format!(
                "functional returned {v:e}, expected a non-negative value"
            )));
        }
        Ok(v.max(0.0))
    };
    let diagonal = |p: &X| eval(&vec![p.clone(); k]);
    let root = 1.0 / k as f64;

    let mut product = 1.0;
    for p in points {
        product *= diagonal(p)?.powf(root);
    }
    let hoelder = product - f(points)?;

    let minkowski =
        diagonal(x)?.powf(root) + diagonal(y)?.powf(root) - diagonal(x_plus_y)?.powf(root);
    Ok(AlgebraicMargins { hoelder, minkowski })
}
