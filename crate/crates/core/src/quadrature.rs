//! Quadrature on the unit ball: Gauss rules in the radius, conical-product
//! Gauss–Jacobi cubature for polynomial integrands, and uniform cell grids.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative error model of the Gauss paths (exact for the polynomial integrands used here).
pub const GAUSS_TAU: f64 = 1e-10;
/// Upper bound on the number of nodes of any single rule.
pub const MAX_RULE_NODES: usize = 20_000_000;

/// Which quadrature the energy functionals use.
///
/// Deserializes from `{"kind": "radial_gauss", "nodes": 64}` or the string `"radial_gauss:64"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", try_from = "SchemeRepr")]
pub enum QuadratureScheme {
    /// Gauss–Legendre in the radius for radial integrands (`nodes` points) and
    /// degree-exact conical Gauss–Jacobi cubature otherwise.
    RadialGauss { nodes: usize },
    /// Cell centers of a `resolution^d` lattice over `[-1, 1]^d` inside the ball.
    Grid { resolution: usize },
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum TaggedScheme {
    RadialGauss { nodes: usize },
    Grid { resolution: usize },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SchemeRepr {
    Short(String),
    Tagged(TaggedScheme),
}

impl TryFrom<SchemeRepr> for QuadratureScheme {
    type Error = Error;

    fn try_from(repr: SchemeRepr) -> Result<Self> {
        let scheme = match repr {
            SchemeRepr::Short(s) => return s.parse(),
            SchemeRepr::Tagged(TaggedScheme::RadialGauss { nodes }) => {
                QuadratureScheme::RadialGauss { nodes }
            }
            SchemeRepr::Tagged(TaggedScheme::Grid { resolution }) => {
                QuadratureScheme::Grid { resolution }
            }
        };
        scheme.validate()?;
        Ok(scheme)
    }
}

impl Default for QuadratureScheme {
    fn default() -> Self {
        QuadratureScheme::RadialGauss { nodes: 64 }
    }
}

impl QuadratureScheme {
    pub fn validate(&self) -> Result<()> {
        match *self {
            QuadratureScheme::RadialGauss { nodes } if nodes == 0 || nodes > 512 => Err(
                Error::config("quadrature.nodes", format!("expected 1..=512, got {nodes}")),
            ),
            QuadratureScheme::Grid { resolution } if resolution < 2 => Err(Error::config(
                "quadrature.resolution",
                format!("expected at least 2, got {resolution}"),
            )),
            _ => Ok(()),
        }
    }

    /// Relative error estimate `τ_quad`.
    pub fn tau(&self) -> f64 {
        match *self {
            QuadratureScheme::RadialGauss { .. } => GAUSS_TAU,
            QuadratureScheme::Grid { resolution } => (10.0 / resolution as f64).max(1e-3),
        }
    }

    /// Interior sample points used for cone-membership checks.
    pub fn membership_points(&self, dim: usize) -> Result<Vec<Vec<f64>>> {
        let mut points = match *self {
            QuadratureScheme::RadialGauss { nodes } => {
                let per_axis = ((20_000f64).powf(1.0 / dim as f64).floor() as usize)
                    .clamp(3, nodes.max(3));
                ball_rule(dim, per_axis)?.points()
            }
            QuadratureScheme::Grid { resolution } => {
                let cap = (1e6f64).powf(1.0 / dim as f64).floor() as usize;
                grid_rule(dim, resolution.min(cap.max(2)))?.points()
            }
        };
        points.push(vec![0.0; dim]);
        Ok(points)
    }
}

impl fmt::Display for QuadratureScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuadratureScheme::RadialGauss { nodes } => write!(f, "radial_gauss:{nodes}"),
            QuadratureScheme::Grid { resolution } => write!(f, "grid:{resolution}"),
        }
    }
}

impl FromStr for QuadratureScheme {
    type Err = Error;

    /// Parses `radial_gauss:N` or `grid:R`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, param) = s
            .split_once(':')
            .ok_or_else(|| Error::config("quadrature", format!("expected KIND:PARAM, got `{s}`")))?;
        let value: usize = param
            .trim()
            .parse()
            .map_err(|_| Error::config("quadrature", format!("bad parameter `{param}`")))?;
        let scheme = match kind.trim() {
            "radial_gauss" => QuadratureScheme::RadialGauss { nodes: value },
            "grid" => QuadratureScheme::Grid { resolution: value },
            other => {
                return Err(Error::config(
                    "quadrature",
                    format!("unknown kind `{other}` (radial_gauss or grid)"),
                ))
            }
        };
        scheme.validate()?;
        Ok(scheme)
    }
}

/// `∫_{-1}^{1} (1 - x²)^a dx` for integer or half-integer `a ≥ 0`.
fn jacobi_mass(twice_a: usize) -> f64 {
    let mut mass = if twice_a.is_multiple_of(2) {
        2.0
    } else {
        std::f64::consts::FRAC_PI_2
    };
    let mut t = twice_a % 2;
    while t < twice_a {
        t += 2;
        mass *= t as f64 / (t + 1) as f64;
    }
    mass
}

/// Gauss rule for the weight `(1 - x²)^{twice_a/2}` on `[-1, 1]`.
///
/// Nodes come from the Jacobi matrix, are polished by Newton steps on the
/// three-term recurrence, and weights use the Christoffel function.
pub fn gauss_jacobi_symmetric(points: usize, twice_a: usize) -> Vec<(f64, f64)> {
    assert!(points >= 1);
    let a = twice_a as f64 / 2.0;
    let beta = |j: usize| -> f64 {
        let j = j as f64;
        j * (j + 2.0 * a) / (4.0 * (j + a) * (j + a) - 1.0)
    };
    let mu0 = jacobi_mass(twice_a);

    let mut jm = DMatrix::<f64>::zeros(points, points);
    for j in 1..points {
        let b = beta(j).sqrt();
        jm[(j - 1, j)] = b;
        jm[(j, j - 1)] = b;
    }
    let mut nodes: Vec<f64> = jm.symmetric_eigenvalues().iter().copied().collect();
    nodes.sort_by(f64::total_cmp);

    for x in nodes.iter_mut() {
        for _ in 0..3 {
            // monic p_points and its derivative
            let (mut p0, mut p1) = (1.0, *x);
            let (mut d0, mut d1) = (0.0, 1.0);
            for j in 1..points {
                let b = beta(j);
                let p2 = *x * p1 - b * p0;
                let d2 = p1 + *x * d1 - b * d0;
                p0 = p1;
                p1 = p2;
                d0 = d1;
                d1 = d2;
            }
            if d1 != 0.0 {
                *x -= p1 / d1;
            }
        }
    }

    let weights: Vec<f64> = nodes
        .iter()
        .map(|&x| {
            let mut prev = 0.0;
            let mut cur = 1.0 / mu0.sqrt();
            let mut sum = cur * cur;
            for j in 1..points {
                let b_next = beta(j).sqrt();
                let b_prev = if j >= 2 { beta(j - 1).sqrt() } else { 0.0 };
                let next = (x * cur - b_prev * prev) / b_next;
                prev = cur;
                cur = next;
                sum += cur * cur;
            }
            1.0 / sum
        })
        .collect();

    // enforce exact reflection symmetry
    let mut rule = vec![(0.0, 0.0); points];
    for i in 0..points {
        let j = points - 1 - i;
        let x = 0.5 * (nodes[i] - nodes[j]);
        let w = 0.5 * (weights[i] + weights[j]);
        rule[i] = (if i == j { 0.0 } else { x }, w);
    }
    rule
}

/// Gauss–Legendre on `[0, 1]`.
pub fn gauss_legendre_unit(points: usize) -> Vec<(f64, f64)> {
    gauss_jacobi_symmetric(points, 0)
        .into_iter()
        .map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect()
}

/// Nodes (row-major, `dim` coordinates each) and weights of a ball rule.
#[derive(Debug, Clone, PartialEq)]
pub struct BallRule {
    pub dim: usize,
    pub coords: Vec<f64>,
    pub weights: Vec<f64>,
}

impl BallRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        self.coords.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }
}

fn rule_cache() -> &'static Mutex<HashMap<(u8, usize, usize), Arc<BallRule>>> {
    static CACHE: OnceLock<Mutex<HashMap<(u8, usize, usize), Arc<BallRule>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn cached(key: (u8, usize, usize), build: impl FnOnce() -> Result<BallRule>) -> Result<Arc<BallRule>> {
    if let Some(rule) = rule_cache().lock().expect("rule cache poisoned").get(&key) {
        return Ok(Arc::clone(rule));
    }
    let rule = Arc::new(build()?);
    rule_cache()
        .lock()
        .expect("rule cache poisoned")
        .insert(key, Arc::clone(&rule));
    Ok(rule)
}

/// Conical product rule on `B^dim` with `per_axis` points per level; exact for
/// polynomials of total degree `≤ 2·per_axis − 1`.
///
/// Uses `∫_{B^m} f = ∫_{-1}^{1} (1-ξ²)^{(m-1)/2} ∫_{B^{m-1}} f(ξ, √(1-ξ²) y) dy dξ`.
pub fn ball_rule(dim: usize, per_axis: usize) -> Result<Arc<BallRule>> {
    if dim == 0 || per_axis == 0 {
        return Err(Error::InvalidInput("ball rule needs dim >= 1 and per_axis >= 1".into()));
    }
    let total = (per_axis as f64).powi(dim as i32);
    if total > MAX_RULE_NODES as f64 {
        return Err(Error::Capacity(format!(
            "ball rule with {per_axis}^{dim} nodes exceeds {MAX_RULE_NODES}"
        )));
    }
    cached((0, dim, per_axis), || {
        // innermost level: B^1 with Legendre weight
        let mut coords: Vec<f64> = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        for (x, w) in gauss_jacobi_symmetric(per_axis, 0) {
            coords.push(x);
            weights.push(w);
        }
        for m in 2..=dim {
            let outer = gauss_jacobi_symmetric(per_axis, m - 1);
            let inner_dim = m - 1;
            let mut next_coords = Vec::with_capacity(coords.len() * per_axis * m / inner_dim);
            let mut next_weights = Vec::with_capacity(weights.len() * per_axis);
            for &(xi, wxi) in &outer {
                let s = (1.0 - xi * xi).max(0.0).sqrt();
                for (y, &wy) in coords.chunks(inner_dim).zip(&weights) {
                    next_coords.push(xi);
                    next_coords.extend(y.iter().map(|v| s * v));
                    next_weights.push(wxi * wy);
                }
            }
            coords = next_coords;
            weights = next_weights;
        }
        Ok(BallRule {
            dim,
            coords,
            weights,
        })
    })
}

/// Cell centers strictly inside the ball, weight = cell volume.
pub fn grid_rule(dim: usize, resolution: usize) -> Result<Arc<BallRule>> {
    if dim == 0 || resolution == 0 {
        return Err(Error::InvalidInput("grid needs dim >= 1 and resolution >= 1".into()));
    }
    let candidates = (resolution as f64).powi(dim as i32);
    if candidates > MAX_RULE_NODES as f64 * 4.0 {
        return Err(Error::Capacity(format!(
            "grid with {resolution}^{dim} cells is too large"
        )));
    }
    cached((1, dim, resolution), || {
        let h = 2.0 / resolution as f64;
        let cell = h.powi(dim as i32);
        let centers: Vec<f64> = (0..resolution).map(|i| -1.0 + (i as f64 + 0.5) * h).collect();
        let mut idx = vec![0usize; dim];
        let mut coords = Vec::new();
        let mut weights = Vec::new();
        loop {
            let r2: f64 = idx.iter().map(|&i| centers[i] * centers[i]).sum();
            if r2 < 1.0 {
                coords.extend(idx.iter().map(|&i| centers[i]));
                weights.push(cell);
            }
            let mut pos = 0;
            loop {
                if pos == dim {
                    return Ok(BallRule {
                        dim,
                        coords,
                        weights,
                    });
                }
                idx[pos] += 1;
                if idx[pos] < resolution {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
        }
    })
}

/// Points on `S^{dim-1}`: a product-of-angles lattice plus seeded random
/// directions, at least 1000 points for `dim ≥ 2`.
pub fn sphere_points(dim: usize) -> Vec<Vec<f64>> {
    use std::f64::consts::PI;
    if dim == 1 {
        return vec![vec![-1.0], vec![1.0]];
    }
    let angles = dim - 1;
    let mut per = 2usize;
    while per.pow(angles as u32) < 500 {
        per += 1;
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; angles];
    loop {
        let mut x = vec![0.0; dim];
        let mut sin_prod = 1.0;
        for a in 0..angles {
            let theta = if a + 1 == angles {
                2.0 * PI * idx[a] as f64 / per as f64
            } else {
                PI * (idx[a] as f64 + 0.5) / per as f64
            };
            x[a] = sin_prod * theta.cos();
            sin_prod *= theta.sin();
        }
        x[dim - 1] = sin_prod;
        out.push(x);
        let mut pos = 0;
        loop {
            if pos == angles {
                break;
            }
            idx[pos] += 1;
            if idx[pos] < per {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
        if pos == angles {
            break;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_5eed);
    while out.len() < 1000 || out.len() < per.pow(angles as u32) + 500 {
        let g: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = g.iter().map(|v: &f64| v * v).sum::<f64>().sqrt();
        if norm > 1e-12 {
            out.push(g.into_iter().map(|v| v / norm).collect());
        }
    }
    out
}

/// Kahan–Babuška–Neumaier running sum.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Surface area of `S^{dim-1}`, i.e. `2π^{dim/2}/Γ(dim/2)`.
pub fn sphere_area(dim: usize) -> f64 {
    use std::f64::consts::PI;
    // |S^0| = 2, |S^1| = 2π, |S^{d+1}| = 2π/d · |S^{d-1}|
    let (mut area, mut d) = if dim % 2 == 1 { (2.0, 1) } else { (2.0 * PI, 2) };
    while d < dim {
        area *= 2.0 * PI / d as f64;
        d += 2;
    }
    area
}

/// Volume of `B^dim`.
pub fn ball_volume(dim: usize) -> f64 {
    sphere_area(dim) / dim as f64
}
