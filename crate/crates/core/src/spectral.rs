//! Spectral radius, characteristic value and nonnegative eigenfunction of
//! `L w(t) = ∫₀¹ k(t, s) w(s) ds`.
//!
//! The operator is discretized on Gauss–Legendre nodes by product
//! integration: row `i` integrates `k(t_i, s)` against the Lagrange basis of
//! the nodes, with the s-integral split at `s = t_i`. For kernels that are
//! polynomial on each side of the diagonal this is exact on polynomials of
//! the node degree, so the builtin eigenvalues are reproduced to roundoff.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{Kernel, PiecewiseBivariate};
use crate::quadrature::{barycentric_basis, GaussLegendre};

pub const MAX_POWER_STEPS: usize = 100_000;
pub const DEFAULT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct EigenPair {
    pub spectral_radius: f64,
    pub characteristic_value: f64,
    /// Sampled at `nodes`, max-normalized with the largest entry equal to +1.
    pub eigenfunction: Vec<f64>,
    pub nodes: Vec<f64>,
    /// `‖A φ − r φ‖∞` for the discrete operator.
    pub residual: f64,
    pub iterations: usize,
}

/// Product-integration matrix `A[i][j] = ∫₀¹ k(x_i, s) L_j(s) ds` for
/// interpolation nodes `x` with barycentric weights `bary`.
pub(crate) fn product_integration_matrix(
    level: &PiecewiseBivariate,
    nodes: &[f64],
    bary: &[f64],
    rule: &GaussLegendre,
) -> DMatrix<f64> {
    let n = nodes.len();
    let rows: Vec<Vec<f64>> = nodes
        .par_iter()
        .map(|&t| {
            let mut row = vec![0.0; n];
            for (s, w) in rule.split_points(t) {
                let kw = w * level.eval(t, s);
                if kw == 0.0 {
                    continue;
                }
                for (r, b) in row.iter_mut().zip(barycentric_basis(nodes, bary, s)) {
                    *r += kw * b;
                }
            }
            row
        })
        .collect();
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

/// Nyström matrix of level `level` on `resolution` Gauss–Legendre nodes.
pub fn nystrom_matrix(kernel: &Kernel, level: usize, resolution: usize) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let branch = kernel.level(level)?;
    let rule = GaussLegendre::new(resolution);
    let bary = rule.barycentric_weights();
    let a = product_integration_matrix(branch, &rule.nodes, &bary, &rule);
    Ok((rule.nodes.clone(), a))
}

/// Outcome of power iteration on a nonnegative matrix.
#[derive(Debug, Clone)]
pub struct PowerIteration {
    pub eigenvalue: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

fn normalize_max(v: &mut DVector<f64>) -> bool {
    let mut pivot = 0.0f64;
    for x in v.iter() {
        if x.abs() > pivot.abs() {
            pivot = *x;
        }
    }
    if pivot == 0.0 || !pivot.is_finite() {
        return false;
    }
    *v /= pivot;
    true
}

/// Power iteration from the all-ones vector until the Rayleigh quotient
/// changes by at most `tol`.
pub fn power_iteration(a: &DMatrix<f64>, tol: f64, name: &str) -> Result<PowerIteration> {
    if tol <= 0.0 {
        return Err(Error::argument(format!("tolerance must be positive, got {tol}")));
    }
    let n = a.nrows();
    let mut x = DVector::from_element(n, 1.0);
    let mut rq_prev = f64::NAN;
    for it in 1..=MAX_POWER_STEPS {
        let mut y = a * &x;
        let rq = x.dot(&y) / x.dot(&x);
        if !normalize_max(&mut y) {
            return Err(Error::DegenerateKernel {
                kernel: name.to_string(),
                radius: 0.0,
            });
        }
        x = y;
        if (rq - rq_prev).abs() <= tol {
            if rq <= tol {
                return Err(Error::DegenerateKernel {
                    kernel: name.to_string(),
                    radius: rq,
                });
            }
            let ax = a * &x;
            let rq = x.dot(&ax) / x.dot(&x);
            let residual = (ax - &x * rq).amax();
            return Ok(PowerIteration {
                eigenvalue: rq,
                vector: x.iter().copied().collect(),
                residual,
                iterations: it,
            });
        }
        rq_prev = rq;
    }
    Err(Error::Convergence {
        iterations: MAX_POWER_STEPS,
    })
}

/// Dominant eigenpair of the level-0 kernel operator.
pub fn spectral_radius(kernel: &Kernel, resolution: usize, tol: f64) -> Result<EigenPair> {
    if resolution < 16 {
        return Err(Error::argument(format!("resolution {resolution} < 16")));
    }
    let (nodes, a) = nystrom_matrix(kernel, 0, resolution)?;
    let p = power_iteration(&a, tol, kernel.name())?;
    Ok(EigenPair {
        spectral_radius: p.eigenvalue,
        characteristic_value: 1.0 / p.eigenvalue,
        eigenfunction: p.vector,
        nodes,
        residual: p.residual,
        iterations: p.iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PositivityCheck {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub holds: bool,
}

/// Largest `c ∈ [0, 1]` with `k(t, s) ≥ c Φ₀(s)` on the sampled grid of
/// `[a, b] × [0, 1]`.
pub fn check_c7_prime(kernel: &Kernel, a: f64, b: f64, resolution: usize) -> Result<PositivityCheck> {
    if !(0.0 <= a && a < b && b <= 1.0) {
        return Err(Error::argument(format!("need 0 ≤ a < b ≤ 1, got [{a}, {b}]")));
    }
    let phi = kernel
        .dominators()
        .map(|d| &d[0])
        .ok_or_else(|| Error::argument(format!("kernel `{}` has no dominator Φ₀", kernel.name())))?;
    let k = kernel.level(0)?;
    let n = resolution.max(1);
    let mut c = 1.0f64;
    for js in 0..=n {
        let s = js as f64 / n as f64;
        let bound = phi.eval(s);
        if bound <= 1e-12 {
            continue;
        }
        for it in 0..=n {
            let t = a + (b - a) * it as f64 / n as f64;
            c = c.min(k.eval(t, s) / bound);
        }
    }
    let c = c.max(0.0);
    Ok(PositivityCheck {
        a,
        b,
        c,
        holds: c > 0.0,
    })
}
