//! Quadrature rules, grids and interpolation on [0, 1].
//!
//! Two node families are used throughout the crate: Gauss–Legendre nodes for
//! integrals whose integrand is only piecewise smooth (integrals are always
//! split at the kink), and Chebyshev–Lobatto nodes for the solution grid,
//! which contain both endpoints and interpolate stably.

use rayon::prelude::*;
use std::f64::consts::PI;

/// A Gauss–Legendre rule mapped to [0, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss–Legendre rule needs at least one node");
        let (x, w) = legendre_reference(n);
        // ascending order on [0, 1]
        let nodes = x.iter().rev().map(|&xi| 0.5 * (xi + 1.0)).collect();
        let weights = w.iter().rev().map(|&wi| 0.5 * wi).collect();
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrate `f` over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let h = b - a;
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(a + h * x))
            .sum::<f64>()
            * h
    }

    /// Integrate over [0, 1] with the interval split at `at`.
    pub fn integrate_split(&self, at: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let at = at.clamp(0.0, 1.0);
        self.integrate(0.0, at, &mut f) + self.integrate(at, 1.0, &mut f)
    }

    /// Nodes and weights of the split rule on [0, at] ∪ [at, 1].
    pub fn split_points(&self, at: f64) -> Vec<(f64, f64)> {
        let at = at.clamp(0.0, 1.0);
        let mut out = Vec::with_capacity(2 * self.len());
        for (a, b) in [(0.0, at), (at, 1.0)] {
            let h = b - a;
            if h <= 0.0 {
                continue;
            }
            out.extend(
                self.nodes
                    .iter()
                    .zip(&self.weights)
                    .map(|(&x, &w)| (a + h * x, w * h)),
            );
        }
        out
    }

    /// Barycentric weights for Lagrange interpolation through the nodes.
    pub fn barycentric_weights(&self) -> Vec<f64> {
        // (-1)^j sqrt((1 - x_j^2) w_j) on the reference interval; the common
        // scale factor from the map to [0, 1] cancels in the barycentric formula.
        self.nodes
            .iter()
            .zip(&self.weights)
            .enumerate()
            .map(|(j, (&t, &w))| {
                let x = 2.0 * t - 1.0;
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * ((1.0 - x * x) * 2.0 * w).sqrt()
            })
            .collect()
    }
}

fn legendre_reference(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Chebyshev–Lobatto grid on [0, 1] with Clenshaw–Curtis weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    bary: Vec<f64>,
}

impl ChebyshevGrid {
    /// `intervals + 1` nodes, ascending, including both endpoints.
    pub fn new(intervals: usize) -> Self {
        assert!(intervals >= 2, "Chebyshev grid needs at least two intervals");
        let n = intervals;
        let nodes: Vec<f64> = (0..=n)
            .map(|j| {
                let t = 0.5 * (1.0 - (PI * j as f64 / n as f64).cos());
                t.clamp(0.0, 1.0)
            })
            .collect();
        let weights = clenshaw_curtis(n).into_iter().map(|w| 0.5 * w).collect();
        let bary = (0..=n)
            .map(|j| {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == n {
                    0.5 * sign
                } else {
                    sign
                }
            })
            .collect();
        ChebyshevGrid {
            nodes,
            weights,
            bary,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn max_spacing(&self) -> f64 {
        self.nodes
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    pub fn interpolate(&self, values: &[f64], x: f64) -> f64 {
        barycentric_eval(&self.nodes, &self.bary, values, x)
    }

    pub(crate) fn bary(&self) -> &[f64] {
        &self.bary
    }

    pub fn basis_row(&self, x: f64) -> Vec<f64> {
        barycentric_basis(&self.nodes, &self.bary, x)
    }
}

/// Clenshaw–Curtis weights on [-1, 1] for the nodes cos(jπ/n), j = 0..=n.
fn clenshaw_curtis(n: usize) -> Vec<f64> {
    let nf = n as f64;
    let mut w = vec![0.0; n + 1];
    if n % 2 == 0 {
        w[0] = 1.0 / (nf * nf - 1.0);
    } else {
        w[0] = 1.0 / (nf * nf);
    }
    w[n] = w[0];
    for (j, wj) in w.iter_mut().enumerate().take(n).skip(1) {
        let theta = PI * j as f64 / nf;
        let mut v = 1.0;
        if n % 2 == 0 {
            for k in 1..n / 2 {
                let kf = k as f64;
                v -= 2.0 * (2.0 * kf * theta).cos() / (4.0 * kf * kf - 1.0);
            }
            v -= (nf * theta).cos() / (nf * nf - 1.0);
        } else {
            for k in 1..=(n - 1) / 2 {
                let kf = k as f64;
                v -= 2.0 * (2.0 * kf * theta).cos() / (4.0 * kf * kf - 1.0);
            }
        }
        *wj = 2.0 * v / nf;
    }
    w
}

pub(crate) fn barycentric_eval(nodes: &[f64], bary: &[f64], values: &[f64], x: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for ((&xj, &wj), &fj) in nodes.iter().zip(bary).zip(values) {
        let d = x - xj;
        if d == 0.0 {
            return fj;
        }
        let c = wj / d;
        num += c * fj;
        den += c;
    }
    num / den
}

pub(crate) fn barycentric_basis(nodes: &[f64], bary: &[f64], x: f64) -> Vec<f64> {
    let mut row = vec![0.0; nodes.len()];
    if let Some(j) = nodes.iter().position(|&xj| xj == x) {
        row[j] = 1.0;
        return row;
    }
    let mut den = 0.0;
    for ((r, &xj), &wj) in row.iter_mut().zip(nodes).zip(bary) {
        *r = wj / (x - xj);
        den += *r;
    }
    for r in &mut row {
        *r /= den;
    }
    row
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Supremum of `f` over [0, 1]: a uniform grid of `resolution + 1` points,
/// then golden-section refinement on the bracket around the best grid point.
/// Grid values are computed in parallel and reduced in index order.
pub fn sup_on_unit_interval<F>(f: F, resolution: usize) -> (f64, f64)
where
    F: Fn(f64) -> f64 + Sync,
{
    let n = resolution.max(1);
    let values: Vec<f64> = (0..=n)
        .into_par_iter()
        .map(|k| f(k as f64 / n as f64))
        .collect();
    let mut best = 0;
    for (k, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = k;
        }
    }
    let h = 1.0 / n as f64;
    let lo = (best as f64 * h - h).max(0.0);
    let hi = (best as f64 * h + h).min(1.0);
    let (t_ref, v_ref) = golden_section_max(&f, lo, hi);
    if v_ref > values[best] {
        (t_ref, v_ref)
    } else {
        (best as f64 * h, values[best])
    }
}

fn golden_section_max<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> (f64, f64) {
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if b - a < 1e-14 {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let rule = GaussLegendre::new(5);
        // degree 9 is the limit for 5 nodes
        let v = rule.integrate(0.0, 1.0, |x| x.powi(9));
        assert!((v - 0.1).abs() < 1e-15);
        let w: f64 = rule.weights.iter().sum();
        assert!((w - 1.0).abs() < 1e-15);
        assert!(rule.nodes.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn gauss_legendre_large_rule_is_accurate() {
        let rule = GaussLegendre::new(400);
        let v = rule.integrate(0.0, PI, f64::sin);
        assert!((v - 2.0).abs() < 1e-13);
    }

    #[test]
    fn split_integration_handles_kinks() {
        let rule = GaussLegendre::new(8);
        let v = rule.integrate_split(0.3, |s| (s - 0.3).abs());
        assert!((v - (0.09 + 0.49) / 2.0).abs() < 1e-15);
        assert_eq!(rule.split_points(0.0).len(), 8);
    }

    #[test]
    fn clenshaw_curtis_weights() {
        for n in [2, 7, 16, 200] {
            let g = ChebyshevGrid::new(n);
            let total: f64 = g.weights.iter().sum();
            assert!((total - 1.0).abs() < 1e-14, "n={n}");
            let cubic: Vec<f64> = g.nodes.iter().map(|t| t * t * t).collect();
            if n >= 3 {
                assert!((g.integrate(&cubic) - 0.25).abs() < 1e-14);
            }
            assert_eq!(g.nodes[0], 0.0);
            assert_eq!(g.nodes[n], 1.0);
        }
    }

    #[test]
    fn barycentric_interpolation_is_spectral() {
        let g = ChebyshevGrid::new(40);
        let vals: Vec<f64> = g.nodes.iter().map(|&t| (3.0 * t).sin()).collect();
        for x in [0.0, 0.123, 0.5, 0.77, 1.0] {
            assert!((g.interpolate(&vals, x) - (3.0 * x).sin()).abs() < 1e-13);
        }
        let row = g.basis_row(0.3);
        let s: f64 = row.iter().sum();
        assert!((s - 1.0).abs() < 1e-13);
    }

    #[test]
    fn legendre_barycentric_weights_interpolate() {
        let rule = GaussLegendre::new(30);
        let bw = rule.barycentric_weights();
        let vals: Vec<f64> = rule.nodes.iter().map(|t| t.exp()).collect();
        let v = barycentric_eval(&rule.nodes, &bw, &vals, 0.41);
        assert!((v - 0.41f64.exp()).abs() < 1e-13);
    }

    #[test]
    fn sup_refines_interior_maximum() {
        let (t, v) = sup_on_unit_interval(|t| -(t - 0.3337).powi(2), 10);
        assert!((t - 0.3337).abs() < 1e-6);
        assert!(v.abs() < 1e-12);
        let (t, v) = sup_on_unit_interval(|t| 1.0 - t, 10);
        assert_eq!(t, 0.0);
        assert_eq!(v, 1.0);
    }
}
