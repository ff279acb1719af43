//! Discretized fixed-point solver for the system `u = T u`.
//!
//! Every component carries grids for all levels `u_i^(l)`, `l = 0..=m_i`, on
//! one Chebyshev–Lobatto grid. Level `l` of `T u` integrates the level-`l`
//! derivative kernel against the interpolant of `f_i`, so derivatives are
//! never taken of grids.

use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Scope, Symbol, Var};
use crate::quadrature::{ChebyshevGrid, GaussLegendre};
use crate::spectral::{power_iteration, product_integration_matrix};
use crate::system::SystemSpec;

pub const DIVERGENCE_NORM: f64 = 1e12;
/// Input clamps larger than this are logged as warnings.
pub const CLAMP_WARNING: f64 = 1e-6;
const ANNEALING_STEPS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSolution {
    grid: Arc<ChebyshevGrid>,
    /// `[component][level][node]`
    levels: Vec<Vec<Vec<f64>>>,
    /// `‖u − T u‖` over all levels, when known.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Largest magnitude removed by the cone projection in the last step.
    pub clamp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Coherence {
    pub max_error: f64,
    pub tolerance: f64,
    pub holds: bool,
}

impl DiscreteSolution {
    pub fn zeros(grid: Arc<ChebyshevGrid>, orders: &[usize]) -> Self {
        Self::from_fn(grid, orders, |_, _| 0.0)
    }

    pub fn from_fn(
        grid: Arc<ChebyshevGrid>,
        orders: &[usize],
        f: impl Fn(Symbol, f64) -> f64,
    ) -> Self {
        let levels = orders
            .iter()
            .enumerate()
            .map(|(k, &m)| {
                (0..=m)
                    .map(|l| grid.nodes.iter().map(|&t| f(Symbol::new(k + 1, l), t)).collect())
                    .collect()
            })
            .collect();
        DiscreteSolution {
            grid,
            levels,
            residual: f64::NAN,
            iterations: 0,
            converged: false,
            clamp: 0.0,
        }
    }

    pub fn grid(&self) -> &ChebyshevGrid {
        &self.grid
    }

    pub fn shared_grid(&self) -> Arc<ChebyshevGrid> {
        Arc::clone(&self.grid)
    }

    pub fn level(&self, s: Symbol) -> Option<&[f64]> {
        self.levels
            .get(s.component.checked_sub(1)?)?
            .get(s.order)
            .map(Vec::as_slice)
    }

    pub fn components(&self) -> &[Vec<Vec<f64>>] {
        &self.levels
    }

    pub fn orders(&self) -> Vec<usize> {
        self.levels.iter().map(|c| c.len() - 1).collect()
    }

    fn grids(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.levels.iter().flatten()
    }

    /// `max_i max_l ‖u_i^(l)‖∞`
    pub fn norm(&self) -> f64 {
        self.grids().flatten().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn distance(&self, other: &DiscreteSolution) -> f64 {
        self.grids()
            .zip(other.grids())
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }

    /// Smallest level-0 value over all components.
    pub fn min_level0(&self) -> f64 {
        self.levels
            .iter()
            .flat_map(|c| c[0].iter())
            .fold(f64::INFINITY, |a, &v| a.min(v))
    }

    fn combine(&self, other: &DiscreteSolution, damping: f64) -> DiscreteSolution {
        let mut out = other.clone();
        for (dst, src) in out.levels.iter_mut().flatten().zip(self.grids()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d = (1.0 - damping) * s + damping * *d;
            }
        }
        out
    }

    /// Level-0 values below zero raised to zero; returns the largest lift.
    fn project(&mut self) -> f64 {
        let mut clamp = 0.0f64;
        for c in &mut self.levels {
            for v in &mut c[0] {
                if *v < 0.0 {
                    clamp = clamp.max(-*v);
                    *v = 0.0;
                }
            }
        }
        clamp
    }

    /// Resample every level onto `grid` by barycentric interpolation.
    pub fn interpolate_to(&self, grid: Arc<ChebyshevGrid>) -> DiscreteSolution {
        let basis: Vec<Vec<f64>> = grid.nodes.iter().map(|&t| self.grid.basis_row(t)).collect();
        let levels = self
            .levels
            .iter()
            .map(|c| {
                c.iter()
                    .map(|v| {
                        basis
                            .iter()
                            .map(|row| row.iter().zip(v).map(|(b, x)| b * x).sum())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        DiscreteSolution {
            grid,
            levels,
            ..self.clone()
        }
    }

    /// Nonuniform centred differences of level `l` against level `l + 1`.
    pub fn derivative_coherence(&self) -> Coherence {
        let x = &self.grid.nodes;
        let mut max_error = 0.0f64;
        for c in &self.levels {
            for pair in c.windows(2) {
                let (u, du) = (&pair[0], &pair[1]);
                for q in 1..x.len() - 1 {
                    let h1 = x[q] - x[q - 1];
                    let h2 = x[q + 1] - x[q];
                    let d = -h2 / (h1 * (h1 + h2)) * u[q - 1]
                        + (h2 - h1) / (h1 * h2) * u[q]
                        + h1 / (h2 * (h1 + h2)) * u[q + 1];
                    max_error = max_error.max((d - du[q]).abs());
                }
            }
        }
        let h = self.grid.max_spacing();
        let tolerance = h * h * (1.0 + self.norm());
        Coherence {
            max_error,
            tolerance,
            holds: max_error <= tolerance,
        }
    }

    /// Whitespace-separated table: `t u1 u1' … un^(m_n)`, one row per node.
    pub fn to_table(&self) -> String {
        let mut out = String::from("t");
        for (k, c) in self.levels.iter().enumerate() {
            for l in 0..c.len() {
                write!(out, " {}", Symbol::new(k + 1, l)).unwrap();
            }
        }
        out.push('\n');
        for (q, t) in self.grid.nodes.iter().enumerate() {
            write!(out, "{t:.11e}").unwrap();
            for v in self.grids() {
                write!(out, " {:.11e}", v[q]).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

struct NodeScope<'a> {
    t: f64,
    q: usize,
    u: &'a DiscreteSolution,
}

impl Scope for NodeScope<'_> {
    fn var(&self, v: Var) -> Option<f64> {
        (v == Var::T).then_some(self.t)
    }
    fn symbol(&self, s: Symbol) -> Option<f64> {
        self.u.level(s).map(|g| g[self.q])
    }
}

/// Precomputed product-integration matrices and boundary-function grids for
/// one spec on one grid.
#[derive(Debug, Clone)]
pub struct Discretization<'a> {
    spec: &'a SystemSpec,
    grid: Arc<ChebyshevGrid>,
    /// `[component][level]`
    matrices: Vec<Vec<DMatrix<f64>>>,
    /// `[component][term][level][node]`
    gammas: Vec<Vec<Vec<Vec<f64>>>>,
}

impl<'a> Discretization<'a> {
    /// Grid with `resolution + 1` nodes; each matrix row integrates with
    /// `resolution` Gauss–Legendre points on either side of the diagonal.
    pub fn new(spec: &'a SystemSpec, resolution: usize) -> Result<Self> {
        if resolution < 4 {
            return Err(Error::argument(format!("resolution {resolution} < 4")));
        }
        let grid = Arc::new(ChebyshevGrid::new(resolution));
        let rule = GaussLegendre::new(resolution);
        let mut matrices = Vec::with_capacity(spec.n());
        let mut gammas = Vec::with_capacity(spec.n());
        for c in spec.components() {
            matrices.push(
                c.kernel
                    .levels()
                    .iter()
                    .map(|level| product_integration_matrix(level, &grid.nodes, grid.bary(), &rule))
                    .collect(),
            );
            let mut per_term = Vec::with_capacity(c.terms.len());
            for term in &c.terms {
                let mut per_level = Vec::with_capacity(c.order() + 1);
                for g in &term.gamma[..=c.order()] {
                    let values = grid
                        .nodes
                        .iter()
                        .map(|&t| g.eval_ts(t, 0.0))
                        .collect::<Result<Vec<f64>>>()?;
                    per_level.push(values);
                }
                per_term.push(per_level);
            }
            gammas.push(per_term);
        }
        Ok(Discretization {
            spec,
            grid,
            matrices,
            gammas,
        })
    }

    pub fn spec(&self) -> &SystemSpec {
        self.spec
    }

    pub fn grid(&self) -> Arc<ChebyshevGrid> {
        Arc::clone(&self.grid)
    }

    pub fn zeros(&self) -> DiscreteSolution {
        DiscreteSolution::zeros(self.grid(), &self.spec.orders())
    }

    /// Level-`l` product-integration matrix of component `i` (1-based).
    pub fn matrix(&self, i: usize, level: usize) -> Result<&DMatrix<f64>> {
        self.matrices
            .get(i.wrapping_sub(1))
            .and_then(|m| m.get(level))
            .ok_or_else(|| Error::argument(format!("no matrix for component {i}, level {level}")))
    }

    fn check_shape(&self, u: &DiscreteSolution) -> Result<()> {
        if u.grid.nodes != self.grid.nodes || u.orders() != self.spec.orders() {
            return Err(Error::argument(
                "solution grids do not match the discretization",
            ));
        }
        Ok(())
    }

    pub fn apply(&self, u: &DiscreteSolution) -> Result<DiscreteSolution> {
        self.check_shape(u)?;
        let mut input = u.clone();
        let lifted = input.project();
        if lifted > CLAMP_WARNING {
            log::warn!("level-0 input clamped by {lifted:e} before evaluating f");
        }
        let mut out = input.clone();
        for (k, c) in self.spec.components().iter().enumerate() {
            let i = k + 1;
            let f_values = self
                .grid
                .nodes
                .iter()
                .enumerate()
                .map(|(q, &t)| {
                    let v = c
                        .nonlinearity
                        .eval(&NodeScope { t, q, u: &input })
                        .map_err(|e| node_error(i, t, e))?;
                    if v.is_finite() {
                        Ok(v)
                    } else {
                        Err(Error::domain(format!("f_{i} at node t = {t} evaluates to {v}")))
                    }
                })
                .collect::<Result<Vec<f64>>>()?;
            let f_values = DVector::from_vec(f_values);
            let h_values = c
                .terms
                .iter()
                .map(|term| term.functional.evaluate(&input))
                .collect::<Result<Vec<f64>>>()?;
            for (l, a) in self.matrices[k].iter().enumerate() {
                let mut level = a * &f_values * c.lambda;
                for ((term, g), h) in c.terms.iter().zip(&self.gammas[k]).zip(&h_values) {
                    level
                        .iter_mut()
                        .zip(&g[l])
                        .for_each(|(v, gv)| *v += term.eta * gv * h);
                }
                out.levels[k][l] = level.iter().copied().collect();
            }
        }
        out.clamp = out.project();
        out.residual = f64::NAN;
        Ok(out)
    }

    /// `‖u − T u‖` over all levels.
    pub fn residual(&self, u: &DiscreteSolution) -> Result<f64> {
        Ok(u.distance(&self.apply(u)?))
    }

    pub fn solve_fixed_point(
        &self,
        initial: &DiscreteSolution,
        damping: f64,
        max_iter: usize,
        tol: f64,
    ) -> Result<DiscreteSolution> {
        if !(damping > 0.0 && damping <= 1.0) {
            return Err(Error::argument(format!("damping {damping} outside (0, 1]")));
        }
        if !(tol > 0.0) {
            return Err(Error::argument(format!("tolerance must be positive, got {tol}")));
        }
        self.check_shape(initial)?;
        let mut u = initial.clone();
        let mut residual = f64::INFINITY;
        for it in 0..=max_iter {
            let tu = self.apply(&u)?;
            residual = u.distance(&tu);
            if residual <= tol {
                u.residual = residual;
                u.iterations = it;
                u.converged = true;
                return Ok(u);
            }
            if it == max_iter {
                break;
            }
            u = u.combine(&tu, damping);
            let norm = u.norm();
            if !norm.is_finite() || norm > DIVERGENCE_NORM {
                return Err(Error::Divergence {
                    iteration: it + 1,
                    norm,
                });
            }
        }
        u.residual = residual;
        u.iterations = max_iter;
        u.converged = false;
        Ok(u)
    }

    /// Dominant eigenfunction of component `i`'s level-0 matrix with all
    /// derivative levels, scaled to product norm 1.
    pub fn eigen_profile(&self, i: usize) -> Result<Vec<Vec<f64>>> {
        let k = i
            .checked_sub(1)
            .filter(|&k| k < self.spec.n())
            .ok_or_else(|| Error::argument(format!("component {i} out of range")))?;
        let c = &self.spec.components()[k];
        let p = power_iteration(&self.matrices[k][0], 1e-13, c.kernel.name())?;
        let phi = DVector::from_vec(p.vector);
        let mu = 1.0 / p.eigenvalue;
        let mut stack: Vec<Vec<f64>> = self.matrices[k]
            .iter()
            .map(|a| (a * &phi * mu).iter().copied().collect())
            .collect();
        let scale = stack.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
        for v in stack.iter_mut().flatten() {
            *v /= scale;
        }
        Ok(stack)
    }
}

fn node_error(i: usize, t: f64, e: Error) -> Error {
    match e {
        Error::Domain(msg) => Error::Domain(format!("f_{i} at node t = {t}: {msg}")),
        other => other,
    }
}

/// One application of `T` on the grid `u` lives on.
pub fn apply_t(spec: &SystemSpec, u: &DiscreteSolution) -> Result<DiscreteSolution> {
    Discretization::new(spec, u.grid.intervals())?.apply(u)
}

pub fn solve_fixed_point(
    spec: &SystemSpec,
    initial: &DiscreteSolution,
    damping: f64,
    max_iter: usize,
    tol: f64,
) -> Result<DiscreteSolution> {
    Discretization::new(spec, initial.grid.intervals())?.solve_fixed_point(initial, damping, max_iter, tol)
}

/// `‖u − T u‖` with `T` re-applied on a grid of twice the resolution.
pub fn residual_certificate(spec: &SystemSpec, u: &DiscreteSolution) -> Result<f64> {
    let fine = Discretization::new(spec, 2 * u.grid.intervals())?;
    let v = u.interpolate_to(fine.grid());
    fine.residual(&v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    pub resolution: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            resolution: 200,
            tol: 1e-10,
            max_iter: 10_000,
            damping: 1.0,
        }
    }
}

/// Localization target for multistart: starts are scaled into `[r, R]` and
/// the eigenfunction profiles come from component `i0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Annulus {
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub i0: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Zero,
    Constant,
    Eigenfunction,
}

#[derive(Debug, Clone, Serialize)]
pub struct StartRecord {
    pub index: usize,
    pub profile: Profile,
    pub amplitude: f64,
    pub damping: f64,
    pub converged: bool,
    pub iterations: usize,
    pub residual: Option<f64>,
    pub error: Option<String>,
    /// Index into the distinct solutions, when this start converged.
    pub solution: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FoundSolution {
    pub start: usize,
    pub norm: f64,
    pub residual: f64,
    pub in_annulus: bool,
    pub min_level0: f64,
    #[serde(skip)]
    pub solution: DiscreteSolution,
}

#[derive(Debug, Clone, Serialize)]
pub struct MultistartReport {
    pub annulus: Annulus,
    pub starts: Vec<StartRecord>,
    pub solutions: Vec<FoundSolution>,
}

/// `count` amplitudes log-spaced on `[r, R]` with both ends included; the
/// interior ones are jittered within a quarter step by the seeded RNG.
fn amplitudes(r: f64, big_r: f64, count: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    if count == 1 {
        return vec![big_r];
    }
    let (a, b) = (r.ln(), big_r.ln());
    (0..count)
        .map(|k| {
            let mut x = k as f64;
            if k > 0 && k + 1 < count {
                x += rng.random_range(-0.25..0.25);
            }
            (a + (b - a) * x / (count - 1) as f64).exp()
        })
        .collect()
}

/// Picard iteration from the zero profile and `starts` nonzero profiles.
///
/// Half the nonzero starts (rounded up) are constants `c` on every level-0
/// grid, the rest are `c·φ_{i0}` with derivatives; a start that diverges or
/// stalls is retried with the damping halved, up to four times.
pub fn solve_multistart(
    spec: &SystemSpec,
    annulus: Annulus,
    starts: usize,
    seed: u64,
    options: &SolverOptions,
) -> Result<MultistartReport> {
    if starts == 0 {
        return Err(Error::argument("need at least one start"));
    }
    if !(annulus.r > 0.0 && annulus.r <= annulus.big_r && annulus.big_r.is_finite()) {
        return Err(Error::argument(format!(
            "need 0 < r ≤ R, got r = {}, R = {}",
            annulus.r, annulus.big_r
        )));
    }
    spec.component(annulus.i0)?;
    let disc = Discretization::new(spec, options.resolution)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_const = starts.div_ceil(2);
    let n_eig = starts - n_const;
    let mut profiles: Vec<(Profile, f64, DiscreteSolution)> = vec![(Profile::Zero, 0.0, disc.zeros())];
    for c in amplitudes(annulus.r, annulus.big_r, n_const, &mut rng) {
        let u = DiscreteSolution::from_fn(disc.grid(), &spec.orders(), |s, _| {
            if s.order == 0 {
                c
            } else {
                0.0
            }
        });
        profiles.push((Profile::Constant, c, u));
    }
    if n_eig > 0 {
        let shape = disc.eigen_profile(annulus.i0)?;
        for c in amplitudes(annulus.r, annulus.big_r, n_eig, &mut rng) {
            let mut u = disc.zeros();
            for (dst, src) in u.levels[annulus.i0 - 1].iter_mut().zip(&shape) {
                *dst = src.iter().map(|v| c * v).collect();
            }
            profiles.push((Profile::Eigenfunction, c, u));
        }
    }

    let runs: Vec<(f64, Result<DiscreteSolution>)> = profiles
        .par_iter()
        .map(|(_, _, u0)| {
            let mut damping = options.damping;
            let mut attempt = 0;
            loop {
                let result = disc.solve_fixed_point(u0, damping, options.max_iter, options.tol);
                let retry = match &result {
                    Ok(u) => !u.converged,
                    Err(Error::Divergence { .. }) | Err(Error::Domain(_)) => true,
                    Err(_) => false,
                };
                if !retry || attempt == ANNEALING_STEPS {
                    return (damping, result);
                }
                attempt += 1;
                damping /= 2.0;
            }
        })
        .collect();

    let mut records = Vec::with_capacity(runs.len());
    let mut solutions: Vec<FoundSolution> = Vec::new();
    for (index, ((profile, amplitude, _), (damping, result))) in profiles.iter().zip(runs).enumerate() {
        let mut record = StartRecord {
            index,
            profile: *profile,
            amplitude: *amplitude,
            damping,
            converged: false,
            iterations: 0,
            residual: None,
            error: None,
            solution: None,
        };
        match result {
            Ok(u) => {
                record.converged = u.converged;
                record.iterations = u.iterations;
                record.residual = Some(u.residual);
                if u.converged {
                    let existing = solutions
                        .iter()
                        .position(|s| s.solution.distance(&u) <= 10.0 * options.tol);
                    record.solution = Some(existing.unwrap_or_else(|| {
                        let norm = u.norm();
                        solutions.push(FoundSolution {
                            start: index,
                            norm,
                            residual: u.residual,
                            in_annulus: annulus.r <= norm && norm <= annulus.big_r,
                            min_level0: u.min_level0(),
                            solution: u,
                        });
                        solutions.len() - 1
                    }));
                }
            }
            Err(e) => record.error = Some(e.to_string()),
        }
        records.push(record);
    }
    Ok(MultistartReport {
        annulus,
        starts: records,
        solutions,
    })
}
