//! Piecewise kernels with t-derivative stacks, the builtin Green's functions,
//! and the constants `K_l = sup_t ∫ |∂^l k/∂t^l (t, s)| ds`.

use std::fmt;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::quadrature::{sup_on_unit_interval, GaussLegendre};

pub const DEFAULT_RESOLUTION: usize = 200;

/// Grid size used when validating kernel invariants at construction.
const VALIDATION_GRID: usize = 100;

/// One branch of a piecewise kernel, a function of `(t, s)`.
#[derive(Clone)]
pub enum BranchFn {
    Native {
        label: &'static str,
        f: fn(f64, f64) -> f64,
    },
    Expr(Expr),
}

impl BranchFn {
    /// Expression errors evaluate to NaN; construction rejects such branches.
    pub fn eval(&self, t: f64, s: f64) -> f64 {
        match self {
            BranchFn::Native { f, .. } => f(t, s),
            BranchFn::Expr(e) => e.eval_ts(t, s).unwrap_or(f64::NAN),
        }
    }

    pub fn source(&self) -> String {
        match self {
            BranchFn::Native { label, .. } => (*label).to_string(),
            BranchFn::Expr(e) => e.to_string(),
        }
    }
}

impl PartialEq for BranchFn {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (BranchFn::Native { label: a, .. }, BranchFn::Native { label: b, .. }) => a == b,
            (BranchFn::Expr(a), BranchFn::Expr(b)) => a == b,
            _ => false,
        }
    }
}

impl fmt::Debug for BranchFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.source())
    }
}

/// A dominating function Φ(s).
#[derive(Clone)]
pub enum Dominator {
    Native {
        label: &'static str,
        f: fn(f64) -> f64,
    },
    Expr(Expr),
}

impl Dominator {
    pub fn eval(&self, s: f64) -> f64 {
        match self {
            Dominator::Native { f, .. } => f(s),
            Dominator::Expr(e) => e.eval_ts(0.0, s).unwrap_or(f64::NAN),
        }
    }

    pub fn source(&self) -> String {
        match self {
            Dominator::Native { label, .. } => (*label).to_string(),
            Dominator::Expr(e) => e.to_string(),
        }
    }
}

impl PartialEq for Dominator {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Dominator::Native { label: a, .. }, Dominator::Native { label: b, .. }) => a == b,
            (Dominator::Expr(a), Dominator::Expr(b)) => a == b,
            _ => false,
        }
    }
}

impl fmt::Debug for Dominator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.source())
    }
}

/// `lower` on `s ≤ t`, `upper` on `s > t`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseBivariate {
    pub lower: BranchFn,
    pub upper: BranchFn,
    pub jump_allowed: bool,
}

impl PiecewiseBivariate {
    pub fn new(lower: BranchFn, upper: BranchFn, jump_allowed: bool) -> Self {
        PiecewiseBivariate {
            lower,
            upper,
            jump_allowed,
        }
    }

    /// On the diagonal the lower branch wins.
    pub fn eval(&self, t: f64, s: f64) -> f64 {
        if s <= t {
            self.lower.eval(t, s)
        } else {
            self.upper.eval(t, s)
        }
    }

    /// Largest `|lower(t,t) − upper(t,t)|` over `n + 1` sample points.
    pub fn diagonal_gap(&self, n: usize) -> f64 {
        (0..=n)
            .map(|k| {
                let t = k as f64 / n as f64;
                (self.lower.eval(t, t) - self.upper.eval(t, t)).abs()
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    name: String,
    levels: Vec<PiecewiseBivariate>,
    dominators: Option<Vec<Dominator>>,
}

fn grid(n: usize) -> impl Iterator<Item = f64> + Clone {
    (0..=n).map(move |k| k as f64 / n as f64)
}

impl Kernel {
    /// Build a kernel, checking continuity, nonnegativity and domination on a
    /// sample grid.
    pub fn new(
        name: impl Into<String>,
        levels: Vec<PiecewiseBivariate>,
        dominators: Option<Vec<Dominator>>,
    ) -> Result<Self> {
        let name = name.into();
        let invalid = |msg: String| Error::InvalidSystem(format!("kernel `{name}`: {msg}"));
        if levels.is_empty() {
            return Err(invalid("needs at least level 0".into()));
        }
        let m = levels.len() - 1;
        for (l, level) in levels.iter().enumerate() {
            if level.jump_allowed && (l < m || l == 0) {
                return Err(invalid(format!(
                    "only the highest level of a kernel with order ≥ 1 may jump (level {l})"
                )));
            }
            for t in grid(VALIDATION_GRID) {
                for s in grid(VALIDATION_GRID) {
                    let v = level.eval(t, s);
                    if !v.is_finite() {
                        return Err(invalid(format!("level {l} is not finite at ({t}, {s})")));
                    }
                    if l == 0 && v < -1e-14 {
                        return Err(invalid(format!("level 0 is negative at ({t}, {s}): {v}")));
                    }
                }
            }
            if !level.jump_allowed {
                let gap = level.diagonal_gap(VALIDATION_GRID);
                if gap > 1e-12 {
                    return Err(invalid(format!(
                        "level {l} jumps by {gap:e} across s = t but is declared continuous"
                    )));
                }
            }
        }
        let kernel = Kernel {
            name: name.clone(),
            levels,
            dominators,
        };
        if let Some(doms) = &kernel.dominators {
            if doms.len() != kernel.levels.len() {
                return Err(invalid(format!(
                    "{} dominators for {} levels",
                    doms.len(),
                    kernel.levels.len()
                )));
            }
            for l in 0..=m {
                let excess = kernel.domination_excess(l, VALIDATION_GRID)?;
                if excess > 1e-10 {
                    return Err(invalid(format!(
                        "level {l} exceeds its dominator by {excess:e}"
                    )));
                }
            }
        }
        Ok(kernel)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Highest available derivative order `m`.
    pub fn order(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn levels(&self) -> &[PiecewiseBivariate] {
        &self.levels
    }

    pub fn dominators(&self) -> Option<&[Dominator]> {
        self.dominators.as_deref()
    }

    pub fn level(&self, level: usize) -> Result<&PiecewiseBivariate> {
        self.levels.get(level).ok_or_else(|| {
            Error::argument(format!(
                "level {level} out of range for kernel `{}` of order {}",
                self.name,
                self.order()
            ))
        })
    }

    /// Keep levels `0..=order` only.
    pub fn truncated(&self, order: usize) -> Result<Kernel> {
        self.level(order)?;
        let mut levels = self.levels[..=order].to_vec();
        if order == 0 {
            levels[0].jump_allowed = false;
        }
        Ok(Kernel {
            name: self.name.clone(),
            levels,
            dominators: self.dominators.as_ref().map(|d| d[..=order].to_vec()),
        })
    }

    /// `max (|level(t,s)| − Φ_l(s))` over an `(n+1)²` grid.
    pub fn domination_excess(&self, level: usize, n: usize) -> Result<f64> {
        let k = self.level(level)?;
        let phi = self
            .dominators
            .as_ref()
            .map(|d| &d[level])
            .ok_or_else(|| Error::argument(format!("kernel `{}` has no dominators", self.name)))?;
        let mut worst = f64::NEG_INFINITY;
        for s in grid(n) {
            let bound = phi.eval(s);
            for t in grid(n) {
                worst = worst.max(k.eval(t, s).abs() - bound);
            }
        }
        Ok(worst)
    }
}

/// Dispatch to the branch for `(t, s)` at the given derivative level.
pub fn eval_kernel(kernel: &Kernel, level: usize, t: f64, s: f64) -> Result<f64> {
    Ok(kernel.level(level)?.eval(t, s))
}

/// `K_l = sup_t ∫₀¹ |∂^l k/∂t^l (t, s)| ds`.
///
/// Each s-integral is split at `s = t` and both halves use a Gauss–Legendre
/// rule with `resolution` nodes; the sup runs over `resolution + 1` grid
/// points with golden-section refinement.
pub fn kernel_constant(kernel: &Kernel, level: usize, resolution: usize) -> Result<f64> {
    let branch = kernel.level(level)?;
    if resolution < 8 {
        return Err(Error::argument(format!("resolution {resolution} < 8")));
    }
    let rule = GaussLegendre::new(resolution);
    let (_, v) = sup_on_unit_interval(
        |t| rule.integrate_split(t, |s| branch.eval(t, s).abs()),
        resolution,
    );
    Ok(v.max(0.0))
}

/// `max_t |γ^(level)(t)|` for a boundary function given with its derivative
/// stack `[γ, γ', γ'', …]`.
pub fn gamma_norm(stack: &[Expr], level: usize, resolution: usize) -> Result<f64> {
    let g = stack.get(level).ok_or_else(|| {
        Error::argument(format!(
            "derivative {level} not provided (stack has {} entries)",
            stack.len()
        ))
    })?;
    let n = resolution.max(1);
    for k in 0..=n {
        let t = k as f64 / n as f64;
        let v = g.eval_ts(t, 0.0)?;
        if !v.is_finite() {
            return Err(Error::domain(format!("γ^({level})({t}) = {v}")));
        }
    }
    let (_, v) = sup_on_unit_interval(|t| g.eval_ts(t, 0.0).map(f64::abs).unwrap_or(0.0), n);
    Ok(v)
}

pub const GREEN_2ND_DIRICHLET: &str = "green_2nd_dirichlet";
pub const GREEN_4TH_BEAM: &str = "green_4th_beam";

pub const BUILTIN_NAMES: [&str; 2] = [GREEN_2ND_DIRICHLET, GREEN_4TH_BEAM];

macro_rules! native2 {
    ($label:expr, |$t:ident, $s:ident| $body:expr) => {
        BranchFn::Native {
            label: $label,
            f: |$t: f64, $s: f64| $body,
        }
    };
}

macro_rules! native1 {
    ($label:expr, |$s:ident| $body:expr) => {
        Dominator::Native {
            label: $label,
            f: |$s: f64| $body,
        }
    };
}

/// Green's function of `-u'' = g`, `u(0) = u(1) = 0`, and its first t-derivative.
fn green_2nd_dirichlet() -> Kernel {
    let levels = vec![
        PiecewiseBivariate::new(
            native2!("s*(1 - t)", |t, s| s * (1.0 - t)),
            native2!("t*(1 - s)", |t, s| t * (1.0 - s)),
            false,
        ),
        PiecewiseBivariate::new(
            native2!("-s", |_t, s| -s),
            native2!("1 - s", |_t, s| 1.0 - s),
            true,
        ),
    ];
    let dominators = vec![
        native1!("s*(1 - s)", |s| s * (1.0 - s)),
        native1!("abs(s - 1/2) + 1/2", |s| (s - 0.5).abs() + 0.5),
    ];
    Kernel {
        name: GREEN_2ND_DIRICHLET.into(),
        levels,
        dominators: Some(dominators),
    }
}

/// Green's function of `u'''' = g` with `u(0) = u''(0) = u(1) = u''(1) = 0`
/// and its t-derivatives up to order three.
fn green_4th_beam() -> Kernel {
    let levels = vec![
        PiecewiseBivariate::new(
            native2!("s*(1 - t)*(2*t - s^2 - t^2)/6", |t, s| {
                s * (1.0 - t) * (2.0 * t - s * s - t * t) / 6.0
            }),
            native2!("t*(1 - s)*(2*s - t^2 - s^2)/6", |t, s| {
                t * (1.0 - s) * (2.0 * s - t * t - s * s) / 6.0
            }),
            false,
        ),
        PiecewiseBivariate::new(
            native2!("s*(-6*t + s^2 + 3*t^2 + 2)/6", |t, s| {
                s * (-6.0 * t + s * s + 3.0 * t * t + 2.0) / 6.0
            }),
            native2!("(1 - s)*(-s^2 + 2*s - 3*t^2)/6", |t, s| {
                (1.0 - s) * (-s * s + 2.0 * s - 3.0 * t * t) / 6.0
            }),
            false,
        ),
        PiecewiseBivariate::new(
            native2!("s*(t - 1)", |t, s| s * (t - 1.0)),
            native2!("t*(s - 1)", |t, s| t * (s - 1.0)),
            false,
        ),
        PiecewiseBivariate::new(
            native2!("s", |_t, s| s),
            native2!("s - 1", |_t, s| s - 1.0),
            true,
        ),
    ];
    let dominators = vec![
        native1!("sqrt(3)/27*s*(1 - s^2)^(3/2) on s <= 1/2, sqrt(3)/27*(1 - s)*s^(3/2)*(2 - s)^(3/2) on s > 1/2", |s| {
            let c = 3f64.sqrt() / 27.0;
            if s <= 0.5 {
                c * s * (1.0 - s * s).powf(1.5)
            } else {
                c * (1.0 - s) * s.powf(1.5) * (2.0 - s).powf(1.5)
            }
        }),
        native1!("s*(2 + s^2)/6", |s| s * (2.0 + s * s) / 6.0),
        native1!("s*(1 - s)", |s| s * (1.0 - s)),
        native1!("abs(s - 1/2) + 1/2", |s| (s - 0.5).abs() + 0.5),
    ];
    Kernel {
        name: GREEN_4TH_BEAM.into(),
        levels,
        dominators: Some(dominators),
    }
}

/// Look up a builtin kernel by name.
pub fn builtin_kernel(name: &str) -> Result<Kernel> {
    match name {
        GREEN_2ND_DIRICHLET => Ok(green_2nd_dirichlet()),
        GREEN_4TH_BEAM => Ok(green_4th_beam()),
        other => Err(Error::Lookup {
            kind: "builtin kernel",
            name: other.to_string(),
        }),
    }
}
