//! Hypothesis checks for existence of a positive solution in an annulus and
//! for uniqueness of the zero solution.
//!
//! Every inequality becomes an [`InequalityRecord`] carrying both sides, the
//! margin and where the bounds came from. A record certified only by random
//! sampling can never produce a pass.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{eval_interval, split_power, Expr, Interval, Scope, Symbol, Var};
use crate::kernels::{gamma_norm, kernel_constant};
use crate::spectral::spectral_radius;
use crate::system::{Component, Functional, SystemSpec};

/// `(nonexineq)` must hold with at least this much room.
pub const STRICT_MARGIN: f64 = 1e-12;
/// Boxes `u_i ∈ [0, B]` used to approximate global domination.
pub const ESCALATION_BOXES: [f64; 3] = [10.0, 100.0, 1000.0];
pub const FALLBACK_SAMPLES: usize = 1_000_000;
pub const DIAGNOSTIC_SAMPLES: usize = 10_000;
/// Sampled values above `-SAMPLE_SLACK` are not counted as violations.
pub const SAMPLE_SLACK: f64 = 1e-9;
/// Window search scans `r = R·2^-k` for `k = 1..=WINDOW_STEPS`.
pub const WINDOW_STEPS: u32 = 40;
const REFINE_DEPTH: usize = 10;
const DIRECT_DEPTH: usize = 6;
const SAMPLE_CHUNKS: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Fail => 1,
            Verdict::Inconclusive => 2,
        }
    }

    /// Fail dominates inconclusive, which dominates pass.
    pub fn combine(verdicts: impl IntoIterator<Item = Verdict>) -> Verdict {
        verdicts.into_iter().fold(Verdict::Pass, |acc, v| match (acc, v) {
            (Verdict::Fail, _) | (_, Verdict::Fail) => Verdict::Fail,
            (Verdict::Inconclusive, _) | (_, Verdict::Inconclusive) => Verdict::Inconclusive,
            _ => Verdict::Pass,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// Interval enclosure over the relevant box.
    Interval,
    /// Numerical quadrature or eigenvalue computation.
    Computed,
    /// Random sampling only; never enough for a pass.
    Sampled,
    /// Bound supplied or attested by the caller.
    UserSupplied,
    /// No method applied.
    Unverified,
}

impl Provenance {
    fn weakest(a: Provenance, b: Provenance) -> Provenance {
        let rank = |p: Provenance| match p {
            Provenance::Interval => 0,
            Provenance::Computed => 1,
            Provenance::UserSupplied => 2,
            Provenance::Sampled => 3,
            Provenance::Unverified => 4,
        };
        if rank(b) > rank(a) {
            b
        } else {
            a
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = "<")]
    Below,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityRecord {
    pub name: String,
    pub relation: Relation,
    pub lhs: f64,
    pub rhs: f64,
    /// Positive when the inequality holds with room to spare.
    pub margin: f64,
    pub status: Verdict,
    pub provenance: Provenance,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl InequalityRecord {
    fn compare(name: impl Into<String>, lhs: f64, relation: Relation, rhs: f64, provenance: Provenance) -> Self {
        let (margin, holds) = match relation {
            Relation::AtMost => (rhs - lhs, lhs <= rhs),
            Relation::AtLeast => (lhs - rhs, lhs >= rhs),
            Relation::Below => (rhs - lhs, lhs < rhs),
        };
        let status = if !holds {
            Verdict::Fail
        } else if matches!(provenance, Provenance::Sampled | Provenance::Unverified) {
            Verdict::Inconclusive
        } else {
            Verdict::Pass
        };
        InequalityRecord {
            name: name.into(),
            relation,
            lhs,
            rhs,
            margin,
            status,
            provenance,
            note: None,
        }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn holds(&self) -> bool {
        self.status != Verdict::Fail
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelConstant {
    pub level: usize,
    pub computed: f64,
    /// The value entering the inequalities: `computed`, or a supplied bound.
    pub used: f64,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionBound {
    pub radius: f64,
    pub interval: Interval,
    /// `max(|lo|, |hi|)` of the interval.
    pub bound: f64,
    /// Largest value seen on random points of the ball; diagnostic only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampled: Option<f64>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermConstants {
    pub term: usize,
    pub eta: f64,
    pub gamma_norms: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub functional_bound: Option<FunctionBound>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentConstants {
    pub component: usize,
    pub kernel: String,
    pub order: usize,
    pub lambda: f64,
    pub kernel_constants: Vec<KernelConstant>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub characteristic_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nonlinearity_bound: Option<FunctionBound>,
    pub terms: Vec<TermConstants>,
}

/// One `(i, l)` entry of the outer-sphere maximum, or one component of the
/// non-existence maximum (`level` absent).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowRecord {
    pub component: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<usize>,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Existence,
    Nonexistence,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub check: CheckKind,
    pub verdict: Verdict,
    pub parameters: serde_json::Value,
    pub inequalities: Vec<InequalityRecord>,
    pub rows: Vec<RowRecord>,
    pub constants: Vec<ComponentConstants>,
}

impl VerificationReport {
    fn new(
        check: CheckKind,
        parameters: serde_json::Value,
        inequalities: Vec<InequalityRecord>,
        rows: Vec<RowRecord>,
        constants: Vec<ComponentConstants>,
    ) -> Self {
        let verdict = Verdict::combine(inequalities.iter().map(|r| r.status));
        VerificationReport {
            check,
            verdict,
            parameters,
            inequalities,
            rows,
            constants,
        }
    }

    pub fn record(&self, name: &str) -> Option<&InequalityRecord> {
        self.inequalities.iter().find(|r| r.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExistenceHypotheses {
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub delta: f64,
    /// 1-based component index.
    pub i0: usize,
    pub resolution: usize,
    /// Seed for the sampled fallback and diagnostics.
    pub seed: u64,
}

impl ExistenceHypotheses {
    pub fn new(r: f64, big_r: f64, delta: f64, i0: usize) -> Self {
        ExistenceHypotheses {
            r,
            big_r,
            delta,
            i0,
            resolution: crate::kernels::DEFAULT_RESOLUTION,
            seed: 42,
        }
    }

    fn validate(&self, spec: &SystemSpec) -> Result<()> {
        if !(self.r > 0.0 && self.r < self.big_r && self.big_r.is_finite()) {
            return Err(Error::argument(format!(
                "need 0 < r < R, got r = {}, R = {}",
                self.r, self.big_r
            )));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::argument(format!("δ = {} must be positive", self.delta)));
        }
        if self.resolution < 16 {
            return Err(Error::argument(format!("resolution {} < 16", self.resolution)));
        }
        spec.component(self.i0).map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonexistenceHypotheses {
    pub taus: Vec<f64>,
    /// `xis[i][j]` for term `j` of component `i`.
    pub xis: Vec<Vec<f64>>,
    /// Terms whose bound `h ≤ ξ‖u_i‖∞` the caller vouches for.
    #[serde(default)]
    pub attested: Vec<Vec<bool>>,
    pub resolution: usize,
    pub seed: u64,
}

impl NonexistenceHypotheses {
    pub fn new(taus: Vec<f64>, xis: Vec<Vec<f64>>) -> Self {
        NonexistenceHypotheses {
            taus,
            xis,
            attested: Vec::new(),
            resolution: crate::kernels::DEFAULT_RESOLUTION,
            seed: 42,
        }
    }

    fn validate(&self, spec: &SystemSpec) -> Result<()> {
        let bad = |msg: String| Err(Error::argument(msg));
        if self.taus.len() != spec.n() || self.xis.len() != spec.n() {
            return bad(format!(
                "need {} τ values and {} ξ rows, got {} and {}",
                spec.n(),
                spec.n(),
                self.taus.len(),
                self.xis.len()
            ));
        }
        for (k, c) in spec.components().iter().enumerate() {
            if self.xis[k].len() != c.terms.len() {
                return bad(format!(
                    "component {} has {} terms but {} ξ values",
                    k + 1,
                    c.terms.len(),
                    self.xis[k].len()
                ));
            }
            if let Some(row) = self.attested.get(k) {
                if row.len() != c.terms.len() {
                    return bad(format!("attested row {} has the wrong length", k + 1));
                }
            }
        }
        if !self.attested.is_empty() && self.attested.len() != spec.n() {
            return bad("attested needs one row per component".into());
        }
        let all = self.taus.iter().chain(self.xis.iter().flatten());
        if all.clone().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return bad("τ and ξ must be finite and ≥ 0".into());
        }
        if self.resolution < 16 {
            return bad(format!("resolution {} < 16", self.resolution));
        }
        Ok(())
    }

    fn is_attested(&self, k: usize, j: usize) -> bool {
        self.attested.get(k).and_then(|row| row.get(j)).copied().unwrap_or(false)
    }
}

/// Kernel constants of one component, honouring supplied bounds. A supplied
/// bound below the computed value is rejected.
pub fn kernel_constants(c: &Component, i: usize, resolution: usize) -> Result<Vec<KernelConstant>> {
    (0..=c.order())
        .map(|level| {
            let computed = kernel_constant(&c.kernel, level, resolution)?;
            match c.kernel_bounds.get(&level) {
                Some(&b) => {
                    if b < computed - 1e-9 * computed.max(1.0) {
                        return Err(Error::InvalidSystem(format!(
                            "supplied bound {b} for K_{i}{level} is below the computed value {computed}"
                        )));
                    }
                    Ok(KernelConstant {
                        level,
                        computed,
                        used: b,
                        provenance: Provenance::UserSupplied,
                    })
                }
                None => Ok(KernelConstant {
                    level,
                    computed,
                    used: computed,
                    provenance: Provenance::Computed,
                }),
            }
        })
        .collect()
}

fn ball_list(spec: &SystemSpec, rho: f64) -> Vec<(Symbol, Interval)> {
    let boxes = spec.ball_boxes(rho);
    spec.all_symbols().into_iter().map(|s| (s, boxes[&s])).collect()
}

fn with_box(e: Error, what: &str, rho: f64) -> Error {
    match e {
        Error::Domain(msg) => Error::Domain(format!("{what} on the ball of radius {rho}: {msg}")),
        other => other,
    }
}

struct PointScope<'a> {
    t: f64,
    values: &'a HashMap<Symbol, f64>,
}

impl Scope for PointScope<'_> {
    fn var(&self, v: Var) -> Option<f64> {
        (v == Var::T).then_some(self.t)
    }
    fn symbol(&self, s: Symbol) -> Option<f64> {
        self.values.get(&s).copied()
    }
}

/// Minimum of `g(t, u)` over `count` seeded random points of the box, with
/// the minimizing point. Points are split into fixed chunks, one ChaCha
/// stream each, so the result does not depend on the thread count.
fn sample_min<G>(
    boxes: &[(Symbol, Interval)],
    count: usize,
    seed: u64,
    g: G,
) -> Result<(f64, f64, HashMap<Symbol, f64>)>
where
    G: Fn(f64, &HashMap<Symbol, f64>) -> Result<f64> + Sync,
{
    let per_chunk = count.div_ceil(SAMPLE_CHUNKS as usize);
    let results: Vec<Result<(f64, f64, HashMap<Symbol, f64>)>> = (0..SAMPLE_CHUNKS)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk);
            let mut best = (f64::INFINITY, 0.0, HashMap::new());
            let mut values = HashMap::with_capacity(boxes.len());
            for _ in 0..per_chunk {
                let t: f64 = rng.random();
                for (s, b) in boxes {
                    values.insert(*s, b.lo + (b.hi - b.lo) * rng.random::<f64>());
                }
                let v = g(t, &values)?;
                if v < best.0 {
                    best = (v, t, values.clone());
                }
            }
            Ok(best)
        })
        .collect();
    let mut best = (f64::INFINITY, 0.0, HashMap::new());
    for r in results {
        let r = r?;
        if r.0 < best.0 {
            best = r;
        }
    }
    Ok(best)
}

fn eval_at(e: &Expr, t: f64, values: &HashMap<Symbol, f64>) -> Result<f64> {
    e.eval(&PointScope { t, values })
}

fn describe_point(t: f64, values: &HashMap<Symbol, f64>, spec: &SystemSpec) -> String {
    let mut parts = vec![format!("t = {t:.6}")];
    for s in spec.all_symbols() {
        if let Some(v) = values.get(&s) {
            parts.push(format!("{s} = {v:.6e}"));
        }
    }
    parts.join(", ")
}

/// Interval bound of `e` tightened by bisecting the widest variable of the
/// box `depth` times. Returns `(min lo, max hi)` over the leaves.
pub fn refine_interval(
    e: &Expr,
    t: Interval,
    boxes: &HashMap<Symbol, Interval>,
    depth: usize,
) -> Result<Interval> {
    let used = e.symbols();
    let uses_t = e.uses_var(Var::T);
    let mut leaves = vec![(t, boxes.clone())];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(leaves.len() * 2);
        for (t, b) in leaves {
            let mut widest: Option<(f64, Option<Symbol>)> = uses_t.then_some((t.width(), None));
            for s in &used {
                if let Some(iv) = b.get(s) {
                    if widest.map_or(true, |(w, _)| iv.width() > w) {
                        widest = Some((iv.width(), Some(*s)));
                    }
                }
            }
            match widest {
                Some((w, target)) if w > 0.0 => match target {
                    None => {
                        let (l, r) = t.split();
                        next.push((l, b.clone()));
                        next.push((r, b));
                    }
                    Some(s) => {
                        let (l, r) = b[&s].split();
                        let mut bl = b.clone();
                        bl.insert(s, l);
                        let mut br = b;
                        br.insert(s, r);
                        next.push((t, bl));
                        next.push((t, br));
                    }
                },
                _ => next.push((t, b)),
            }
        }
        leaves = next;
    }
    let mut out: Option<Interval> = None;
    for (t, b) in &leaves {
        let v = eval_interval(e, *t, b)?;
        out = Some(out.map_or(v, |o| o.hull(&v)));
    }
    out.ok_or_else(|| Error::argument("empty box"))
}

/// Certified growth rate on `I_r`: the largest `δ` this module can prove
/// with `f_{i0} ≥ δ·u_{i0}` on the ball of radius `r` in the cone.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthCertificate {
    pub r: f64,
    pub delta: f64,
    /// Exponent of `u_{i0}` in the factorization, when one was used.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub method: String,
}

fn growth_by_factor(f: &Expr, target: Symbol, r: f64, boxes: &HashMap<Symbol, Interval>) -> Option<(f64, f64)> {
    let split = split_power(f, &|e: &Expr| *e == Expr::Sym(target));
    if !(0.0..=1.0).contains(&split.alpha) {
        return None;
    }
    let g = refine_interval(&split.cofactor, Interval::unit(), boxes, REFINE_DEPTH).ok()?;
    if g.lo < 0.0 {
        return None;
    }
    Some((g.lo * r.powf(split.alpha - 1.0), split.alpha))
}

fn growth_direct(f: &Expr, target: Symbol, boxes: &HashMap<Symbol, Interval>) -> f64 {
    let holds = |delta: f64| {
        let e = Expr::bin(
            crate::expr::BinOp::Sub,
            f.clone(),
            Expr::bin(crate::expr::BinOp::Mul, Expr::Num(delta), Expr::Sym(target)),
        );
        refine_interval(&e, Interval::unit(), boxes, DIRECT_DEPTH).is_ok_and(|v| v.lo >= 0.0)
    };
    if !holds(0.0) {
        return 0.0;
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while holds(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return lo;
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Largest provable `δ` with `f_{i0} − δ·u_{i0} ≥ 0` on `I_r`.
///
/// First `f = u^α·g` with `0 ≤ α ≤ 1` and `g ≥ g_lo ≥ 0` on the box, giving
/// `δ = g_lo·r^(α−1)`; if that fails, bisection on `δ` with interval
/// evaluation of `f − δ·u` directly.
pub fn certify_growth(spec: &SystemSpec, i0: usize, r: f64) -> Result<GrowthCertificate> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::argument(format!("radius must be positive, got {r}")));
    }
    let f = &spec.component(i0)?.nonlinearity;
    let target = Symbol::new(i0, 0);
    let boxes = spec.ball_boxes(r);
    if let Some((delta, alpha)) = growth_by_factor(f, target, r, &boxes) {
        if delta > 0.0 {
            return Ok(GrowthCertificate {
                r,
                delta,
                alpha: Some(alpha),
                method: "factorization".into(),
            });
        }
    }
    Ok(GrowthCertificate {
        r,
        delta: growth_direct(f, target, &boxes),
        alpha: None,
        method: "interval-bisection".into(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExistenceWindow {
    pub r: f64,
    pub delta: f64,
    pub feasible: bool,
    pub characteristic_value: f64,
}

/// Scan `r = R·2^-k`, `k = 1..=40`, for the first `r` whose certified `δ`
/// satisfies `λ_{i0}·δ ≥ μ_{i0}`.
pub fn search_existence_window(
    spec: &SystemSpec,
    i0: usize,
    big_r: f64,
    resolution: usize,
) -> Result<ExistenceWindow> {
    if !(big_r > 0.0 && big_r.is_finite()) {
        return Err(Error::argument(format!("R must be positive, got {big_r}")));
    }
    let c = spec.component(i0)?;
    let mu = spectral_radius(&c.kernel, resolution, crate::spectral::DEFAULT_TOL)?.characteristic_value;
    let mut last = ExistenceWindow {
        r: big_r,
        delta: 0.0,
        feasible: false,
        characteristic_value: mu,
    };
    for k in 1..=WINDOW_STEPS {
        let r = big_r * 0.5f64.powi(k as i32);
        let cert = certify_growth(spec, i0, r)?;
        last.r = r;
        last.delta = cert.delta;
        if cert.delta > 0.0 && c.lambda * cert.delta >= mu {
            last.feasible = true;
            return Ok(last);
        }
    }
    Ok(last)
}

fn term_gamma_norms(c: &Component, resolution: usize) -> Result<Vec<Vec<f64>>> {
    c.terms
        .iter()
        .map(|term| {
            (0..=c.order())
                .map(|l| gamma_norm(&term.gamma, l, resolution))
                .collect()
        })
        .collect()
}

fn magnitude(iv: Interval) -> f64 {
    iv.hi.max(-iv.lo).max(0.0)
}

fn nonlinearity_bound(spec: &SystemSpec, i: usize, rho: f64, seed: u64) -> Result<FunctionBound> {
    let f = &spec.component(i)?.nonlinearity;
    let boxes = spec.ball_boxes(rho);
    let interval = eval_interval(f, Interval::unit(), &boxes).map_err(|e| with_box(e, &format!("f_{i}"), rho))?;
    let (neg_max, _, _) = sample_min(&ball_list(spec, rho), DIAGNOSTIC_SAMPLES, seed, |t, v| {
        Ok(-eval_at(f, t, v)?.abs())
    })
    .map_err(|e| with_box(e, &format!("f_{i}"), rho))?;
    Ok(FunctionBound {
        radius: rho,
        interval,
        bound: magnitude(interval),
        sampled: Some(-neg_max),
        provenance: Provenance::Interval,
    })
}

fn functional_bound(spec: &SystemSpec, functional: &Functional, what: &str, rho: f64) -> Result<FunctionBound> {
    match functional {
        Functional::Expr(h) => {
            spec.check_symbols(h)?;
            let interval = eval_interval(h, Interval::unit(), &spec.ball_boxes(rho))
                .map_err(|e| with_box(e, what, rho))?;
            Ok(FunctionBound {
                radius: rho,
                interval,
                bound: magnitude(interval),
                sampled: None,
                provenance: Provenance::Interval,
            })
        }
        Functional::Custom(c) => {
            let b = c.upper_bound(rho)?;
            Ok(FunctionBound {
                radius: rho,
                interval: Interval::new(0.0, b.max(0.0))?,
                bound: b.max(0.0),
                sampled: None,
                provenance: Provenance::UserSupplied,
            })
        }
    }
}

/// Kernel constants, γ norms and, when `radius` is given, the bounds
/// `f̄_iρ` and `H_ijρ` for every component.
pub fn compute_constants(
    spec: &SystemSpec,
    resolution: usize,
    radius: Option<f64>,
    seed: u64,
) -> Result<Vec<ComponentConstants>> {
    spec.components()
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let i = k + 1;
            let norms = term_gamma_norms(c, resolution)?;
            let mut terms = Vec::with_capacity(c.terms.len());
            for (jj, (term, gamma_norms)) in c.terms.iter().zip(norms).enumerate() {
                let functional_bound = radius
                    .map(|rho| functional_bound(spec, &term.functional, &format!("h_{i}{}", jj + 1), rho))
                    .transpose()?;
                terms.push(TermConstants {
                    term: jj + 1,
                    eta: term.eta,
                    gamma_norms,
                    functional_bound,
                });
            }
            Ok(ComponentConstants {
                component: i,
                kernel: c.kernel.name().to_string(),
                order: c.order(),
                lambda: c.lambda,
                kernel_constants: kernel_constants(c, i, resolution)?,
                characteristic_value: None,
                nonlinearity_bound: radius.map(|rho| nonlinearity_bound(spec, i, rho, seed)).transpose()?,
                terms,
            })
        })
        .collect()
}

/// Check the three existence inequalities: the outer-sphere bound at `R`,
/// `λ_{i0} ≥ μ_{i0}/δ`, and `f_{i0} ≥ δ·u_{i0}` on `I_r`.
pub fn check_existence(spec: &SystemSpec, hyp: &ExistenceHypotheses) -> Result<VerificationReport> {
    hyp.validate(spec)?;
    let mut constants = compute_constants(spec, hyp.resolution, Some(hyp.big_r), hyp.seed)?;

    let mut rows = Vec::new();
    let mut provenance = Provenance::Interval;
    for (k, (c, cc)) in spec.components().iter().zip(&constants).enumerate() {
        let fb = cc.nonlinearity_bound.as_ref().expect("radius given");
        for kc in &cc.kernel_constants {
            provenance = Provenance::weakest(provenance, kc.provenance);
            let mut value = c.lambda * fb.bound * kc.used;
            for (term, tc) in c.terms.iter().zip(&cc.terms) {
                let hb = tc.functional_bound.as_ref().expect("radius given");
                provenance = Provenance::weakest(provenance, hb.provenance);
                value += term.eta * tc.gamma_norms[kc.level] * hb.bound;
            }
            rows.push(RowRecord {
                component: k + 1,
                level: Some(kc.level),
                value,
            });
        }
    }
    let worst = rows.iter().fold(0.0f64, |a, r| a.max(r.value));
    // kernel constants are quadrature values, so the row is at best "computed"
    let outer_prov = if provenance == Provenance::Interval {
        Provenance::Computed
    } else {
        provenance
    };
    let outer = InequalityRecord::compare("outer_sphere", worst, Relation::AtMost, hyp.big_r, outer_prov);

    let c0 = spec.component(hyp.i0)?;
    let eig = spectral_radius(&c0.kernel, hyp.resolution, crate::spectral::DEFAULT_TOL)?;
    let mu = eig.characteristic_value;
    constants[hyp.i0 - 1].characteristic_value = Some(mu);
    let eigen = InequalityRecord::compare(
        "eigenvalue_comparison",
        c0.lambda,
        Relation::AtLeast,
        mu / hyp.delta,
        Provenance::Computed,
    );

    let cert = certify_growth(spec, hyp.i0, hyp.r)?;
    let growth = if cert.delta >= hyp.delta {
        InequalityRecord::compare("lower_growth", cert.delta, Relation::AtLeast, hyp.delta, Provenance::Interval)
            .with_note(format!("certified δ on I_r by {}", cert.method))
    } else {
        let f = &c0.nonlinearity;
        let target = Symbol::new(hyp.i0, 0);
        let (min, t, point) = sample_min(&ball_list(spec, hyp.r), FALLBACK_SAMPLES, hyp.seed, |t, v| {
            Ok(eval_at(f, t, v)? - hyp.delta * v[&target])
        })
        .map_err(|e| with_box(e, &format!("f_{} − δ·u{}", hyp.i0, hyp.i0), hyp.r))?;
        let record =
            InequalityRecord::compare("lower_growth", min, Relation::AtLeast, -SAMPLE_SLACK, Provenance::Sampled);
        let note = if record.status == Verdict::Fail {
            format!("counterexample at {}", describe_point(t, &point, spec))
        } else {
            format!(
                "interval methods certify only δ = {:e}; min of f − δ·u over {FALLBACK_SAMPLES} samples",
                cert.delta
            )
        };
        record.with_note(note)
    };

    let parameters = serde_json::to_value(hyp).expect("plain data");
    Ok(VerificationReport::new(
        CheckKind::Existence,
        parameters,
        vec![outer, eigen, growth],
        rows,
        constants,
    ))
}

/// `e = x^α·g` over the target atoms with `α = 1` and `g ∈ [lo_min, τ]` on
/// every escalation box. `Ok(None)` when the pattern does not apply.
fn linear_domination(
    spec: &SystemSpec,
    e: &Expr,
    is_target: &dyn Fn(&Expr) -> bool,
    bound: f64,
    need_nonnegative: bool,
) -> Option<f64> {
    let split = split_power(e, is_target);
    let trivially_zero = split.alpha == 0.0 && split.cofactor.is_zero_literal();
    if trivially_zero {
        return Some(0.0);
    }
    if split.alpha != 1.0 {
        return None;
    }
    let mut worst = f64::NEG_INFINITY;
    for b in ESCALATION_BOXES {
        let g = refine_interval(&split.cofactor, Interval::unit(), &spec.ball_boxes(b), REFINE_DEPTH).ok()?;
        if g.hi > bound || (need_nonnegative && g.lo < 0.0) {
            return None;
        }
        worst = worst.max(g.hi);
    }
    Some(worst)
}

fn domination_record(spec: &SystemSpec, k: usize, tau: f64, seed: u64) -> Result<InequalityRecord> {
    let i = k + 1;
    let f = &spec.components()[k].nonlinearity;
    let target = Symbol::new(i, 0);
    let name = format!("growth_bound[{i}]");
    if let Some(g_max) = linear_domination(spec, f, &|e: &Expr| *e == Expr::Sym(target), tau, true) {
        return Ok(InequalityRecord::compare(name, g_max, Relation::AtMost, tau, Provenance::Interval)
            .with_note(format!("f_{i} = u{i}·g with g ∈ [0, {g_max}] on boxes B = 10, 100, 1000")));
    }
    let per_box = FALLBACK_SAMPLES / ESCALATION_BOXES.len();
    let mut worst = (f64::INFINITY, 0.0, HashMap::new());
    for (n, b) in ESCALATION_BOXES.into_iter().enumerate() {
        let found = sample_min(&ball_list(spec, b), per_box, seed.wrapping_add(n as u64), |t, v| {
            let fv = eval_at(f, t, v)?;
            Ok(fv.min(tau * v[&target] - fv))
        })
        .map_err(|e| with_box(e, &format!("f_{i}"), b))?;
        if found.0 < worst.0 {
            worst = found;
        }
    }
    let record = InequalityRecord::compare(name, worst.0, Relation::AtLeast, -SAMPLE_SLACK, Provenance::Sampled);
    Ok(if record.status == Verdict::Fail {
        record.with_note(format!("0 ≤ f ≤ τu violated at {}", describe_point(worst.1, &worst.2, spec)))
    } else {
        record.with_note(format!(
            "min of min(f, τu − f) over {FALLBACK_SAMPLES} samples; no interval certificate"
        ))
    })
}

fn functional_record(
    spec: &SystemSpec,
    hyp: &NonexistenceHypotheses,
    k: usize,
    j: usize,
) -> InequalityRecord {
    let i = k + 1;
    let xi = hyp.xis[k][j];
    let name = format!("functional_bound[{i},{j1}]", j1 = j + 1);
    let term = &spec.components()[k].terms[j];
    let target = Symbol::new(i, 0);
    let certified = match &term.functional {
        Functional::Expr(h) => {
            let is_target = |e: &Expr| match e {
                Expr::PointEval(s, _) => *s == target,
                Expr::Int(body) => **body == Expr::Sym(target),
                _ => false,
            };
            linear_domination(spec, h, &is_target, xi, false).map(|g| (g, Provenance::Interval))
        }
        Functional::Custom(c) => c
            .linear_bound()
            .filter(|b| *b <= xi)
            .map(|b| (b, Provenance::UserSupplied)),
    };
    match certified {
        Some((g, prov)) => InequalityRecord::compare(name, g, Relation::AtMost, xi, prov)
            .with_note(format!("h[u] ≤ {g}·‖u{i}‖∞ on the cone")),
        None if hyp.is_attested(k, j) => {
            InequalityRecord::compare(name, xi, Relation::AtMost, xi, Provenance::UserSupplied)
                .with_note("attested by the caller")
        }
        None => InequalityRecord::compare(name, f64::NAN, Relation::AtMost, xi, Provenance::Unverified)
            .with_note(format!(
                "`{}` is not of the form u{i}(c)·g or int(u{i})·g with g ≤ ξ; attest it to proceed",
                term.functional.describe()
            ))
            .into_inconclusive(),
    }
}

impl InequalityRecord {
    fn into_inconclusive(mut self) -> Self {
        self.status = Verdict::Inconclusive;
        self
    }
}

/// Check the non-existence hypotheses: `0 ≤ f_i ≤ τ_i u_i`,
/// `h_ij ≤ ξ_ij‖u_i‖∞`, and `max_i {λ_i τ_i K_i0 + Σ_j η_ij ξ_ij ‖γ_ij‖∞} < 1`.
pub fn check_nonexistence(spec: &SystemSpec, hyp: &NonexistenceHypotheses) -> Result<VerificationReport> {
    hyp.validate(spec)?;
    let constants = compute_constants(spec, hyp.resolution, None, hyp.seed)?;
    let mut records = Vec::new();
    for (k, tau) in hyp.taus.iter().enumerate() {
        records.push(domination_record(spec, k, *tau, hyp.seed)?);
    }
    for (k, c) in spec.components().iter().enumerate() {
        for j in 0..c.terms.len() {
            records.push(functional_record(spec, hyp, k, j));
        }
    }
    let mut rows = Vec::new();
    let mut provenance = Provenance::Computed;
    for (k, (c, cc)) in spec.components().iter().zip(&constants).enumerate() {
        let k0 = &cc.kernel_constants[0];
        provenance = Provenance::weakest(provenance, k0.provenance);
        let mut value = c.lambda * hyp.taus[k] * k0.used;
        for (j, (term, tc)) in c.terms.iter().zip(&cc.terms).enumerate() {
            value += term.eta * hyp.xis[k][j] * tc.gamma_norms[0];
        }
        rows.push(RowRecord {
            component: k + 1,
            level: None,
            value,
        });
    }
    let worst = rows.iter().fold(0.0f64, |a, r| a.max(r.value));
    records.push(InequalityRecord::compare(
        "nonexistence_inequality",
        worst,
        Relation::Below,
        1.0 - STRICT_MARGIN,
        provenance,
    ));
    let parameters = serde_json::to_value(hyp).expect("plain data");
    Ok(VerificationReport::new(
        CheckKind::Nonexistence,
        parameters,
        records,
        rows,
        constants,
    ))
}
