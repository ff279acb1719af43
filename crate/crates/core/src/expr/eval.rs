//! Pointwise, interval and functional evaluation.

use std::collections::HashMap;

use super::{BinOp, Expr, Func, Interval, Symbol, Var};
use crate::error::{Error, Result};
use crate::solver::DiscreteSolution;
use crate::system::SystemSpec;

/// Real-valued bindings for evaluation.
pub trait Scope {
    fn var(&self, v: Var) -> Option<f64>;
    fn symbol(&self, s: Symbol) -> Option<f64>;
    fn point_eval(&self, s: Symbol, _at: f64) -> Result<f64> {
        Err(Error::argument(format!(
            "point evaluation of {s} is only defined inside a functional"
        )))
    }
    fn integral(&self, _body: &Expr) -> Result<f64> {
        Err(Error::argument("int(..) is only defined inside a functional"))
    }
}

impl Scope for HashMap<Symbol, f64> {
    fn var(&self, _: Var) -> Option<f64> {
        None
    }
    fn symbol(&self, s: Symbol) -> Option<f64> {
        self.get(&s).copied()
    }
}

struct WithT<'a, S: ?Sized> {
    t: f64,
    inner: &'a S,
}

impl<S: Scope + ?Sized> Scope for WithT<'_, S> {
    fn var(&self, v: Var) -> Option<f64> {
        match v {
            Var::T => Some(self.t),
            Var::S => self.inner.var(v),
        }
    }
    fn symbol(&self, s: Symbol) -> Option<f64> {
        self.inner.symbol(s)
    }
    fn point_eval(&self, s: Symbol, at: f64) -> Result<f64> {
        self.inner.point_eval(s, at)
    }
    fn integral(&self, body: &Expr) -> Result<f64> {
        self.inner.integral(body)
    }
}

fn nan_check(v: f64, what: &str) -> Result<f64> {
    if v.is_nan() {
        Err(Error::domain(format!("{what} is undefined")))
    } else {
        Ok(v)
    }
}

impl Expr {
    pub fn eval<S: Scope + ?Sized>(&self, scope: &S) -> Result<f64> {
        match self {
            Expr::Num(v) => Ok(*v),
            Expr::Var(v) => scope.var(*v).ok_or_else(|| {
                Error::argument(format!(
                    "variable `{}` is not bound here",
                    if *v == Var::T { "t" } else { "s" }
                ))
            }),
            Expr::Sym(s) => scope.symbol(*s).ok_or(Error::Unbound(*s)),
            Expr::PointEval(s, c) => scope.point_eval(*s, *c),
            Expr::Int(body) => scope.integral(body),
            Expr::Neg(a) => Ok(-a.eval(scope)?),
            Expr::Call(func, a) => {
                let x = a.eval(scope)?;
                match func {
                    Func::Sin => Ok(x.sin()),
                    Func::Cos => Ok(x.cos()),
                    Func::Exp => Ok(x.exp()),
                    Func::Abs => Ok(x.abs()),
                    Func::Sqrt => {
                        if x >= 0.0 {
                            Ok(x.sqrt())
                        } else if x > -1e-9 {
                            Ok(0.0)
                        } else {
                            Err(Error::domain(format!("sqrt of {x}")))
                        }
                    }
                }
            }
            Expr::Bin(op, a, b) => {
                let x = a.eval(scope)?;
                let y = b.eval(scope)?;
                match op {
                    BinOp::Add => Ok(x + y),
                    BinOp::Sub => Ok(x - y),
                    BinOp::Mul => Ok(x * y),
                    BinOp::Div => {
                        if y.abs() < 1e-300 {
                            Err(Error::domain(format!("division by {y}")))
                        } else {
                            Ok(x / y)
                        }
                    }
                    BinOp::Pow => {
                        let v = if y.fract() == 0.0 && y.abs() <= i32::MAX as f64 {
                            x.powi(y as i32)
                        } else {
                            x.powf(y)
                        };
                        nan_check(v, &format!("{x}^{y}"))
                    }
                }
            }
        }
    }
}

/// Evaluate a pointwise expression at `t` with the given symbol values.
pub fn eval_point(e: &Expr, t: f64, values: &HashMap<Symbol, f64>) -> Result<f64> {
    e.eval(&WithT { t, inner: values })
}

/// Interval bindings.
pub trait IntervalScope {
    fn var(&self, v: Var) -> Option<Interval>;
    fn symbol(&self, s: Symbol) -> Option<Interval>;
    /// Point evaluations range over the same box as the symbol.
    fn point_eval(&self, s: Symbol, _at: f64) -> Option<Interval> {
        self.symbol(s)
    }
}

/// A box: one interval for `t` and one per symbol.
#[derive(Debug, Clone)]
pub struct Boxes<'a> {
    pub t: Interval,
    pub symbols: &'a HashMap<Symbol, Interval>,
}

impl IntervalScope for Boxes<'_> {
    fn var(&self, v: Var) -> Option<Interval> {
        match v {
            Var::T => Some(self.t),
            Var::S => None,
        }
    }
    fn symbol(&self, s: Symbol) -> Option<Interval> {
        self.symbols.get(&s).copied()
    }
}

impl Expr {
    pub fn eval_interval_in<S: IntervalScope + ?Sized>(&self, scope: &S) -> Result<Interval> {
        self.interval_rec(scope, None)
    }

    fn interval_rec<S: IntervalScope + ?Sized>(
        &self,
        scope: &S,
        t_override: Option<Interval>,
    ) -> Result<Interval> {
        let rec = |e: &Expr| e.interval_rec(scope, t_override);
        match self {
            Expr::Num(v) => Ok(Interval::point(*v)),
            Expr::Var(v) => {
                let bound = match (v, t_override) {
                    (Var::T, Some(t)) => Some(t),
                    _ => scope.var(*v),
                };
                bound.ok_or_else(|| Error::argument("unbound variable in interval evaluation"))
            }
            Expr::Sym(s) => scope.symbol(*s).ok_or(Error::Unbound(*s)),
            Expr::PointEval(s, c) => scope.point_eval(*s, *c).ok_or(Error::Unbound(*s)),
            // integration over [0, 1] preserves lower and upper bounds
            Expr::Int(body) => body.interval_rec(scope, Some(Interval::unit())),
            Expr::Neg(a) => Ok(rec(a)?.neg()),
            Expr::Call(func, a) => {
                let x = rec(a)?;
                match func {
                    Func::Sin => Ok(x.sin()),
                    Func::Cos => Ok(x.cos()),
                    Func::Exp => x.exp(),
                    Func::Sqrt => x.sqrt(),
                    Func::Abs => Ok(x.abs()),
                }
            }
            Expr::Bin(op, a, b) => {
                let x = rec(a)?;
                if let (BinOp::Pow, Expr::Num(p)) = (op, &**b) {
                    return x.powf(*p);
                }
                let y = rec(b)?;
                match op {
                    BinOp::Add => x.add(y),
                    BinOp::Sub => x.sub(y),
                    BinOp::Mul => x.mul(y),
                    BinOp::Div => x.div(y),
                    BinOp::Pow => x.pow(y),
                }
            }
        }
    }
}

/// Sound enclosure of the range of `e` over a box.
pub fn eval_interval(
    e: &Expr,
    t_box: Interval,
    boxes: &HashMap<Symbol, Interval>,
) -> Result<Interval> {
    e.eval_interval_in(&Boxes {
        t: t_box,
        symbols: boxes,
    })
}

struct FunctionalScope<'a> {
    solution: &'a DiscreteSolution,
    node: Option<usize>,
}

impl FunctionalScope<'_> {
    fn grid_of(&self, s: Symbol) -> Result<&[f64]> {
        self.solution.level(s).ok_or_else(|| {
            Error::argument(format!("solution has no grid for {s}"))
        })
    }
}

impl Scope for FunctionalScope<'_> {
    fn var(&self, v: Var) -> Option<f64> {
        match (v, self.node) {
            (Var::T, Some(j)) => Some(self.solution.grid().nodes[j]),
            _ => None,
        }
    }

    fn symbol(&self, s: Symbol) -> Option<f64> {
        let j = self.node?;
        self.solution.level(s).map(|g| g[j])
    }

    fn point_eval(&self, s: Symbol, at: f64) -> Result<f64> {
        let values = self.grid_of(s)?;
        Ok(self.solution.grid().interpolate(values, at))
    }

    fn integral(&self, body: &Expr) -> Result<f64> {
        let grid = self.solution.grid();
        let mut acc = 0.0;
        for (j, w) in grid.weights.iter().enumerate() {
            let inner = FunctionalScope {
                solution: self.solution,
                node: Some(j),
            };
            acc += w * body.eval(&inner)?;
        }
        Ok(acc)
    }
}

/// Evaluate a functional (point evaluations and integrals) on a discrete
/// solution.
pub fn eval_functional(e: &Expr, solution: &DiscreteSolution) -> Result<f64> {
    for s in e.symbols() {
        if solution.level(s).is_none() {
            return Err(Error::argument(format!("solution has no grid for {s}")));
        }
    }
    let v = e.eval(&FunctionalScope {
        solution,
        node: None,
    })?;
    if !v.is_finite() {
        return Err(Error::domain(format!("functional `{e}` evaluates to {v}")));
    }
    Ok(v)
}

/// Upper bound of a functional over the ball of radius `rho` in the cone.
pub fn bound_functional(e: &Expr, rho: f64, spec: &SystemSpec) -> Result<f64> {
    if rho <= 0.0 || !rho.is_finite() {
        return Err(Error::argument(format!("radius must be positive, got {rho}")));
    }
    spec.check_symbols(e)?;
    let boxes = spec.ball_boxes(rho);
    Ok(eval_interval(e, Interval::unit(), &boxes)?.hi)
}
