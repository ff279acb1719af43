//! Expression language for nonlinearities, boundary functions, functionals
//! and user-defined kernel branches.
//!
//! ```text
//! u1^2*(2 - t*sin(u1' + u2''))          pointwise nonlinearity
//! int((u1' + u2''')^2)                  integral functional
//! u1'(0.25)^2 + u2''(0.75)^4            point-evaluation functional
//! ```
//!
//! Component symbols are written `u<i>` followed by one tick per derivative
//! order. A symbol directly followed by a parenthesised constant is a point
//! evaluation. `int(g)` is the integral of `g` over `t ∈ [0, 1]`.

mod eval;
mod factor;
mod interval;
mod parser;

use std::collections::BTreeSet;
use std::fmt;

pub use eval::{
    bound_functional, eval_functional, eval_interval, eval_point, IntervalScope, Scope,
};
pub use factor::{split_power, PowerSplit};
pub use interval::Interval;
pub use parser::parse;

/// Derivative `order` of component `component` (1-based, as written).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol {
    pub component: usize,
    pub order: usize,
}

impl Symbol {
    pub fn new(component: usize, order: usize) -> Self {
        Symbol { component, order }
    }

    /// Zero-based component index.
    pub fn slot(&self) -> usize {
        self.component - 1
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "u{}", self.component)?;
        for _ in 0..self.order {
            f.write_str("'")?;
        }
        Ok(())
    }
}

/// Free real variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    T,
    S,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Sym(Symbol),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
    /// `u<i>^(l)(c)`
    PointEval(Symbol, f64),
    /// ∫₀¹ body dt
    Int(Box<Expr>),
}

impl Expr {
    pub fn num(v: f64) -> Self {
        Expr::Num(v)
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Self {
        Expr::Bin(op, Box::new(a), Box::new(b))
    }

    pub fn is_zero_literal(&self) -> bool {
        matches!(self, Expr::Num(v) if *v == 0.0)
    }

    /// Every component symbol, including those under point evaluations.
    pub fn symbols(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| match e {
            Expr::Sym(s) | Expr::PointEval(s, _) => {
                out.insert(*s);
            }
            _ => {}
        });
        out
    }

    pub fn uses_var(&self, var: Var) -> bool {
        let mut found = false;
        self.visit(&mut |e| {
            if *e == Expr::Var(var) {
                found = true;
            }
        });
        found
    }

    pub fn has_integral(&self) -> bool {
        let mut found = false;
        self.visit(&mut |e| found |= matches!(e, Expr::Int(_)));
        found
    }

    pub fn has_point_eval(&self) -> bool {
        let mut found = false;
        self.visit(&mut |e| found |= matches!(e, Expr::PointEval(..)));
        found
    }

    /// Whether `t` or a bare component symbol occurs outside every `int(..)`.
    pub fn depends_on_t_outside_integral(&self) -> bool {
        match self {
            Expr::Var(Var::T) | Expr::Sym(_) => true,
            Expr::Num(_) | Expr::Var(Var::S) | Expr::PointEval(..) | Expr::Int(_) => false,
            Expr::Neg(a) | Expr::Call(_, a) => a.depends_on_t_outside_integral(),
            Expr::Bin(_, a, b) => {
                a.depends_on_t_outside_integral() || b.depends_on_t_outside_integral()
            }
        }
    }

    pub fn visit(&self, f: &mut dyn FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Neg(a) | Expr::Call(_, a) | Expr::Int(a) => a.visit(f),
            Expr::Bin(_, a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Expr::Num(_) | Expr::Var(_) | Expr::Sym(_) | Expr::PointEval(..) => {}
        }
    }

    /// Evaluate as a function of (t, s) with no component symbols.
    pub fn eval_ts(&self, t: f64, s: f64) -> crate::Result<f64> {
        struct Ts(f64, f64);
        impl Scope for Ts {
            fn var(&self, v: Var) -> Option<f64> {
                Some(match v {
                    Var::T => self.0,
                    Var::S => self.1,
                })
            }
            fn symbol(&self, _: Symbol) -> Option<f64> {
                None
            }
        }
        self.eval(&Ts(t, s))
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Num(v) if *v < 0.0 || v.is_sign_negative() => 3,
            Expr::Bin(BinOp::Pow, ..) => 4,
            _ => 5,
        }
    }
}

impl BinOp {
    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => " + ",
            BinOp::Sub => " - ",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

fn write_wrapped(f: &mut fmt::Formatter<'_>, e: &Expr, wrap: bool) -> fmt::Result {
    if wrap {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => {
                if v.is_sign_negative() {
                    write!(f, "({v})")
                } else {
                    write!(f, "{v}")
                }
            }
            Expr::Var(Var::T) => f.write_str("t"),
            Expr::Var(Var::S) => f.write_str("s"),
            Expr::Sym(s) => write!(f, "{s}"),
            Expr::PointEval(s, c) => write!(f, "{s}({c})"),
            Expr::Neg(a) => {
                f.write_str("-")?;
                // "--x" would lex fine, but a space keeps it readable
                if matches!(**a, Expr::Neg(_)) {
                    f.write_str(" ")?;
                }
                write_wrapped(f, a, a.precedence() < 3)
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
            Expr::Int(a) => write!(f, "int({a})"),
            Expr::Bin(op, a, b) => {
                let p = op.precedence();
                write_wrapped(f, a, a.precedence() < p)?;
                f.write_str(op.symbol())?;
                write_wrapped(f, b, b.precedence() <= p)
            }
        }
    }
}
