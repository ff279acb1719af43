//! Multiplicative factorization `e = x^alpha · g` with respect to a target
//! atom `x` that is known to be nonnegative.
//!
//! Used to certify growth conditions such as `f ≥ δ·u` near `u = 0` or
//! `f ≤ τ·u` globally, which plain interval evaluation of `f − δ·u` cannot
//! certify because both terms vanish together at `u = 0`.

use super::{BinOp, Expr, Func};

#[derive(Debug, Clone, PartialEq)]
pub struct PowerSplit {
    /// Exponent of the target atom.
    pub alpha: f64,
    /// The cofactor `g`; may still depend on the target.
    pub cofactor: Expr,
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Num(x), _) if *x == 1.0 => b,
        (_, Expr::Num(y)) if *y == 1.0 => a,
        _ => Expr::bin(BinOp::Mul, a, b),
    }
}

/// Split `e` as `x^alpha · g` where `x` ranges over the atoms accepted by
/// `is_target`. The identity holds wherever every target atom is positive.
pub fn split_power(e: &Expr, is_target: &dyn Fn(&Expr) -> bool) -> PowerSplit {
    if is_target(e) {
        return PowerSplit {
            alpha: 1.0,
            cofactor: Expr::Num(1.0),
        };
    }
    match e {
        Expr::Bin(BinOp::Mul, a, b) => {
            let l = split_power(a, is_target);
            let r = split_power(b, is_target);
            PowerSplit {
                alpha: l.alpha + r.alpha,
                cofactor: mul(l.cofactor, r.cofactor),
            }
        }
        Expr::Bin(BinOp::Div, a, b) => {
            let l = split_power(a, is_target);
            let r = split_power(b, is_target);
            PowerSplit {
                alpha: l.alpha - r.alpha,
                cofactor: Expr::bin(BinOp::Div, l.cofactor, r.cofactor),
            }
        }
        Expr::Bin(BinOp::Pow, a, b) => match **b {
            Expr::Num(p) => {
                let inner = split_power(a, is_target);
                if inner.alpha == 0.0 {
                    return whole(e);
                }
                PowerSplit {
                    alpha: inner.alpha * p,
                    cofactor: Expr::bin(BinOp::Pow, inner.cofactor, Expr::Num(p)),
                }
            }
            _ => whole(e),
        },
        Expr::Call(Func::Sqrt, a) => {
            let inner = split_power(a, is_target);
            if inner.alpha == 0.0 {
                return whole(e);
            }
            PowerSplit {
                alpha: inner.alpha / 2.0,
                cofactor: Expr::Call(Func::Sqrt, Box::new(inner.cofactor)),
            }
        }
        Expr::Call(Func::Abs, a) => {
            let inner = split_power(a, is_target);
            if inner.alpha == 0.0 {
                return whole(e);
            }
            PowerSplit {
                alpha: inner.alpha,
                cofactor: Expr::Call(Func::Abs, Box::new(inner.cofactor)),
            }
        }
        Expr::Neg(a) => {
            let inner = split_power(a, is_target);
            PowerSplit {
                alpha: inner.alpha,
                cofactor: Expr::Neg(Box::new(inner.cofactor)),
            }
        }
        _ => whole(e),
    }
}

fn whole(e: &Expr) -> PowerSplit {
    PowerSplit {
        alpha: 0.0,
        cofactor: e.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, Symbol};

    fn target_u(i: usize) -> impl Fn(&Expr) -> bool {
        move |e: &Expr| *e == Expr::Sym(Symbol::new(i, 0))
    }

    #[test]
    fn sqrt_factor() {
        let f = parse("sqrt(u2)*exp(t*(u1 + u2'''))").unwrap();
        let s = split_power(&f, &target_u(2));
        assert_eq!(s.alpha, 0.5);
        assert_eq!(s.cofactor.to_string(), "sqrt(1)*exp(t*(u1 + u2'''))");
    }

    #[test]
    fn linear_factor() {
        let f = parse("u1*(2 - t*sin(u2*u1'))").unwrap();
        let s = split_power(&f, &target_u(1));
        assert_eq!(s.alpha, 1.0);
        assert_eq!(s.cofactor, parse("2 - t*sin(u2*u1')").unwrap());
        let q = split_power(&parse("u1^2*(2 - t)").unwrap(), &target_u(1));
        assert_eq!(q.alpha, 2.0);
        let z = split_power(&parse("0").unwrap(), &target_u(1));
        assert_eq!(z.alpha, 0.0);
        let d = split_power(&parse("u1/(1 + u1)").unwrap(), &target_u(1));
        assert_eq!(d.alpha, 1.0);
    }

    #[test]
    fn point_evaluation_atoms() {
        let h = parse("u1(0.25)*cos(u1'(0.75)*u2''(0.25))^2").unwrap();
        let is_target =
            |e: &Expr| matches!(e, Expr::PointEval(s, _) if *s == Symbol::new(1, 0));
        let s = split_power(&h, &is_target);
        assert_eq!(s.alpha, 1.0);
        assert_eq!(s.cofactor, parse("cos(u1'(0.75)*u2''(0.25))^2").unwrap());
    }
}
