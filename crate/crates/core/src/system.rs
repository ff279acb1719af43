//! Problem instances: kernels, parameters, nonlinearities and functional
//! boundary terms of a system of perturbed Hammerstein equations
//!
//! ```text
//! u_i(t) = λ_i ∫₀¹ k_i(t,s) f_i(s, u(s), u'(s), …) ds + Σ_j η_ij γ_ij(t) h_ij[u]
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::{Expr, Interval, Symbol, Var};
use crate::kernels::Kernel;
use crate::solver::DiscreteSolution;

/// Extension point for functionals outside the expression language.
pub trait CustomFunctional: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    fn evaluate(&self, u: &DiscreteSolution) -> Result<f64>;

    /// Upper bound of the functional over `{u ∈ P : ‖u‖ ≤ rho}`.
    fn upper_bound(&self, rho: f64) -> Result<f64>;

    /// A constant `ξ` with `h[u] ≤ ξ ‖u_i‖∞` on the cone, when known.
    fn linear_bound(&self) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone)]
pub enum Functional {
    Expr(Expr),
    Custom(Arc<dyn CustomFunctional>),
}

impl PartialEq for Functional {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Functional::Expr(a), Functional::Expr(b)) => a == b,
            (Functional::Custom(a), Functional::Custom(b)) => a.name() == b.name(),
            _ => false,
        }
    }
}

impl Functional {
    pub fn evaluate(&self, u: &DiscreteSolution) -> Result<f64> {
        match self {
            Functional::Expr(e) => crate::expr::eval_functional(e, u),
            Functional::Custom(c) => c.evaluate(u),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Functional::Expr(e) => e.to_string(),
            Functional::Custom(c) => format!("<custom {}>", c.name()),
        }
    }
}

/// One functional boundary term `η γ(t) h[u]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub eta: f64,
    /// `[γ, γ', …, γ^(m)]`
    pub gamma: Vec<Expr>,
    pub functional: Functional,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub kernel: Kernel,
    pub lambda: f64,
    pub nonlinearity: Expr,
    pub terms: Vec<Term>,
    /// Caller-supplied upper bounds for `K_l`, keyed by level.
    pub kernel_bounds: BTreeMap<usize, f64>,
}

impl Component {
    pub fn new(kernel: Kernel, lambda: f64, nonlinearity: Expr) -> Self {
        Component {
            kernel,
            lambda,
            nonlinearity,
            terms: Vec::new(),
            kernel_bounds: BTreeMap::new(),
        }
    }

    pub fn with_term(mut self, eta: f64, gamma: Vec<Expr>, functional: Functional) -> Self {
        self.terms.push(Term {
            eta,
            gamma,
            functional,
        });
        self
    }

    pub fn order(&self) -> usize {
        self.kernel.order()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    components: Vec<Component>,
}

impl SystemSpec {
    pub fn new(components: Vec<Component>) -> Result<Self> {
        let spec = SystemSpec { components };
        spec.validate()?;
        Ok(spec)
    }

    pub fn n(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    /// Component by 1-based index.
    pub fn component(&self, i: usize) -> Result<&Component> {
        i.checked_sub(1)
            .and_then(|k| self.components.get(k))
            .ok_or_else(|| Error::argument(format!("component {i} out of range 1..={}", self.n())))
    }

    pub fn orders(&self) -> Vec<usize> {
        self.components.iter().map(Component::order).collect()
    }

    /// Apply `f` to a copy of the spec and re-validate.
    pub fn modified(&self, f: impl FnOnce(&mut Vec<Component>)) -> Result<SystemSpec> {
        let mut components = self.components.clone();
        f(&mut components);
        SystemSpec::new(components)
    }

    /// Every `u<i>^(l)` with `l ≤ m_i`.
    pub fn all_symbols(&self) -> Vec<Symbol> {
        self.components
            .iter()
            .enumerate()
            .flat_map(|(k, c)| (0..=c.order()).map(move |l| Symbol::new(k + 1, l)))
            .collect()
    }

    pub fn check_symbols(&self, e: &Expr) -> Result<()> {
        for s in e.symbols() {
            let c = self.components.get(s.component.wrapping_sub(1)).ok_or_else(|| {
                Error::InvalidSystem(format!("{s} refers to component {} of {}", s.component, self.n()))
            })?;
            if s.order > c.order() {
                return Err(Error::InvalidSystem(format!(
                    "{s} exceeds the order {} of component {}",
                    c.order(),
                    s.component
                )));
            }
        }
        Ok(())
    }

    /// Box of the closed ball of radius `rho` in the cone: level 0 in
    /// `[0, rho]`, higher levels in `[-rho, rho]`.
    pub fn ball_boxes(&self, rho: f64) -> HashMap<Symbol, Interval> {
        self.all_symbols()
            .into_iter()
            .map(|s| {
                let b = if s.order == 0 {
                    Interval { lo: 0.0, hi: rho }
                } else {
                    Interval::symmetric(rho)
                };
                (s, b)
            })
            .collect()
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSystem(msg));
        if self.components.is_empty() {
            return bad("a system needs at least one component".into());
        }
        for (k, c) in self.components.iter().enumerate() {
            let i = k + 1;
            let m = c.order();
            if !(c.lambda.is_finite() && c.lambda >= 0.0) {
                return bad(format!("λ_{i} = {} must be finite and ≥ 0", c.lambda));
            }
            let f = &c.nonlinearity;
            if f.has_integral() || f.has_point_eval() {
                return bad(format!("f_{i} must be pointwise (no int or point evaluations)"));
            }
            if f.uses_var(Var::S) {
                return bad(format!("f_{i} uses `s`; write the integration variable as `t`"));
            }
            self.check_symbols(f)?;
            for (level, bound) in &c.kernel_bounds {
                if *level > m || !(bound.is_finite() && *bound >= 0.0) {
                    return bad(format!("kernel bound for level {level} of component {i} is invalid"));
                }
            }
            for (jj, term) in c.terms.iter().enumerate() {
                let j = jj + 1;
                if !(term.eta.is_finite() && term.eta >= 0.0) {
                    return bad(format!("η_{i}{j} = {} must be finite and ≥ 0", term.eta));
                }
                if term.gamma.len() < m + 1 {
                    return bad(format!(
                        "γ_{i}{j} needs derivatives up to order {m}, got {} entries",
                        term.gamma.len()
                    ));
                }
                for g in &term.gamma {
                    if !g.symbols().is_empty() || g.uses_var(Var::S) || g.has_integral() {
                        return bad(format!("γ_{i}{j} must be a function of t only: `{g}`"));
                    }
                }
                for q in 0..=200 {
                    let t = q as f64 / 200.0;
                    let v = term.gamma[0].eval_ts(t, 0.0)?;
                    if !v.is_finite() || v < -1e-12 {
                        return bad(format!("γ_{i}{j}({t}) = {v} is not ≥ 0"));
                    }
                }
                if let Functional::Expr(h) = &term.functional {
                    if h.uses_var(Var::S) || h.depends_on_t_outside_integral() {
                        return bad(format!(
                            "h_{i}{j} may use t and bare symbols only inside int(..): `{h}`"
                        ));
                    }
                    self.check_symbols(h)?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::kernels::{builtin_kernel, GREEN_2ND_DIRICHLET};

    fn k1() -> Kernel {
        builtin_kernel(GREEN_2ND_DIRICHLET).unwrap()
    }

    #[test]
    fn rejects_symbols_beyond_order() {
        let c = Component::new(k1(), 1.0, parse("u1''").unwrap());
        assert!(matches!(SystemSpec::new(vec![c]), Err(Error::InvalidSystem(_))));
        let c = Component::new(k1(), 1.0, parse("u2").unwrap());
        assert!(SystemSpec::new(vec![c]).is_err());
    }

    #[test]
    fn rejects_bad_parameters_and_terms() {
        let c = Component::new(k1(), -1.0, parse("1").unwrap());
        assert!(SystemSpec::new(vec![c]).is_err());
        let h = Functional::Expr(parse("u1(0.5)").unwrap());
        let short = Component::new(k1(), 1.0, parse("1").unwrap())
            .with_term(1.0, vec![parse("t").unwrap()], h.clone());
        assert!(SystemSpec::new(vec![short]).is_err());
        let negative_gamma = Component::new(k1(), 1.0, parse("1").unwrap())
            .with_term(1.0, vec![parse("t - 1").unwrap(), parse("1").unwrap()], h.clone());
        assert!(SystemSpec::new(vec![negative_gamma]).is_err());
        let bare = Component::new(k1(), 1.0, parse("1").unwrap()).with_term(
            1.0,
            vec![parse("t").unwrap(), parse("1").unwrap()],
            Functional::Expr(parse("u1*2").unwrap()),
        );
        assert!(SystemSpec::new(vec![bare]).is_err());
        let pointwise_int = Component::new(k1(), 1.0, parse("int(u1)").unwrap());
        assert!(SystemSpec::new(vec![pointwise_int]).is_err());
        let ok = Component::new(k1(), 1.0, parse("1").unwrap()).with_term(
            0.5,
            vec![parse("t").unwrap(), parse("1").unwrap()],
            Functional::Expr(parse("int(t*u1)").unwrap()),
        );
        assert!(SystemSpec::new(vec![ok]).is_ok());
    }

    #[test]
    fn ball_boxes_follow_the_cone() {
        let c = Component::new(k1(), 1.0, parse("1").unwrap());
        let spec = SystemSpec::new(vec![c]).unwrap();
        let b = spec.ball_boxes(2.0);
        assert_eq!(b[&Symbol::new(1, 0)], Interval { lo: 0.0, hi: 2.0 });
        assert_eq!(b[&Symbol::new(1, 1)], Interval { lo: -2.0, hi: 2.0 });
        assert_eq!(b.len(), 2);
    }
}
