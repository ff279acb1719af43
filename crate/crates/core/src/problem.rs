//! TOML problem files.
//!
//! ```toml
//! [system]
//! n = 1
//!
//! [[system.components]]
//! kernel = "green_2nd_dirichlet"
//! m = 1
//! lambda = 1.0
//! nonlinearity = "1"
//!
//! [[system.components.terms]]
//! eta = 0.5
//! gamma = ["t", "1"]
//! functional = "u1(0.5)"
//!
//! [existence]
//! R = 1.0
//! i0 = 1
//! ```
//!
//! An inline kernel is a table `{ name, levels = [{ lower, upper, jump }],
//! dominators = [...] }` with branches written in `t` and `s`; `lower`
//! applies on `s ≤ t`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{parse, Expr};
use crate::kernels::{builtin_kernel, BranchFn, Dominator, Kernel, PiecewiseBivariate, BUILTIN_NAMES};
use crate::system::{Component, Functional, SystemSpec, Term};
use crate::verify::{ExistenceHypotheses, NonexistenceHypotheses};

pub const EXAMPLE1: &str = include_str!("../problems/example1.problem");
pub const EXAMPLE2: &str = include_str!("../problems/example2.problem");
/// `u = λ∫k1 f` with `f ≡ 1`: solution `t(1−t)/2`.
pub const LINEAR: &str = include_str!("../problems/linear.problem");

pub fn bundled_example(n: u32) -> Result<&'static str> {
    match n {
        1 => Ok(EXAMPLE1),
        2 => Ok(EXAMPLE2),
        _ => Err(Error::Lookup {
            kind: "example",
            name: n.to_string(),
        }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub system: SystemSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub existence: Option<ExistenceSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonexistence: Option<NonexistenceSection>,
    #[serde(default)]
    pub numerics: Numerics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub n: usize,
    pub components: Vec<ComponentSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSection {
    pub kernel: KernelSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    pub lambda: f64,
    pub nonlinearity: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub kernel_bounds: Vec<KernelBound>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub terms: Vec<TermSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KernelSection {
    Builtin(String),
    Inline(InlineKernel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineKernel {
    pub name: String,
    pub levels: Vec<LevelSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dominators: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelSection {
    pub lower: String,
    pub upper: String,
    #[serde(default)]
    pub jump: bool,
}

/// Upper bound for `K_l` supplied in place of the computed value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelBound {
    pub level: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSection {
    pub eta: f64,
    pub gamma: GammaSection,
    pub functional: String,
}

/// `γ` alone, or the stack `[γ, γ', …, γ^(m)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GammaSection {
    Single(String),
    Stack(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExistenceSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(rename = "R")]
    pub big_r: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub i0: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonexistenceSection {
    pub taus: Vec<f64>,
    pub xis: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub attested: Vec<Vec<bool>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    pub resolution: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
    pub starts: usize,
    pub seed: u64,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            resolution: 200,
            tol: 1e-10,
            max_iter: 10_000,
            damping: 1.0,
            starts: 8,
            seed: 42,
        }
    }
}

fn expr_of(text: &str, what: &str) -> Result<Expr> {
    parse(text).map_err(|e| Error::ProblemFile(format!("{what}: `{text}`: {e}")))
}

fn kernel_of(section: &KernelSection, m: Option<usize>, i: usize) -> Result<Kernel> {
    let kernel = match section {
        KernelSection::Builtin(name) => builtin_kernel(name)?,
        KernelSection::Inline(inline) => {
            let levels = inline
                .levels
                .iter()
                .enumerate()
                .map(|(l, level)| {
                    let what = format!("kernel of component {i}, level {l}");
                    Ok(PiecewiseBivariate::new(
                        BranchFn::Expr(expr_of(&level.lower, &what)?),
                        BranchFn::Expr(expr_of(&level.upper, &what)?),
                        level.jump,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            let dominators = inline
                .dominators
                .as_ref()
                .map(|list| {
                    list.iter()
                        .map(|d| Ok(Dominator::Expr(expr_of(d, &format!("dominator of component {i}"))?)))
                        .collect::<Result<Vec<_>>>()
                })
                .transpose()?;
            Kernel::new(inline.name.clone(), levels, dominators)?
        }
    };
    match m {
        None => Ok(kernel),
        Some(m) if m <= kernel.order() => kernel.truncated(m),
        Some(m) => Err(Error::ProblemFile(format!(
            "component {i}: m = {m} exceeds the order {} of kernel `{}`",
            kernel.order(),
            kernel.name()
        ))),
    }
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<ProblemFile> {
        toml::from_str(text).map_err(|e| Error::ProblemFile(e.to_string().trim_end().to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::ProblemFile(e.to_string()))
    }

    pub fn to_spec(&self) -> Result<SystemSpec> {
        if self.system.n != self.system.components.len() {
            return Err(Error::ProblemFile(format!(
                "n = {} but {} components are given",
                self.system.n,
                self.system.components.len()
            )));
        }
        let mut components = Vec::with_capacity(self.system.n);
        for (k, c) in self.system.components.iter().enumerate() {
            let i = k + 1;
            let kernel = kernel_of(&c.kernel, c.m, i)?;
            let mut component = Component::new(kernel, c.lambda, expr_of(&c.nonlinearity, &format!("f_{i}"))?);
            for b in &c.kernel_bounds {
                if component.kernel_bounds.insert(b.level, b.value).is_some() {
                    return Err(Error::ProblemFile(format!(
                        "component {i}: kernel bound for level {} given twice",
                        b.level
                    )));
                }
            }
            for (jj, t) in c.terms.iter().enumerate() {
                let what = format!("γ_{i}{}", jj + 1);
                let gamma = match &t.gamma {
                    GammaSection::Single(g) => vec![expr_of(g, &what)?],
                    GammaSection::Stack(list) => list.iter().map(|g| expr_of(g, &what)).collect::<Result<_>>()?,
                };
                let functional = Functional::Expr(expr_of(&t.functional, &format!("h_{i}{}", jj + 1))?);
                component.terms.push(Term {
                    eta: t.eta,
                    gamma,
                    functional,
                });
            }
            components.push(component);
        }
        SystemSpec::new(components)
    }

    /// Existence hypotheses with `r` and `δ` filled in by the caller when the
    /// file leaves them out.
    pub fn existence_hypotheses(&self, r: f64, delta: f64) -> Result<ExistenceHypotheses> {
        let e = self
            .existence
            .as_ref()
            .ok_or_else(|| Error::ProblemFile("no [existence] section".into()))?;
        Ok(ExistenceHypotheses {
            r: e.r.unwrap_or(r),
            big_r: e.big_r,
            delta: e.delta.unwrap_or(delta),
            i0: e.i0,
            resolution: self.numerics.resolution,
            seed: self.numerics.seed,
        })
    }

    pub fn nonexistence_hypotheses(&self) -> Result<NonexistenceHypotheses> {
        let n = self
            .nonexistence
            .as_ref()
            .ok_or_else(|| Error::ProblemFile("no [nonexistence] section".into()))?;
        Ok(NonexistenceHypotheses {
            taus: n.taus.clone(),
            xis: n.xis.clone(),
            attested: n.attested.clone(),
            resolution: self.numerics.resolution,
            seed: self.numerics.seed,
        })
    }

    /// A file describing `spec`; fails for custom functionals, which have no
    /// textual form.
    pub fn from_spec(spec: &SystemSpec, numerics: Numerics) -> Result<ProblemFile> {
        let mut components = Vec::with_capacity(spec.n());
        for (k, c) in spec.components().iter().enumerate() {
            let builtin = BUILTIN_NAMES.iter().find(|name| {
                builtin_kernel(name)
                    .and_then(|b| b.truncated(c.order()))
                    .is_ok_and(|b| b == c.kernel)
            });
            let kernel = match builtin {
                Some(name) => KernelSection::Builtin(name.to_string()),
                None => {
                    let levels = c
                        .kernel
                        .levels()
                        .iter()
                        .map(|l| match (&l.lower, &l.upper) {
                            (BranchFn::Expr(a), BranchFn::Expr(b)) => Ok(LevelSection {
                                lower: a.to_string(),
                                upper: b.to_string(),
                                jump: l.jump_allowed,
                            }),
                            _ => Err(Error::ProblemFile(format!(
                                "kernel `{}` of component {} has no textual form",
                                c.kernel.name(),
                                k + 1
                            ))),
                        })
                        .collect::<Result<Vec<_>>>()?;
                    let dominators = c
                        .kernel
                        .dominators()
                        .map(|ds| {
                            ds.iter()
                                .map(|d| match d {
                                    Dominator::Expr(e) => Ok(e.to_string()),
                                    Dominator::Native { .. } => Err(Error::ProblemFile(
                                        "native dominators have no textual form".into(),
                                    )),
                                })
                                .collect::<Result<Vec<_>>>()
                        })
                        .transpose()?;
                    KernelSection::Inline(InlineKernel {
                        name: c.kernel.name().to_string(),
                        levels,
                        dominators,
                    })
                }
            };
            let terms = c
                .terms
                .iter()
                .map(|t| match &t.functional {
                    Functional::Expr(h) => Ok(TermSection {
                        eta: t.eta,
                        gamma: GammaSection::Stack(t.gamma.iter().map(Expr::to_string).collect()),
                        functional: h.to_string(),
                    }),
                    Functional::Custom(cf) => Err(Error::ProblemFile(format!(
                        "custom functional `{}` has no textual form",
                        cf.name()
                    ))),
                })
                .collect::<Result<Vec<_>>>()?;
            components.push(ComponentSection {
                kernel,
                m: Some(c.order()),
                lambda: c.lambda,
                nonlinearity: c.nonlinearity.to_string(),
                kernel_bounds: bounds_of(&c.kernel_bounds),
                terms,
            });
        }
        Ok(ProblemFile {
            system: SystemSection {
                n: spec.n(),
                components,
            },
            existence: None,
            nonexistence: None,
            numerics,
        })
    }
}

fn bounds_of(map: &BTreeMap<usize, f64>) -> Vec<KernelBound> {
    map.iter()
        .map(|(&level, &value)| KernelBound { level, value })
        .collect()
}
