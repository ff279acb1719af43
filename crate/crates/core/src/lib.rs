//! Systems of perturbed Hammerstein integral equations
//!
//! ```text
//! u_i(t) = λ_i ∫₀¹ k_i(t,s) f_i(s, u, u', …) ds + Σ_j η_ij γ_ij(t) h_ij[u]
//! ```
//!
//! with kernel constants, spectral data of the kernel operators, mechanical
//! checks of existence and non-existence hypotheses, and a discretized
//! fixed-point solver that tracks every derivative level.

pub mod error;
pub mod expr;
pub mod kernels;
pub mod problem;
pub mod quadrature;
pub mod report;
pub mod solver;
pub mod spectral;
pub mod system;
pub mod verify;

pub use error::{Error, Result};
pub use expr::{parse, Expr, Interval, Symbol};
pub use kernels::{builtin_kernel, kernel_constant, Kernel};
pub use problem::ProblemFile;
pub use solver::{DiscreteSolution, Discretization};
pub use spectral::{spectral_radius, EigenPair};
pub use system::{Component, Functional, SystemSpec, Term};
pub use verify::{check_existence, check_nonexistence, search_existence_window, Verdict, VerificationReport};
