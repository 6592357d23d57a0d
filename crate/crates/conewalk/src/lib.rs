//! Numerical multi-solution solver for the quasilinear Dirichlet problem
//!
//! ```text
//!     -div(|grad u|^{p-2} grad u) = f(x, u)   in Omega,   u = 0 on the boundary
//! ```
//!
//! on an interval or the unit square, discretized with P1 finite elements.
//!
//! The crate locates several distinct weak solutions of the same equation:
//!
//! * extremal solutions between an ordered subsolution/supersolution pair,
//!   found by monotone fixed-point iteration;
//! * a solution of mountain-pass type trapped between enlarged order cones,
//!   found by a min-max search over discrete paths driven by a descent flow;
//! * the first two Dirichlet eigenvalues of the p-Laplacian, which steer the
//!   construction of the order cones;
//! * numeric certificates for the integrability conditions under which the
//!   fixed-point map leaves enlarged order cones invariant.
//!
//! Modules mirror the pipeline: [`grid`] (meshes, P1 functions, norms),
//! [`problem`] (nonlinearity catalog and hypothesis checks), [`functional`]
//! (energy, residual, monotone solver), [`koperator`] (the fixed-point map),
//! [`cones`] (order cones, builders, certificates), [`flows`] (monotone
//! iteration and descent flow), [`minmax`] (mountain pass, four-solution
//! orchestration), [`eigen`] (eigenvalue solvers) and [`cli`] (config-file
//! driven runs producing deterministic reports).

pub mod cli;
pub mod cones;
pub mod eigen;
mod error;
pub mod flows;
pub mod functional;
pub mod grid;
pub mod koperator;
pub mod linalg;
pub mod minmax;
pub mod problem;

pub use error::{Error, Result};
