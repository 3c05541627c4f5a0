//! Multiprecision derivative-free solvers for nonlinear systems built on
//! Ostrowski's two-step scheme, with two first-order divided-difference
//! operators, operation counting and a computational-efficiency model.

pub mod bench;
pub mod checks;
pub mod convergence;
pub mod divdiff;
pub mod efficiency;
pub mod error;
pub mod linalg;
pub mod methods;
pub mod precision;
pub mod problems;
pub mod quadrature;
pub mod system;

pub use divdiff::DividedDifferenceKind;
pub use error::{Error, Result};
pub use linalg::{Matrix, OpCounters, Vector};
pub use methods::{solve, MethodKind, SolveReport};
pub use precision::PrecisionContext;
pub use problems::{ProblemId, ProblemSpec};
pub use system::NonlinearSystem;
