//! Feasibility kernel for real second-order cone programs.
//!
//! A [`SocProgram`] collects constraints of the form `‖A x + b‖₂ ≤ cᵀx + d`
//! and `fᵀx = e`. [`solve_feasibility`] either returns a point that satisfies
//! every constraint to within an absolute tolerance, certifies that no such
//! point exists, or reports a numerical failure.
//!
//! ```
//! use cfmimo_socp::{solve_feasibility, SocBlock, SocProgram, SolverSettings, SparseVec};
//!
//! // ‖(x₀, x₁)‖ ≤ 1 and x₀ = 0.9
//! let mut p = SocProgram::new(2);
//! p.add_block(SocBlock::from_dense(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[0.0, 0.0], &[0.0, 0.0], 1.0).unwrap())
//!     .unwrap();
//! p.add_equality(SparseVec::unit(0), 0.9).unwrap();
//! let res = solve_feasibility(&p, &SolverSettings::default());
//! assert!(res.is_feasible());
//! assert!(p.check_point(res.x.as_ref().unwrap()).unwrap() <= 1e-7);
//! ```

mod cone;
mod kkt;
mod problem;
mod program;
mod solver;

pub use program::{LinearEq, ProgramError, SocBlock, SocProgram, SparseVec};
pub use solver::{solve_feasibility, FeasibilityResult, FeasibilityStatus, SolverSettings};
