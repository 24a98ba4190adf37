//! Constrained group lasso solver and optimal-set toolkit for convex
//! reformulations of two-layer (gated) ReLU networks.

pub mod cli;
pub mod error;
pub mod fixtures;
pub mod json;
pub mod linalg;
pub mod lp;
pub mod nnls;
pub mod optimal_set;
pub mod problem;
pub mod pruning;
pub mod qp;
pub mod reformulation;
pub mod sensitivity;
pub mod solver;

pub use error::{CglError, Result};
pub use problem::{kkt_report, objective, support_set, BlockPartition, CglProblem, DualCertificate, KktReport, Weights};
pub use solver::{prox_block, solve, solve_l2, solve_with_init, Solution, SolverOptions};
