//! Exact solver for integer programs with lexicographic objectives, built
//! around preferential-bidding crew scheduling.
//!
//! The pipeline is lexicographic column generation on the continuous
//! relaxation ([`colgen`]), an integer solve on the generated columns
//! ([`illp`]), then a completion step that adds every column whose reduced
//! cost could still close the gap between the two bounds. Pricing is a
//! lexicographic resource-constrained longest-path search ([`rclpp`]) over
//! the per-pilot pairing graphs of [`pbs`].

#![allow(clippy::needless_range_loop)]

pub mod colgen;
pub mod files;
pub mod illp;
pub mod lex;
pub mod llp;
pub mod oracle;
pub mod pbs;
pub mod rclpp;

pub use colgen::{run, ColgenError, ColgenParams, RunResult, RunStats};
pub use files::{FileError, InstanceFile, SolutionFile};
pub use lex::{lex_add, lex_compare, lex_is_positive, lex_scale, ExtReal, LexValue, DEFAULT_EPS};
pub use llp::{
    lex_solve, lex_solve_with, lp_solve, reduced_cost, BasicVar, Basis, DualBundle, LexSolution, LexSolveOptions,
    LlpError, LlpProblem, LpBackendResult, LpStatus,
};
pub use pbs::{build_dag, generate, is_feasible, GeneratorOptions, Instance, Pairing, PbsResource, PbsSpace, Rules};
pub use rclpp::{
    compute_bounds, solve_above_threshold, solve_lex_longest, solve_n_best, solve_n_best_above, Arc, BoundTable, Dag,
    FoundPath, ResourceSpace, SearchOptions, SearchStats,
};
