//! Example programs, benchmarks and an expression parser on top of
//! `sosforge-core`.

pub mod bench;
pub mod expr;
pub mod problems;

pub use bench::{run_bench, BenchRecord, Op, Representation};
pub use expr::{parse_expr, parse_poly, print_poly, PolyExpr};
pub use problems::{run_glb, run_localstab, run_robust, Report, RunOptions, SolveSummary};
