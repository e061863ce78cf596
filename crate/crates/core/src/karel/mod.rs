//! The Karel robot DSL: programs, worlds, and an interpreter with crash
//! semantics and branch-coverage tracing.
//!
//! Coordinates are `(column i, row j)` with the origin at the north-west
//! corner; moving north decreases `j`.

mod ast;
mod exec;
mod grid;
mod salients;
mod syntax;

pub use ast::{Action, Arm, BranchId, Cond, KarelProgram, Predicate, ProgramError, Stmt, MAX_REPEAT};
pub use exec::{execute, Crash, ExecResult, Outcome, DEFAULT_STEP_LIMIT};
pub use grid::{Cell, Direction, GridError, KarelGrid, MAX_MARKERS, MAX_SIDE, MIN_SIDE};
pub use salients::{grid_salients, program_salients, GridSalients, ProgramSalients};
pub use syntax::{
    emit_tokens, parse_program, parse_tokens, token_count, tokenize, ParseError, MIN_PROGRAM_TOKENS,
};
