//! The Calculator domain: expressions over single digits with `+`, `-` and
//! `*`, labelled by their value modulo 10.
//!
//! ```
//! use homogen::calc::{eval_mod10, parse_expr, render};
//!
//! let e = parse_expr("5+4*(2+3)").unwrap();
//! assert_eq!(eval_mod10(&e), 5);
//! assert_eq!(render(&e), "5+4*(2+3)");
//! ```

mod expr;
mod salients;
mod sampler;

pub use expr::{eval_mod10, parse_expr, render, CalcExpr, CalcParseError, Op};
pub use salients::{
    calc_salients, expr_salients, CalcSalients, CalcSample, CalcVariable, LENGTH_DOMAIN, MAX_DEPTH_DOMAIN,
    MEAN_DEPTH_DOMAIN, NUM_OPS_DOMAIN, PARENS_DOMAIN,
};
pub use sampler::{sample_expr, CalcSampler, MAX_NODES};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CalcError {
    #[error("invalid sampler: {0}")]
    InvalidSampler(String),
    #[error(transparent)]
    Parse(#[from] CalcParseError),
}
