use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use super::expr::{eval_mod10, parse_expr, render, CalcExpr, CalcParseError};
use crate::homogenizer::SalientSpec;

pub const LENGTH_DOMAIN: RangeInclusive<usize> = 2..=120;
pub const NUM_OPS_DOMAIN: RangeInclusive<usize> = 0..=60;
pub const PARENS_DOMAIN: RangeInclusive<usize> = 0..=30;
pub const MEAN_DEPTH_DOMAIN: RangeInclusive<usize> = 0..=40;
pub const MAX_DEPTH_DOMAIN: RangeInclusive<usize> = 0..=15;

/// Features of a rendered expression. Depth refers to how many parentheses
/// enclose a digit.
///
/// The binned fields are clamped into their finite domains; `length` and
/// `mean_depth` keep the raw values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalcSalients {
    pub length: usize,
    /// Length rounded up to an even number.
    pub length_even: usize,
    pub num_ops: usize,
    pub num_paren_pairs: usize,
    pub mean_depth: f64,
    /// `round(4 · mean_depth)`.
    pub mean_depth_bin: usize,
    pub max_depth: usize,
}

fn clamp(v: usize, d: RangeInclusive<usize>) -> usize {
    v.clamp(*d.start(), *d.end())
}

/// Salients of expression text; fails when the text does not parse.
pub fn calc_salients(text: &str) -> Result<CalcSalients, CalcParseError> {
    parse_expr(text)?;
    Ok(scan(text))
}

/// Salients of an expression's rendering.
pub fn expr_salients(expr: &CalcExpr) -> CalcSalients {
    scan(&render(expr))
}

// Counting only; callers guarantee the text is well formed.
fn scan(text: &str) -> CalcSalients {
    let mut depth = 0usize;
    let mut max_depth = 0;
    let mut depth_sum = 0;
    let mut digits = 0;
    let mut num_ops = 0;
    let mut parens = 0;
    for c in text.chars() {
        match c {
            '(' => {
                depth += 1;
                parens += 1;
            }
            ')' => depth = depth.saturating_sub(1),
            '+' | '-' | '*' => num_ops += 1,
            '0'..='9' => {
                digits += 1;
                depth_sum += depth;
                max_depth = max_depth.max(depth);
            }
            _ => {}
        }
    }
    let length = text.chars().count();
    let mean_depth = if digits == 0 {
        0.0
    } else {
        depth_sum as f64 / digits as f64
    };
    CalcSalients {
        length,
        length_even: clamp(length + length % 2, LENGTH_DOMAIN),
        num_ops: clamp(num_ops, NUM_OPS_DOMAIN),
        num_paren_pairs: clamp(parens, PARENS_DOMAIN),
        mean_depth,
        mean_depth_bin: clamp((4.0 * mean_depth).round() as usize, MEAN_DEPTH_DOMAIN),
        max_depth: clamp(max_depth, MAX_DEPTH_DOMAIN),
    }
}

/// One dataset record: the rendered expression and its value mod 10.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CalcSample {
    pub expr: String,
    pub label: u8,
}

impl CalcSample {
    pub fn from_expr(expr: &CalcExpr) -> Self {
        CalcSample {
            expr: render(expr),
            label: eval_mod10(expr),
        }
    }
}

/// Calculator salient variables available for homogenization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CalcVariable {
    Length,
    NumOps,
    Parens,
    MeanDepth,
    MaxDepth,
}

impl CalcVariable {
    pub const ALL: [CalcVariable; 5] = [
        CalcVariable::Length,
        CalcVariable::NumOps,
        CalcVariable::Parens,
        CalcVariable::MeanDepth,
        CalcVariable::MaxDepth,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CalcVariable::Length => "length",
            CalcVariable::NumOps => "num_ops",
            CalcVariable::Parens => "parens",
            CalcVariable::MeanDepth => "mean_depth",
            CalcVariable::MaxDepth => "max_depth",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name() == name)
    }

    /// Domain values in order. Lengths are even only.
    pub fn domain(self) -> Vec<usize> {
        match self {
            CalcVariable::Length => LENGTH_DOMAIN.step_by(2).collect(),
            CalcVariable::NumOps => NUM_OPS_DOMAIN.collect(),
            CalcVariable::Parens => PARENS_DOMAIN.collect(),
            CalcVariable::MeanDepth => MEAN_DEPTH_DOMAIN.collect(),
            CalcVariable::MaxDepth => MAX_DEPTH_DOMAIN.collect(),
        }
    }

    pub fn pick(self, s: &CalcSalients) -> usize {
        match self {
            CalcVariable::Length => s.length_even,
            CalcVariable::NumOps => s.num_ops,
            CalcVariable::Parens => s.num_paren_pairs,
            CalcVariable::MeanDepth => s.mean_depth_bin,
            CalcVariable::MaxDepth => s.max_depth,
        }
    }

    /// Spec over records; the value is read off the stored text.
    pub fn spec(self) -> SalientSpec<CalcSample, usize> {
        SalientSpec::new(self.name(), self.domain(), move |s: &CalcSample| {
            self.pick(&scan(&s.expr))
        })
        .expect("non-empty domain without duplicates")
    }

    /// Spec over expression trees.
    pub fn expr_spec(self) -> SalientSpec<CalcExpr, usize> {
        SalientSpec::new(self.name(), self.domain(), move |e: &CalcExpr| {
            self.pick(&expr_salients(e))
        })
        .expect("non-empty domain without duplicates")
    }
}
