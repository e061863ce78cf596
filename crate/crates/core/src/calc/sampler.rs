use rand::Rng;
use serde::{Deserialize, Serialize};

use super::expr::{CalcExpr, Op};
use super::CalcError;
use crate::SeededRng;

/// Trees larger than this are discarded and redrawn. Only parameterizations
/// close to the size blow-up threshold ever reach it.
pub const MAX_NODES: usize = 100_000;

/// The four expression distributions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "lowercase")]
pub enum CalcSampler {
    /// Digit with probability `1 − p`, otherwise a uniform operator over two
    /// independent subexpressions.
    Dcfg { p: f64 },
    /// Target depth uniform in `min_depth..=max_depth`; one side of each
    /// operator is forced one level shallower and the other is drawn
    /// uniformly shallower still.
    T2t { min_depth: usize, max_depth: usize },
    /// Like `Dcfg`, but an operator node combines a run of 2, 3 or 4
    /// subexpressions left-associatively with one operator.
    Rcfg { p: f64 },
    /// Complete binary tree of depth uniform in `min_depth..=max_depth`.
    Bal { min_depth: usize, max_depth: usize },
}

impl CalcSampler {
    pub fn dcfg() -> Self {
        CalcSampler::Dcfg { p: 0.25 }
    }

    pub fn t2t() -> Self {
        CalcSampler::T2t {
            min_depth: 1,
            max_depth: 8,
        }
    }

    pub fn rcfg() -> Self {
        CalcSampler::Rcfg { p: 0.2 }
    }

    pub fn bal() -> Self {
        CalcSampler::Bal {
            min_depth: 1,
            max_depth: 6,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CalcSampler::Dcfg { .. } => "dcfg",
            CalcSampler::T2t { .. } => "t2t",
            CalcSampler::Rcfg { .. } => "rcfg",
            CalcSampler::Bal { .. } => "bal",
        }
    }

    /// Checks that the sampler terminates with finite expected size.
    ///
    /// `Dcfg` has `2p` expected children per node and `Rcfg` has `3p`; both
    /// must stay below one.
    pub fn validate(&self) -> Result<(), CalcError> {
        match *self {
            CalcSampler::Dcfg { p } => {
                if !(0.0..0.5).contains(&p) {
                    return Err(CalcError::InvalidSampler(format!(
                        "dcfg needs 0 <= p < 0.5, got {p}"
                    )));
                }
            }
            CalcSampler::Rcfg { p } => {
                if !(0.0..1.0 / 3.0).contains(&p) {
                    return Err(CalcError::InvalidSampler(format!(
                        "rcfg needs 0 <= p < 1/3, got {p}"
                    )));
                }
            }
            CalcSampler::T2t { min_depth, max_depth } => {
                if min_depth > max_depth || max_depth > 30 {
                    return Err(CalcError::InvalidSampler(format!(
                        "t2t depth range {min_depth}..={max_depth} is empty or above 30"
                    )));
                }
            }
            CalcSampler::Bal { min_depth, max_depth } => {
                if min_depth > max_depth || max_depth > 16 {
                    return Err(CalcError::InvalidSampler(format!(
                        "bal depth range {min_depth}..={max_depth} is empty or above 16"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Draws one expression. Panics if the sampler is invalid; call
/// [`CalcSampler::validate`] first on untrusted parameters.
pub fn sample_expr(rng: &mut SeededRng, sampler: &CalcSampler) -> CalcExpr {
    if let Err(e) = sampler.validate() {
        panic!("invalid sampler: {e}");
    }
    match *sampler {
        CalcSampler::Dcfg { p } => loop {
            let mut nodes = 0;
            if let Some(e) = dcfg(rng, p, &mut nodes) {
                return e;
            }
        },
        CalcSampler::Rcfg { p } => loop {
            let mut nodes = 0;
            if let Some(e) = rcfg(rng, p, &mut nodes) {
                return e;
            }
        },
        CalcSampler::T2t { min_depth, max_depth } => {
            let d = rng.random_range(min_depth..=max_depth);
            t2t(rng, d)
        }
        CalcSampler::Bal { min_depth, max_depth } => {
            let d = rng.random_range(min_depth..=max_depth);
            balanced(rng, d)
        }
    }
}

fn random_digit(rng: &mut SeededRng) -> CalcExpr {
    CalcExpr::Digit(rng.random_range(0..=9))
}

fn random_op(rng: &mut SeededRng) -> Op {
    Op::ALL[rng.random_range(0..Op::ALL.len())]
}

fn dcfg(rng: &mut SeededRng, p: f64, nodes: &mut usize) -> Option<CalcExpr> {
    *nodes += 1;
    if *nodes > MAX_NODES {
        return None;
    }
    if !rng.random_bool(p) {
        return Some(random_digit(rng));
    }
    let op = random_op(rng);
    let left = dcfg(rng, p, nodes)?;
    let right = dcfg(rng, p, nodes)?;
    Some(CalcExpr::bin(op, left, right))
}

fn rcfg(rng: &mut SeededRng, p: f64, nodes: &mut usize) -> Option<CalcExpr> {
    *nodes += 1;
    if *nodes > MAX_NODES {
        return None;
    }
    if !rng.random_bool(p) {
        return Some(random_digit(rng));
    }
    let op = random_op(rng);
    let run = rng.random_range(2..=4);
    let mut acc = rcfg(rng, p, nodes)?;
    for _ in 1..run {
        acc = CalcExpr::bin(op, acc, rcfg(rng, p, nodes)?);
    }
    Some(acc)
}

fn t2t(rng: &mut SeededRng, depth: usize) -> CalcExpr {
    if depth == 0 {
        return random_digit(rng);
    }
    let deep_left = rng.random_bool(0.5);
    let other = rng.random_range(0..depth);
    let (l, r) = if deep_left {
        (depth - 1, other)
    } else {
        (other, depth - 1)
    };
    let left = t2t(rng, l);
    let right = t2t(rng, r);
    CalcExpr::bin(random_op(rng), left, right)
}

fn balanced(rng: &mut SeededRng, depth: usize) -> CalcExpr {
    if depth == 0 {
        return random_digit(rng);
    }
    let op = random_op(rng);
    let left = balanced(rng, depth - 1);
    let right = balanced(rng, depth - 1);
    CalcExpr::bin(op, left, right)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;

    #[test]
    fn degenerate_dcfg_gives_digits() {
        let mut rng = seeded_rng(0);
        for _ in 0..1000 {
            assert!(matches!(
                sample_expr(&mut rng, &CalcSampler::Dcfg { p: 0.0 }),
                CalcExpr::Digit(_)
            ));
        }
    }

    #[test]
    fn balanced_shapes() {
        let mut rng = seeded_rng(1);
        let zero = CalcSampler::Bal {
            min_depth: 0,
            max_depth: 0,
        };
        assert!(matches!(sample_expr(&mut rng, &zero), CalcExpr::Digit(_)));
        let two = CalcSampler::Bal {
            min_depth: 2,
            max_depth: 2,
        };
        let e = sample_expr(&mut rng, &two);
        assert_eq!(e.digit_count(), 4);
        assert_eq!(e.op_count(), 3);
    }

    #[test]
    fn t2t_hits_forced_depth() {
        let mut rng = seeded_rng(2);
        for d in 0..=8 {
            let s = CalcSampler::T2t {
                min_depth: d,
                max_depth: d,
            };
            for _ in 0..1000 / 9 + 1 {
                assert_eq!(sample_expr(&mut rng, &s).depth(), d);
            }
        }
    }

    #[test]
    fn rcfg_runs_are_left_leaning() {
        let mut rng = seeded_rng(3);
        for _ in 0..500 {
            let e = sample_expr(&mut rng, &CalcSampler::rcfg());
            assert_eq!(crate::calc::parse_expr(&crate::calc::render(&e)).unwrap(), e);
        }
    }

    #[test]
    fn validation() {
        assert!(CalcSampler::Dcfg { p: 0.5 }.validate().is_err());
        assert!(CalcSampler::Dcfg { p: 0.4 }.validate().is_ok());
        assert!(CalcSampler::Rcfg { p: 0.34 }.validate().is_err());
        assert!(CalcSampler::T2t {
            min_depth: 3,
            max_depth: 2
        }
        .validate()
        .is_err());
        for s in [
            CalcSampler::dcfg(),
            CalcSampler::t2t(),
            CalcSampler::rcfg(),
            CalcSampler::bal(),
        ] {
            assert!(s.validate().is_ok(), "{}", s.name());
        }
    }
}
