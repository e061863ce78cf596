use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Op {
    Add,
    Sub,
    Mul,
}

impl Op {
    pub const ALL: [Op; 3] = [Op::Add, Op::Sub, Op::Mul];

    pub fn symbol(self) -> char {
        match self {
            Op::Add => '+',
            Op::Sub => '-',
            Op::Mul => '*',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        Self::ALL.into_iter().find(|op| op.symbol() == c)
    }

    fn precedence(self) -> u8 {
        match self {
            Op::Add | Op::Sub => 1,
            Op::Mul => 2,
        }
    }

    /// `a op b` reduced to `0..=9`.
    pub fn apply_mod10(self, a: u8, b: u8) -> u8 {
        let (a, b) = (i32::from(a), i32::from(b));
        let v = match self {
            Op::Add => a + b,
            Op::Sub => a - b,
            Op::Mul => a * b,
        };
        v.rem_euclid(10) as u8
    }
}

/// Arithmetic expression over single digits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CalcExpr {
    Digit(u8),
    BinOp {
        op: Op,
        left: Box<CalcExpr>,
        right: Box<CalcExpr>,
    },
}

impl CalcExpr {
    /// Panics unless `d <= 9`.
    pub fn digit(d: u8) -> Self {
        assert!(d <= 9, "digit {d} is not a single decimal digit");
        CalcExpr::Digit(d)
    }

    pub fn bin(op: Op, left: CalcExpr, right: CalcExpr) -> Self {
        CalcExpr::BinOp {
            op,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    /// Edges on the longest root-to-leaf path; a digit has depth 0.
    pub fn depth(&self) -> usize {
        match self {
            CalcExpr::Digit(_) => 0,
            CalcExpr::BinOp { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn digit_count(&self) -> usize {
        match self {
            CalcExpr::Digit(_) => 1,
            CalcExpr::BinOp { left, right, .. } => left.digit_count() + right.digit_count(),
        }
    }

    pub fn op_count(&self) -> usize {
        self.digit_count() - 1
    }

    fn precedence(&self) -> u8 {
        match self {
            CalcExpr::Digit(_) => 3,
            CalcExpr::BinOp { op, .. } => op.precedence(),
        }
    }
}

/// Value of the expression modulo 10, in `0..=9`.
pub fn eval_mod10(expr: &CalcExpr) -> u8 {
    match expr {
        CalcExpr::Digit(d) => *d,
        CalcExpr::BinOp { op, left, right } => op.apply_mod10(eval_mod10(left), eval_mod10(right)),
    }
}

/// Infix text with only the parentheses the parse needs, no whitespace.
///
/// A left operand is wrapped when it binds more loosely than its parent; a
/// right operand also when it binds equally, because all operators
/// associate to the left.
pub fn render(expr: &CalcExpr) -> String {
    let mut out = String::with_capacity(2 * expr.digit_count());
    write_expr(expr, &mut out);
    out
}

fn write_expr(expr: &CalcExpr, out: &mut String) {
    match expr {
        CalcExpr::Digit(d) => out.push(char::from(b'0' + d)),
        CalcExpr::BinOp { op, left, right } => {
            let p = op.precedence();
            write_operand(left, left.precedence() < p, out);
            out.push(op.symbol());
            write_operand(right, right.precedence() <= p, out);
        }
    }
}

fn write_operand(expr: &CalcExpr, wrap: bool, out: &mut String) {
    if wrap {
        out.push('(');
        write_expr(expr, out);
        out.push(')');
    } else {
        write_expr(expr, out);
    }
}

impl fmt::Display for CalcExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CalcParseError {
    #[error("unexpected {found:?} at position {position}, expected {expected}")]
    Unexpected {
        position: usize,
        found: char,
        expected: &'static str,
    },
    #[error("input ended at position {position}, expected {expected}")]
    UnexpectedEnd { position: usize, expected: &'static str },
}

impl CalcParseError {
    pub fn position(&self) -> usize {
        match self {
            CalcParseError::Unexpected { position, .. } | CalcParseError::UnexpectedEnd { position, .. } => {
                *position
            }
        }
    }
}

/// Parses infix text with `*` above `+`/`-` and left associativity.
/// Whitespace is not allowed.
pub fn parse_expr(text: &str) -> Result<CalcExpr, CalcParseError> {
    let mut p = Parser {
        chars: text.chars().collect(),
        pos: 0,
    };
    let e = p.sum()?;
    match p.peek() {
        None => Ok(e),
        Some(c) => Err(CalcParseError::Unexpected {
            position: p.pos,
            found: c,
            expected: "an operator or the end of input",
        }),
    }
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn sum(&mut self) -> Result<CalcExpr, CalcParseError> {
        let mut acc = self.product()?;
        while let Some(op @ (Op::Add | Op::Sub)) = self.peek().and_then(Op::from_symbol) {
            self.pos += 1;
            acc = CalcExpr::bin(op, acc, self.product()?);
        }
        Ok(acc)
    }

    fn product(&mut self) -> Result<CalcExpr, CalcParseError> {
        let mut acc = self.atom()?;
        while self.peek() == Some('*') {
            self.pos += 1;
            acc = CalcExpr::bin(Op::Mul, acc, self.atom()?);
        }
        Ok(acc)
    }

    fn atom(&mut self) -> Result<CalcExpr, CalcParseError> {
        const EXPECTED: &str = "a digit or '('";
        match self.peek() {
            Some(c @ '0'..='9') => {
                self.pos += 1;
                Ok(CalcExpr::Digit(c as u8 - b'0'))
            }
            Some('(') => {
                self.pos += 1;
                let inner = self.sum()?;
                match self.peek() {
                    Some(')') => {
                        self.pos += 1;
                        Ok(inner)
                    }
                    Some(found) => Err(CalcParseError::Unexpected {
                        position: self.pos,
                        found,
                        expected: "')'",
                    }),
                    None => Err(CalcParseError::UnexpectedEnd {
                        position: self.pos,
                        expected: "')'",
                    }),
                }
            }
            Some(found) => Err(CalcParseError::Unexpected {
                position: self.pos,
                found,
                expected: EXPECTED,
            }),
            None => Err(CalcParseError::UnexpectedEnd {
                position: self.pos,
                expected: EXPECTED,
            }),
        }
    }
}
