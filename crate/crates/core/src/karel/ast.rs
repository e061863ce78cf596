use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::syntax;

/// Largest constant accepted by `repeat`.
pub const MAX_REPEAT: u8 = 19;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    Move,
    TurnLeft,
    TurnRight,
    PickMarker,
    PutMarker,
}

impl Action {
    pub const ALL: [Action; 5] = [
        Action::Move,
        Action::TurnLeft,
        Action::TurnRight,
        Action::PickMarker,
        Action::PutMarker,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            Action::Move => "move",
            Action::TurnLeft => "turnLeft",
            Action::TurnRight => "turnRight",
            Action::PickMarker => "pickMarker",
            Action::PutMarker => "putMarker",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.keyword() == word)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Predicate {
    MarkersPresent,
    LeftIsClear,
    RightIsClear,
    FrontIsClear,
}

impl Predicate {
    pub const ALL: [Predicate; 4] = [
        Predicate::MarkersPresent,
        Predicate::LeftIsClear,
        Predicate::RightIsClear,
        Predicate::FrontIsClear,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            Predicate::MarkersPresent => "markersPresent",
            Predicate::LeftIsClear => "leftIsClear",
            Predicate::RightIsClear => "rightIsClear",
            Predicate::FrontIsClear => "frontIsClear",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.keyword() == word)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Cond {
    Test(Predicate),
    Not(Box<Cond>),
}

impl Cond {
    pub fn test(p: Predicate) -> Self {
        Cond::Test(p)
    }

    pub fn negate(c: Cond) -> Self {
        Cond::Not(Box::new(c))
    }
}

/// Identifier of a conditional node, unique within its program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BranchId(pub u32);

impl fmt::Display for BranchId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "b{}", self.0)
    }
}

/// One outcome of a conditional evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Arm {
    /// `if`/`ifElse` condition held.
    Then,
    /// `if`/`ifElse` condition failed.
    Else,
    /// `while` condition held and the body ran.
    Entered,
    /// `while` condition failed and the loop exited.
    Skipped,
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Arm::Then => "then",
            Arm::Else => "else",
            Arm::Entered => "entered",
            Arm::Skipped => "skipped",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Stmt {
    While {
        id: BranchId,
        cond: Cond,
        body: Box<Stmt>,
    },
    Repeat {
        times: u8,
        body: Box<Stmt>,
    },
    Seq(Box<Stmt>, Box<Stmt>),
    Action(Action),
    If {
        id: BranchId,
        cond: Cond,
        body: Box<Stmt>,
    },
    IfElse {
        id: BranchId,
        cond: Cond,
        then_body: Box<Stmt>,
        else_body: Box<Stmt>,
    },
}

// Branch ids on freshly built nodes are placeholders; `KarelProgram::new`
// renumbers them.
impl Stmt {
    pub fn action(a: Action) -> Self {
        Stmt::Action(a)
    }

    pub fn while_loop(cond: Cond, body: Stmt) -> Self {
        Stmt::While {
            id: BranchId(0),
            cond,
            body: Box::new(body),
        }
    }

    pub fn repeat(times: u8, body: Stmt) -> Self {
        Stmt::Repeat {
            times,
            body: Box::new(body),
        }
    }

    pub fn seq(first: Stmt, second: Stmt) -> Self {
        Stmt::Seq(Box::new(first), Box::new(second))
    }

    pub fn if_then(cond: Cond, body: Stmt) -> Self {
        Stmt::If {
            id: BranchId(0),
            cond,
            body: Box::new(body),
        }
    }

    pub fn if_else(cond: Cond, then_body: Stmt, else_body: Stmt) -> Self {
        Stmt::IfElse {
            id: BranchId(0),
            cond,
            then_body: Box::new(then_body),
            else_body: Box::new(else_body),
        }
    }

    /// Right-nested sequence of the given statements. Panics when empty.
    pub fn sequence<I: IntoIterator<Item = Stmt>>(stmts: I) -> Self {
        let mut stmts: Vec<Stmt> = stmts.into_iter().collect();
        let mut acc = stmts.pop().expect("sequence needs at least one statement");
        while let Some(s) = stmts.pop() {
            acc = Stmt::seq(s, acc);
        }
        acc
    }

    pub fn actions<I: IntoIterator<Item = Action>>(actions: I) -> Self {
        Self::sequence(actions.into_iter().map(Stmt::Action))
    }

    pub fn is_control_flow(&self) -> bool {
        matches!(
            self,
            Stmt::While { .. } | Stmt::Repeat { .. } | Stmt::If { .. } | Stmt::IfElse { .. }
        )
    }

    /// Direct child statements, in source order.
    pub fn children(&self) -> Vec<&Stmt> {
        match self {
            Stmt::While { body, .. } | Stmt::Repeat { body, .. } | Stmt::If { body, .. } => {
                vec![body]
            }
            Stmt::Seq(a, b) => vec![a, b],
            Stmt::IfElse {
                then_body, else_body, ..
            } => vec![then_body, else_body],
            Stmt::Action(_) => Vec::new(),
        }
    }

    fn number_branches(&mut self, next: &mut u32) {
        match self {
            Stmt::While { id, body, .. } | Stmt::If { id, body, .. } => {
                *id = BranchId(*next);
                *next += 1;
                body.number_branches(next);
            }
            Stmt::IfElse {
                id,
                then_body,
                else_body,
                ..
            } => {
                *id = BranchId(*next);
                *next += 1;
                then_body.number_branches(next);
                else_body.number_branches(next);
            }
            Stmt::Repeat { body, .. } => body.number_branches(next),
            Stmt::Seq(a, b) => {
                a.number_branches(next);
                b.number_branches(next);
            }
            Stmt::Action(_) => {}
        }
    }

    fn check_repeats(&self) -> Result<(), ProgramError> {
        if let Stmt::Repeat { times, .. } = self {
            if *times > MAX_REPEAT {
                return Err(ProgramError::RepeatOutOfRange(*times));
            }
        }
        self.children().into_iter().try_for_each(Stmt::check_repeats)
    }

    fn collect_branches(&self, out: &mut BTreeSet<(BranchId, Arm)>) {
        match self {
            Stmt::While { id, .. } => {
                out.insert((*id, Arm::Entered));
                out.insert((*id, Arm::Skipped));
            }
            Stmt::If { id, .. } | Stmt::IfElse { id, .. } => {
                out.insert((*id, Arm::Then));
                out.insert((*id, Arm::Else));
            }
            _ => {}
        }
        for c in self.children() {
            c.collect_branches(out);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProgramError {
    #[error("repeat constant {0} is outside 0..={MAX_REPEAT}")]
    RepeatOutOfRange(u8),
}

/// A complete `def main(): …` program with its branches numbered in
/// pre-order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct KarelProgram {
    body: Stmt,
    branch_count: u32,
}

impl KarelProgram {
    pub fn new(mut body: Stmt) -> Result<Self, ProgramError> {
        body.check_repeats()?;
        let mut next = 0;
        body.number_branches(&mut next);
        Ok(Self {
            body,
            branch_count: next,
        })
    }

    /// Program made of actions only.
    pub fn from_actions<I: IntoIterator<Item = Action>>(actions: I) -> Self {
        Self::new(Stmt::actions(actions)).expect("action-only programs are always valid")
    }

    pub fn body(&self) -> &Stmt {
        &self.body
    }

    pub fn branch_count(&self) -> u32 {
        self.branch_count
    }

    /// Every `(branch, arm)` pair that full branch coverage has to hit.
    pub fn required_branches(&self) -> BTreeSet<(BranchId, Arm)> {
        let mut out = BTreeSet::new();
        self.body.collect_branches(&mut out);
        out
    }

    /// Canonical token sequence (see [`syntax::emit_tokens`]).
    pub fn tokens(&self) -> Vec<String> {
        syntax::emit_tokens(self)
    }

    /// Program size: the number of canonical tokens.
    pub fn size(&self) -> usize {
        syntax::token_count(self)
    }
}

impl fmt::Display for KarelProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tokens().join(" "))
    }
}
