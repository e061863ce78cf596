use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ast::{Action, Arm, BranchId, Cond, KarelProgram, Predicate, Stmt};
use super::grid::{Cell, KarelGrid, MAX_MARKERS};

/// Actions allowed per run unless the caller says otherwise.
pub const DEFAULT_STEP_LIMIT: u32 = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Crash {
    /// `move` into a wall or off the grid.
    MoveIntoWall,
    /// `pickMarker` on a cell with no markers.
    PickEmpty,
    /// `putMarker` on a cell that already holds the maximum.
    PutOverflow,
    /// The run exceeded its step limit.
    StepLimit,
}

impl fmt::Display for Crash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Crash::MoveIntoWall => "MoveIntoWall",
            Crash::PickEmpty => "PickEmpty",
            Crash::PutOverflow => "PutOverflow",
            Crash::StepLimit => "StepLimit",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Success(KarelGrid),
    Crash(Crash),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecResult {
    pub outcome: Outcome,
    /// Every `(branch, arm)` taken at least once, including before a crash.
    pub branches_taken: BTreeSet<(BranchId, Arm)>,
    /// Actions attempted within the limit; one that crashes on the grid
    /// counts, one refused by the step limit does not.
    pub steps: u32,
}

impl ExecResult {
    pub fn output(&self) -> Option<&KarelGrid> {
        match &self.outcome {
            Outcome::Success(g) => Some(g),
            Outcome::Crash(_) => None,
        }
    }

    pub fn crash(&self) -> Option<Crash> {
        match self.outcome {
            Outcome::Crash(c) => Some(c),
            Outcome::Success(_) => None,
        }
    }
}

/// Runs `program` on `input`.
///
/// At most `step_limit` actions may execute; the next one crashes with
/// [`Crash::StepLimit`]. Loop iterations are bounded by the same limit, which
/// catches `while` loops whose body performs no action. A terminating loop
/// executes at least one action per iteration, so that guard never fires on
/// a run that would otherwise succeed.
pub fn execute(program: &KarelProgram, input: &KarelGrid, step_limit: u32) -> ExecResult {
    let mut m = Machine {
        grid: input.clone(),
        steps: 0,
        iterations: 0,
        limit: step_limit,
        taken: BTreeSet::new(),
    };
    let outcome = match m.run(program.body()) {
        Ok(()) => Outcome::Success(m.grid),
        Err(c) => Outcome::Crash(c),
    };
    ExecResult {
        outcome,
        branches_taken: m.taken,
        steps: m.steps,
    }
}

struct Machine {
    grid: KarelGrid,
    steps: u32,
    iterations: u32,
    limit: u32,
    taken: BTreeSet<(BranchId, Arm)>,
}

impl Machine {
    fn run(&mut self, stmt: &Stmt) -> Result<(), Crash> {
        match stmt {
            Stmt::Action(a) => self.act(*a),
            Stmt::Seq(a, b) => {
                self.run(a)?;
                self.run(b)
            }
            Stmt::Repeat { times, body } => {
                for _ in 0..*times {
                    self.run(body)?;
                }
                Ok(())
            }
            Stmt::If { id, cond, body } => {
                if self.eval(cond) {
                    self.taken.insert((*id, Arm::Then));
                    self.run(body)
                } else {
                    self.taken.insert((*id, Arm::Else));
                    Ok(())
                }
            }
            Stmt::IfElse {
                id,
                cond,
                then_body,
                else_body,
            } => {
                if self.eval(cond) {
                    self.taken.insert((*id, Arm::Then));
                    self.run(then_body)
                } else {
                    self.taken.insert((*id, Arm::Else));
                    self.run(else_body)
                }
            }
            Stmt::While { id, cond, body } => {
                while self.eval(cond) {
                    self.taken.insert((*id, Arm::Entered));
                    if self.iterations == self.limit {
                        return Err(Crash::StepLimit);
                    }
                    self.iterations += 1;
                    self.run(body)?;
                }
                self.taken.insert((*id, Arm::Skipped));
                Ok(())
            }
        }
    }

    fn eval(&self, cond: &Cond) -> bool {
        match cond {
            Cond::Not(inner) => !self.eval(inner),
            Cond::Test(p) => {
                let pos = self.grid.karel();
                let dir = self.grid.direction();
                match p {
                    Predicate::MarkersPresent => self.grid.markers_at(pos) > 0,
                    Predicate::FrontIsClear => self.grid.is_clear(pos, dir),
                    Predicate::LeftIsClear => self.grid.is_clear(pos, dir.left()),
                    Predicate::RightIsClear => self.grid.is_clear(pos, dir.right()),
                }
            }
        }
    }

    fn act(&mut self, action: Action) -> Result<(), Crash> {
        if self.steps == self.limit {
            return Err(Crash::StepLimit);
        }
        self.steps += 1;
        let pos: Cell = self.grid.karel();
        let dir = self.grid.direction();
        match action {
            Action::Move => match self.grid.neighbor(pos, dir) {
                Some(next) if !self.grid.is_wall(next) => self.grid.set_pose(next, dir),
                _ => return Err(Crash::MoveIntoWall),
            },
            Action::TurnLeft => self.grid.set_pose(pos, dir.left()),
            Action::TurnRight => self.grid.set_pose(pos, dir.right()),
            Action::PickMarker => match self.grid.markers_at(pos) {
                0 => return Err(Crash::PickEmpty),
                k => self.grid.set_markers(pos, k - 1),
            },
            Action::PutMarker => match self.grid.markers_at(pos) {
                MAX_MARKERS => return Err(Crash::PutOverflow),
                k => self.grid.set_markers(pos, k + 1),
            },
        }
        Ok(())
    }
}
