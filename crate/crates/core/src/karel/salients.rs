use serde::{Deserialize, Serialize};

use super::ast::{KarelProgram, Stmt};
use super::grid::KarelGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgramSalients {
    /// Canonical token count, prologue included.
    pub size: usize,
    /// Number of `while`, `repeat`, `if` and `ifElse` nodes.
    pub control_flow_count: usize,
    /// Most control-flow nodes on any root-to-leaf path.
    pub nesting_depth: usize,
}

pub fn program_salients(program: &KarelProgram) -> ProgramSalients {
    fn walk(s: &Stmt) -> (usize, usize) {
        let mut count = 0;
        let mut depth = 0;
        for c in s.children() {
            let (cc, cd) = walk(c);
            count += cc;
            depth = depth.max(cd);
        }
        if s.is_control_flow() {
            (count + 1, depth + 1)
        } else {
            (count, depth)
        }
    }
    let (control_flow_count, nesting_depth) = walk(program.body());
    ProgramSalients {
        size: program.size(),
        control_flow_count,
        nesting_depth,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSalients {
    pub width: usize,
    pub height: usize,
    /// Fraction of all cells holding at least one marker.
    pub marker_ratio: f64,
    /// Fraction of all cells that are walls.
    pub wall_ratio: f64,
    /// `marker_count_histogram[k - 1]` cells hold exactly `k` markers.
    pub marker_count_histogram: [u32; 9],
}

pub fn grid_salients(grid: &KarelGrid) -> GridSalients {
    let cells = grid.cell_count() as f64;
    let mut hist = [0u32; 9];
    for (_, _, k) in grid.markers() {
        hist[k as usize - 1] += 1;
    }
    GridSalients {
        width: grid.width(),
        height: grid.height(),
        marker_ratio: grid.marker_cell_count() as f64 / cells,
        wall_ratio: grid.wall_count() as f64 / cells,
        marker_count_histogram: hist,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::karel::ast::{Action, Cond, Predicate};
    use crate::karel::grid::Direction;

    fn prog(s: Stmt) -> KarelProgram {
        KarelProgram::new(s).unwrap()
    }

    fn mv() -> Stmt {
        Stmt::action(Action::Move)
    }

    fn c() -> Cond {
        Cond::test(Predicate::FrontIsClear)
    }

    #[test]
    fn program_examples() {
        assert_eq!(
            program_salients(&prog(mv())),
            ProgramSalients {
                size: 8,
                control_flow_count: 0,
                nesting_depth: 0
            }
        );
        let nested = program_salients(&prog(Stmt::while_loop(c(), Stmt::if_then(c(), mv()))));
        assert_eq!((nested.control_flow_count, nested.nesting_depth), (2, 2));
        let siblings = program_salients(&prog(Stmt::seq(
            Stmt::while_loop(c(), mv()),
            Stmt::if_then(c(), mv()),
        )));
        assert_eq!((siblings.control_flow_count, siblings.nesting_depth), (2, 1));
    }

    #[test]
    fn grid_examples() {
        let empty = grid_salients(&KarelGrid::empty(4, 4, (0, 0), Direction::N).unwrap());
        assert_eq!((empty.marker_ratio, empty.wall_ratio), (0.0, 0.0));
        let g = KarelGrid::new(2, 2, [(1, 0)], [(0, 1, 3)], (0, 0), Direction::N).unwrap();
        let s = grid_salients(&g);
        assert_eq!((s.wall_ratio, s.marker_ratio), (0.25, 0.25));
        assert_eq!(s.marker_count_histogram, [0, 0, 1, 0, 0, 0, 0, 0, 0]);
    }
}
