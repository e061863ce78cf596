use std::collections::BTreeSet;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::GenError;
use crate::karel::{Action, Cond, KarelProgram, Predicate, Stmt};
use crate::SeededRng;

/// Control-flow constructs, for nesting queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConstructKind {
    While,
    Repeat,
    /// Matches both `if` and `ifElse`.
    If,
    /// Matches `ifElse` only.
    IfElse,
}

impl ConstructKind {
    fn matches(self, stmt: &Stmt) -> bool {
        matches!(
            (self, stmt),
            (ConstructKind::While, Stmt::While { .. })
                | (ConstructKind::Repeat, Stmt::Repeat { .. })
                | (ConstructKind::If, Stmt::If { .. } | Stmt::IfElse { .. })
                | (ConstructKind::IfElse, Stmt::IfElse { .. })
        )
    }
}

/// True when a node of kind `inner` lies strictly inside the body of a node
/// of kind `outer`.
pub fn has_nested(program: &KarelProgram, outer: ConstructKind, inner: ConstructKind) -> bool {
    fn contains(stmt: &Stmt, kind: ConstructKind) -> bool {
        kind.matches(stmt) || stmt.children().into_iter().any(|c| contains(c, kind))
    }
    fn walk(stmt: &Stmt, outer: ConstructKind, inner: ConstructKind) -> bool {
        if outer.matches(stmt) && stmt.children().into_iter().any(|c| contains(c, inner)) {
            return true;
        }
        stmt.children().into_iter().any(|c| walk(c, outer, inner))
    }
    walk(program.body(), outer, inner)
}

/// Filter used by some published Karel datasets: the program must contain
/// at least two action tokens, at least one of them `move`.
pub fn passes_action_pruning(program: &KarelProgram) -> bool {
    fn count(stmt: &Stmt, actions: &mut usize, moves: &mut usize) {
        if let Stmt::Action(a) = stmt {
            *actions += 1;
            if *a == Action::Move {
                *moves += 1;
            }
        }
        for c in stmt.children() {
            count(c, actions, moves);
        }
    }
    let (mut actions, mut moves) = (0, 0);
    count(program.body(), &mut actions, &mut moves);
    actions >= 2 && moves >= 1
}

/// Production probabilities for random program generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductionTable {
    pub action: f64,
    pub seq: f64,
    pub if_then: f64,
    pub if_else: f64,
    pub while_loop: f64,
    pub repeat: f64,
    /// Probability that a condition is wrapped in `not`.
    pub negation: f64,
    /// Programs with more tokens than this are rejected and redrawn.
    pub token_cap: usize,
    /// Inclusive range of `repeat` constants.
    pub repeat_times: (u8, u8),
    /// Redraws allowed before giving up on the cap.
    pub max_attempts: u32,
}

impl Default for ProductionTable {
    fn default() -> Self {
        Self {
            action: 0.55,
            seq: 0.25,
            if_then: 0.06,
            if_else: 0.04,
            while_loop: 0.06,
            repeat: 0.04,
            negation: 0.2,
            token_cap: 60,
            repeat_times: (2, 6),
            max_attempts: 10_000,
        }
    }
}

impl ProductionTable {
    /// Table that only ever produces a single action.
    pub fn actions_only() -> Self {
        Self {
            action: 1.0,
            seq: 0.0,
            if_then: 0.0,
            if_else: 0.0,
            while_loop: 0.0,
            repeat: 0.0,
            ..Self::default()
        }
    }

    fn weights(&self) -> [f64; 6] {
        [
            self.action,
            self.seq,
            self.if_then,
            self.if_else,
            self.while_loop,
            self.repeat,
        ]
    }

    /// Expected number of child statements of one node. The statement
    /// grammar is a single-type branching process, so finite expected size
    /// is equivalent to this being below one.
    pub fn mean_offspring(&self) -> f64 {
        2.0 * self.seq + self.if_then + 2.0 * self.if_else + self.while_loop + self.repeat
    }

    pub fn validate(&self) -> Result<(), GenError> {
        let w = self.weights();
        if w.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(GenError::InvalidParameter(
                "production probabilities must lie in [0, 1]".into(),
            ));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(GenError::InvalidParameter(format!(
                "production probabilities sum to {sum}, not 1"
            )));
        }
        let m = self.mean_offspring();
        if m >= 1.0 {
            return Err(GenError::InvalidParameter(format!(
                "mean offspring {m} is not below 1; programs would not stay finite"
            )));
        }
        if !(0.0..=1.0).contains(&self.negation) {
            return Err(GenError::InvalidParameter("negation must lie in [0, 1]".into()));
        }
        let (lo, hi) = self.repeat_times;
        if lo > hi || hi > crate::karel::MAX_REPEAT {
            return Err(GenError::InvalidParameter(format!(
                "repeat range {lo}..={hi} is empty or exceeds the language limit"
            )));
        }
        if self.token_cap < crate::karel::MIN_PROGRAM_TOKENS {
            return Err(GenError::InvalidParameter(format!(
                "token cap {} is below the smallest program",
                self.token_cap
            )));
        }
        if self.max_attempts == 0 {
            return Err(GenError::InvalidParameter("max_attempts must be positive".into()));
        }
        Ok(())
    }
}

/// Draws programs from the statement grammar, rejecting any whose token
/// count exceeds the table's cap.
pub fn sample_program(rng: &mut SeededRng, table: &ProductionTable) -> Result<KarelProgram, GenError> {
    table.validate()?;
    // Every statement costs at least three tokens, so a tree with more nodes
    // than this is already over the cap and can be abandoned early.
    let node_budget = table.token_cap / 3 + 1;
    for _ in 0..table.max_attempts {
        let mut nodes = 0;
        let Some(stmt) = draw_stmt(rng, table, &mut nodes, node_budget) else {
            continue;
        };
        let program = KarelProgram::new(normalize(stmt)).expect("repeat range was validated");
        if program.size() <= table.token_cap {
            return Ok(program);
        }
    }
    Err(GenError::InvalidParameter(format!(
        "no program within {} tokens after {} attempts",
        table.token_cap, table.max_attempts
    )))
}

fn draw_cond(rng: &mut SeededRng, table: &ProductionTable) -> Cond {
    let p = Predicate::ALL[rng.random_range(0..Predicate::ALL.len())];
    if rng.random_bool(table.negation) {
        Cond::negate(Cond::test(p))
    } else {
        Cond::test(p)
    }
}

fn draw_stmt(rng: &mut SeededRng, table: &ProductionTable, nodes: &mut usize, budget: usize) -> Option<Stmt> {
    *nodes += 1;
    if *nodes > budget {
        return None;
    }
    let choice = WeightedIndex::new(table.weights())
        .expect("validated weights")
        .sample(rng);
    let mut sub = |rng: &mut SeededRng| draw_stmt(rng, table, nodes, budget);
    Some(match choice {
        0 => Stmt::action(Action::ALL[rng.random_range(0..Action::ALL.len())]),
        1 => {
            let a = sub(rng)?;
            Stmt::seq(a, sub(rng)?)
        }
        2 => {
            let c = draw_cond(rng, table);
            Stmt::if_then(c, sub(rng)?)
        }
        3 => {
            let c = draw_cond(rng, table);
            let t = sub(rng)?;
            Stmt::if_else(c, t, sub(rng)?)
        }
        4 => {
            let c = draw_cond(rng, table);
            Stmt::while_loop(c, sub(rng)?)
        }
        _ => {
            let (lo, hi) = table.repeat_times;
            let times = rng.random_range(lo..=hi);
            Stmt::repeat(times, sub(rng)?)
        }
    })
}

/// Flattens every sequence into right-nested form so that equal statement
/// lists have one representation.
fn normalize(stmt: Stmt) -> Stmt {
    fn flatten(stmt: Stmt, out: &mut Vec<Stmt>) {
        match stmt {
            Stmt::Seq(a, b) => {
                flatten(*a, out);
                flatten(*b, out);
            }
            other => out.push(normalize(other)),
        }
    }
    match stmt {
        Stmt::Seq(..) => {
            let mut items = Vec::new();
            flatten(stmt, &mut items);
            Stmt::sequence(items)
        }
        Stmt::While { id, cond, body } => Stmt::While {
            id,
            cond,
            body: Box::new(normalize(*body)),
        },
        Stmt::Repeat { times, body } => Stmt::Repeat {
            times,
            body: Box::new(normalize(*body)),
        },
        Stmt::If { id, cond, body } => Stmt::If {
            id,
            cond,
            body: Box::new(normalize(*body)),
        },
        Stmt::IfElse {
            id,
            cond,
            then_body,
            else_body,
        } => Stmt::IfElse {
            id,
            cond,
            then_body: Box::new(normalize(*then_body)),
            else_body: Box::new(normalize(*else_body)),
        },
        a @ Stmt::Action(_) => a,
    }
}

/// Action-only program with `length` actions chosen uniformly.
pub fn random_action_program(rng: &mut SeededRng, length: usize) -> KarelProgram {
    assert!(length >= 1, "an action-only program needs at least one action");
    KarelProgram::from_actions((0..length).map(|_| Action::ALL[rng.random_range(0..Action::ALL.len())]))
}

/// Up to `limit` distinct action-only programs of exactly `length` actions.
///
/// When all `5^length` programs fit they are returned in lexicographic order
/// of [`Action::ALL`]; otherwise `limit` of them are drawn uniformly without
/// replacement.
pub fn enumerate_action_only(
    rng: &mut SeededRng,
    length: usize,
    limit: usize,
) -> Result<Vec<KarelProgram>, GenError> {
    if limit == 0 {
        return Err(GenError::InvalidParameter("limit must be positive".into()));
    }
    if !(1..=20).contains(&length) {
        return Err(GenError::InvalidParameter(format!(
            "action-only length {length} is outside 1..=20"
        )));
    }
    let total = 5usize.pow(length as u32);
    let decode = |mut code: usize| {
        let mut actions = vec![Action::Move; length];
        for slot in actions.iter_mut().rev() {
            *slot = Action::ALL[code % 5];
            code /= 5;
        }
        KarelProgram::from_actions(actions)
    };
    if total <= limit {
        return Ok((0..total).map(decode).collect());
    }
    let mut codes = index::sample(rng, total, limit).into_vec();
    codes.sort_unstable();
    Ok(codes.into_iter().map(decode).collect())
}

/// Token sequences of a set of programs, for distinctness checks.
pub fn distinct_token_sequences(programs: &[KarelProgram]) -> usize {
    programs.iter().map(|p| p.tokens()).collect::<BTreeSet<_>>().len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::karel::{parse_program, program_salients};
    use crate::seeded_rng;

    fn parse(s: &str) -> KarelProgram {
        parse_program(s).unwrap()
    }

    #[test]
    fn nesting_queries() {
        use ConstructKind::*;
        let p = parse("def main(): while(frontIsClear()): while(leftIsClear()): move()");
        assert!(has_nested(&p, While, While));
        let p = parse("def main(): while(frontIsClear()): move(); while(leftIsClear()): move()");
        assert!(!has_nested(&p, While, While));
        let p = parse("def main(): if(markersPresent()): while(leftIsClear()): move()");
        assert!(has_nested(&p, If, While));
        assert!(!has_nested(&p, IfElse, While));
        assert!(!has_nested(&p, While, If));
    }

    #[test]
    fn pruning_filter() {
        assert!(!passes_action_pruning(&parse("def main(): move()")));
        assert!(!passes_action_pruning(&parse(
            "def main(): turnLeft(); putMarker()"
        )));
        assert!(passes_action_pruning(&parse(
            "def main(): if(markersPresent()): move() else: turnLeft()"
        )));
    }

    #[test]
    fn degenerate_table_gives_single_actions() {
        let mut rng = seeded_rng(0);
        for _ in 0..200 {
            let p = sample_program(&mut rng, &ProductionTable::actions_only()).unwrap();
            assert!(matches!(p.body(), Stmt::Action(_)));
            assert_eq!(p.size(), 8);
        }
    }

    #[test]
    fn table_validation() {
        assert!(ProductionTable::default().validate().is_ok());
        let supercritical = ProductionTable {
            action: 0.4,
            seq: 0.6,
            if_then: 0.0,
            if_else: 0.0,
            while_loop: 0.0,
            repeat: 0.0,
            ..ProductionTable::default()
        };
        assert!(supercritical.validate().is_err());
        let unnormalized = ProductionTable {
            action: 0.5,
            ..ProductionTable::default()
        };
        assert!(unnormalized.validate().is_err());
    }

    #[test]
    fn sampled_programs_respect_cap_and_round_trip() {
        let mut rng = seeded_rng(11);
        let table = ProductionTable::default();
        for _ in 0..2_000 {
            let p = sample_program(&mut rng, &table).unwrap();
            assert!(p.size() <= table.token_cap);
            assert_eq!(parse_program(&p.to_string()).unwrap(), p);
        }
    }

    #[test]
    fn default_table_produces_nesting() {
        let mut rng = seeded_rng(12);
        let table = ProductionTable::default();
        let nested = (0..10_000)
            .filter(|_| program_salients(&sample_program(&mut rng, &table).unwrap()).nesting_depth >= 2)
            .count();
        assert!(nested >= 100, "only {nested} nested programs");
    }

    #[test]
    fn enumeration_counts() {
        let mut rng = seeded_rng(2);
        assert_eq!(enumerate_action_only(&mut rng, 1, 500).unwrap().len(), 5);
        let two = enumerate_action_only(&mut rng, 2, 500).unwrap();
        assert_eq!(two.len(), 25);
        assert_eq!(distinct_token_sequences(&two), 25);
        let four = enumerate_action_only(&mut rng, 4, 500).unwrap();
        assert_eq!(four.len(), 500);
        assert_eq!(distinct_token_sequences(&four), 500);
        let twenty = enumerate_action_only(&mut rng, 20, 50).unwrap();
        assert_eq!(distinct_token_sequences(&twenty), 50);
        assert!(twenty.iter().all(|p| program_salients(p).control_flow_count == 0));
        assert!(enumerate_action_only(&mut rng, 3, 0).is_err());
    }

    #[test]
    fn exhaustive_enumeration_is_lexicographic() {
        let mut rng = seeded_rng(0);
        let one = enumerate_action_only(&mut rng, 1, 5).unwrap();
        let words: Vec<String> = one.iter().map(|p| p.tokens()[5].clone()).collect();
        assert_eq!(
            words,
            ["move", "turnLeft", "turnRight", "pickMarker", "putMarker"]
        );
    }
}
