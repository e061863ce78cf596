use homogen::karel::{
    execute, parse_program, parse_tokens, program_salients, Action, Crash, Direction, KarelGrid,
    KarelProgram, Stmt, DEFAULT_STEP_LIMIT,
};
use homogen::karel_gen::{sample_program, sample_uniform_grid, ProductionTable};
use homogen::seeded_rng;
use proptest::prelude::*;

fn action() -> impl Strategy<Value = Action> {
    prop::sample::select(Action::ALL.to_vec())
}

proptest! {
    #[test]
    fn sampled_programs_round_trip(seed in any::<u64>()) {
        let mut rng = seeded_rng(seed);
        let p = sample_program(&mut rng, &ProductionTable::default()).unwrap();
        prop_assert_eq!(parse_tokens(&p.tokens()).unwrap(), p.clone());
        prop_assert_eq!(parse_program(&p.to_string()).unwrap(), p);
    }

    #[test]
    fn execution_is_deterministic(seed in any::<u64>()) {
        let mut rng = seeded_rng(seed);
        let p = sample_program(&mut rng, &ProductionTable::default()).unwrap();
        let g = sample_uniform_grid(&mut rng);
        prop_assert_eq!(execute(&p, &g, DEFAULT_STEP_LIMIT), execute(&p, &g, DEFAULT_STEP_LIMIT));
    }

    #[test]
    fn four_left_turns_after_any_prefix_cancel(prefix in prop::collection::vec(action(), 1..10), seed in any::<u64>()) {
        let g = sample_uniform_grid(&mut seeded_rng(seed));
        let base = KarelProgram::from_actions(prefix.clone());
        let mut longer = prefix;
        longer.extend([Action::TurnLeft; 4]);
        let with_turns = KarelProgram::from_actions(longer);
        let a = execute(&base, &g, DEFAULT_STEP_LIMIT);
        let b = execute(&with_turns, &g, DEFAULT_STEP_LIMIT);
        prop_assert_eq!(a.output(), b.output());
        prop_assert_eq!(a.crash(), b.crash());
    }

    #[test]
    fn successful_runs_keep_grid_invariants(seed in any::<u64>()) {
        let mut rng = seeded_rng(seed);
        let p = sample_program(&mut rng, &ProductionTable::default()).unwrap();
        let g = sample_uniform_grid(&mut rng);
        let r = execute(&p, &g, DEFAULT_STEP_LIMIT);
        prop_assert!(r.steps <= DEFAULT_STEP_LIMIT);
        if let Some(out) = r.output() {
            prop_assert!(out.check_invariants().is_ok());
            prop_assert_eq!(out.walls(), g.walls());
            prop_assert_eq!((out.width(), out.height()), (g.width(), g.height()));
        }
    }

    #[test]
    fn grid_json_round_trips(seed in any::<u64>()) {
        let g = sample_uniform_grid(&mut seeded_rng(seed));
        let json = serde_json::to_string(&g).unwrap();
        let back: KarelGrid = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back, g);
    }

    #[test]
    fn action_programs_have_linear_size(actions in prop::collection::vec(action(), 1..30)) {
        let n = actions.len();
        let p = KarelProgram::from_actions(actions);
        let s = program_salients(&p);
        prop_assert_eq!(s.size, 4 * n + 4);
        prop_assert_eq!(s.control_flow_count, 0);
        prop_assert_eq!(s.nesting_depth, 0);
    }
}

#[test]
fn step_limit_zero_crashes_nonempty_programs() {
    let g = KarelGrid::empty(4, 4, (1, 1), Direction::S).unwrap();
    let p = KarelProgram::new(Stmt::action(Action::TurnLeft)).unwrap();
    assert_eq!(execute(&p, &g, 0).crash(), Some(Crash::StepLimit));
}

#[test]
fn put_overflow_after_nine_markers() {
    let g = KarelGrid::empty(2, 2, (0, 0), Direction::E).unwrap();
    let nine = KarelProgram::from_actions([Action::PutMarker; 9]);
    assert_eq!(
        execute(&nine, &g, DEFAULT_STEP_LIMIT)
            .output()
            .unwrap()
            .markers_at((0, 0)),
        9
    );
    let ten = KarelProgram::from_actions([Action::PutMarker; 10]);
    assert_eq!(
        execute(&ten, &g, DEFAULT_STEP_LIMIT).crash(),
        Some(Crash::PutOverflow)
    );
}
