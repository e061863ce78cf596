use homogen::diagnostics::{kl_to_uniform, Histogram};
use homogen::homogenizer::{homogenize, HomogenizerConfig};
use homogen::karel::program_salients;
use homogen::karel_gen::{
    distinct_token_sequences, enumerate_action_only, has_nested, make_task, random_action_program,
    random_pair_count, sample_marker_count, sample_narrow_grid, sample_program, sample_uniform_grid,
    ConstructKind, GridSampler, KarelVariable, MarkerCountDist, NarrowGridParams, ProductionTable,
    SynthesisTask, TaskConfig,
};
use homogen::{seeded_rng, SeededRng};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn uniform_grid_marker_ratio_among_free_cells() {
    // Marker and wall Bernoullis are independent and a wall wins, so given a
    // free cell the marker probability is r_marker, whose mean is 1/2.
    let mut rng = seeded_rng(1);
    let n = 100_000;
    let mut sum = 0.0;
    for _ in 0..n {
        let g = sample_uniform_grid(&mut rng);
        let free = g.cell_count() - g.wall_count();
        sum += g.marker_cell_count() as f64 / free as f64;
    }
    let mean = sum / n as f64;
    assert!((mean - 0.5).abs() <= 0.02, "mean conditional marker ratio {mean}");
}

#[test]
fn marker_count_laws() {
    let mut rng = seeded_rng(2);
    let n = 1_000_000;
    let freq = |rng: &mut SeededRng, dist| {
        let mut c = [0u32; 10];
        for _ in 0..n {
            c[sample_marker_count(rng, dist) as usize] += 1;
        }
        c.map(|x| x as f64 / n as f64)
    };
    let g = freq(&mut rng, MarkerCountDist::Geom);
    assert!((g[1] - 0.5).abs() <= 0.01 && (g[2] - 0.25).abs() <= 0.01);
    assert_eq!(g[0], 0.0);
    let a = freq(&mut rng, MarkerCountDist::AntiGeom);
    assert!((a[9] - 0.5).abs() <= 0.01);
    let u = freq(&mut rng, MarkerCountDist::Uniform);
    assert!(u[1..].iter().all(|f| (f - 1.0 / 9.0).abs() <= 0.01));
}

#[test]
fn first_preset_parameters() {
    let p = NarrowGridParams::presets()[0];
    assert_eq!(
        (p.r_wall(), p.r_marker(), p.marker_dist()),
        (0.05, 0.85, MarkerCountDist::Geom)
    );
}

#[test]
fn default_table_nesting_rate() {
    // Measured once for seed 3 and pinned.
    let mut rng = seeded_rng(3);
    let table = ProductionTable::default();
    let nested = (0..10_000)
        .filter(|_| program_salients(&sample_program(&mut rng, &table).unwrap()).nesting_depth >= 2)
        .count();
    assert!(nested >= 100);
    assert_eq!(nested, NESTED_PER_10K);
}

const NESTED_PER_10K: usize = 975;

#[test]
fn nested_construct_datasets() {
    let mut rng = seeded_rng(4);
    let table = ProductionTable::default();
    let mut while_in_while = 0;
    let mut while_in_if = 0;
    for _ in 0..20_000 {
        let p = sample_program(&mut rng, &table).unwrap();
        while_in_while += usize::from(has_nested(&p, ConstructKind::While, ConstructKind::While));
        while_in_if += usize::from(has_nested(&p, ConstructKind::If, ConstructKind::While));
    }
    assert!(while_in_while > 0 && while_in_if > 0);
}

#[test]
fn homogenizing_tasks_flattens_the_chosen_variable() {
    let table = ProductionTable::default();
    // A short retry budget skips uncoverable programs quickly.
    let config = TaskConfig {
        retry_limit: 50,
        ..TaskConfig::default()
    };
    let source = move |rng: &mut SeededRng| -> SynthesisTask {
        loop {
            let program = sample_program(rng, &table).unwrap();
            let pairs = if rng.random_bool(0.7) {
                5
            } else {
                random_pair_count(rng)
            };
            if let Ok(t) = make_task(&program, &GridSampler::Uniform, pairs, &config, rng) {
                return t;
            }
        }
    };
    for (var, eps, n) in [
        (KarelVariable::NumberOfGrids, 0.05, 1_500),
        (KarelVariable::ControlFlowCount, 0.1, 400),
    ] {
        let spec = var.spec();
        let data = homogenize(source.clone(), &spec, &HomogenizerConfig::new(eps, n, 5)).unwrap();
        let mut rng = seeded_rng(6);
        let raw: Vec<SynthesisTask> = (0..n).map(|_| source(&mut rng)).collect();
        let before = kl_to_uniform(&Histogram::of_samples(&spec, &raw).unwrap()).unwrap();
        let after = kl_to_uniform(&Histogram::of_samples(&spec, &data.items).unwrap()).unwrap();
        assert!(after < before, "{}: {after} >= {before}", var.name());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn narrow_counts_are_exact(w in 0.0f64..0.9, frac in 0.0f64..1.0, seed in any::<u64>()) {
        let m = (1.0 - w) * frac;
        let params = NarrowGridParams::new(w, m, MarkerCountDist::Uniform).unwrap();
        let g = sample_narrow_grid(&mut seeded_rng(seed), &params).unwrap();
        let xy = (g.width() * g.height()) as f64;
        prop_assert_eq!(g.wall_count(), (xy * w).floor() as usize);
        prop_assert_eq!(g.marker_cell_count(), (xy * m).floor() as usize);
        prop_assert!(!g.is_wall(g.karel()));
    }

    #[test]
    fn enumeration_is_distinct(len in 1usize..=20, limit in 1usize..600, seed in any::<u64>()) {
        let progs = enumerate_action_only(&mut seeded_rng(seed), len, limit).unwrap();
        let expected = 5usize.checked_pow(len as u32).map_or(limit, |t| t.min(limit));
        prop_assert_eq!(progs.len(), expected);
        prop_assert_eq!(distinct_token_sequences(&progs), expected);
        prop_assert!(progs.iter().all(|p| p.size() == 4 * len + 4));
    }

    #[test]
    fn tasks_revalidate(seed in any::<u64>(), len in 1usize..6) {
        let mut rng = seeded_rng(seed);
        let program = random_action_program(&mut rng, len);
        if let Ok(t) = make_task(&program, &GridSampler::Uniform, 5, &TaskConfig::default(), &mut rng) {
            prop_assert!(t.validate(homogen::karel::DEFAULT_STEP_LIMIT).is_ok());
        }
    }
}
