use std::collections::BTreeSet;
use std::ops::RangeInclusive;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::grids::GridSource;
use super::programs::random_action_program;
use super::{BranchDiagnostic, GenError};
use crate::homogenizer::SalientSpec;
use crate::karel::{
    execute, grid_salients, parse_tokens, program_salients, Arm, BranchId, Crash, GridSalients, KarelGrid,
    KarelProgram, ProgramSalients, DEFAULT_STEP_LIMIT,
};
use crate::SeededRng;

/// Most I/O pairs a task may show.
pub const MAX_PAIRS: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IoPair {
    #[serde(rename = "in")]
    pub input: KarelGrid,
    #[serde(rename = "out")]
    pub output: KarelGrid,
}

/// A program with the examples that specify it.
///
/// `pairs` are shown to a synthesizer; `held_out` is one more example of the
/// same program for measuring generalization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TaskRecord", into = "TaskRecord")]
pub struct SynthesisTask {
    pub program: KarelProgram,
    pub pairs: Vec<IoPair>,
    pub held_out: IoPair,
}

#[derive(Serialize, Deserialize)]
struct TaskRecord {
    program: Vec<String>,
    pairs: Vec<IoPair>,
    held_out: IoPair,
}

impl From<SynthesisTask> for TaskRecord {
    fn from(t: SynthesisTask) -> Self {
        TaskRecord {
            program: t.program.tokens(),
            pairs: t.pairs,
            held_out: t.held_out,
        }
    }
}

impl TryFrom<TaskRecord> for SynthesisTask {
    type Error = crate::karel::ParseError;

    fn try_from(r: TaskRecord) -> Result<Self, Self::Error> {
        Ok(SynthesisTask {
            program: parse_tokens(&r.program)?,
            pairs: r.pairs,
            held_out: r.held_out,
        })
    }
}

/// Why a stored task does not hold together.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TaskViolation {
    #[error("example {index} crashes with {crash}")]
    Crash { index: usize, crash: Crash },
    #[error("example {index} produces a different output grid")]
    WrongOutput { index: usize },
    #[error("shown inputs never take {branch} {arm}")]
    Uncovered { branch: BranchId, arm: Arm },
    #[error("task shows {0} pairs; 1..={MAX_PAIRS} are allowed")]
    PairCount(usize),
}

impl SynthesisTask {
    /// Number of I/O pairs shown.
    pub fn number_of_grids(&self) -> usize {
        self.pairs.len()
    }

    /// Re-executes every example and checks the outputs and the branch
    /// coverage of the shown inputs.
    pub fn validate(&self, step_limit: u32) -> Result<(), TaskViolation> {
        if !(1..=MAX_PAIRS).contains(&self.pairs.len()) {
            return Err(TaskViolation::PairCount(self.pairs.len()));
        }
        let mut covered = BTreeSet::new();
        let examples = self.pairs.iter().chain(std::iter::once(&self.held_out));
        for (index, pair) in examples.enumerate() {
            let run = execute(&self.program, &pair.input, step_limit);
            match run.output() {
                None => {
                    return Err(TaskViolation::Crash {
                        index,
                        crash: run.crash().expect("no output means a crash"),
                    })
                }
                Some(out) if *out != pair.output => return Err(TaskViolation::WrongOutput { index }),
                Some(_) => {}
            }
            if index < self.pairs.len() {
                covered.extend(run.branches_taken);
            }
        }
        match self.program.required_branches().difference(&covered).next() {
            Some(&(branch, arm)) => Err(TaskViolation::Uncovered { branch, arm }),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskConfig {
    /// Grid batches tried before the program is declared uncoverable.
    pub retry_limit: u32,
    pub step_limit: u32,
}

impl Default for TaskConfig {
    fn default() -> Self {
        Self {
            retry_limit: 1000,
            step_limit: DEFAULT_STEP_LIMIT,
        }
    }
}

/// Finds `n_pairs` shown inputs plus one held-out input on which `program`
/// runs without crashing and whose shown inputs take every branch arm.
///
/// Each attempt draws a fresh batch of `n_pairs + 1` grids; a batch with any
/// crash or missing arm is discarded whole.
pub fn make_task<G: GridSource + ?Sized>(
    program: &KarelProgram,
    grids: &G,
    n_pairs: usize,
    config: &TaskConfig,
    rng: &mut SeededRng,
) -> Result<SynthesisTask, GenError> {
    if !(1..=MAX_PAIRS).contains(&n_pairs) {
        return Err(GenError::InvalidParameter(format!(
            "n_pairs {n_pairs} is outside 1..={MAX_PAIRS}"
        )));
    }
    if config.retry_limit == 0 {
        return Err(GenError::InvalidParameter("retry_limit must be positive".into()));
    }
    let required = program.required_branches();
    let mut hits: Vec<u64> = vec![0; required.len()];
    let mut crashed_batches = 0;
    for _ in 0..config.retry_limit {
        let mut pairs = Vec::with_capacity(n_pairs + 1);
        let mut covered = BTreeSet::new();
        let mut crashed = false;
        for k in 0..=n_pairs {
            let input = grids.sample_grid(rng)?;
            let run = execute(program, &input, config.step_limit);
            if k < n_pairs {
                covered.extend(run.branches_taken.iter().copied());
            }
            match run.outcome {
                crate::karel::Outcome::Success(output) => pairs.push(IoPair { input, output }),
                crate::karel::Outcome::Crash(_) => crashed = true,
            }
        }
        for (slot, arm) in hits.iter_mut().zip(&required) {
            if covered.contains(arm) {
                *slot += 1;
            }
        }
        if crashed {
            crashed_batches += 1;
            continue;
        }
        if required.is_subset(&covered) {
            let held_out = pairs.pop().expect("batch holds n_pairs + 1 examples");
            return Ok(SynthesisTask {
                program: program.clone(),
                pairs,
                held_out,
            });
        }
    }
    Err(GenError::Uncoverable {
        program: program.to_string(),
        attempts: config.retry_limit,
        crashed_batches,
        branches: required
            .iter()
            .zip(hits)
            .map(|(&(branch, arm), batches_hit)| BranchDiagnostic {
                branch,
                arm,
                batches_hit,
            })
            .collect(),
    })
}

/// How many action-only tasks to append, and how to build them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentConfig {
    pub per_length: usize,
    pub lengths: RangeInclusive<usize>,
    pub n_pairs: usize,
    pub task: TaskConfig,
    /// Fresh programs tried for one slot when earlier ones cannot be given
    /// crash-free examples.
    pub program_retries: u32,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            per_length: 20_000,
            lengths: 1..=20,
            n_pairs: MAX_PAIRS,
            task: TaskConfig::default(),
            program_retries: 100,
        }
    }
}

impl AugmentConfig {
    /// Tasks appended by [`augment_action_only`].
    pub fn task_count(&self) -> usize {
        self.per_length * self.lengths.clone().count()
    }
}

/// Appends `per_length` tasks for every length in `lengths`, each built
/// from an action-only program whose tokens are drawn uniformly.
///
/// Some action sequences cannot run crash-free on the sampler's grids (ten
/// `putMarker`s in a row, say). When a program exhausts its retries a new
/// one of the same length is drawn; the error surfaces only after
/// `program_retries` programs in a row have failed.
pub fn augment_action_only<G: GridSource + ?Sized>(
    mut base: Vec<SynthesisTask>,
    config: &AugmentConfig,
    grids: &G,
    rng: &mut SeededRng,
) -> Result<Vec<SynthesisTask>, GenError> {
    if config.per_length == 0 {
        return Err(GenError::InvalidParameter("per_length must be positive".into()));
    }
    if config.lengths.is_empty() || *config.lengths.start() == 0 {
        return Err(GenError::InvalidParameter(
            "lengths must be a non-empty range of positive lengths".into(),
        ));
    }
    if config.program_retries == 0 {
        return Err(GenError::InvalidParameter(
            "program_retries must be positive".into(),
        ));
    }
    base.reserve(config.task_count());
    for length in config.lengths.clone() {
        for _ in 0..config.per_length {
            let mut last_err = None;
            for _ in 0..config.program_retries {
                let program = random_action_program(rng, length);
                match make_task(&program, grids, config.n_pairs, &config.task, rng) {
                    Ok(task) => {
                        base.push(task);
                        last_err = None;
                        break;
                    }
                    Err(e @ GenError::Uncoverable { .. }) => last_err = Some(e),
                    Err(e) => return Err(e),
                }
            }
            if let Some(e) = last_err {
                return Err(e);
            }
        }
    }
    Ok(base)
}

/// Number of shown pairs drawn uniformly from `1..=5`.
pub fn random_pair_count(rng: &mut SeededRng) -> usize {
    rng.random_range(1..=MAX_PAIRS)
}

/// Decile bin of a ratio in `[0, 1]`: `⌊10r⌋`, with 1.0 folded into bin 9.
pub fn decile(r: f64) -> usize {
    ((10.0 * r).floor().max(0.0) as usize).min(9)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSalients {
    pub number_of_grids: usize,
    pub program: ProgramSalients,
    /// One entry per shown input grid.
    pub inputs: Vec<GridSalients>,
    pub marker_ratio_deciles: Vec<usize>,
    pub wall_ratio_deciles: Vec<usize>,
}

pub fn task_salients(task: &SynthesisTask) -> TaskSalients {
    let inputs: Vec<GridSalients> = task.pairs.iter().map(|p| grid_salients(&p.input)).collect();
    TaskSalients {
        number_of_grids: task.number_of_grids(),
        program: program_salients(&task.program),
        marker_ratio_deciles: inputs.iter().map(|g| decile(g.marker_ratio)).collect(),
        wall_ratio_deciles: inputs.iter().map(|g| decile(g.wall_ratio)).collect(),
        inputs,
    }
}

/// Task-level salient variables available for homogenization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KarelVariable {
    /// Shown pairs, `1..=5`.
    NumberOfGrids,
    /// Canonical token count, clamped to `8..=100`.
    ProgramSize,
    /// Control-flow nodes, clamped to `0..=15`.
    ControlFlowCount,
    /// Nesting depth, clamped to `0..=10`.
    NestingDepth,
    /// Decile of the mean marker ratio of the shown inputs.
    MarkerRatio,
    /// Decile of the mean wall ratio of the shown inputs.
    WallRatio,
    /// Width of the first shown input.
    GridWidth,
    /// Height of the first shown input.
    GridHeight,
}

impl KarelVariable {
    pub const ALL: [KarelVariable; 8] = [
        KarelVariable::NumberOfGrids,
        KarelVariable::ProgramSize,
        KarelVariable::ControlFlowCount,
        KarelVariable::NestingDepth,
        KarelVariable::MarkerRatio,
        KarelVariable::WallRatio,
        KarelVariable::GridWidth,
        KarelVariable::GridHeight,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KarelVariable::NumberOfGrids => "number_of_grids",
            KarelVariable::ProgramSize => "program_size",
            KarelVariable::ControlFlowCount => "control_flow_count",
            KarelVariable::NestingDepth => "nesting_depth",
            KarelVariable::MarkerRatio => "marker_ratio",
            KarelVariable::WallRatio => "wall_ratio",
            KarelVariable::GridWidth => "grid_width",
            KarelVariable::GridHeight => "grid_height",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name() == name)
    }

    pub fn domain(self) -> RangeInclusive<usize> {
        match self {
            KarelVariable::NumberOfGrids => 1..=MAX_PAIRS,
            KarelVariable::ProgramSize => 8..=100,
            KarelVariable::ControlFlowCount => 0..=15,
            KarelVariable::NestingDepth => 0..=10,
            KarelVariable::MarkerRatio | KarelVariable::WallRatio => 0..=9,
            KarelVariable::GridWidth | KarelVariable::GridHeight => 2..=16,
        }
    }

    /// The variable's value for `task`, clamped into [`Self::domain`].
    pub fn value(self, task: &SynthesisTask) -> usize {
        let mean = |f: fn(&GridSalients) -> f64| {
            let inputs: Vec<GridSalients> = task.pairs.iter().map(|p| grid_salients(&p.input)).collect();
            inputs.iter().map(f).sum::<f64>() / inputs.len().max(1) as f64
        };
        let first = &task.pairs[0].input;
        let raw = match self {
            KarelVariable::NumberOfGrids => task.number_of_grids(),
            KarelVariable::ProgramSize => task.program.size(),
            KarelVariable::ControlFlowCount => program_salients(&task.program).control_flow_count,
            KarelVariable::NestingDepth => program_salients(&task.program).nesting_depth,
            KarelVariable::MarkerRatio => decile(mean(|g| g.marker_ratio)),
            KarelVariable::WallRatio => decile(mean(|g| g.wall_ratio)),
            KarelVariable::GridWidth => first.width(),
            KarelVariable::GridHeight => first.height(),
        };
        let d = self.domain();
        raw.clamp(*d.start(), *d.end())
    }

    pub fn spec(self) -> SalientSpec<SynthesisTask, usize> {
        SalientSpec::new(self.name(), self.domain(), move |t: &SynthesisTask| self.value(t))
            .expect("non-empty domain without duplicates")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::karel::{parse_program, Direction};
    use crate::karel_gen::{GridSampler, MarkerCountDist, NarrowGridParams};
    use crate::seeded_rng;

    fn open_grid(_: &mut SeededRng) -> KarelGrid {
        KarelGrid::empty(5, 5, (2, 2), Direction::N).unwrap()
    }

    #[test]
    fn action_only_task_needs_no_coverage() {
        let p = parse_program("def main(): turnLeft(); putMarker()").unwrap();
        let mut rng = seeded_rng(1);
        let t = make_task(&p, &open_grid, 5, &TaskConfig::default(), &mut rng).unwrap();
        assert_eq!(t.number_of_grids(), 5);
        assert!(t.validate(DEFAULT_STEP_LIMIT).is_ok());
        assert_eq!(t.held_out.output.markers_at((2, 2)), 1);
    }

    #[test]
    fn markerless_sampler_cannot_cover_then_arm() {
        let p = parse_program("def main(): if(markersPresent()): move()").unwrap();
        let config = TaskConfig {
            retry_limit: 20,
            ..TaskConfig::default()
        };
        let err = make_task(&p, &open_grid, 3, &config, &mut seeded_rng(2)).unwrap_err();
        match err {
            GenError::Uncoverable {
                attempts, branches, ..
            } => {
                assert_eq!(attempts, 20);
                let then = branches.iter().find(|b| b.arm == Arm::Then).unwrap();
                let els = branches.iter().find(|b| b.arm == Arm::Else).unwrap();
                assert_eq!(then.batches_hit, 0);
                assert_eq!(els.batches_hit, 20);
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn conditional_tasks_cover_both_arms() {
        let p = parse_program(
            "def main(): while(frontIsClear()): { move(); if(markersPresent()): pickMarker() }",
        )
        .unwrap();
        let mut rng = seeded_rng(3);
        for _ in 0..20 {
            let t = make_task(&p, &GridSampler::Uniform, 5, &TaskConfig::default(), &mut rng).unwrap();
            assert!(t.validate(DEFAULT_STEP_LIMIT).is_ok());
        }
    }

    #[test]
    fn pair_count_is_checked() {
        let p = parse_program("def main(): move()").unwrap();
        let mut rng = seeded_rng(0);
        assert!(make_task(&p, &open_grid, 0, &TaskConfig::default(), &mut rng).is_err());
        assert!(make_task(&p, &open_grid, 6, &TaskConfig::default(), &mut rng).is_err());
    }

    #[test]
    fn augmentation_counts() {
        assert_eq!(AugmentConfig::default().task_count(), 400_000);
        let config = AugmentConfig {
            per_length: 1,
            lengths: 1..=2,
            ..AugmentConfig::default()
        };
        let out =
            augment_action_only(Vec::new(), &config, &GridSampler::Uniform, &mut seeded_rng(4)).unwrap();
        assert_eq!(out.len(), 2);
        assert!(out
            .iter()
            .all(|t| program_salients(&t.program).control_flow_count == 0));
        assert_eq!(out[0].program.size(), 8);
        assert_eq!(out[1].program.size(), 12);
    }

    #[test]
    fn salients_and_deciles() {
        assert_eq!(decile(0.25), 2);
        assert_eq!(decile(0.0), 0);
        assert_eq!(decile(0.999), 9);
        assert_eq!(decile(1.0), 9);
        let p = parse_program("def main(): turnLeft()").unwrap();
        let narrow =
            GridSampler::Narrow(NarrowGridParams::new(0.25, 0.65, MarkerCountDist::Uniform).unwrap());
        let t = make_task(&p, &narrow, 5, &TaskConfig::default(), &mut seeded_rng(5)).unwrap();
        let s = task_salients(&t);
        assert_eq!(s.number_of_grids, 5);
        assert_eq!(s.program, program_salients(&p));
        assert!(s.wall_ratio_deciles.iter().all(|&d| d == 2));
        assert!(s.marker_ratio_deciles.iter().all(|&d| d == 6));
        assert_eq!(KarelVariable::NumberOfGrids.value(&t), 5);
        assert_eq!(KarelVariable::WallRatio.value(&t), 2);
        for v in KarelVariable::ALL {
            assert_eq!(KarelVariable::from_name(v.name()), Some(v));
            assert!(v.spec().classify(&t).is_ok());
        }
    }

    #[test]
    fn json_record_round_trip() {
        let p = parse_program("def main(): repeat(2): { move(); turnRight() }").unwrap();
        let t = make_task(&p, &open_grid, 2, &TaskConfig::default(), &mut seeded_rng(6)).unwrap();
        let json = serde_json::to_value(&t).unwrap();
        assert_eq!(json["program"][0], "def");
        assert!(json["pairs"][0]["in"]["walls"].is_array());
        assert!(json["held_out"]["out"]["karel"]["pos"].is_array());
        let back: SynthesisTask = serde_json::from_value(json).unwrap();
        assert_eq!(back, t);
    }
}
