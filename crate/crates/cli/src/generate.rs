use homogen::calc::{sample_expr, CalcSample};
use homogen::karel_gen::{
    make_task, passes_action_pruning, random_action_program, sample_program, GenError, SynthesisTask,
    TaskConfig,
};
use homogen::{seeded_rng, SeededRng};
use rayon::prelude::*;
use serde_json::json;

use crate::args::{CalcGenArgs, CommonArgs, KarelGen, KarelGenArgs, ProgramKind};
use crate::failure::{CmdResult, Failure};
use crate::io::{sibling, JsonlWriter};
use crate::manifest::RunManifest;

pub const CALC_STREAMS: &str = "one ChaCha8 stream seeded with `seed`, used in record order";
pub const KAREL_STREAMS: &str = "record i uses ChaCha8 seeded with `seed`, stream i";

pub fn calc(argv: &[String], gen: &CalcGenArgs, common: &CommonArgs) -> CmdResult {
    common.check_count()?;
    let sampler = gen.sampler()?;
    let out = common.out_path("calc");
    let mut rng = seeded_rng(common.seed);
    let mut writer = JsonlWriter::create(&out)?;
    for _ in 0..common.count {
        writer.write(&CalcSample::from_expr(&sample_expr(&mut rng, &sampler)))?;
    }
    writer.finish()?;

    let params = json!({ "domain": "calc", "sampler": sampler, "count": common.count });
    let mut manifest = RunManifest::new(argv, common.seed, CALC_STREAMS, params);
    manifest.add_output(&out)?;
    manifest.write(&sibling(&out, "manifest.json"))?;
    eprintln!("wrote {} calc records to {}", common.count, out.display());
    Ok(())
}

pub fn karel(argv: &[String], args: &KarelGenArgs, common: &CommonArgs) -> CmdResult {
    common.check_count()?;
    let gen = args.resolve()?;
    let out = common.out_path("karel");
    let tasks: Vec<SynthesisTask> = (0..common.count)
        .into_par_iter()
        .map(|i| {
            let mut rng = seeded_rng(common.seed);
            rng.set_stream(i);
            karel_task(&mut rng, &gen)
        })
        .collect::<Result<_, _>>()
        .map_err(stall)?;
    let mut writer = JsonlWriter::create(&out)?;
    for task in &tasks {
        writer.write(task)?;
    }
    writer.finish()?;

    let params = json!({ "domain": "karel", "generator": gen, "count": common.count });
    let mut manifest = RunManifest::new(argv, common.seed, KAREL_STREAMS, params);
    manifest.add_output(&out)?;
    manifest.write(&sibling(&out, "manifest.json"))?;
    eprintln!("wrote {} karel tasks to {}", common.count, out.display());
    Ok(())
}

/// Draws programs until one admits a crash-free, fully covering set of
/// examples, giving up after `program_retries` programs.
pub fn karel_task(rng: &mut SeededRng, gen: &KarelGen) -> Result<SynthesisTask, GenError> {
    let config = TaskConfig {
        retry_limit: gen.retry_limit,
        ..TaskConfig::default()
    };
    let mut last = None;
    for _ in 0..gen.program_retries {
        let program = loop {
            let p = match gen.programs {
                ProgramKind::Cfg => sample_program(rng, &gen.table)?,
                ProgramKind::Actions => random_action_program(rng, gen.length.unwrap_or(1)),
            };
            if !gen.prune || passes_action_pruning(&p) {
                break p;
            }
        };
        match make_task(&program, &gen.sampler, gen.pairs, &config, rng) {
            Ok(task) => return Ok(task),
            Err(e @ GenError::Uncoverable { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("program_retries is positive"))
}

pub fn stall(e: GenError) -> Failure {
    match e {
        GenError::InvalidParameter(m) => Failure::usage(m),
        e @ GenError::Uncoverable { .. } => Failure::stall(e.to_string()),
    }
}
