use std::fs;

use anyhow::{anyhow, Context};
use homogen::karel::{execute, parse_program, KarelGrid, Outcome};
use serde::Serialize;
use serde_json::json;

use crate::failure::{CmdResult, Failure};
use crate::KarelRunArgs;

#[derive(Serialize)]
struct ArmCoverage {
    branch: String,
    arm: String,
    taken: bool,
}

pub fn run(args: &KarelRunArgs) -> CmdResult {
    let text = fs::read_to_string(&args.program)
        .with_context(|| format!("cannot read {}", args.program.display()))?;
    let program = parse_program(text.trim()).map_err(|e| anyhow!("{}: {e}", args.program.display()))?;
    let grid_text =
        fs::read_to_string(&args.grid).with_context(|| format!("cannot read {}", args.grid.display()))?;
    let grid: KarelGrid =
        serde_json::from_str(&grid_text).map_err(|e| anyhow!("{}: {e}", args.grid.display()))?;

    let result = execute(&program, &grid, args.step_limit);
    let coverage: Vec<ArmCoverage> = program
        .required_branches()
        .into_iter()
        .map(|(branch, arm)| ArmCoverage {
            branch: branch.to_string(),
            arm: arm.to_string(),
            taken: result.branches_taken.contains(&(branch, arm)),
        })
        .collect();
    let taken = coverage.iter().filter(|c| c.taken).count();

    if args.json {
        let (outcome, crash, output) = match &result.outcome {
            Outcome::Success(g) => ("success", None, Some(g)),
            Outcome::Crash(c) => ("crash", Some(c.to_string()), None),
        };
        let report = json!({
            "outcome": outcome,
            "crash": crash,
            "steps": result.steps,
            "output": output,
            "coverage": coverage,
        });
        println!("{report}");
    } else {
        match &result.outcome {
            Outcome::Success(g) => {
                println!("outcome: success");
                println!("steps: {}", result.steps);
                print!("{g}");
                println!("grid: {}", serde_json::to_string(g).map_err(anyhow::Error::from)?);
            }
            Outcome::Crash(c) => {
                println!("outcome: crash {c}");
                println!("steps: {}", result.steps);
            }
        }
        println!("coverage: {taken}/{} arms", coverage.len());
        for c in &coverage {
            println!(
                "  {} {}: {}",
                c.branch,
                c.arm,
                if c.taken { "taken" } else { "not taken" }
            );
        }
    }

    match result.crash() {
        Some(c) => Err(Failure::Domain(anyhow!("program crashed: {c}"))),
        None => Ok(()),
    }
}
