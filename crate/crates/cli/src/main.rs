//! `homogen`: generate, homogenize and inspect Karel and Calculator datasets.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod args;
mod domain;
mod failure;
mod generate;
mod homogenize;
mod io;
mod karel_run;
mod manifest;
mod stats;

use args::{CalcGenArgs, CommonArgs, HomogenizeArgs, KarelGenArgs};
use failure::Failure;

#[derive(Debug, Parser)]
#[command(
    name = "homogen",
    version,
    about = "Synthetic dataset generation with salient-variable homogenization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a dataset and write it as JSON lines plus a manifest.
    Generate {
        #[command(subcommand)]
        domain: GenerateDomain,
    },
    /// Rejection-sample a generator or an input file so one salient
    /// variable becomes close to uniform.
    Homogenize {
        #[command(subcommand)]
        domain: HomogenizeDomain,
    },
    /// Per-variable histograms and KL divergence to uniform for a dataset.
    Stats(StatsArgs),
    /// Run a Karel program on one grid.
    KarelRun(KarelRunArgs),
}

#[derive(Debug, Subcommand)]
enum GenerateDomain {
    /// Arithmetic expressions labelled with their value modulo 10.
    Calc {
        #[command(flatten)]
        gen: CalcGenArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Karel synthesis tasks: a program with input/output grid pairs.
    Karel {
        #[command(flatten)]
        gen: KarelGenArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Debug, Subcommand)]
enum HomogenizeDomain {
    Calc {
        #[command(flatten)]
        gen: CalcGenArgs,
        #[command(flatten)]
        hom: HomogenizeArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    Karel {
        #[command(flatten)]
        gen: KarelGenArgs,
        #[command(flatten)]
        hom: HomogenizeArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Dataset in JSON-lines form (calc or karel records).
    pub file: PathBuf,
    /// Variables to measure, comma-separated or repeated. Defaults to all
    /// variables of the file's domain.
    #[arg(long = "var", value_delimiter = ',')]
    pub vars: Vec<String>,
    #[arg(long, value_enum, default_value_t = stats::Format::Csv)]
    pub format: stats::Format,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct KarelRunArgs {
    /// Program text, e.g. `def main ( ) : move ( )`.
    pub program: PathBuf,
    /// Input grid as JSON.
    pub grid: PathBuf,
    #[arg(long, default_value_t = homogen::karel::DEFAULT_STEP_LIMIT)]
    pub step_limit: u32,
    /// Print one JSON object instead of text.
    #[arg(long)]
    pub json: bool,
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate { domain } => match domain {
            GenerateDomain::Calc { gen, common } => generate::calc(&argv, &gen, &common),
            GenerateDomain::Karel { gen, common } => generate::karel(&argv, &gen, &common),
        },
        Command::Homogenize { domain } => match domain {
            HomogenizeDomain::Calc { gen, hom, common } => homogenize::calc(&argv, &gen, &hom, &common),
            HomogenizeDomain::Karel { gen, hom, common } => homogenize::karel(&argv, &gen, &hom, &common),
        },
        Command::Stats(args) => stats::run(&args),
        Command::KarelRun(args) => karel_run::run(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        // A closed downstream pipe (`homogen stats ... | head`) is not a failure.
        Err(Failure::Domain(e)) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("homogen: {f}");
            f.exit_code()
        }
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain()
        .filter_map(|c| c.downcast_ref::<std::io::Error>())
        .any(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
}
