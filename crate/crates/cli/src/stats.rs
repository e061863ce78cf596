use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use anyhow::{anyhow, Context};
use clap::ValueEnum;
use homogen::diagnostics::{kl_to_uniform, Histogram};
use serde::Serialize;

use crate::domain::{Calc, Domain, Karel};
use crate::failure::CmdResult;
use crate::io::Records;
use crate::StatsArgs;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Serialize)]
struct VariableStats {
    variable: String,
    records: u64,
    kl_to_uniform: f64,
    histogram: Vec<Bin>,
}

#[derive(Debug, Serialize)]
struct Bin {
    value: usize,
    count: u64,
    frequency: f64,
}

pub fn run(args: &StatsArgs) -> CmdResult {
    match detect_domain(&args.file)? {
        Calc::NAME => measure::<Calc>(args),
        _ => measure::<Karel>(args),
    }
}

/// Tells calc records (`expr`) from Karel tasks (`program`) by the first line.
fn detect_domain(path: &Path) -> anyhow::Result<&'static str> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let first = BufReader::new(file)
        .lines()
        .next()
        .transpose()
        .with_context(|| format!("cannot read {}", path.display()))?
        .ok_or_else(|| anyhow!("{} is empty", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&first).map_err(|e| anyhow!("{}:1: corrupt record: {e}", path.display()))?;
    if value.get("expr").is_some() {
        Ok(Calc::NAME)
    } else if value.get("program").is_some() {
        Ok(Karel::NAME)
    } else {
        Err(anyhow!(
            "{}:1: corrupt record: neither a calc record nor a karel task",
            path.display()
        ))
    }
}

fn measure<D: Domain>(args: &StatsArgs) -> CmdResult {
    let names: Vec<String> = if args.vars.is_empty() {
        D::variables().into_iter().map(str::to_owned).collect()
    } else {
        args.vars.clone()
    };
    let specs = names
        .iter()
        .map(|n| D::spec_or_usage(n))
        .collect::<CmdResult<Vec<_>>>()?;
    let mut hists: Vec<Histogram<usize>> = specs
        .iter()
        .map(|s| Histogram::empty(s.domain().to_vec()))
        .collect();

    for record in Records::<D>::open(&args.file)? {
        let sample = record.map_err(anyhow::Error::from)?;
        for (spec, hist) in specs.iter().zip(&mut hists) {
            hist.add_index(spec.classify(&sample).map_err(anyhow::Error::from)?);
        }
    }

    let report = names
        .iter()
        .zip(&hists)
        .map(|(name, h)| {
            Ok(VariableStats {
                variable: name.clone(),
                records: h.total(),
                kl_to_uniform: kl_to_uniform(h)?,
                histogram: h
                    .iter()
                    .zip(h.frequencies())
                    .map(|((&value, count), frequency)| Bin {
                        value,
                        count,
                        frequency,
                    })
                    .collect(),
            })
        })
        .collect::<anyhow::Result<Vec<_>>>()?;

    match &args.out {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
            write_report(&report, args.format, io::BufWriter::new(file))?;
        }
        None => write_report(&report, args.format, io::stdout().lock())?,
    }
    Ok(())
}

fn write_report<W: Write>(report: &[VariableStats], format: Format, mut out: W) -> anyhow::Result<()> {
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, report)?;
            writeln!(out)?;
        }
        Format::Csv => {
            writeln!(out, "variable,value,count,frequency,kl_to_uniform")?;
            for v in report {
                for b in &v.histogram {
                    writeln!(
                        out,
                        "{},{},{},{},{}",
                        v.variable, b.value, b.count, b.frequency, v.kl_to_uniform
                    )?;
                }
            }
        }
    }
    out.flush()?;
    Ok(())
}
