use std::fmt;
use std::fs::File;
use std::path::Path;

use anyhow::Context;
use homogen::calc::{sample_expr, CalcSample};
use homogen::diagnostics::{write_report_csv, write_report_json, Histogram, KlReportRow};
use homogen::homogenizer::{homogenize_stream, BoxError, HomogenizeError, HomogenizerConfig, SalientSpec};
use homogen::karel_gen::GenError;
use homogen::SeededRng;
use serde_json::json;

use crate::args::{CalcGenArgs, CommonArgs, HomogenizeArgs, KarelGenArgs};
use crate::domain::{Calc, Domain, Karel};
use crate::failure::{CmdResult, Failure};
use crate::generate::{karel_task, stall};
use crate::io::{sibling, JsonlWriter, ReadError, Records};
use crate::manifest::RunManifest;

const STREAMS: &str =
    "one ChaCha8 stream seeded with `seed`; each iteration draws the candidate, then the accept coin";

#[derive(Debug)]
struct InputExhausted {
    records: usize,
}

impl fmt::Display for InputExhausted {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "input ran out after {} records", self.records)
    }
}

impl std::error::Error for InputExhausted {}

pub fn calc(argv: &[String], gen: &CalcGenArgs, hom: &HomogenizeArgs, common: &CommonArgs) -> CmdResult {
    common.check_count()?;
    let spec = Calc::spec_or_usage(&hom.var)?;
    if let Some(input) = &hom.input {
        if !gen.is_empty() {
            return Err(Failure::usage("generator flags cannot be combined with --input"));
        }
        return from_file::<Calc>(argv, hom, common, &spec, input);
    }
    let sampler = gen.sampler()?;
    let params = json!({ "generator": sampler });
    run::<Calc, _>(argv, hom, common, &spec, params, |rng: &mut SeededRng| {
        Ok(CalcSample::from_expr(&sample_expr(rng, &sampler)))
    })
}

pub fn karel(argv: &[String], args: &KarelGenArgs, hom: &HomogenizeArgs, common: &CommonArgs) -> CmdResult {
    common.check_count()?;
    let spec = Karel::spec_or_usage(&hom.var)?;
    if let Some(input) = &hom.input {
        if !args.is_empty() {
            return Err(Failure::usage("generator flags cannot be combined with --input"));
        }
        return from_file::<Karel>(argv, hom, common, &spec, input);
    }
    let gen = args.resolve()?;
    let params = json!({ "generator": gen });
    run::<Karel, _>(argv, hom, common, &spec, params, |rng: &mut SeededRng| {
        karel_task(rng, &gen).map_err(BoxError::from)
    })
}

fn from_file<D: Domain>(
    argv: &[String],
    hom: &HomogenizeArgs,
    common: &CommonArgs,
    spec: &SalientSpec<D::Sample, usize>,
    input: &Path,
) -> CmdResult {
    let mut records = Records::<D>::open(input)?;
    let params = json!({ "input": input.display().to_string() });
    run::<D, _>(
        argv,
        hom,
        common,
        spec,
        params,
        move |_: &mut SeededRng| match records.next() {
            Some(r) => r.map_err(BoxError::from),
            None => Err(InputExhausted {
                records: records.line(),
            }
            .into()),
        },
    )
}

fn run<D: Domain, F>(
    argv: &[String],
    hom: &HomogenizeArgs,
    common: &CommonArgs,
    spec: &SalientSpec<D::Sample, usize>,
    source_params: serde_json::Value,
    source: F,
) -> CmdResult
where
    F: FnMut(&mut SeededRng) -> Result<D::Sample, BoxError>,
{
    let mut config = HomogenizerConfig::new(hom.eps, common.count, common.seed).with_warmup(hom.warmup);
    if let Some(m) = hom.max_draws {
        config = config.with_max_draws(m);
    }
    config.validate().map_err(|e| Failure::usage(e.to_string()))?;

    let out = common.out_path(&format!("{}-{}", D::NAME, hom.var));
    let mut writer = JsonlWriter::create(&out)?;
    let mut after = Histogram::empty(spec.domain().to_vec());
    let result = homogenize_stream(source, spec, &config, |sample: D::Sample| -> anyhow::Result<()> {
        after.add_index(spec.classify(&sample)?);
        writer.write(&sample)
    });
    let summary = match result {
        Ok(s) => s,
        Err(e) => {
            drop(writer);
            // A partial dataset without a manifest would only mislead.
            let _ = std::fs::remove_file(&out);
            return Err(classify(e, spec));
        }
    };
    writer.finish()?;

    let before = Histogram::from_count_table(spec.domain().to_vec(), &summary.final_counts)
        .context("count table does not match the variable's domain")?;
    let row = KlReportRow::new(&hom.var, hom.eps, &before, &after, summary.draws_per_accept)
        .context("cannot compute the KL report")?;
    let csv_path = sibling(&out, "report.csv");
    let json_path = sibling(&out, "report.json");
    write_report_csv(std::slice::from_ref(&row), create(&csv_path)?).context("cannot write report")?;
    write_report_json(std::slice::from_ref(&row), create(&json_path)?).context("cannot write report")?;

    let params = json!({
        "domain": D::NAME,
        "source": source_params,
        "variable": hom.var,
        "epsilon": hom.eps,
        "count": common.count,
        "warmup_draws": hom.warmup,
        "max_draws": config.effective_max_draws(),
        "draws_used": summary.draws_used,
    });
    let mut manifest = RunManifest::new(argv, common.seed, STREAMS, params);
    for path in [&out, &csv_path, &json_path] {
        manifest.add_output(path)?;
    }
    manifest.write(&sibling(&out, "manifest.json"))?;

    let reduction = row
        .reduction_pct
        .map_or_else(|| "undefined".to_owned(), |r| format!("{r:.2}%"));
    eprintln!(
        "accepted {} of {} draws ({:.2} per accept, bound {:.1}); KL {:.4} -> {:.4}, reduction {reduction}",
        summary.accepted,
        summary.draws_used,
        summary.draws_per_accept,
        row.bound,
        row.kl_before,
        row.kl_after
    );
    Ok(())
}

fn create(path: &Path) -> anyhow::Result<File> {
    File::create(path).with_context(|| format!("cannot create {}", path.display()))
}

fn classify<S>(e: HomogenizeError, spec: &SalientSpec<S, usize>) -> Failure {
    match e {
        HomogenizeError::BudgetExhausted {
            draws,
            accepted,
            target,
            counts,
        } => {
            let seen: Vec<String> = spec
                .domain()
                .iter()
                .zip(counts.counts())
                .filter(|(_, &c)| c > 0)
                .map(|(v, c)| format!("{v}:{c}"))
                .collect();
            Failure::stall(format!(
                "draw budget exhausted after {draws} draws with {accepted} of {target} accepted; \
                 draws per value of {}: {}",
                spec.name(),
                seen.join(" ")
            ))
        }
        HomogenizeError::InvalidParameter(m) => Failure::usage(m),
        HomogenizeError::Source(e) => {
            let e = match e.downcast::<GenError>() {
                Ok(g) => return stall(*g),
                Err(e) => e,
            };
            if let Some(x) = e.downcast_ref::<InputExhausted>() {
                return Failure::stall(format!("{x}; lower --count or raise --eps"));
            }
            match e.downcast::<ReadError>() {
                Ok(r) => Failure::Domain((*r).into()),
                Err(e) => Failure::Domain(anyhow::anyhow!(e)),
            }
        }
        other => Failure::Domain(other.into()),
    }
}
