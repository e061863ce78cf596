use homogen::calc::{eval_mod10, parse_expr, CalcSample, CalcVariable};
use homogen::homogenizer::SalientSpec;
use homogen::karel::DEFAULT_STEP_LIMIT;
use homogen::karel_gen::{KarelVariable, SynthesisTask};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::failure::{CmdResult, Failure};

/// One dataset kind: its record type and its salient variables.
pub trait Domain {
    type Sample: Serialize + DeserializeOwned + Send;
    const NAME: &'static str;

    fn variables() -> Vec<&'static str>;
    fn spec(var: &str) -> Option<SalientSpec<Self::Sample, usize>>;
    /// Checks a record read from disk beyond its JSON shape.
    fn check(sample: &Self::Sample) -> Result<(), String>;

    fn spec_or_usage(var: &str) -> CmdResult<SalientSpec<Self::Sample, usize>> {
        Self::spec(var).ok_or_else(|| {
            Failure::usage(format!(
                "unknown {} variable `{var}`; expected one of: {}",
                Self::NAME,
                Self::variables().join(", ")
            ))
        })
    }
}

pub struct Calc;

impl Domain for Calc {
    type Sample = CalcSample;
    const NAME: &'static str = "calc";

    fn variables() -> Vec<&'static str> {
        CalcVariable::ALL.iter().map(|v| v.name()).collect()
    }

    fn spec(var: &str) -> Option<SalientSpec<CalcSample, usize>> {
        CalcVariable::from_name(var).map(CalcVariable::spec)
    }

    fn check(sample: &CalcSample) -> Result<(), String> {
        let expr = parse_expr(&sample.expr).map_err(|e| format!("bad expression: {e}"))?;
        let value = eval_mod10(&expr);
        if value != sample.label {
            return Err(format!(
                "label {} but the expression evaluates to {value}",
                sample.label
            ));
        }
        Ok(())
    }
}

pub struct Karel;

impl Domain for Karel {
    type Sample = SynthesisTask;
    const NAME: &'static str = "karel";

    fn variables() -> Vec<&'static str> {
        KarelVariable::ALL.iter().map(|v| v.name()).collect()
    }

    fn spec(var: &str) -> Option<SalientSpec<SynthesisTask, usize>> {
        KarelVariable::from_name(var).map(KarelVariable::spec)
    }

    fn check(task: &SynthesisTask) -> Result<(), String> {
        task.validate(DEFAULT_STEP_LIMIT).map_err(|e| e.to_string())
    }
}
