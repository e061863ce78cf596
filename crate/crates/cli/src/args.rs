use std::path::PathBuf;

use clap::{Args, ValueEnum};
use homogen::calc::CalcSampler;
use homogen::karel_gen::{
    GridSampler, MarkerCountDist, NarrowGridParams, ProductionTable, TaskConfig, MAX_PAIRS,
};
use serde::Serialize;

use crate::failure::{CmdResult, Failure};

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Number of records to produce.
    #[arg(long, default_value_t = 1000)]
    pub count: u64,
    /// 64-bit seed; every output is a pure function of it and the flags.
    #[arg(long, env = "HOMOGEN_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Dataset path. The manifest and reports are written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl CommonArgs {
    pub fn out_path(&self, default_stem: &str) -> PathBuf {
        self.out
            .clone()
            .unwrap_or_else(|| PathBuf::from(format!("{default_stem}.jsonl")))
    }

    pub fn check_count(&self) -> CmdResult {
        if self.count == 0 {
            return Err(Failure::usage("--count must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CalcDist {
    Dcfg,
    T2t,
    Rcfg,
    Bal,
}

#[derive(Debug, Args)]
pub struct CalcGenArgs {
    /// Expression distribution [default: dcfg].
    #[arg(long, value_enum)]
    pub dist: Option<CalcDist>,
    /// Branching probability for dcfg and rcfg.
    #[arg(long)]
    pub p: Option<f64>,
    /// Smallest tree depth for t2t and bal.
    #[arg(long)]
    pub min_depth: Option<usize>,
    /// Largest tree depth for t2t and bal.
    #[arg(long)]
    pub max_depth: Option<usize>,
}

impl CalcGenArgs {
    pub fn is_empty(&self) -> bool {
        self.dist.is_none() && self.p.is_none() && self.min_depth.is_none() && self.max_depth.is_none()
    }

    pub fn sampler(&self) -> CmdResult<CalcSampler> {
        let mut sampler = match self.dist.unwrap_or(CalcDist::Dcfg) {
            CalcDist::Dcfg => CalcSampler::dcfg(),
            CalcDist::T2t => CalcSampler::t2t(),
            CalcDist::Rcfg => CalcSampler::rcfg(),
            CalcDist::Bal => CalcSampler::bal(),
        };
        match &mut sampler {
            CalcSampler::Dcfg { p } | CalcSampler::Rcfg { p } => {
                if self.min_depth.is_some() || self.max_depth.is_some() {
                    return Err(Failure::usage(
                        "--min-depth/--max-depth apply only to t2t and bal",
                    ));
                }
                *p = self.p.unwrap_or(*p);
            }
            CalcSampler::T2t { min_depth, max_depth } | CalcSampler::Bal { min_depth, max_depth } => {
                if self.p.is_some() {
                    return Err(Failure::usage("--p applies only to dcfg and rcfg"));
                }
                *min_depth = self.min_depth.unwrap_or(*min_depth);
                *max_depth = self.max_depth.unwrap_or(*max_depth);
            }
        }
        sampler.validate().map_err(|e| Failure::usage(e.to_string()))?;
        Ok(sampler)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    Uniform,
    Narrow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MarkerDistArg {
    Geom,
    Uniform,
    Antigeom,
}

impl From<MarkerDistArg> for MarkerCountDist {
    fn from(d: MarkerDistArg) -> Self {
        match d {
            MarkerDistArg::Geom => MarkerCountDist::Geom,
            MarkerDistArg::Uniform => MarkerCountDist::Uniform,
            MarkerDistArg::Antigeom => MarkerCountDist::AntiGeom,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProgramKind {
    /// Programs from the control-flow grammar.
    Cfg,
    /// Uniformly random action sequences of `--length` actions.
    Actions,
}

#[derive(Debug, Args)]
pub struct KarelGenArgs {
    /// Input grid sampler [default: uniform].
    #[arg(long, value_enum)]
    pub grids: Option<GridKind>,
    /// Wall ratio for narrow grids [default: 0.05].
    #[arg(long)]
    pub r_wall: Option<f64>,
    /// Marker ratio for narrow grids [default: 0.85].
    #[arg(long)]
    pub r_marker: Option<f64>,
    /// Marker count distribution for narrow grids [default: geom].
    #[arg(long, value_enum)]
    pub marker_dist: Option<MarkerDistArg>,
    /// Shown input/output pairs per task, 1 to 5 [default: 5].
    #[arg(long)]
    pub pairs: Option<usize>,
    /// Program source [default: cfg].
    #[arg(long, value_enum)]
    pub programs: Option<ProgramKind>,
    /// Action count for `--programs actions`.
    #[arg(long)]
    pub length: Option<usize>,
    /// Drop programs with fewer than two actions or no `move`.
    #[arg(long)]
    pub prune: bool,
    /// Grid batches tried per program before it is abandoned [default: 1000].
    #[arg(long)]
    pub retry_limit: Option<u32>,
    /// Programs tried per task before generation stalls [default: 100].
    #[arg(long)]
    pub program_retries: Option<u32>,
}

/// Resolved Karel generation parameters, as recorded in the manifest.
#[derive(Debug, Clone, Serialize)]
pub struct KarelGen {
    pub grids: GridKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_wall: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_marker: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub marker_dist: Option<&'static str>,
    pub pairs: usize,
    pub programs: ProgramKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub length: Option<usize>,
    pub prune: bool,
    pub retry_limit: u32,
    pub program_retries: u32,
    #[serde(skip)]
    pub sampler: GridSampler,
    #[serde(skip)]
    pub table: ProductionTable,
}

impl KarelGenArgs {
    pub fn is_empty(&self) -> bool {
        self.grids.is_none()
            && self.r_wall.is_none()
            && self.r_marker.is_none()
            && self.marker_dist.is_none()
            && self.pairs.is_none()
            && self.programs.is_none()
            && self.length.is_none()
            && !self.prune
            && self.retry_limit.is_none()
            && self.program_retries.is_none()
    }

    pub fn resolve(&self) -> CmdResult<KarelGen> {
        let grids = self.grids.unwrap_or(GridKind::Uniform);
        let narrow_flags = self.r_wall.is_some() || self.r_marker.is_some() || self.marker_dist.is_some();
        let (sampler, r_wall, r_marker, marker_dist) = match grids {
            GridKind::Uniform => {
                if narrow_flags {
                    return Err(Failure::usage(
                        "--r-wall, --r-marker and --marker-dist need --grids narrow",
                    ));
                }
                (GridSampler::Uniform, None, None, None)
            }
            GridKind::Narrow => {
                let dist = self.marker_dist.unwrap_or(MarkerDistArg::Geom);
                let params = NarrowGridParams::new(
                    self.r_wall.unwrap_or(0.05),
                    self.r_marker.unwrap_or(0.85),
                    dist.into(),
                )
                .map_err(|e| Failure::usage(e.to_string()))?;
                let name = match dist {
                    MarkerDistArg::Geom => "geom",
                    MarkerDistArg::Uniform => "uniform",
                    MarkerDistArg::Antigeom => "antigeom",
                };
                (
                    GridSampler::Narrow(params),
                    Some(params.r_wall()),
                    Some(params.r_marker()),
                    Some(name),
                )
            }
        };
        let pairs = self.pairs.unwrap_or(MAX_PAIRS);
        if !(1..=MAX_PAIRS).contains(&pairs) {
            return Err(Failure::usage(format!("--pairs must be in 1..={MAX_PAIRS}")));
        }
        let programs = self.programs.unwrap_or(ProgramKind::Cfg);
        let length = match (programs, self.length) {
            (ProgramKind::Actions, Some(l)) if (1..=20).contains(&l) => Some(l),
            (ProgramKind::Actions, Some(_)) => return Err(Failure::usage("--length must be in 1..=20")),
            (ProgramKind::Actions, None) => return Err(Failure::usage("--programs actions needs --length")),
            (ProgramKind::Cfg, Some(_)) => return Err(Failure::usage("--length needs --programs actions")),
            (ProgramKind::Cfg, None) => None,
        };
        if self.prune && length == Some(1) {
            return Err(Failure::usage(
                "--prune keeps only programs with at least two actions",
            ));
        }
        let defaults = TaskConfig::default();
        let retry_limit = self.retry_limit.unwrap_or(defaults.retry_limit);
        let program_retries = self.program_retries.unwrap_or(100);
        if retry_limit == 0 || program_retries == 0 {
            return Err(Failure::usage(
                "--retry-limit and --program-retries must be positive",
            ));
        }
        Ok(KarelGen {
            grids,
            r_wall,
            r_marker,
            marker_dist,
            pairs,
            programs,
            length,
            prune: self.prune,
            retry_limit,
            program_retries,
            sampler,
            table: ProductionTable::default(),
        })
    }
}

#[derive(Debug, Args)]
pub struct HomogenizeArgs {
    /// Salient variable to flatten.
    #[arg(long)]
    pub var: String,
    /// Smoothing constant; smaller values flatten more and cost more draws.
    #[arg(long, default_value_t = 0.025)]
    pub eps: f64,
    /// Read candidates from this dataset instead of a generator.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Draws used only to fill the count table before accepting.
    #[arg(long, default_value_t = 0)]
    pub warmup: u64,
    /// Cap on draws; generation stalls when it is reached.
    #[arg(long)]
    pub max_draws: Option<u64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn calc(dist: Option<CalcDist>, p: Option<f64>, max_depth: Option<usize>) -> CalcGenArgs {
        CalcGenArgs {
            dist,
            p,
            min_depth: None,
            max_depth,
        }
    }

    #[test]
    fn calc_flags_override_defaults() {
        assert_eq!(calc(None, None, None).sampler().unwrap(), CalcSampler::dcfg());
        assert_eq!(
            calc(Some(CalcDist::Rcfg), Some(0.1), None).sampler().unwrap(),
            CalcSampler::Rcfg { p: 0.1 }
        );
        assert_eq!(
            calc(Some(CalcDist::T2t), None, Some(4)).sampler().unwrap(),
            CalcSampler::T2t {
                min_depth: 1,
                max_depth: 4
            }
        );
        assert!(calc(Some(CalcDist::Dcfg), None, Some(4)).sampler().is_err());
        assert!(calc(Some(CalcDist::Dcfg), Some(0.5), None).sampler().is_err());
    }

    #[test]
    fn narrow_defaults_are_the_first_table_column() {
        let args = KarelGenArgs {
            grids: Some(GridKind::Narrow),
            r_wall: None,
            r_marker: None,
            marker_dist: None,
            pairs: None,
            programs: None,
            length: None,
            prune: false,
            retry_limit: None,
            program_retries: None,
        };
        let gen = args.resolve().unwrap();
        assert_eq!(
            (gen.r_wall, gen.r_marker, gen.marker_dist),
            (Some(0.05), Some(0.85), Some("geom"))
        );
        assert_eq!(gen.pairs, MAX_PAIRS);
    }
}
