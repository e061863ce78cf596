//! Salient-variable homogenization.
//!
//! A *salient variable* is a feature `ν(s)` of a sample with a finite domain.
//! Homogenization draws samples from an arbitrary source and keeps each one
//! with probability
//!
//! ```text
//! g = (p_min + ε) / (p_curr + ε)
//! ```
//!
//! where `p_curr` is the empirical frequency (over every draw so far,
//! including rejected ones) of the value the current sample maps to, and
//! `p_min` is the smallest empirical frequency over the whole declared
//! domain. Values that are over-represented in the source are thinned out, so
//! the accepted multiset drifts toward a uniform distribution over the
//! domain. `ε` trades uniformity for throughput: each accepted sample costs at
//! most `1 + 1/ε` draws in expectation.

use std::collections::HashMap;
use std::error::Error as StdError;
use std::fmt::{self, Debug};
use std::hash::Hash;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{seeded_rng, SeededRng};

/// Boxed error coming out of a fallible source or sink.
pub type BoxError = Box<dyn StdError + Send + Sync>;

#[derive(Debug, Error)]
pub enum HomogenizeError {
    #[error("count table is empty")]
    EmptyTable,
    #[error("value index {index} has not been counted")]
    NotCounted { index: usize },
    #[error("salient variable `{name}` has an empty domain")]
    EmptyDomain { name: String },
    #[error("salient variable `{name}` lists value {value} twice")]
    DuplicateValue { name: String, value: String },
    #[error("salient variable `{name}` produced {value}, which is outside its domain")]
    OutOfDomain { name: String, value: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("draw budget exhausted after {draws} draws with {accepted} of {target} samples accepted")]
    BudgetExhausted {
        draws: u64,
        accepted: u64,
        target: u64,
        counts: CountTable,
    },
    #[error("source failed: {0}")]
    Source(#[source] BoxError),
    #[error("sink failed: {0}")]
    Sink(#[source] BoxError),
}

/// A named feature function with a finite, ordered domain.
pub struct SalientSpec<S: ?Sized, X> {
    name: String,
    domain: Vec<X>,
    index: HashMap<X, usize>,
    extract: Box<dyn Fn(&S) -> X + Send + Sync>,
}

impl<S: ?Sized, X> SalientSpec<S, X>
where
    X: Clone + Eq + Hash + Debug,
{
    pub fn new<D, F>(name: impl Into<String>, domain: D, extract: F) -> Result<Self, HomogenizeError>
    where
        D: IntoIterator<Item = X>,
        F: Fn(&S) -> X + Send + Sync + 'static,
    {
        let name = name.into();
        let domain: Vec<X> = domain.into_iter().collect();
        if domain.is_empty() {
            return Err(HomogenizeError::EmptyDomain { name });
        }
        let mut index = HashMap::with_capacity(domain.len());
        for (i, value) in domain.iter().enumerate() {
            if index.insert(value.clone(), i).is_some() {
                return Err(HomogenizeError::DuplicateValue {
                    name,
                    value: format!("{value:?}"),
                });
            }
        }
        Ok(Self {
            name,
            domain,
            index,
            extract: Box::new(extract),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> &[X] {
        &self.domain
    }

    pub fn domain_size(&self) -> usize {
        self.domain.len()
    }

    pub fn index_of(&self, value: &X) -> Option<usize> {
        self.index.get(value).copied()
    }

    pub fn extract(&self, sample: &S) -> X {
        (self.extract)(sample)
    }

    /// Maps a sample to the position of its value in the domain.
    pub fn classify(&self, sample: &S) -> Result<usize, HomogenizeError> {
        let value = self.extract(sample);
        self.index_of(&value).ok_or_else(|| HomogenizeError::OutOfDomain {
            name: self.name.clone(),
            value: format!("{value:?}"),
        })
    }
}

impl<S: ?Sized, X: Debug> fmt::Debug for SalientSpec<S, X> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SalientSpec")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .finish_non_exhaustive()
    }
}

/// Per-value draw counts, indexed by domain position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountTable {
    counts: Vec<u64>,
    total: u64,
}

impl CountTable {
    pub fn new(domain_size: usize) -> Self {
        Self {
            counts: vec![0; domain_size],
            total: 0,
        }
    }

    pub fn from_counts(counts: Vec<u64>) -> Self {
        let total = counts.iter().sum();
        Self { counts, total }
    }

    pub fn record(&mut self, index: usize) {
        self.counts[index] += 1;
        self.total += 1;
    }

    pub fn count(&self, index: usize) -> u64 {
        self.counts[index]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Smallest count over the whole domain, including values never seen.
    pub fn min_count(&self) -> u64 {
        self.counts.iter().copied().min().unwrap_or(0)
    }
}

/// Probability of keeping a sample whose value sits at `index`, given the
/// counts observed so far (which must already include that sample).
pub fn acceptance_probability(
    counts: &CountTable,
    index: usize,
    epsilon: f64,
) -> Result<f64, HomogenizeError> {
    if counts.total == 0 {
        return Err(HomogenizeError::EmptyTable);
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(HomogenizeError::InvalidParameter(format!(
            "epsilon must be finite and non-negative, got {epsilon}"
        )));
    }
    let current = match counts.counts.get(index) {
        Some(&c) if c > 0 => c,
        _ => return Err(HomogenizeError::NotCounted { index }),
    };
    let t = counts.total as f64;
    let p_min = counts.min_count() as f64 / t;
    let p_curr = current as f64 / t;
    Ok((p_min + epsilon) / (p_curr + epsilon))
}

/// Online form of the algorithm: feed it salient-value indices, one per
/// source draw, and it hands back the acceptance probability for each.
#[derive(Debug, Clone)]
pub struct Homogenizer {
    counts: CountTable,
    epsilon: f64,
}

impl Homogenizer {
    pub fn new(domain_size: usize, epsilon: f64) -> Self {
        Self {
            counts: CountTable::new(domain_size),
            epsilon,
        }
    }

    /// Counts one draw and returns its acceptance probability.
    pub fn observe(&mut self, index: usize) -> f64 {
        self.counts.record(index);
        acceptance_probability(&self.counts, index, self.epsilon).expect("the value was just recorded")
    }

    /// Counts a draw without computing an acceptance probability (warm-up).
    pub fn observe_only(&mut self, index: usize) {
        self.counts.record(index);
    }

    pub fn counts(&self) -> &CountTable {
        &self.counts
    }

    pub fn into_counts(self) -> CountTable {
        self.counts
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogenizerConfig {
    pub epsilon: f64,
    pub target_size: u64,
    pub seed: u64,
    /// Cap on source draws; `None` means [`HomogenizerConfig::default_max_draws`].
    pub max_draws: Option<u64>,
    /// Draws used only to seed the count table before any sample can be
    /// accepted.
    pub warmup_draws: u64,
    /// With `ε = 0` and no warm-up nothing is accepted until every domain
    /// value has been seen at least once; this flag acknowledges that.
    pub allow_zero_epsilon: bool,
}

impl HomogenizerConfig {
    pub fn new(epsilon: f64, target_size: u64, seed: u64) -> Self {
        Self {
            epsilon,
            target_size,
            seed,
            max_draws: None,
            warmup_draws: 0,
            allow_zero_epsilon: false,
        }
    }

    pub fn with_max_draws(mut self, max_draws: u64) -> Self {
        self.max_draws = Some(max_draws);
        self
    }

    pub fn with_warmup(mut self, draws: u64) -> Self {
        self.warmup_draws = draws;
        self
    }

    pub fn allowing_zero_epsilon(mut self) -> Self {
        self.allow_zero_epsilon = true;
        self
    }

    /// `warmup + n · ceil(1 + 1/ε) · 20`, saturating (so unbounded at `ε = 0`).
    pub fn default_max_draws(&self) -> u64 {
        let per_accept = (1.0 + 1.0 / self.epsilon).ceil();
        let budget = self.target_size as f64 * per_accept * 20.0;
        let budget = if budget >= u64::MAX as f64 {
            u64::MAX
        } else {
            budget as u64
        };
        budget.saturating_add(self.warmup_draws)
    }

    pub fn effective_max_draws(&self) -> u64 {
        self.max_draws.unwrap_or_else(|| self.default_max_draws())
    }

    pub fn validate(&self) -> Result<(), HomogenizeError> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(HomogenizeError::InvalidParameter(format!(
                "epsilon must be finite and non-negative, got {}",
                self.epsilon
            )));
        }
        if self.target_size == 0 {
            return Err(HomogenizeError::InvalidParameter(
                "target size must be positive".into(),
            ));
        }
        if self.max_draws == Some(0) {
            return Err(HomogenizeError::InvalidParameter(
                "max_draws must be positive".into(),
            ));
        }
        if self.epsilon == 0.0 && self.warmup_draws == 0 && !self.allow_zero_epsilon {
            return Err(HomogenizeError::InvalidParameter(
                "epsilon = 0 stalls until every domain value is seen; use a warm-up or opt in".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogenizedDataset<S> {
    pub items: Vec<S>,
    pub draws_used: u64,
    pub final_counts: CountTable,
}

/// Statistics of a streamed run (the accepted samples went to a sink).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub accepted: u64,
    pub draws_used: u64,
    pub warmup_draws: u64,
    pub final_counts: CountTable,
    /// Mean number of post-warm-up draws per accepted sample.
    pub draws_per_accept: f64,
    /// Standard error of `draws_per_accept`, from the spread of the gaps
    /// between consecutive acceptances.
    pub draws_per_accept_se: f64,
}

/// Runs homogenization over an infallible source and collects the result.
///
/// The source and the accept coin share one generator seeded from
/// `config.seed`; each iteration draws a sample first and then the coin.
pub fn homogenize<S, X, F>(
    mut source: F,
    spec: &SalientSpec<S, X>,
    config: &HomogenizerConfig,
) -> Result<HomogenizedDataset<S>, HomogenizeError>
where
    X: Clone + Eq + Hash + Debug,
    F: FnMut(&mut SeededRng) -> S,
{
    let mut items = Vec::with_capacity(config.target_size.min(1 << 20) as usize);
    let summary = homogenize_stream(
        |rng| Ok::<_, BoxError>(source(rng)),
        spec,
        config,
        |s| {
            items.push(s);
            Ok::<_, BoxError>(())
        },
    )?;
    Ok(HomogenizedDataset {
        items,
        draws_used: summary.draws_used,
        final_counts: summary.final_counts,
    })
}

/// Streaming homogenization: accepted samples are handed to `sink` as they
/// are produced, so memory stays proportional to the domain size.
pub fn homogenize_stream<S, X, F, K, E1, E2>(
    mut source: F,
    spec: &SalientSpec<S, X>,
    config: &HomogenizerConfig,
    mut sink: K,
) -> Result<RunSummary, HomogenizeError>
where
    X: Clone + Eq + Hash + Debug,
    F: FnMut(&mut SeededRng) -> Result<S, E1>,
    K: FnMut(S) -> Result<(), E2>,
    E1: Into<BoxError>,
    E2: Into<BoxError>,
{
    config.validate()?;
    let mut rng = seeded_rng(config.seed);
    let mut state = Homogenizer::new(spec.domain_size(), config.epsilon);
    let max_draws = config.effective_max_draws();
    let mut draws = 0u64;
    let mut accepted = 0u64;

    let mut gap = 0u64;
    let mut gap_sum = 0f64;
    let mut gap_sum_sq = 0f64;

    while accepted < config.target_size {
        if draws >= max_draws {
            return Err(HomogenizeError::BudgetExhausted {
                draws,
                accepted,
                target: config.target_size,
                counts: state.into_counts(),
            });
        }
        let sample = source(&mut rng).map_err(|e| HomogenizeError::Source(e.into()))?;
        let index = spec.classify(&sample)?;
        draws += 1;
        if draws <= config.warmup_draws {
            state.observe_only(index);
            continue;
        }
        let g = state.observe(index);
        let coin: f64 = rng.random();
        gap += 1;
        if coin < g {
            sink(sample).map_err(|e| HomogenizeError::Sink(e.into()))?;
            accepted += 1;
            let gap_f = gap as f64;
            gap_sum += gap_f;
            gap_sum_sq += gap_f * gap_f;
            gap = 0;
        }
    }

    let n = accepted as f64;
    let mean = gap_sum / n;
    let se = if accepted > 1 {
        let var = ((gap_sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok(RunSummary {
        accepted,
        draws_used: draws,
        warmup_draws: config.warmup_draws.min(draws),
        final_counts: state.into_counts(),
        draws_per_accept: mean,
        draws_per_accept_se: se,
    })
}

/// Upper bound `1 + 1/ε` on the expected number of source draws per
/// accepted sample.
pub fn expected_tries_bound(epsilon: f64) -> Result<f64, HomogenizeError> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(HomogenizeError::InvalidParameter(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    Ok(1.0 + 1.0 / epsilon)
}

/// Number of source draws after which, at `ε = 0`, every value's
/// homogenized probability is within `xi` of `1/|X|` with probability at
/// least `1 - delta`:
///
/// ```text
/// 48 ln(2|X|/δ) / (p_m |X|² ξ²)
/// ```
///
/// `p_m` is the smallest source probability of any domain value.
pub fn required_presamples(
    domain_size: usize,
    delta: f64,
    xi: f64,
    p_m: f64,
) -> Result<f64, HomogenizeError> {
    if domain_size == 0 {
        return Err(HomogenizeError::InvalidParameter(
            "domain size must be positive".into(),
        ));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(HomogenizeError::InvalidParameter(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    if !(xi > 0.0 && xi.is_finite()) {
        return Err(HomogenizeError::InvalidParameter(format!(
            "xi must be positive, got {xi}"
        )));
    }
    if !(p_m > 0.0 && p_m <= 1.0) {
        return Err(HomogenizeError::InvalidParameter(format!(
            "p_m must lie in (0, 1], got {p_m}"
        )));
    }
    let k = domain_size as f64;
    Ok(48.0 * (2.0 * k / delta).ln() / (p_m * k * k * xi * xi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(counts: &[u64]) -> CountTable {
        CountTable::from_counts(counts.to_vec())
    }

    #[test]
    fn acceptance_probability_examples() {
        assert_eq!(acceptance_probability(&table(&[1, 1]), 0, 0.0).unwrap(), 1.0);
        let g = acceptance_probability(&table(&[3, 1]), 0, 0.0).unwrap();
        assert!((g - 1.0 / 3.0).abs() < 1e-12);
        let g = acceptance_probability(&table(&[3, 1]), 0, 0.25).unwrap();
        assert!((g - 0.5).abs() < 1e-12);
    }

    #[test]
    fn acceptance_probability_errors() {
        assert!(matches!(
            acceptance_probability(&table(&[0, 0]), 0, 0.1),
            Err(HomogenizeError::EmptyTable)
        ));
        assert!(matches!(
            acceptance_probability(&table(&[2, 0]), 1, 0.1),
            Err(HomogenizeError::NotCounted { index: 1 })
        ));
        assert!(acceptance_probability(&table(&[2, 1]), 0, -1.0).is_err());
    }

    #[test]
    fn never_seen_values_pin_p_min_to_zero() {
        // Third domain value never drawn: g = ε / (p_curr + ε).
        let g = acceptance_probability(&table(&[1, 1, 0]), 0, 0.5).unwrap();
        assert!((g - 0.5 / (0.5 + 0.5)).abs() < 1e-12);
        let g = acceptance_probability(&table(&[1, 1, 0]), 0, 0.0).unwrap();
        assert_eq!(g, 0.0);
    }

    #[test]
    fn tries_bound_examples() {
        assert!((expected_tries_bound(0.1).unwrap() - 11.0).abs() < 1e-12);
        assert!((expected_tries_bound(1.0).unwrap() - 2.0).abs() < 1e-12);
        assert!((expected_tries_bound(0.025).unwrap() - 41.0).abs() < 1e-12);
        assert!(expected_tries_bound(0.0).is_err());
        assert!(expected_tries_bound(-2.0).is_err());
    }

    #[test]
    fn presample_examples() {
        let base = required_presamples(2, 0.1, 0.1, 0.5).unwrap();
        // 48 · ln 40 / (0.5 · 4 · 0.01)
        assert!((base - 8853.31).abs() < 0.01, "{base}");
        let double_xi = required_presamples(2, 0.1, 0.2, 0.5).unwrap();
        assert!((base / double_xi - 4.0).abs() < 1e-9);
        let half_pm = required_presamples(2, 0.1, 0.1, 0.25).unwrap();
        assert!((half_pm / base - 2.0).abs() < 1e-9);
    }

    #[test]
    fn presample_domain_errors() {
        assert!(required_presamples(0, 0.1, 0.1, 0.5).is_err());
        assert!(required_presamples(2, 0.0, 0.1, 0.5).is_err());
        assert!(required_presamples(2, 1.0, 0.1, 0.5).is_err());
        assert!(required_presamples(2, 0.1, 0.0, 0.5).is_err());
        assert!(required_presamples(2, 0.1, 0.1, 0.0).is_err());
        assert!(required_presamples(2, 0.1, 0.1, 1.5).is_err());
    }

    #[test]
    fn spec_rejects_bad_domains() {
        assert!(SalientSpec::<u8, u8>::new("x", Vec::new(), |s| *s).is_err());
        assert!(SalientSpec::<u8, u8>::new("x", [1, 2, 1], |s| *s).is_err());
    }

    #[test]
    fn out_of_domain_is_a_contract_violation() {
        let spec = SalientSpec::new("v", [0u8, 1], |s: &u8| *s).unwrap();
        let config = HomogenizerConfig::new(0.1, 10, 1);
        let err = homogenize(|_| 7u8, &spec, &config).unwrap_err();
        assert!(matches!(err, HomogenizeError::OutOfDomain { .. }));
    }

    #[test]
    fn zero_epsilon_needs_opt_in() {
        let spec = SalientSpec::new("v", [0u8, 1], |s: &u8| *s).unwrap();
        let config = HomogenizerConfig::new(0.0, 10, 1);
        assert!(matches!(
            homogenize(|_| 0u8, &spec, &config),
            Err(HomogenizeError::InvalidParameter(_))
        ));
    }

    #[test]
    fn unreachable_value_exhausts_budget() {
        // Value 1 never occurs, so at ε = 0 nothing is ever accepted.
        let spec = SalientSpec::new("v", [0u8, 1], |s: &u8| *s).unwrap();
        let config = HomogenizerConfig::new(0.0, 10, 1)
            .allowing_zero_epsilon()
            .with_max_draws(500);
        match homogenize(|_| 0u8, &spec, &config) {
            Err(HomogenizeError::BudgetExhausted {
                draws,
                accepted,
                counts,
                ..
            }) => {
                assert_eq!(draws, 500);
                assert_eq!(accepted, 0);
                assert_eq!(counts.counts(), &[500, 0]);
            }
            other => panic!("expected budget exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn counts_include_rejected_draws() {
        let spec = SalientSpec::new("v", [0u8, 1], |s: &u8| *s).unwrap();
        let config = HomogenizerConfig::new(0.05, 200, 3);
        let data = homogenize(
            |rng| if rng.random::<f64>() < 0.8 { 0u8 } else { 1 },
            &spec,
            &config,
        )
        .unwrap();
        assert_eq!(data.items.len(), 200);
        assert_eq!(data.final_counts.total(), data.draws_used);
        assert!(data.draws_used > 200);
    }

    #[test]
    fn default_budget_formula() {
        let config = HomogenizerConfig::new(0.1, 100, 0);
        assert_eq!(config.default_max_draws(), 100 * 11 * 20);
        let config = HomogenizerConfig::new(0.0, 100, 0).allowing_zero_epsilon();
        assert_eq!(config.default_max_draws(), u64::MAX);
    }

    #[test]
    fn warmup_draws_are_never_accepted() {
        let config = HomogenizerConfig::new(0.0, 50, 9).with_warmup(100);
        let mut seen = 0u64;
        let summary = homogenize_stream(
            |rng| {
                seen += 1;
                Ok::<_, BoxError>((seen, rng.random_range(0..2u8)))
            },
            &SalientSpec::new("v", [0u8, 1], |s: &(u64, u8)| s.1).unwrap(),
            &config,
            |(draw, _)| {
                assert!(draw > 100);
                Ok::<_, BoxError>(())
            },
        )
        .unwrap();
        assert_eq!(summary.accepted, 50);
        assert_eq!(summary.warmup_draws, 100);
    }
}
