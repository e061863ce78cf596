//! Uniformity and cost measurements for salient variables.

use std::fmt::Debug;
use std::hash::Hash;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::homogenizer::{
    expected_tries_bound, homogenize_stream, BoxError, CountTable, HomogenizeError, HomogenizerConfig,
    SalientSpec,
};
use crate::SeededRng;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("histogram is empty")]
    EmptyHistogram,
    #[error("histograms are over different domains")]
    DomainMismatch,
    #[error("value {0} is outside the histogram domain")]
    OutOfDomain(String),
    #[error("KL reduction is undefined when the baseline is already uniform")]
    UndefinedReduction,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Homogenize(#[from] HomogenizeError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Counts over an ordered finite domain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram<X> {
    domain: Vec<X>,
    counts: Vec<u64>,
    total: u64,
}

impl<X: Clone + PartialEq + Debug> Histogram<X> {
    pub fn empty(domain: Vec<X>) -> Self {
        let counts = vec![0; domain.len()];
        Self {
            domain,
            counts,
            total: 0,
        }
    }

    /// Pairs a domain with counts given in domain order.
    pub fn from_counts(domain: Vec<X>, counts: Vec<u64>) -> Result<Self, DiagnosticsError> {
        if domain.len() != counts.len() {
            return Err(DiagnosticsError::DomainMismatch);
        }
        let total = counts.iter().sum();
        Ok(Self {
            domain,
            counts,
            total,
        })
    }

    pub fn from_count_table(domain: Vec<X>, table: &CountTable) -> Result<Self, DiagnosticsError> {
        Self::from_counts(domain, table.counts().to_vec())
    }

    pub fn from_values<I>(domain: Vec<X>, values: I) -> Result<Self, DiagnosticsError>
    where
        I: IntoIterator<Item = X>,
    {
        let mut h = Self::empty(domain);
        for v in values {
            h.add(&v)?;
        }
        Ok(h)
    }

    pub fn add(&mut self, value: &X) -> Result<(), DiagnosticsError> {
        let i = self
            .domain
            .iter()
            .position(|d| d == value)
            .ok_or_else(|| DiagnosticsError::OutOfDomain(format!("{value:?}")))?;
        self.add_index(i);
        Ok(())
    }

    pub fn add_index(&mut self, index: usize) {
        self.counts[index] += 1;
        self.total += 1;
    }

    pub fn domain(&self) -> &[X] {
        &self.domain
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let t = self.total as f64;
        self.counts.iter().map(|&c| c as f64 / t).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&X, u64)> {
        self.domain.iter().zip(self.counts.iter().copied())
    }
}

impl<X: Clone + Eq + Hash + Debug> Histogram<X> {
    /// Histogram of `samples` over the domain of `spec`.
    pub fn of_samples<'a, S: 'a, I>(spec: &SalientSpec<S, X>, samples: I) -> Result<Self, DiagnosticsError>
    where
        I: IntoIterator<Item = &'a S>,
    {
        let mut h = Self::empty(spec.domain().to_vec());
        for s in samples {
            h.add_index(spec.classify(s)?);
        }
        Ok(h)
    }
}

/// `D(P ‖ U) = Σ p ln(p |X|)`, with empty bins contributing nothing.
pub fn kl_to_uniform<X>(h: &Histogram<X>) -> Result<f64, DiagnosticsError> {
    if h.total == 0 {
        return Err(DiagnosticsError::EmptyHistogram);
    }
    let k = h.counts.len() as f64;
    let t = h.total as f64;
    let kl: f64 = h
        .counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let c = c as f64;
            // c·k/t is exactly 1 for a uniform histogram.
            (c / t) * (c * k / t).ln()
        })
        .sum();
    Ok(kl.max(0.0))
}

/// Percentage reduction `100 · (1 − D_after / D_before)`.
pub fn kl_reduction<X: PartialEq>(
    before: &Histogram<X>,
    after: &Histogram<X>,
) -> Result<f64, DiagnosticsError> {
    if before.domain != after.domain {
        return Err(DiagnosticsError::DomainMismatch);
    }
    let d_before = kl_to_uniform(before)?;
    let d_after = kl_to_uniform(after)?;
    if d_before == 0.0 {
        return Err(DiagnosticsError::UndefinedReduction);
    }
    Ok(100.0 * (1.0 - d_after / d_before))
}

/// One ε setting of an acceptance-cost sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub epsilon: f64,
    pub draws_per_accept: f64,
    pub std_error: f64,
    pub bound: f64,
}

impl CurvePoint {
    /// Whether the measurement is below the bound within `sigmas` standard
    /// errors.
    pub fn within_bound(&self, sigmas: f64) -> bool {
        self.draws_per_accept <= self.bound + sigmas * self.std_error
    }
}

/// Runs one homogenization per ε and reports the measured draws per accepted
/// sample next to the `1 + 1/ε` bound. Each point uses its own generator,
/// seeded `seed + i` for the i-th ε.
pub fn acceptance_curve<S, X, F>(
    mut source: F,
    spec: &SalientSpec<S, X>,
    epsilons: &[f64],
    accepts_per_point: u64,
    seed: u64,
) -> Result<Vec<CurvePoint>, DiagnosticsError>
where
    X: Clone + Eq + Hash + Debug,
    F: FnMut(&mut SeededRng) -> S,
{
    let mut points = Vec::with_capacity(epsilons.len());
    for (i, &epsilon) in epsilons.iter().enumerate() {
        let bound = expected_tries_bound(epsilon)?;
        let config = HomogenizerConfig::new(epsilon, accepts_per_point, seed.wrapping_add(i as u64));
        let summary = homogenize_stream(
            |rng| Ok::<_, BoxError>(source(rng)),
            spec,
            &config,
            |_| Ok::<_, BoxError>(()),
        )?;
        points.push(CurvePoint {
            epsilon,
            draws_per_accept: summary.draws_per_accept,
            std_error: summary.draws_per_accept_se,
            bound,
        });
    }
    Ok(points)
}

/// One line of a before/after homogenization report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KlReportRow {
    pub variable: String,
    pub epsilon: f64,
    pub kl_before: f64,
    pub kl_after: f64,
    /// `None` when the baseline was already exactly uniform.
    pub reduction_pct: Option<f64>,
    pub draws_per_accept: f64,
    pub bound: f64,
}

impl KlReportRow {
    pub fn new<X: PartialEq>(
        variable: impl Into<String>,
        epsilon: f64,
        before: &Histogram<X>,
        after: &Histogram<X>,
        draws_per_accept: f64,
    ) -> Result<Self, DiagnosticsError> {
        let reduction_pct = match kl_reduction(before, after) {
            Ok(r) => Some(r),
            Err(DiagnosticsError::UndefinedReduction) => None,
            Err(e) => return Err(e),
        };
        Ok(Self {
            variable: variable.into(),
            epsilon,
            kl_before: kl_to_uniform(before)?,
            kl_after: kl_to_uniform(after)?,
            reduction_pct,
            draws_per_accept,
            bound: if epsilon > 0.0 {
                expected_tries_bound(epsilon)?
            } else {
                f64::INFINITY
            },
        })
    }
}

/// Writes rows with the header
/// `variable,epsilon,kl_before,kl_after,reduction_pct,draws_per_accept,bound`.
pub fn write_report_csv<W: Write>(rows: &[KlReportRow], out: W) -> Result<(), DiagnosticsError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_report_json<W: Write>(rows: &[KlReportRow], out: W) -> Result<(), DiagnosticsError> {
    serde_json::to_writer_pretty(out, rows)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hist(counts: &[u64]) -> Histogram<usize> {
        Histogram::from_counts((0..counts.len()).collect(), counts.to_vec()).unwrap()
    }

    // Entropy computed independently of `kl_to_uniform`.
    fn entropy(p: &[f64]) -> f64 {
        -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.log2()).sum::<f64>() * std::f64::consts::LN_2
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_to_uniform(&hist(&[5, 5, 5, 5])).unwrap(), 0.0);
        let one_bin = kl_to_uniform(&hist(&[8, 0, 0, 0])).unwrap();
        assert!((one_bin - 4f64.ln()).abs() < 1e-12);
        let kl = kl_to_uniform(&hist(&[3, 1])).unwrap();
        let expected = 2f64.ln() - entropy(&[0.75, 0.25]);
        assert!((kl - expected).abs() < 1e-12);
        assert!((kl - 0.1308).abs() < 1e-4);
    }

    #[test]
    fn kl_is_zero_only_when_uniform() {
        assert!(kl_to_uniform(&hist(&[3, 3, 4])).unwrap() > 0.0);
        assert_eq!(kl_to_uniform(&hist(&[7, 7, 7])).unwrap(), 0.0);
    }

    #[test]
    fn empty_histogram_is_an_error() {
        assert!(matches!(
            kl_to_uniform(&hist(&[0, 0])),
            Err(DiagnosticsError::EmptyHistogram)
        ));
    }

    #[test]
    fn reduction_examples() {
        let before = hist(&[9, 1]);
        assert_eq!(kl_reduction(&before, &before).unwrap(), 0.0);
        assert!((kl_reduction(&before, &hist(&[4, 4])).unwrap() - 100.0).abs() < 1e-12);
        assert!(kl_reduction(&hist(&[5, 5]), &hist(&[9, 1])).is_err());
        // Worse uniformity gives a negative reduction.
        assert!(kl_reduction(&hist(&[6, 4]), &hist(&[9, 1])).unwrap() < 0.0);
        let other_domain = Histogram::from_counts(vec![1usize, 2], vec![1, 1]).unwrap();
        assert!(matches!(
            kl_reduction(&before, &other_domain),
            Err(DiagnosticsError::DomainMismatch)
        ));
    }

    #[test]
    fn values_outside_domain_are_rejected() {
        assert!(Histogram::from_values(vec!['a', 'b'], ['a', 'c']).is_err());
        let h = Histogram::from_values(vec!['a', 'b'], ['a', 'a', 'b']).unwrap();
        assert_eq!(h.counts(), &[2, 1]);
    }

    #[test]
    fn report_csv_header_and_row() {
        let row = KlReportRow::new("length", 0.025, &hist(&[9, 1]), &hist(&[6, 4]), 3.5).unwrap();
        let mut buf = Vec::new();
        write_report_csv(&[row], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "variable,epsilon,kl_before,kl_after,reduction_pct,draws_per_accept,bound"
        );
        assert!(lines.next().unwrap().starts_with("length,0.025,"));
    }

    #[test]
    fn large_epsilon_curve_is_near_one() {
        use rand::Rng;
        let spec = SalientSpec::new("v", [0u8, 1, 2], |s: &u8| *s).unwrap();
        let points = acceptance_curve(
            |rng: &mut SeededRng| {
                if rng.random::<f64>() < 0.7 {
                    0u8
                } else {
                    rng.random_range(1..3)
                }
            },
            &spec,
            &[1000.0],
            2000,
            5,
        )
        .unwrap();
        assert!((points[0].draws_per_accept - 1.0).abs() < 0.01);
        assert!(points[0].within_bound(3.0));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn permutation_invariant(counts in prop::collection::vec(0u64..50, 2..12), seed in any::<u64>()) {
                prop_assume!(counts.iter().sum::<u64>() > 0);
                let mut shuffled = counts.clone();
                use rand::seq::SliceRandom;
                shuffled.shuffle(&mut crate::seeded_rng(seed));
                let a = kl_to_uniform(&hist(&counts)).unwrap();
                let b = kl_to_uniform(&hist(&shuffled)).unwrap();
                prop_assert!((a - b).abs() < 1e-12);
            }

            #[test]
            fn nonnegative_and_bounded(counts in prop::collection::vec(0u64..50, 1..12)) {
                prop_assume!(counts.iter().sum::<u64>() > 0);
                let kl = kl_to_uniform(&hist(&counts)).unwrap();
                prop_assert!(kl >= 0.0);
                prop_assert!(kl <= (counts.len() as f64).ln() + 1e-12);
            }
        }
    }
}
