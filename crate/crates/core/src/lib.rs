//! Synthetic dataset generation for program synthesis and induction, with
//! control over the distribution of *salient variables*.
//!
//! The crate is organised around one generic algorithm and two domains:
//!
//! - [`homogenizer`] wraps any sampler and rejects draws so that a declared
//!   finite-valued feature of the samples ends up close to uniform.
//! - [`diagnostics`] measures the result (histograms, KL divergence to the
//!   uniform distribution, sampling cost against the theoretical bound).
//! - [`karel`] and [`karel_gen`] implement the Karel robot DSL and its
//!   grid/program/task samplers.
//! - [`calc`] implements the Calculator domain: arithmetic expressions over
//!   digits, evaluated modulo 10, with four expression samplers.
//!
//! Every sampler takes a [`SeededRng`], so a run is a pure function of its
//! seed.
//!
//! ```
//! use homogen::homogenizer::{homogenize, HomogenizerConfig, SalientSpec};
//! use rand::Rng;
//!
//! // A source that emits 0 nine times out of ten.
//! let source = |rng: &mut homogen::SeededRng| if rng.random::<f64>() < 0.9 { 0u8 } else { 1 };
//! let spec = SalientSpec::new("value", [0u8, 1], |s: &u8| *s).unwrap();
//! let config = HomogenizerConfig::new(0.01, 2_000, 7);
//! let data = homogenize(source, &spec, &config).unwrap();
//! let ones = data.items.iter().filter(|&&v| v == 1).count();
//! assert!((ones as f64 / 2_000.0 - 0.5).abs() < 0.1);
//! ```

pub mod calc;
pub mod diagnostics;
pub mod homogenizer;
pub mod karel;
pub mod karel_gen;

use rand::SeedableRng;

/// The generator every sampler in this crate draws from.
///
/// ChaCha8 is used rather than `StdRng` because its output stream is fixed
/// across `rand` releases, which keeps generated datasets reproducible.
pub type SeededRng = rand_chacha::ChaCha8Rng;

/// Builds a [`SeededRng`] from a 64-bit seed.
pub fn seeded_rng(seed: u64) -> SeededRng {
    SeededRng::seed_from_u64(seed)
}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/homogenization.md")]
    mod homogenization {}
    #[doc = include_str!("../../../book/src/bounds.md")]
    mod bounds {}
    #[doc = include_str!("../../../book/src/karel.md")]
    mod karel {}
    #[doc = include_str!("../../../book/src/karel_datasets.md")]
    mod karel_datasets {}
    #[doc = include_str!("../../../book/src/calculator.md")]
    mod calculator {}
    #[doc = include_str!("../../../book/src/diagnostics.md")]
    mod diagnostics {}
}
