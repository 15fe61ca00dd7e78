//! Numerical laboratory for logarithmically averaged correlations of the
//! Liouville function and related bounded sequences.
//!
//! The crate computes, at desk scale, the quantities tied together by the
//! conjectural equivalences around the Chowla and Sarnak programs:
//!
//! * [`sieve`]: segmented computation and caching of the arithmetic
//!   functions λ, μ, Λ, φ, prime tables, and the W-tricked von Mangoldt
//!   weight.
//! * [`logavg`]: the log-weighted window law on `[X/ω, X]`, exact and
//!   sampled Chowla and Sarnak correlation sums, the affine-invariance
//!   residual, and the prime-dilated correlation.
//! * [`gowers`]: Gowers uniformity norms over ℤ (counting normalization,
//!   global and interval-local) and over cyclic groups (averaged
//!   normalization), with direct, recursive, and autocorrelation evaluators.
//! * [`nilseq`]: deterministic test sequences, the exponential-sum maximal
//!   operator, Heisenberg nilsequence evaluation, and the adversarial
//!   block-sequence construction.
//! * [`entropy`]: sign-pattern / residue-vector mutual information,
//!   the scale scan with its decoupling threshold, and block-complexity
//!   estimates.
//!
//! # Determinism
//!
//! Every operation is a pure function of its inputs plus, for sampled
//! estimators, a `u64` seed. All floating-point reductions use compensated
//! summation over fixed chunks merged in chunk order ([`numeric`]), and all
//! sampling uses per-chunk ChaCha streams ([`rng`]), so results are
//! bit-identical across runs and thread counts.

pub mod entropy;
pub mod error;
pub(crate) mod fftplan;
pub mod gowers;
pub mod logavg;
pub mod nilseq;
pub mod numeric;
pub mod rng;
pub mod sieve;
pub mod source;

pub use error::{Error, Result};

/// Evaluation mode shared by the correlation, Gowers, and entropy
/// estimators: a full pass over the window, or a seeded Monte-Carlo run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Exact,
    Sampled { count: u64, seed: u64 },
}

/// A sampled or exact scalar estimate with its uncertainty.
#[derive(Clone, Copy, Debug)]
pub struct Estimate {
    pub value: f64,
    /// Standard error of the mean; 0 for exact evaluation.
    pub stderr: f64,
    /// Number of draws; 0 for exact evaluation.
    pub samples: u64,
    /// Seed of the sampled run, if any.
    pub seed: Option<u64>,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate {
            value,
            stderr: 0.0,
            samples: 0,
            seed: None,
        }
    }

    pub fn sampled(value: f64, stderr: f64, samples: u64, seed: u64) -> Self {
        Estimate {
            value,
            stderr,
            samples,
            seed: Some(seed),
        }
    }
}
