//! Sign sources: total ±1-valued functions on a covered integer range.
//!
//! Correlation and entropy operations are written against this trait so the
//! Liouville table, constant references, and synthetic null models are
//! interchangeable. Operations check coverage once up front via
//! [`SignSource::require`] and then call [`SignSource::sign`] in hot loops
//! without further bounds handling.

use crate::error::{Error, Result};

pub trait SignSource: Sync {
    /// Inclusive range `[lo, hi]` on which `sign` is defined.
    fn coverage(&self) -> (u64, u64);

    /// The sign at `n`, in {-1, +1}. May panic outside `coverage`.
    fn sign(&self, n: u64) -> i8;

    /// Verify that the inclusive range `[lo, hi]` lies inside coverage.
    fn require(&self, lo: u64, hi: u64) -> Result<()> {
        let (have_lo, have_hi) = self.coverage();
        if lo < have_lo || hi > have_hi {
            return Err(Error::Coverage {
                needed_lo: lo,
                needed_hi: hi,
                have_lo,
                have_hi,
            });
        }
        Ok(())
    }
}

/// Constant sign everywhere.
pub struct ConstSource(i8);

impl ConstSource {
    pub fn new(value: i8) -> Result<Self> {
        if value != 1 && value != -1 {
            return Err(Error::Domain(format!(
                "constant sign must be +1 or -1, got {value}"
            )));
        }
        Ok(ConstSource(value))
    }

    pub fn plus() -> Self {
        ConstSource(1)
    }
}

impl SignSource for ConstSource {
    fn coverage(&self) -> (u64, u64) {
        (1, u64::MAX)
    }

    fn sign(&self, _n: u64) -> i8 {
        self.0
    }
}

/// SplitMix64 finalizer; a stateless position hash with good avalanche.
#[inline]
pub(crate) fn splitmix64(seed: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic iid-like source: the sign at `n` is a fixed hash bit of
/// `(seed, n)`. Serves as the independence null model for estimator tests.
pub struct SyntheticIid {
    seed: u64,
}

impl SyntheticIid {
    pub fn new(seed: u64) -> Self {
        SyntheticIid { seed }
    }
}

impl SignSource for SyntheticIid {
    fn coverage(&self) -> (u64, u64) {
        (1, u64::MAX)
    }

    fn sign(&self, n: u64) -> i8 {
        if splitmix64(self.seed ^ n.wrapping_mul(0x9E37_79B9_7F4A_7C15)) & 1 == 0 {
            1
        } else {
            -1
        }
    }
}

/// Sign +1 exactly when `n mod p0 < p0/2` (as reals, so for odd `p0` the
/// lower ceil(p0/2) residues map to +1). Every length-H sign pattern of this
/// source is a deterministic function of `n mod p0`, which makes it the
/// deterministic-coupling extreme for mutual-information tests.
pub struct HalfResidueSource {
    p0: u64,
}

impl HalfResidueSource {
    pub fn new(p0: u64) -> Result<Self> {
        if p0 < 2 {
            return Err(Error::Domain(format!("modulus must be at least 2, got {p0}")));
        }
        Ok(HalfResidueSource { p0 })
    }
}

impl SignSource for HalfResidueSource {
    fn coverage(&self) -> (u64, u64) {
        (1, u64::MAX)
    }

    fn sign(&self, n: u64) -> i8 {
        if 2 * (n % self.p0) < self.p0 {
            1
        } else {
            -1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn require_reports_needed_range() {
        struct Tiny;
        impl SignSource for Tiny {
            fn coverage(&self) -> (u64, u64) {
                (1, 10)
            }
            fn sign(&self, _n: u64) -> i8 {
                1
            }
        }
        let err = Tiny.require(5, 20).unwrap_err();
        match err {
            Error::Coverage {
                needed_lo,
                needed_hi,
                have_lo,
                have_hi,
            } => {
                assert_eq!((needed_lo, needed_hi, have_lo, have_hi), (5, 20, 1, 10));
            }
            other => panic!("expected coverage error, got {other}"),
        }
    }

    #[test]
    fn synthetic_iid_is_roughly_balanced() {
        let src = SyntheticIid::new(1);
        let total: i64 = (1..=100_000u64).map(|n| src.sign(n) as i64).sum();
        // 100k iid signs have standard deviation ~316.
        assert!(total.abs() < 1_600, "imbalance {total}");
    }

    #[test]
    fn half_residue_splits_odd_modulus() {
        let src = HalfResidueSource::new(13).unwrap();
        let plus = (0..13).filter(|r| src.sign(13 * 10 + r) == 1).count();
        // Residues 0..=6 satisfy 2r < 13.
        assert_eq!(plus, 7);
    }
}
