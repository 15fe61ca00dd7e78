use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sieve::{build_segment_with, isqrt, Features, PrimeTable};
use crate::source::SignSource;

/// λ over `[1, n_max]` at one bit per integer, the workhorse sign source.
///
/// Bit `n - 1` of the packed words is 1 exactly when λ(n) = -1, matching
/// the segment and cache layouts so loads and stores are straight word
/// copies.
pub struct LiouvilleTable {
    n_max: u64,
    words: Vec<u64>,
}

/// Default segment length for table builds: multiples of 64 keep segments
/// word-aligned in the shared bit vector, and 2^24 integers fit L3-scale
/// working sets.
pub const DEFAULT_SEGMENT_LEN: u64 = 1 << 24;

impl LiouvilleTable {
    /// Sieve λ(1..=n_max), building word-aligned segments in parallel.
    pub fn build(n_max: u64) -> Result<LiouvilleTable> {
        Self::build_with_segment_len(n_max, DEFAULT_SEGMENT_LEN)
    }

    pub fn build_with_segment_len(n_max: u64, segment_len: u64) -> Result<LiouvilleTable> {
        if n_max == 0 {
            return Err(Error::Domain("table needs n_max >= 1".into()));
        }
        if segment_len == 0 || segment_len % 64 != 0 {
            return Err(Error::Domain(format!(
                "segment length {segment_len} must be a positive multiple of 64"
            )));
        }
        let primes = PrimeTable::up_to(isqrt(n_max))?;
        let n_words = (n_max as usize).div_ceil(64);
        let mut words = vec![0u64; n_words];
        let words_per_seg = (segment_len / 64) as usize;
        words
            .par_chunks_mut(words_per_seg)
            .enumerate()
            .try_for_each(|(c, chunk)| -> Result<()> {
                let lo = 1 + c as u64 * segment_len;
                let hi = (lo + segment_len).min(n_max + 1);
                let seg = build_segment_with(&primes, lo, hi, Features::default())?;
                chunk.copy_from_slice(seg.liouville_words());
                Ok(())
            })?;
        Ok(LiouvilleTable { n_max, words })
    }

    /// Assemble a table from word-aligned pieces `(lo, words)` covering
    /// `[1, n_max]` exactly, as read back from a segment cache.
    pub fn from_parts(n_max: u64, parts: Vec<(u64, u64, Vec<u64>)>) -> Result<LiouvilleTable> {
        let n_words = (n_max as usize).div_ceil(64);
        let mut words = vec![0u64; n_words];
        let mut expect_lo = 1u64;
        for (lo, hi, part) in &parts {
            if *lo != expect_lo {
                return Err(Error::Invariant(format!(
                    "cache pieces are not contiguous: expected lo = {expect_lo}, got {lo}"
                )));
            }
            if (lo - 1) % 64 != 0 {
                return Err(Error::Invariant(format!(
                    "cache piece at lo = {lo} is not word-aligned"
                )));
            }
            let w0 = ((lo - 1) / 64) as usize;
            words[w0..w0 + part.len()].copy_from_slice(part);
            expect_lo = *hi;
        }
        if expect_lo < n_max + 1 {
            return Err(Error::Invariant(format!(
                "cache pieces stop at {expect_lo}, table needs {}",
                n_max + 1
            )));
        }
        Ok(LiouvilleTable { n_max, words })
    }

    pub fn n_max(&self) -> u64 {
        self.n_max
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// The packed words covering `[lo, hi)`; both ends must be word-aligned
    /// (lo = 1 mod 64) within the table.
    pub fn words_for(&self, lo: u64, hi: u64) -> &[u64] {
        debug_assert!(lo >= 1 && (lo - 1) % 64 == 0 && hi > lo);
        let w0 = ((lo - 1) / 64) as usize;
        let w1 = ((hi - 1) as usize).div_ceil(64);
        &self.words[w0..w1]
    }
}

impl SignSource for LiouvilleTable {
    fn coverage(&self) -> (u64, u64) {
        (1, self.n_max)
    }

    #[inline]
    fn sign(&self, n: u64) -> i8 {
        let b = n - 1;
        if (self.words[(b / 64) as usize] >> (b % 64)) & 1 == 1 {
            -1
        } else {
            1
        }
    }
}
