use crate::error::{Error, Result};
use crate::sieve::{isqrt, PrimeTable};

/// Arithmetic function values over an integer segment `[lo, hi)`.
///
/// λ is stored at one bit per integer in the same layout as the cache file
/// format: bit `b = n - lo` of the packed words is 1 exactly when
/// λ(n) = -1. Möbius values and smallest prime factors are optional because
/// λ dominates memory at large scale.
pub struct ArithSegment {
    lo: u64,
    hi: u64,
    liouville: Vec<u64>,
    mobius: Option<Vec<i8>>,
    spf: Option<Vec<u64>>,
}

/// Optional per-integer arrays for [`build_segment`].
#[derive(Clone, Copy, Debug, Default)]
pub struct Features {
    pub mobius: bool,
    pub spf: bool,
}

/// Hard cap on a single segment's length. A build allocates 9 to 17 bytes
/// per integer of transient working memory, so 2^27 integers tops out near
/// 2 GiB; larger ranges must be built in pieces.
pub const MAX_SEGMENT_LEN: u64 = 1 << 27;

/// Largest supported integer.
pub const MAX_N: u64 = 1 << 60;

impl ArithSegment {
    pub fn lo(&self) -> u64 {
        self.lo
    }

    /// Exclusive upper end.
    pub fn hi(&self) -> u64 {
        self.hi
    }

    pub fn len(&self) -> u64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    fn bit(&self, n: u64) -> bool {
        debug_assert!(n >= self.lo && n < self.hi);
        let b = n - self.lo;
        (self.liouville[(b / 64) as usize] >> (b % 64)) & 1 == 1
    }

    /// λ(n) for n in `[lo, hi)`.
    #[inline]
    pub fn liouville(&self, n: u64) -> i8 {
        if self.bit(n) {
            -1
        } else {
            1
        }
    }

    /// μ(n), if Möbius values were requested at build time.
    pub fn mobius(&self, n: u64) -> Option<i8> {
        self.mobius.as_ref().map(|m| m[(n - self.lo) as usize])
    }

    /// Smallest prime factor of n (1 for n = 1), if requested at build time.
    pub fn spf(&self, n: u64) -> Option<u64> {
        self.spf.as_ref().map(|s| s[(n - self.lo) as usize])
    }

    /// The packed λ bits, least significant bit first, for cache writes.
    pub fn liouville_words(&self) -> &[u64] {
        &self.liouville
    }

    /// Wrap previously computed λ bits (for example from a cache file).
    pub fn from_liouville_words(lo: u64, hi: u64, words: Vec<u64>) -> Result<ArithSegment> {
        check_range(lo, hi)?;
        let need = ((hi - lo) as usize).div_ceil(64);
        if words.len() != need {
            return Err(Error::Invariant(format!(
                "expected {need} packed words for [{lo}, {hi}), got {}",
                words.len()
            )));
        }
        Ok(ArithSegment {
            lo,
            hi,
            liouville: words,
            mobius: None,
            spf: None,
        })
    }
}

fn check_range(lo: u64, hi: u64) -> Result<()> {
    if lo == 0 {
        return Err(Error::Domain("segments start at lo >= 1".into()));
    }
    if hi <= lo {
        return Err(Error::Domain(format!(
            "segment range [{lo}, {hi}) is empty"
        )));
    }
    if hi > MAX_N {
        return Err(Error::Domain(format!(
            "segment end {hi} exceeds the supported maximum 2^60"
        )));
    }
    if hi - lo > MAX_SEGMENT_LEN {
        return Err(Error::Resource(format!(
            "segment length {} exceeds the per-segment budget of {MAX_SEGMENT_LEN} \
             integers; build the range in pieces",
            hi - lo
        )));
    }
    Ok(())
}

/// Sieve the segment `[lo, hi)`, computing λ and the requested extras.
pub fn build_segment(lo: u64, hi: u64, want: Features) -> Result<ArithSegment> {
    check_range(lo, hi)?;
    let primes = PrimeTable::up_to(isqrt(hi - 1))?;
    build_segment_with(&primes, lo, hi, want)
}

/// [`build_segment`] with a caller-supplied base prime table, which must
/// reach at least √(hi-1). Sharing the table amortizes the base sieve when
/// many segments of one large range are built.
pub fn build_segment_with(
    primes: &PrimeTable,
    lo: u64,
    hi: u64,
    want: Features,
) -> Result<ArithSegment> {
    check_range(lo, hi)?;
    let root = isqrt(hi - 1);
    if primes.bound() < root {
        return Err(Error::Invariant(format!(
            "base prime table reaches {} but the segment needs {root}",
            primes.bound()
        )));
    }
    let len = (hi - lo) as usize;

    // Running product of the marked prime powers and the tick count Ω so
    // far. The product never exceeds n < 2^60, so u64 multiplication is
    // exact, and Ω(n) <= 60 fits in a byte.
    let mut prod = vec![1u64; len];
    let mut ticks = vec![0u8; len];
    let mut square = if want.mobius {
        vec![false; len]
    } else {
        Vec::new()
    };
    let mut spf = if want.spf { vec![0u64; len] } else { Vec::new() };

    for &p in primes.primes() {
        if p > root {
            break;
        }
        // First power: also the place to record smallest prime factors.
        let mut m = lo.div_ceil(p) * p;
        while m < hi {
            let i = (m - lo) as usize;
            prod[i] *= p;
            ticks[i] += 1;
            if want.spf && spf[i] == 0 {
                spf[i] = p;
            }
            m += p;
        }
        // Higher powers p^j < hi add one tick per level, which accumulates
        // the full exponent; the square level marks μ = 0.
        let mut q = p;
        let mut level = 1u32;
        while q <= (hi - 1) / p {
            q *= p;
            level += 1;
            let mut m = lo.div_ceil(q) * q;
            while m < hi {
                let i = (m - lo) as usize;
                prod[i] *= p;
                ticks[i] += 1;
                if want.mobius && level == 2 {
                    square[i] = true;
                }
                m += q;
            }
        }
    }

    let mut liouville = vec![0u64; len.div_ceil(64)];
    let mut mobius = if want.mobius {
        vec![0i8; len]
    } else {
        Vec::new()
    };
    for i in 0..len {
        let n = lo + i as u64;
        // All base-prime factors were divided out of the product; what is
        // left of n is either 1 or a single prime above the root, because
        // n < (root + 1)^2 leaves no room for two such factors.
        let leftover = prod[i] != n;
        let omega = ticks[i] as u32 + leftover as u32;
        let lam_negative = omega % 2 == 1;
        if lam_negative {
            liouville[i / 64] |= 1u64 << (i % 64);
        }
        if want.mobius {
            mobius[i] = if square[i] {
                0
            } else if lam_negative {
                -1
            } else {
                1
            };
        }
        if want.spf && spf[i] == 0 {
            // No base prime divides n, so n is 1 or prime.
            spf[i] = if n == 1 { 1 } else { n };
        }
    }

    Ok(ArithSegment {
        lo,
        hi,
        liouville,
        mobius: want.mobius.then_some(mobius),
        spf: want.spf.then_some(spf),
    })
}
