//! Segmented sieves for the multiplicative sign functions and their
//! companions.
//!
//! The Liouville function is λ(n) = (-1)^Ω(n), where Ω counts prime factors
//! with multiplicity; it is completely multiplicative with λ(p) = -1 at
//! every prime. The Möbius function agrees with λ on squarefree n and
//! vanishes otherwise. The von Mangoldt function Λ is log p at prime powers
//! p^k and 0 elsewhere.
//!
//! Sieving works per segment `[lo, hi)`: for each base prime p ≤ √(hi-1) and
//! each power p^j < hi, every multiple of p^j in the segment gets one tick
//! and one factor of p in a running product. After marking, the residual
//! cofactor n / product is either 1 or a single prime larger than every base
//! prime, which supplies the final parity tick. The per-integer work is a
//! few multiply-adds and no divisions, and segments are completely
//! independent, so they build in parallel and the results are identical for
//! any segmentation.

mod segment;
mod table;

pub mod cache;

pub use segment::{build_segment, build_segment_with, ArithSegment, Features};
pub use table::LiouvilleTable;

use crate::error::{Error, Result};

/// Ascending primes up to a bound, with membership and range queries.
#[derive(Clone, Debug)]
pub struct PrimeTable {
    bound: u64,
    primes: Vec<u64>,
}

/// Largest bound accepted by [`PrimeTable::up_to`]; the bit sieve for it
/// needs 512 MiB.
const PRIME_TABLE_MAX: u64 = 1 << 32;

impl PrimeTable {
    /// Sieve of Eratosthenes over `[2, bound]`.
    pub fn up_to(bound: u64) -> Result<PrimeTable> {
        if bound > PRIME_TABLE_MAX {
            return Err(Error::Resource(format!(
                "prime table bound {bound} exceeds the {PRIME_TABLE_MAX} budget"
            )));
        }
        let n = bound as usize;
        let mut composite = vec![false; n + 1];
        let mut primes = Vec::new();
        for p in 2..=n {
            if composite[p] {
                continue;
            }
            primes.push(p as u64);
            let mut m = p * p;
            while m <= n {
                composite[m] = true;
                m += p;
            }
        }
        Ok(PrimeTable {
            bound,
            primes,
        })
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    /// The primes p with `lo <= p <= hi` as a slice of this table.
    /// Requires `hi <= bound`.
    pub fn range(&self, lo: u64, hi: u64) -> Result<&[u64]> {
        if hi > self.bound {
            return Err(Error::Domain(format!(
                "range end {hi} exceeds table bound {}",
                self.bound
            )));
        }
        let start = self.primes.partition_point(|&p| p < lo);
        let end = self.primes.partition_point(|&p| p <= hi);
        Ok(&self.primes[start..end])
    }
}

/// All primes p with `lo <= p <= hi`, ascending. An inverted or empty range
/// yields an empty list.
pub fn primes_in(lo: u64, hi: u64) -> Result<Vec<u64>> {
    if lo > hi || hi < 2 {
        return Ok(Vec::new());
    }
    let table = PrimeTable::up_to(hi)?;
    Ok(table.range(lo, hi)?.to_vec())
}

/// The arithmetic functions evaluated pointwise by [`arithmetic_value`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithKind {
    Liouville,
    Mobius,
    Mangoldt,
    Totient,
}

/// Exact pointwise evaluation by trial factorization. Λ returns log p as a
/// binary64; everything else is integer-exact.
pub fn arithmetic_value(kind: ArithKind, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain(
            "arithmetic functions are defined on n >= 1".into(),
        ));
    }
    Ok(match kind {
        ArithKind::Liouville => liouville_u64(n) as f64,
        ArithKind::Mobius => mobius_u64(n) as f64,
        ArithKind::Mangoldt => mangoldt(n),
        ArithKind::Totient => totient_u64(n) as f64,
    })
}

/// Prime factorization `[(p, e), ...]` by trial division, ascending in p.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    for p in [2u64, 3] {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
    }
    // Wheel over 6k +- 1.
    let mut p = 5u64;
    while p <= n / p {
        for q in [p, p + 2] {
            if n % q == 0 {
                let mut e = 0;
                while n % q == 0 {
                    n /= q;
                    e += 1;
                }
                out.push((q, e));
            }
        }
        p += 6;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// λ(n) by trial factorization.
pub fn liouville_u64(n: u64) -> i8 {
    let omega: u32 = factorize(n).iter().map(|&(_, e)| e).sum();
    if omega % 2 == 0 {
        1
    } else {
        -1
    }
}

/// μ(n) by trial factorization.
pub fn mobius_u64(n: u64) -> i8 {
    let fac = factorize(n);
    if fac.iter().any(|&(_, e)| e > 1) {
        return 0;
    }
    if fac.len() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Λ(n): log p when n = p^k, otherwise 0.
pub fn mangoldt(n: u64) -> f64 {
    let fac = factorize(n);
    if fac.len() == 1 {
        (fac[0].0 as f64).ln()
    } else {
        0.0
    }
}

/// Euler's totient by trial factorization.
pub fn totient_u64(n: u64) -> u64 {
    let mut phi = n;
    for (p, _) in factorize(n) {
        phi = phi / p * (p - 1);
    }
    phi
}

/// The W-trick frame: W is the primorial of w, and the weight
/// Λ_{W,r}(m) = (φ(W)/W) Λ(W m + r) flattens small-prime irregularities
/// along the progression r mod W.
#[derive(Clone, Debug)]
pub struct WTrickContext {
    w: u64,
    big_w: u64,
    phi_w: u64,
    r: u64,
}

impl WTrickContext {
    pub fn new(w: u64, r: u64) -> Result<WTrickContext> {
        let mut big_w: u64 = 1;
        for p in PrimeTable::up_to(w.max(1))?.primes() {
            big_w = big_w.checked_mul(*p).ok_or_else(|| {
                Error::Domain(format!("primorial of w = {w} overflows u64"))
            })?;
        }
        if r < 1 || r > big_w {
            return Err(Error::Domain(format!(
                "residue r = {r} must lie in [1, W] = [1, {big_w}]"
            )));
        }
        if gcd(r, big_w) != 1 {
            return Err(Error::Domain(format!(
                "residue r = {r} must be coprime to W = {big_w}"
            )));
        }
        // φ(W) = Π (p - 1) over the primes dividing the squarefree W; the
        // direct totient recomputation guards the construction.
        let phi_w = totient_u64(big_w);
        let product: u64 = factorize(big_w).iter().map(|&(p, _)| p - 1).product();
        if phi_w != product {
            return Err(Error::Invariant(format!(
                "totient of W = {big_w} disagrees with the primorial product"
            )));
        }
        Ok(WTrickContext {
            w,
            big_w,
            phi_w,
            r,
        })
    }

    pub fn w(&self) -> u64 {
        self.w
    }

    pub fn big_w(&self) -> u64 {
        self.big_w
    }

    pub fn phi_w(&self) -> u64 {
        self.phi_w
    }

    pub fn r(&self) -> u64 {
        self.r
    }

    /// Λ_{W,r}(m) = (φ(W)/W) Λ(W m + r).
    pub fn w_tricked_mangoldt(&self, m: u64) -> Result<f64> {
        if m == 0 {
            return Err(Error::Domain("w_tricked_mangoldt requires m >= 1".into()));
        }
        let arg = self
            .big_w
            .checked_mul(m)
            .and_then(|wm| wm.checked_add(self.r))
            .ok_or_else(|| {
                Error::Domain(format!(
                    "W*m + r overflows u64 for W = {}, m = {m}, r = {}",
                    self.big_w, self.r
                ))
            })?;
        Ok(self.phi_w as f64 / self.big_w as f64 * mangoldt(arg))
    }
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Integer square root: the largest s with s*s <= n.
pub fn isqrt(n: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    let mut s = (n as f64).sqrt() as u64;
    // Float rounding can be off by one in either direction.
    while s.checked_mul(s).map_or(true, |sq| sq > n) {
        s -= 1;
    }
    while (s + 1).checked_mul(s + 1).is_some_and(|sq| sq <= n) {
        s += 1;
    }
    s
}
