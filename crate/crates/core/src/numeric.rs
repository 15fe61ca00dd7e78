//! Compensated summation and deterministic parallel reduction.
//!
//! Every floating-point reduction in this crate must be bit-reproducible
//! across runs and thread counts. The scheme used throughout: split the
//! index range into fixed-size chunks, sum each chunk sequentially in index
//! order with Neumaier compensation, then fold the per-chunk totals in chunk
//! order. Chunk boundaries depend only on the range, never on the worker
//! count, so the result is independent of how rayon schedules the work.

use num_complex::Complex64;
use rayon::prelude::*;

/// Neumaier's variant of compensated summation. Like Kahan's algorithm it
/// carries a correction term, but it stays accurate when an incoming term
/// exceeds the running sum in magnitude.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Sum an iterator with Neumaier compensation, in iteration order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut acc = NeumaierSum::new();
    for x in iter {
        acc.add(x);
    }
    acc.total()
}

/// Fixed chunk length for deterministic range sums.
pub const RANGE_CHUNK: u64 = 1 << 16;

fn chunk_bounds(lo: u64, hi: u64, chunk: u64) -> impl Iterator<Item = (u64, u64)> {
    let n_chunks = (hi - lo) / RANGE_CHUNK + 1;
    (0..n_chunks).map(move |c| {
        let a = lo + c * chunk;
        let b = (a + chunk - 1).min(hi);
        (a, b)
    })
}

/// Sum `f(n)` over the inclusive range `[lo, hi]`, deterministically and in
/// parallel. Returns 0 for an empty range.
pub fn par_range_sum<F>(lo: u64, hi: u64, f: F) -> f64
where
    F: Fn(u64) -> f64 + Sync,
{
    if hi < lo {
        return 0.0;
    }
    let chunks: Vec<(u64, u64)> = chunk_bounds(lo, hi, RANGE_CHUNK).collect();
    let totals: Vec<f64> = chunks
        .into_par_iter()
        .map(|(a, b)| {
            let mut acc = NeumaierSum::new();
            for n in a..=b {
                acc.add(f(n));
            }
            acc.total()
        })
        .collect();
    compensated_sum(totals)
}

/// Complex-valued variant of [`par_range_sum`]; real and imaginary parts are
/// compensated independently.
pub fn par_range_sum_complex<F>(lo: u64, hi: u64, f: F) -> Complex64
where
    F: Fn(u64) -> Complex64 + Sync,
{
    if hi < lo {
        return Complex64::new(0.0, 0.0);
    }
    let chunks: Vec<(u64, u64)> = chunk_bounds(lo, hi, RANGE_CHUNK).collect();
    let totals: Vec<(f64, f64)> = chunks
        .into_par_iter()
        .map(|(a, b)| {
            let mut re = NeumaierSum::new();
            let mut im = NeumaierSum::new();
            for n in a..=b {
                let z = f(n);
                re.add(z.re);
                im.add(z.im);
            }
            (re.total(), im.total())
        })
        .collect();
    let mut re = NeumaierSum::new();
    let mut im = NeumaierSum::new();
    for (r, i) in totals {
        re.add(r);
        im.add(i);
    }
    Complex64::new(re.total(), im.total())
}

/// Maximum of `f(n)` over the inclusive range `[lo, hi]`, in parallel.
/// `max` is associative and commutative, so no ordering discipline is
/// needed; returns `f64::NEG_INFINITY` on an empty range.
pub fn par_range_max<F>(lo: u64, hi: u64, f: F) -> f64
where
    F: Fn(u64) -> f64 + Sync,
{
    if hi < lo {
        return f64::NEG_INFINITY;
    }
    let chunks: Vec<(u64, u64)> = chunk_bounds(lo, hi, RANGE_CHUNK).collect();
    chunks
        .into_par_iter()
        .map(|(a, b)| {
            let mut m = f64::NEG_INFINITY;
            for n in a..=b {
                m = m.max(f(n));
            }
            m
        })
        .reduce(|| f64::NEG_INFINITY, f64::max)
}
