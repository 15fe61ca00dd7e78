//! The logarithmic-averaging framework.
//!
//! All correlation sums here are expectations under the law of the random
//! integer 𝐧 drawn from `[X/ω, X]` with P(𝐧 = n) = (1/n)/L, where
//! L = Σ_{X/ω <= n <= X} 1/n is comparable to log ω. Exact evaluation sums
//! every n in the window; sampled evaluation draws from the law with a
//! seeded, thread-count-independent scheme and reports a standard error.
//!
//! The quantities:
//!
//! * Chowla correlation: E λ(a₁𝐧 + b₁) ... λ(a_k𝐧 + b_k) for a
//!   nondegenerate system (a_i b_j - a_j b_i ≠ 0 for i < j).
//! * Sarnak correlation: E λ(𝐧) f(𝐧) against a bounded deterministic
//!   sequence f, componentwise for complex f.
//! * Affine-invariance residual: |E F(𝐧) 1_{𝐧 ≡ r (q)} - (1/q) E F(q𝐧 + r)|,
//!   the finite-scale size of the affine comparison's error term.
//! * Dilated correlation: the prime-averaged double sum
//!   E Σ_{p ∈ 𝒫_H} Σ_j 1_{a𝐧 + j ≡ 0 (ap)} Π_i λ(a𝐧 + j + p b_i),
//!   where 𝒫_H is the set of primes in [ε²H/2, ε²H] and every factor index
//!   j + p b_i must land in [1, H].

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nilseq::DeterministicSequence;
use crate::numeric::{par_range_sum, par_range_sum_complex};
use crate::rng::{par_sample_stats, par_sample_stats_complex};
use crate::sieve::primes_in;
use crate::source::SignSource;
use crate::Mode;

/// Exact window sums are O(X); cap where a full pass stops being a desk-
/// scale computation.
pub const MAX_WINDOW_X: u64 = 1 << 32;

/// The law of 𝐧: the integer window `[⌈X/ω⌉, X]` with weights (1/n)/L.
#[derive(Clone, Debug)]
pub struct LogWindow {
    x: u64,
    omega: f64,
    lo: u64,
    l: f64,
    // Sampler constants: the continuous surrogate lives on [lo, X+1).
    ln_lo: f64,
    ln_hi: f64,
    accept_norm: f64,
}

impl LogWindow {
    pub fn x(&self) -> u64 {
        self.x
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Lower end ⌈X/ω⌉ of the window.
    pub fn lo(&self) -> u64 {
        self.lo
    }

    /// The normalizer L = Σ_{n in window} 1/n.
    pub fn normalizer(&self) -> f64 {
        self.l
    }

    /// Number of integers in the window.
    pub fn len(&self) -> u64 {
        self.x - self.lo + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// P(𝐧 = n) for n in the window.
    pub fn weight(&self, n: u64) -> f64 {
        debug_assert!(n >= self.lo && n <= self.x);
        1.0 / (n as f64 * self.l)
    }

    /// Draw from the law of 𝐧: inverse-transform on the log-uniform
    /// continuous surrogate y in [lo, X+1), floor to an integer, then an
    /// exact rejection step against the true discrete weights. The floor of
    /// the surrogate lands on m with probability proportional to
    /// ln(1 + 1/m), and (1/m)/ln(1 + 1/m) increases in m, so dividing by
    /// its value at lo gives a valid acceptance ratio and the combined
    /// procedure is exact.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> u64 {
        use rand::Rng;
        loop {
            let u: f64 = rng.random();
            let y = (self.ln_lo + u * (self.ln_hi - self.ln_lo)).exp();
            let m = (y.floor() as u64).clamp(self.lo, self.x);
            let ratio = weight_over_cell(m) / self.accept_norm;
            if rng.random::<f64>() < ratio {
                return m;
            }
        }
    }
}

/// (1/m) / ln(1 + 1/m), the discrete weight over the surrogate cell mass.
fn weight_over_cell(m: u64) -> f64 {
    let inv = 1.0 / m as f64;
    inv / inv.ln_1p()
}

/// Construct the window law for `2 <= omega <= X`, computing L exactly.
pub fn make_window(x: u64, omega: f64) -> Result<LogWindow> {
    if !omega.is_finite() || omega < 2.0 {
        return Err(Error::Domain(format!(
            "omega = {omega} violates 2 <= omega <= X"
        )));
    }
    if omega > x as f64 {
        return Err(Error::Domain(format!(
            "omega = {omega} exceeds X = {x}, violating 2 <= omega <= X"
        )));
    }
    if x > MAX_WINDOW_X {
        return Err(Error::Resource(format!(
            "X = {x} exceeds the exact-summation budget of {MAX_WINDOW_X}"
        )));
    }
    let lo = ((x as f64 / omega).ceil() as u64).max(1);
    let l = par_range_sum(lo, x, |n| 1.0 / n as f64);
    Ok(LogWindow {
        x,
        omega,
        lo,
        l,
        ln_lo: (lo as f64).ln(),
        ln_hi: ((x + 1) as f64).ln(),
        accept_norm: weight_over_cell(lo),
    })
}

/// The correlation system (k, a, b) with the nondegeneracy condition
/// a_i b_j - a_j b_i ≠ 0 for all i < j.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorrelationSpec {
    a: Vec<u64>,
    b: Vec<u64>,
}

impl CorrelationSpec {
    pub fn new(a: Vec<u64>, b: Vec<u64>) -> Result<CorrelationSpec> {
        if a.is_empty() {
            return Err(Error::Domain("correlation spec needs k >= 1".into()));
        }
        if a.len() != b.len() {
            return Err(Error::Domain(format!(
                "coefficient lists differ in length: {} vs {}",
                a.len(),
                b.len()
            )));
        }
        if let Some(i) = a.iter().position(|&ai| ai == 0) {
            return Err(Error::Domain(format!("a[{i}] must be positive")));
        }
        for i in 0..a.len() {
            for j in (i + 1)..a.len() {
                let det = a[i] as i128 * b[j] as i128 - a[j] as i128 * b[i] as i128;
                if det == 0 {
                    return Err(Error::Domain(format!(
                        "degenerate pair: a[{i}] b[{j}] - a[{j}] b[{i}] = 0 \
                         for a = ({}, {}), b = ({}, {})",
                        a[i], a[j], b[i], b[j]
                    )));
                }
            }
        }
        Ok(CorrelationSpec { a, b })
    }

    pub fn k(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self) -> &[u64] {
        &self.a
    }

    pub fn b(&self) -> &[u64] {
        &self.b
    }

    /// The inclusive source range the integrand touches over `window`.
    fn needed_range(&self, window: &LogWindow) -> Result<(u64, u64)> {
        let mut lo = u64::MAX;
        let mut hi = 0u64;
        for (&ai, &bi) in self.a.iter().zip(&self.b) {
            let at_lo = ai
                .checked_mul(window.lo)
                .and_then(|v| v.checked_add(bi))
                .ok_or_else(|| Error::Domain("a*n + b overflows u64".into()))?;
            let at_hi = ai
                .checked_mul(window.x)
                .and_then(|v| v.checked_add(bi))
                .ok_or_else(|| Error::Domain("a*n + b overflows u64".into()))?;
            lo = lo.min(at_lo);
            hi = hi.max(at_hi);
        }
        Ok((lo, hi))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Exact,
    Sampled,
}

/// A correlation value: the raw weighted sum and its L-normalized form.
#[derive(Clone, Copy, Debug)]
pub struct CorrelationResult {
    pub raw_sum: f64,
    pub normalized: f64,
    pub method: Method,
    /// 0 for exact evaluation.
    pub sample_count: u64,
    /// Standard error of `normalized`; 0 for exact evaluation.
    pub stderr: f64,
    pub seed: Option<u64>,
}

impl CorrelationResult {
    fn exact(raw_sum: f64, l: f64) -> CorrelationResult {
        CorrelationResult {
            raw_sum,
            normalized: raw_sum / l,
            method: Method::Exact,
            sample_count: 0,
            stderr: 0.0,
            seed: None,
        }
    }

    fn sampled(mean: f64, stderr: f64, l: f64, count: u64, seed: u64) -> CorrelationResult {
        CorrelationResult {
            raw_sum: mean * l,
            normalized: mean,
            method: Method::Sampled,
            sample_count: count,
            stderr,
            seed: Some(seed),
        }
    }
}

/// E λ(a₁𝐧 + b₁) ... λ(a_k𝐧 + b_k) under the window law, with `source`
/// standing in for λ (any ±1 source works, enabling oracles and synthetic
/// experiments).
pub fn chowla_correlation(
    spec: &CorrelationSpec,
    window: &LogWindow,
    source: &dyn SignSource,
    mode: Mode,
) -> Result<CorrelationResult> {
    let (need_lo, need_hi) = spec.needed_range(window)?;
    source.require(need_lo, need_hi)?;
    let integrand = |n: u64| -> f64 {
        let mut s: i32 = 1;
        for (&ai, &bi) in spec.a.iter().zip(&spec.b) {
            s *= source.sign(ai * n + bi) as i32;
        }
        s as f64
    };
    match mode {
        Mode::Exact => {
            let raw = par_range_sum(window.lo, window.x, |n| integrand(n) / n as f64);
            Ok(CorrelationResult::exact(raw, window.l))
        }
        Mode::Sampled { count, seed } => {
            check_sample_count(count)?;
            let (mean, stderr) =
                par_sample_stats(count, seed, |rng| integrand(window.sample(rng)));
            Ok(CorrelationResult::sampled(mean, stderr, window.l, count, seed))
        }
    }
}

/// E λ(𝐧) f(𝐧) for a bounded deterministic sequence f, componentwise:
/// index 0 carries the real part, index 1 the imaginary part.
pub fn sarnak_correlation(
    f: &DeterministicSequence,
    window: &LogWindow,
    source: &dyn SignSource,
    mode: Mode,
) -> Result<[CorrelationResult; 2]> {
    let c = f.bound();
    if !c.is_finite() {
        return Err(Error::Contract(
            "sarnak correlation requires a finite declared bound on f".into(),
        ));
    }
    source.require(window.lo, window.x)?;
    match mode {
        Mode::Exact => {
            let raw = par_range_sum_complex(window.lo, window.x, |n| {
                f.eval(n) * (source.sign(n) as f64 / n as f64)
            });
            Ok([
                CorrelationResult::exact(raw.re, window.l),
                CorrelationResult::exact(raw.im, window.l),
            ])
        }
        Mode::Sampled { count, seed } => {
            check_sample_count(count)?;
            let (mean, (se_re, se_im)) = par_sample_stats_complex(count, seed, |rng| {
                let n = window.sample(rng);
                f.eval(n) * (source.sign(n) as f64)
            });
            Ok([
                CorrelationResult::sampled(mean.re, se_re, window.l, count, seed),
                CorrelationResult::sampled(mean.im, se_im, window.l, count, seed),
            ])
        }
    }
}

/// |E F(𝐧) 1_{𝐧 ≡ r (q)} - (1/q) E F(q𝐧 + r)|, both expectations exact
/// under the window law. `F` must be bounded by the declared `bound` and
/// defined on the window and on q * window + r; the caller guarantees
/// coverage.
pub fn affine_invariance_residual<F>(
    f: F,
    bound: f64,
    q: u64,
    r: i64,
    window: &LogWindow,
) -> Result<f64>
where
    F: Fn(u64) -> f64 + Sync,
{
    if q == 0 {
        return Err(Error::Domain("affine residual requires q >= 1".into()));
    }
    if !bound.is_finite() || bound <= 0.0 {
        return Err(Error::Contract(
            "affine residual requires a positive finite declared bound on F".into(),
        ));
    }
    let arg = |n: u64| -> Option<u64> {
        let v = q as i128 * n as i128 + r as i128;
        if v >= 1 && v <= u64::MAX as i128 {
            Some(v as u64)
        } else {
            None
        }
    };
    if arg(window.lo).is_none() || arg(window.x).is_none() {
        return Err(Error::Domain(format!(
            "q*n + r leaves [1, 2^64) on the window for q = {q}, r = {r}"
        )));
    }
    let r_mod = r.rem_euclid(q as i64) as u64;
    let lhs = par_range_sum(window.lo, window.x, |n| {
        if n % q == r_mod {
            f(n) / n as f64
        } else {
            0.0
        }
    }) / window.l;
    let rhs = par_range_sum(window.lo, window.x, |n| f(arg(n).unwrap()) / n as f64) / window.l;
    Ok((lhs - rhs / q as f64).abs())
}

/// The primes in [ε²H/2, ε²H].
pub fn dilation_primes(h: u64, eps: f64) -> Result<Vec<u64>> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::Domain(format!("eps = {eps} must be positive")));
    }
    let upper = eps * eps * h as f64;
    if upper < 2.0 {
        return Ok(Vec::new());
    }
    let lo = (upper / 2.0).ceil() as u64;
    let hi = upper.floor() as u64;
    primes_in(lo, hi)
}

/// The dilated correlation
/// E Σ_{p ∈ 𝒫_H} Σ_j 1_{a𝐧 + j ≡ 0 (ap)} Π_i λ(a𝐧 + j + p b_i),
/// with every factor index j + p b_i required to land in [1, H] (the
/// off-range convention kills the product). Requires a uniform dilation
/// a₁ = ... = a_k. Exact evaluation only; the inner double sum is an
/// integer combination of source signs, so the per-n value is exact.
pub fn dilated_correlation(
    spec: &CorrelationSpec,
    h: u64,
    eps: f64,
    window: &LogWindow,
    source: &dyn SignSource,
) -> Result<f64> {
    let a = uniform_dilation(spec)?;
    if h == 0 {
        return Err(Error::Domain("dilated correlation requires H >= 1".into()));
    }
    let primes = dilation_primes(h, eps)?;
    if primes.is_empty() {
        return Ok(0.0);
    }
    let p_max = *primes.last().unwrap();
    let b_max = *spec.b.iter().max().unwrap();
    let need_lo = a * window.lo + 1;
    let need_hi = a
        .checked_mul(window.x)
        .and_then(|v| v.checked_add(h))
        .and_then(|v| v.checked_add(p_max * b_max))
        .ok_or_else(|| Error::Domain("a*X + H + p*b overflows u64".into()))?;
    source.require(need_lo, need_hi)?;
    let raw = par_range_sum(window.lo, window.x, |n| {
        dilated_inner(spec, a, h, &primes, n, source) as f64 / n as f64
    });
    Ok(raw / window.l)
}

fn uniform_dilation(spec: &CorrelationSpec) -> Result<u64> {
    let a = spec.a[0];
    if spec.a.iter().any(|&ai| ai != a) {
        return Err(Error::Domain(
            "dilated correlation requires a uniform dilation a1 = ... = ak".into(),
        ));
    }
    Ok(a)
}

/// Σ_{p} Σ_j over the congruence classes, as an exact integer.
pub(crate) fn dilated_inner(
    spec: &CorrelationSpec,
    a: u64,
    h: u64,
    primes: &[u64],
    n: u64,
    source: &dyn SignSource,
) -> i64 {
    let b_min = *spec.b.iter().min().unwrap() as i64;
    let b_max = *spec.b.iter().max().unwrap() as i64;
    let mut total: i64 = 0;
    for &p in primes {
        let ap = (a * p) as i64;
        // j must satisfy j + p b_i in [1, H] for every factor, and the
        // congruence a n + j = 0 mod ap.
        let j_lo = 1 - p as i64 * b_min;
        let j_hi = h as i64 - p as i64 * b_max;
        if j_lo > j_hi {
            continue;
        }
        // Residue class of j mod ap.
        let r = (-((a as i128 * n as i128) % ap as i128)).rem_euclid(ap as i128) as i64;
        let mut j = j_lo + (r - j_lo).rem_euclid(ap);
        while j <= j_hi {
            let mut prod: i64 = 1;
            for &bi in &spec.b {
                let arg = (a as i64 * n as i64 + j + p as i64 * bi as i64) as u64;
                prod *= source.sign(arg) as i64;
            }
            total += prod;
            j += ap;
        }
    }
    total
}

fn check_sample_count(count: u64) -> Result<()> {
    if count == 0 {
        return Err(Error::Domain("sampled mode needs count >= 1".into()));
    }
    Ok(())
}
