//! Gowers uniformity norms: counting-normalized over ℤ and averaged over
//! cyclic groups, with a local-uniformity expectation over the log window.
//!
//! Over ℤ the degree-d norm of a finitely supported f is
//!
//!   ‖f‖_{U^d(ℤ)}^{2^d} = Σ_{x, h₁..h_d} Π_{ω ∈ {0,1}^d} 𝒞^{|ω|} f(x + ω·h⃗),
//!
//! where 𝒞 is conjugation and the sum runs over every parallelepiped whose
//! corners all meet the support; no averaging is applied. The local norm on
//! an interval I divides by ‖1_I‖_{U^d(ℤ)} so that |f| ≤ 1 forces values in
//! [0, 1]. On a cyclic group ℤ/Nℤ the averaged normalization
//! N^{-(d+1)} Σ_{x, h⃗ ∈ (ℤ/Nℤ)^{d+1}} is used instead; the two conventions
//! differ by powers of N and every returned value belongs to exactly one of
//! them.
//!
//! Three evaluators coexist: a direct corner enumerator (the oracle), an
//! autocorrelation path for d = 2 (‖f‖⁴ = Σ_h |Σ_x f(x) conj(f(x+h))|²,
//! computed by zero-padded FFT so the correlation is linear), and the
//! recursion ‖f‖_{U^d}^{2^d} = Σ_h ‖f · conj(f(·+h))‖_{U^{d-1}}^{2^{d-1}}
//! for d ≥ 3. The corner sum is provably real and nonnegative, so the
//! evaluators assert near-realness and clamp the tiny negative excess
//! floating-point noise can leave before taking the 2^{-d}-th root.

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fftplan;
use crate::logavg::LogWindow;
use crate::numeric::{compensated_sum, par_range_sum, NeumaierSum};
use crate::rng::par_sample_stats;
use crate::source::SignSource;
use crate::{Estimate, Mode};

/// Practical degree cap; 2^d corners and the recursion depth both grow fast.
pub const MAX_D: u32 = 6;

/// Tuple budget for the direct enumerator: N^(d+1) corner sums.
pub const DIRECT_TUPLE_BUDGET: f64 = 1e8;

/// Exact-mode window cap for the local-uniformity expectation.
pub const MAX_EXACT_LOCAL_WINDOW: u64 = 100_000;

fn check_d(d: u32) -> Result<()> {
    if d < 1 || d > MAX_D {
        return Err(Error::Domain(format!("degree d = {d} outside 1..={MAX_D}")));
    }
    Ok(())
}

/// Largest support the fast counting-normalization path accepts per degree.
fn fast_support_cap(d: u32) -> usize {
    match d {
        1 => 100_000_000,
        2 => 1_000_000,
        3 => 100_000,
        4 => 3_000,
        5 => 300,
        _ => 80,
    }
}

fn fast_budget_check(n: usize, d: u32) -> Result<()> {
    let cap = fast_support_cap(d);
    if n > cap {
        return Err(Error::Resource(format!(
            "support {n} exceeds the degree-{d} fast-path cap of {cap}"
        )));
    }
    Ok(())
}

/// max(raw, 0)^(1/2^d); callers assert the negative excess separately.
fn root_2d(raw: f64, d: u32) -> f64 {
    raw.max(0.0).powf(0.5f64.powi(d as i32))
}

/// How a norm value was computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GowersMethod {
    Direct,
    Recursive,
    Autocorrelation,
}

/// A counting-normalized local norm value with its context.
#[derive(Clone, Copy, Debug)]
pub struct GowersValue {
    /// ‖f·1_I‖ / ‖1_I‖.
    pub value: f64,
    /// ‖1_I‖_{U^d(ℤ)}.
    pub normalizer: f64,
    pub method: GowersMethod,
    pub d: u32,
    /// First point of the interval.
    pub start: u64,
    /// Number of points in the interval.
    pub len: u64,
}

/// The 2^d-corner sum over every parallelepiped with all corners inside the
/// support, plus the sum of term moduli (the magnitude scale for the
/// realness and nonnegativity asserts).
fn direct_corner_sum(f: &[Complex64], d: u32) -> (Complex64, f64) {
    let n = f.len() as i64;
    let d = d as usize;
    let masks = 1usize << d;
    let mut h = vec![-(n - 1); d];
    let mut offs = vec![0i64; masks];
    let mut re = NeumaierSum::new();
    let mut im = NeumaierSum::new();
    let mut mag = NeumaierSum::new();
    'outer: loop {
        let mut neg = 0i64;
        let mut pos = 0i64;
        for &hi in &h {
            if hi < 0 {
                neg += hi;
            } else {
                pos += hi;
            }
        }
        // Corners span [x + neg, x + pos]; both ends must stay in [0, n).
        let x_lo = -neg;
        let x_hi = n - 1 - pos;
        if x_lo <= x_hi {
            for m in 1..masks {
                offs[m] = offs[m & (m - 1)] + h[m.trailing_zeros() as usize];
            }
            for x in x_lo..=x_hi {
                let mut prod = Complex64::new(1.0, 0.0);
                for (m, &off) in offs.iter().enumerate() {
                    let v = f[(x + off) as usize];
                    prod *= if m.count_ones() & 1 == 1 { v.conj() } else { v };
                }
                re.add(prod.re);
                im.add(prod.im);
                mag.add(prod.norm());
            }
        }
        let mut i = 0;
        loop {
            if i == d {
                break 'outer;
            }
            h[i] += 1;
            if h[i] <= n - 1 {
                break;
            }
            h[i] = -(n - 1);
            i += 1;
        }
    }
    (Complex64::new(re.total(), im.total()), mag.total())
}

/// Degree-d norm of a finitely supported sequence by exhaustive corner
/// enumeration; the oracle for every faster path.
pub fn gowers_norm_direct(f: &[Complex64], d: u32) -> Result<f64> {
    check_d(d)?;
    let n = f.len();
    if n == 0 {
        return Ok(0.0);
    }
    let tuples = (n as f64).powi(d as i32 + 1);
    if tuples > DIRECT_TUPLE_BUDGET {
        return Err(Error::Resource(format!(
            "direct enumeration over N^(d+1) = {tuples:.3e} tuples (support {n}, \
             degree {d}) exceeds the {DIRECT_TUPLE_BUDGET:.0e} budget; use \
             gowers_norm_fast"
        )));
    }
    let (sum, mag) = direct_corner_sum(f, d);
    let scale = mag.max(f64::MIN_POSITIVE);
    assert!(
        sum.im.abs() <= 1e-9 * scale,
        "corner sum should be real, got imaginary part {} at scale {scale}",
        sum.im
    );
    assert!(
        sum.re >= -1e-9 * scale,
        "corner sum should be nonnegative, got {} at scale {scale}",
        sum.re
    );
    Ok(root_2d(sum.re, d))
}

/// ‖f‖⁴ = Σ_h |c(h)|² for the linear autocorrelation c(h) = Σ_x f(x)
/// conj(f(x+h)), via Parseval on a zero-padded circle: the pad length, the
/// smallest power of two ≥ 2N, prevents wraparound, and then
/// Σ_h |c(h)|² = (1/M) Σ_k |A_k|⁴ for the padded spectrum A.
fn autocorr_power4(f: &[Complex64]) -> f64 {
    let n = f.len();
    let m = (2 * n).next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    buf[..n].copy_from_slice(f);
    fftplan::forward(m).process(&mut buf);
    let quartic = compensated_sum(buf.iter().map(|z| {
        let q = z.norm_sqr();
        q * q
    }));
    quartic / m as f64
}

/// The 2^d-power of the counting-normalized norm. d = 1 is |Σf|², d = 2 the
/// autocorrelation identity, and d ≥ 3 the recursion over shifts; shifts h
/// and −h contribute equally because g_{−h}(x) = conj(g_h(x−h)) and the
/// norm ignores translation and conjugation.
fn fast_raw_power(f: &[Complex64], d: u32) -> f64 {
    let n = f.len();
    if n == 0 {
        return 0.0;
    }
    match d {
        1 => {
            let mut re = NeumaierSum::new();
            let mut im = NeumaierSum::new();
            for v in f {
                re.add(v.re);
                im.add(v.im);
            }
            Complex64::new(re.total(), im.total()).norm_sqr()
        }
        2 => autocorr_power4(f),
        _ => {
            let parts: Vec<f64> = (0..n)
                .into_par_iter()
                .map(|shift| {
                    let g: Vec<Complex64> = (0..n - shift)
                        .map(|x| f[x] * f[x + shift].conj())
                        .collect();
                    let p = fast_raw_power(&g, d - 1);
                    if shift == 0 {
                        p
                    } else {
                        2.0 * p
                    }
                })
                .collect();
            compensated_sum(parts)
        }
    }
}

/// Degree-d norm by the autocorrelation identity (d = 2) or the shift
/// recursion (d ≥ 3); agrees with [`gowers_norm_direct`] to floating-point
/// accuracy on overlapping budgets.
pub fn gowers_norm_fast(f: &[Complex64], d: u32) -> Result<f64> {
    check_d(d)?;
    if f.is_empty() {
        return Ok(0.0);
    }
    fast_budget_check(f.len(), d)?;
    Ok(root_2d(fast_raw_power(f, d), d))
}

/// Signed-shift count DP in u128; `None` on overflow.
fn box_count_u128(n: u64, d: u32) -> Option<u128> {
    let smax = (n - 1) as usize;
    let mut c = vec![0u128; smax + 1];
    c[0] = 1;
    for _ in 0..d {
        // Convolve with the per-coordinate weight (1 at 0, else 2):
        // next[s] = c[s] + 2 Σ_{t<s} c[t].
        let mut next = vec![0u128; smax + 1];
        let mut prefix: u128 = 0;
        for s in 0..=smax {
            next[s] = c[s].checked_add(prefix.checked_mul(2)?)?;
            prefix = prefix.checked_add(c[s])?;
        }
        c = next;
    }
    let mut total: u128 = 0;
    for (s, &cs) in c.iter().enumerate() {
        total = total.checked_add(cs.checked_mul((n - s as u64) as u128)?)?;
    }
    Some(total)
}

fn box_count_f64(n: u64, d: u32) -> f64 {
    let smax = (n - 1) as usize;
    let mut c = vec![0.0f64; smax + 1];
    c[0] = 1.0;
    for _ in 0..d {
        let mut next = vec![0.0f64; smax + 1];
        let mut prefix = 0.0f64;
        for s in 0..=smax {
            next[s] = c[s] + 2.0 * prefix;
            prefix += c[s];
        }
        c = next;
    }
    let mut total = NeumaierSum::new();
    for (s, &cs) in c.iter().enumerate() {
        total.add(cs * (n - s as u64) as f64);
    }
    total.total()
}

/// ‖1_{[0,N)}‖_{U^d(ℤ)}. A parallelepiped of shifts h⃗ fits in N − Σ|h_i|
/// positions, so the 2^d-power equals Σ_s c_d(s)·(N − s) over s ≤ N−1 with
/// c_d(s) the number of signed shift vectors of total length s, accumulated
/// exactly in u128 and in f64 when the count overflows.
pub fn box_normalizer(n: u64, d: u32) -> Result<f64> {
    check_d(d)?;
    if n == 0 {
        return Err(Error::Domain("box normalizer needs N >= 1".into()));
    }
    if n > 10_000_000 {
        return Err(Error::Resource(format!(
            "box normalizer DP over {n} shift lengths exceeds the 1e7 cap"
        )));
    }
    let raw = match box_count_u128(n, d) {
        Some(t) => t as f64,
        None => box_count_f64(n, d),
    };
    Ok(root_2d(raw, d))
}

fn dispatch_norm(vals: &[Complex64], d: u32) -> Result<(f64, GowersMethod)> {
    let method = match d {
        1 => GowersMethod::Direct,
        2 => GowersMethod::Autocorrelation,
        _ => GowersMethod::Recursive,
    };
    Ok((gowers_norm_fast(vals, d)?, method))
}

/// Local norm of explicit interval values: ‖f·1_I‖ / ‖1_I‖ with I starting
/// at `start` and running over `vals`.
pub fn local_gowers_of(vals: &[Complex64], start: u64, d: u32) -> Result<GowersValue> {
    check_d(d)?;
    if vals.is_empty() {
        return Err(Error::Domain("local norm needs a nonempty interval".into()));
    }
    let normalizer = box_normalizer(vals.len() as u64, d)?;
    let (norm, method) = dispatch_norm(vals, d)?;
    Ok(GowersValue {
        value: norm / normalizer,
        normalizer,
        method,
        d,
        start,
        len: vals.len() as u64,
    })
}

/// Local norm of a sign source on the `len` integers starting at `start`.
pub fn local_gowers(
    source: &dyn SignSource,
    start: u64,
    len: u64,
    d: u32,
) -> Result<GowersValue> {
    if len == 0 {
        return Err(Error::Domain("local norm needs a nonempty interval".into()));
    }
    let hi = start
        .checked_add(len - 1)
        .ok_or_else(|| Error::Domain(format!("interval [{start}, {start}+{len}) overflows")))?;
    source.require(start, hi)?;
    let vals: Vec<Complex64> = (start..=hi)
        .map(|x| Complex64::new(source.sign(x) as f64, 0.0))
        .collect();
    local_gowers_of(&vals, start, d)
}

/// E ‖s‖_{U^d([𝐧, 𝐧+H])} under the window law: the log-averaged local
/// uniformity of the source at scale H.
pub fn local_uniformity_expectation(
    d: u32,
    h: u64,
    window: &LogWindow,
    source: &dyn SignSource,
    mode: Mode,
) -> Result<Estimate> {
    check_d(d)?;
    if h < 2 || (h as f64) > window.omega() {
        return Err(Error::Domain(format!(
            "H = {h}, omega = {} violate 2 <= H <= omega <= X",
            window.omega()
        )));
    }
    // The interval [n, n+H] has H+1 points.
    let support = h + 1;
    fast_budget_check(support as usize, d)?;
    let normalizer = box_normalizer(support, d)?;
    source.require(window.lo(), window.x() + h)?;
    let per_n = |n: u64| -> f64 {
        let vals: Vec<Complex64> = (n..=n + h)
            .map(|x| Complex64::new(source.sign(x) as f64, 0.0))
            .collect();
        root_2d(fast_raw_power(&vals, d), d) / normalizer
    };
    match mode {
        Mode::Exact => {
            if window.len() > MAX_EXACT_LOCAL_WINDOW {
                return Err(Error::Resource(format!(
                    "exact local uniformity limited to windows of <= \
                     {MAX_EXACT_LOCAL_WINDOW} integers (got {}); use sampled mode",
                    window.len()
                )));
            }
            let raw = par_range_sum(window.lo(), window.x(), |n| per_n(n) / n as f64);
            Ok(Estimate::exact(raw / window.normalizer()))
        }
        Mode::Sampled { count, seed } => {
            if count == 0 {
                return Err(Error::Domain("sampled mode needs count >= 1".into()));
            }
            let (mean, stderr) =
                par_sample_stats(count, seed, |rng: &mut ChaCha8Rng| per_n(window.sample(rng)));
            Ok(Estimate::sampled(mean, stderr, count, seed))
        }
    }
}

/// Per-degree size caps for the cyclic evaluator; the recursion performs
/// N^{d-2} transforms of length N.
fn cyclic_cap(d: u32) -> usize {
    match d {
        1 => 100_000_000,
        2 => 1_000_000,
        3 => 10_000,
        4 => 500,
        5 => 120,
        _ => 48,
    }
}

/// The 2^d-power of the averaged norm over ℤ/Nℤ. d = 2 uses circular
/// Parseval: N^{-4} Σ_k |A_k|⁴ for the length-N spectrum; d ≥ 3 averages
/// the degree-(d−1) power of the multiplicative derivative over all shifts.
fn cyclic_pow(f: &[Complex64], d: u32) -> f64 {
    let n = f.len();
    match d {
        1 => {
            let mut re = NeumaierSum::new();
            let mut im = NeumaierSum::new();
            for v in f {
                re.add(v.re);
                im.add(v.im);
            }
            (Complex64::new(re.total(), im.total()) / n as f64).norm_sqr()
        }
        2 => {
            let mut buf = f.to_vec();
            fftplan::forward(n).process(&mut buf);
            let quartic = compensated_sum(buf.iter().map(|z| {
                let q = z.norm_sqr();
                q * q
            }));
            quartic / (n as f64).powi(4)
        }
        _ => {
            let parts: Vec<f64> = (0..n)
                .into_par_iter()
                .map(|shift| {
                    let g: Vec<Complex64> = (0..n)
                        .map(|x| f[x] * f[(x + shift) % n].conj())
                        .collect();
                    cyclic_pow(&g, d - 1)
                })
                .collect();
            compensated_sum(parts) / n as f64
        }
    }
}

/// Averaged-normalization degree-d norm over ℤ/Nℤ; wraparound intended.
pub fn cyclic_gowers(f: &[Complex64], d: u32) -> Result<f64> {
    check_d(d)?;
    if f.is_empty() {
        return Err(Error::Domain("cyclic norm needs a nonempty group".into()));
    }
    let cap = cyclic_cap(d);
    if f.len() > cap {
        return Err(Error::Resource(format!(
            "cyclic group of size {} exceeds the degree-{d} cap of {cap}",
            f.len()
        )));
    }
    Ok(root_2d(cyclic_pow(f, d), d))
}

fn is_prime(p: u64) -> bool {
    p >= 2 && crate::sieve::factorize(p) == vec![(p, 1)]
}

/// Result of one generalized von Neumann comparison.
#[derive(Clone, Copy, Debug)]
pub struct VonNeumannCheck {
    /// |E_{j,m} f₁(j) Π_{i≥2} f_i(j + m b_i)|.
    pub lhs: f64,
    /// ‖f₁‖_{U^{k−1}(ℤ/pℤ)}, averaged normalization.
    pub rhs: f64,
    /// lhs ≤ rhs + 1e−12.
    pub holds: bool,
}

/// Check the generalized von Neumann inequality for the progression system
/// j, j + m b₂, …, j + m b_k over ℤ/pℤ: the k-linear average is bounded by
/// the uniformity norm of f₁. Primality of p keeps every b_i and every
/// difference b_i − b_j invertible, which the inequality needs.
pub fn von_neumann_check(
    fs: &[Vec<Complex64>],
    b: &[u64],
    p: u64,
) -> Result<VonNeumannCheck> {
    if !is_prime(p) {
        return Err(Error::Domain(format!("p = {p} must be prime")));
    }
    let k = fs.len();
    if k < 2 {
        return Err(Error::Domain(format!(
            "need k >= 2 sequences, got {k}"
        )));
    }
    if (k - 1) as u32 > MAX_D {
        return Err(Error::Domain(format!(
            "k = {k} needs a degree-{} norm, over the cap {MAX_D}",
            k - 1
        )));
    }
    if b.len() != k - 1 {
        return Err(Error::Domain(format!(
            "need k-1 = {} residues b_2..b_k, got {}",
            k - 1,
            b.len()
        )));
    }
    let pu = p as usize;
    for (i, f) in fs.iter().enumerate() {
        if f.len() != pu {
            return Err(Error::Domain(format!(
                "sequence {i} has length {}, expected p = {p}",
                f.len()
            )));
        }
        for v in f {
            if !(v.norm() <= 1.0 + 1e-9) {
                return Err(Error::Contract(format!(
                    "sequence {i} exceeds the declared bound 1: |{v}| = {}",
                    v.norm()
                )));
            }
        }
    }
    let mut seen = std::collections::HashSet::new();
    for &bi in b {
        let r = bi % p;
        if r == 0 {
            return Err(Error::Domain(format!("b = {bi} is 0 mod p = {p}")));
        }
        if !seen.insert(r) {
            return Err(Error::Domain(format!(
                "residue collision: b = {bi} repeats mod p = {p}"
            )));
        }
    }
    let mut re = NeumaierSum::new();
    let mut im = NeumaierSum::new();
    for j in 0..p {
        for m in 0..p {
            let mut prod = fs[0][j as usize];
            for (i, &bi) in b.iter().enumerate() {
                let idx = ((j + m * (bi % p)) % p) as usize;
                prod *= fs[i + 1][idx];
            }
            re.add(prod.re);
            im.add(prod.im);
        }
    }
    let lhs = Complex64::new(re.total(), im.total()).norm() / (p as f64 * p as f64);
    let rhs = cyclic_gowers(&fs[0], (k - 1) as u32)?;
    Ok(VonNeumannCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-12,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logavg::make_window;
    use crate::nilseq::e_phase;
    use crate::sieve::LiouvilleTable;
    use crate::source::ConstSource;
    use rand::{Rng, SeedableRng};

    fn ones(n: usize) -> Vec<Complex64> {
        vec![Complex64::new(1.0, 0.0); n]
    }

    fn random_complex(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|_| Complex64::new(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0))
            .collect()
    }

    fn random_signs(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|_| Complex64::new(if rng.random::<bool>() { 1.0 } else { -1.0 }, 0.0))
            .collect()
    }

    #[test]
    fn single_point_has_norm_one_in_every_degree() {
        let f = ones(1);
        for d in 1..=4 {
            assert!((gowers_norm_direct(&f, d).unwrap() - 1.0).abs() < 1e-12);
            assert!((gowers_norm_fast(&f, d).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn two_point_indicator_pins_sixth_root() {
        let f = ones(2);
        let want = 6.0f64.powf(0.25);
        assert!((gowers_norm_direct(&f, 2).unwrap() - want).abs() < 1e-12);
        assert!((gowers_norm_fast(&f, 2).unwrap() - want).abs() < 1e-12);
        assert!((box_normalizer(2, 2).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn interval_indicator_degree_one_is_length() {
        let f = ones(7);
        assert!((gowers_norm_direct(&f, 1).unwrap() - 7.0).abs() < 1e-12);
        assert!((box_normalizer(7, 1).unwrap() - 7.0).abs() < 1e-12);
    }

    #[test]
    fn direct_budget_error_names_the_fast_path() {
        let f = ones(101);
        let err = gowers_norm_direct(&f, 3).unwrap_err();
        match err {
            Error::Resource(msg) => assert!(msg.contains("gowers_norm_fast"), "{msg}"),
            other => panic!("expected resource error, got {other:?}"),
        }
    }

    #[test]
    fn fast_matches_direct_on_random_sequences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for case in 0..30 {
            let d = 1 + case % 3;
            let n = 1 + (rng.random::<u64>() % 32) as usize;
            let f = if case % 2 == 0 {
                random_complex(&mut rng, n)
            } else {
                random_signs(&mut rng, n)
            };
            let direct = gowers_norm_direct(&f, d).unwrap();
            let fast = gowers_norm_fast(&f, d).unwrap();
            assert!(
                (fast - direct).abs() <= 1e-9 * direct.max(1e-9),
                "case {case}: d = {d}, n = {n}: {fast} vs {direct}"
            );
        }
    }

    #[test]
    fn sixteen_point_degree_three_matches_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let f = random_complex(&mut rng, 16);
        let direct = gowers_norm_direct(&f, 3).unwrap();
        let fast = gowers_norm_fast(&f, 3).unwrap();
        assert!((fast - direct).abs() <= 1e-9 * direct.max(1e-9));
    }

    #[test]
    fn box_normalizer_matches_direct_enumeration_small() {
        for n in 1..=8u64 {
            let f = ones(n as usize);
            for d in 1..=4 {
                let direct = gowers_norm_direct(&f, d).unwrap();
                let boxed = box_normalizer(n, d).unwrap();
                assert!(
                    (boxed - direct).abs() <= 1e-12 * direct,
                    "n = {n}, d = {d}: {boxed} vs {direct}"
                );
            }
        }
        assert!((box_normalizer(1, 2).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn box_normalizer_survives_integer_overflow() {
        // Large N and d push the exact count past u128; the f64 DP takes
        // over and must stay finite, positive, and monotone in N.
        let a = box_normalizer(500_000, 6).unwrap();
        let b = box_normalizer(1_000_000, 6).unwrap();
        assert!(a.is_finite() && b.is_finite() && 0.0 < a && a < b);
    }

    #[test]
    fn modulation_leaves_degree_two_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let f = random_complex(&mut rng, 40);
        let base = gowers_norm_fast(&f, 2).unwrap();
        for _ in 0..5 {
            let alpha = rng.random::<f64>();
            let modulated: Vec<Complex64> = f
                .iter()
                .enumerate()
                .map(|(x, v)| v * e_phase(alpha * x as f64))
                .collect();
            let got = gowers_norm_fast(&modulated, 2).unwrap();
            assert!((got - base).abs() <= 1e-9 * base.max(1e-9), "{got} vs {base}");
        }
    }

    #[test]
    fn conjugation_reflection_and_scaling_symmetries() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let f = random_complex(&mut rng, 24);
        for d in 1..=3 {
            let base = gowers_norm_fast(&f, d).unwrap();
            let conj: Vec<Complex64> = f.iter().map(|v| v.conj()).collect();
            let refl: Vec<Complex64> = f.iter().rev().copied().collect();
            let scaled: Vec<Complex64> = f.iter().map(|v| v * 2.5).collect();
            assert!((gowers_norm_fast(&conj, d).unwrap() - base).abs() <= 1e-9 * base);
            assert!((gowers_norm_fast(&refl, d).unwrap() - base).abs() <= 1e-9 * base);
            assert!(
                (gowers_norm_fast(&scaled, d).unwrap() - 2.5 * base).abs() <= 1e-9 * base
            );
        }
    }

    #[test]
    fn local_norm_of_constant_is_one() {
        for d in 1..=3 {
            let v = local_gowers(&ConstSource::plus(), 10, 33, d).unwrap();
            assert!((v.value - 1.0).abs() < 1e-12, "d = {d}: {}", v.value);
            assert_eq!(v.len, 33);
        }
    }

    #[test]
    fn local_norm_of_linear_phase_is_one_for_degree_two() {
        let alpha = 0.618033988749895;
        let vals: Vec<Complex64> = (0..50).map(|x| e_phase(alpha * x as f64)).collect();
        let v = local_gowers_of(&vals, 0, 2).unwrap();
        assert!((v.value - 1.0).abs() < 1e-9, "{}", v.value);
        assert_eq!(v.method, GowersMethod::Autocorrelation);
    }

    #[test]
    fn local_norm_of_liouville_matches_direct_oracle() {
        let n0 = 1_000_000u64;
        let len = 60u64;
        let table = LiouvilleTable::build(n0 + len).unwrap();
        let v = local_gowers(&table, n0, len, 2).unwrap();
        let vals: Vec<Complex64> = (n0..n0 + len)
            .map(|x| Complex64::new(table.sign(x) as f64, 0.0))
            .collect();
        let oracle = gowers_norm_direct(&vals, 2).unwrap() / box_normalizer(len, 2).unwrap();
        assert!((v.value - oracle).abs() <= 1e-9 * oracle.max(1e-9));
        assert!(v.value <= 1.0 + 1e-12, "bounded data keeps local norms <= 1");
    }

    #[test]
    fn uniformity_expectation_of_constant_source_is_one() {
        let window = make_window(1_000, 10.0).unwrap();
        let est = local_uniformity_expectation(
            2,
            8,
            &window,
            &ConstSource::plus(),
            Mode::Exact,
        )
        .unwrap();
        assert!((est.value - 1.0).abs() < 1e-12, "{}", est.value);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn uniformity_expectation_rejects_h_above_omega() {
        let window = make_window(1_000, 10.0).unwrap();
        let err =
            local_uniformity_expectation(2, 11, &window, &ConstSource::plus(), Mode::Exact)
                .unwrap_err();
        match err {
            Error::Domain(msg) => assert!(msg.contains("2 <= H <= omega <= X"), "{msg}"),
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn sampled_uniformity_agrees_with_exact_within_three_sigma() {
        let x = 20_000u64;
        let h = 32u64;
        let table = LiouvilleTable::build(x + h).unwrap();
        let window = make_window(x, 100.0).unwrap();
        let exact =
            local_uniformity_expectation(1, h, &window, &table, Mode::Exact).unwrap();
        let sampled = local_uniformity_expectation(
            1,
            h,
            &window,
            &table,
            Mode::Sampled {
                count: 400,
                seed: 7,
            },
        )
        .unwrap();
        assert!(
            (sampled.value - exact.value).abs() <= 3.0 * sampled.stderr,
            "{} vs {} (se {})",
            sampled.value,
            exact.value,
            sampled.stderr
        );
    }

    #[test]
    fn cyclic_constant_is_one_and_phases_are_invariant() {
        let n = 12;
        for d in 1..=4 {
            assert!((cyclic_gowers(&ones(n), d).unwrap() - 1.0).abs() < 1e-12);
        }
        let f: Vec<Complex64> = (0..n).map(|x| e_phase(x as f64 / n as f64)).collect();
        assert!((cyclic_gowers(&f, 2).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn cyclic_degree_two_matches_brute_force_on_seven_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let f = random_signs(&mut rng, 7);
        let n = 7usize;
        let mut acc = NeumaierSum::new();
        for x in 0..n {
            for h1 in 0..n {
                for h2 in 0..n {
                    let term = f[x]
                        * f[(x + h1) % n].conj()
                        * f[(x + h2) % n].conj()
                        * f[(x + h1 + h2) % n];
                    acc.add(term.re);
                }
            }
        }
        let brute = (acc.total() / (n as f64).powi(3)).max(0.0).powf(0.25);
        let got = cyclic_gowers(&f, 2).unwrap();
        assert!((got - brute).abs() <= 1e-12, "{got} vs {brute}");
    }

    #[test]
    fn cyclic_norms_grow_with_degree() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for _ in 0..20 {
            let f = random_complex(&mut rng, 31);
            let u2 = cyclic_gowers(&f, 2).unwrap();
            let u3 = cyclic_gowers(&f, 3).unwrap();
            assert!(u2 <= u3 + 1e-12, "{u2} vs {u3}");
        }
    }

    #[test]
    fn von_neumann_trivial_cases() {
        let p = 11u64;
        let zeros = vec![vec![Complex64::new(0.0, 0.0); 11]; 3];
        let check = von_neumann_check(&zeros, &[1, 2], p).unwrap();
        assert_eq!(check.lhs, 0.0);
        assert_eq!(check.rhs, 0.0);
        assert!(check.holds);
        let ones3 = vec![ones(11), ones(11), ones(11)];
        let check = von_neumann_check(&ones3, &[1, 2], p).unwrap();
        assert!((check.lhs - 1.0).abs() < 1e-12);
        assert!((check.rhs - 1.0).abs() < 1e-12);
        assert!(check.holds);
    }

    #[test]
    fn von_neumann_holds_on_random_triples() {
        let p = 101u64;
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        for trial in 0..40 {
            let fs: Vec<Vec<Complex64>> = (0..3).map(|_| random_signs(&mut rng, 101)).collect();
            let b2 = 1 + rng.random::<u64>() % (p - 1);
            let mut b3 = 1 + rng.random::<u64>() % (p - 1);
            while b3 == b2 {
                b3 = 1 + rng.random::<u64>() % (p - 1);
            }
            let check = von_neumann_check(&fs, &[b2, b3], p).unwrap();
            assert!(
                check.holds,
                "trial {trial}: lhs {} > rhs {}",
                check.lhs, check.rhs
            );
        }
    }

    #[test]
    fn von_neumann_input_validation() {
        let fs = vec![ones(11), ones(11), ones(11)];
        assert!(matches!(
            von_neumann_check(&fs, &[3, 3], 11),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            von_neumann_check(&fs, &[1, 11], 11),
            Err(Error::Domain(_))
        ));
        let fs10 = vec![ones(10), ones(10), ones(10)];
        assert!(matches!(
            von_neumann_check(&fs10, &[1, 2], 10),
            Err(Error::Domain(_))
        ));
        let mut big = vec![ones(11), ones(11), ones(11)];
        big[1][3] = Complex64::new(1.5, 0.0);
        assert!(matches!(
            von_neumann_check(&big, &[1, 2], 11),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn empty_support_has_zero_norm() {
        assert_eq!(gowers_norm_direct(&[], 2).unwrap(), 0.0);
        assert_eq!(gowers_norm_fast(&[], 3).unwrap(), 0.0);
    }
}
