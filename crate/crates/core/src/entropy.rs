//! Entropy diagnostics for sign patterns against residue data.
//!
//! For a window variable 𝐧, the pattern block X_H = (s(a𝐧+j))_{j=1..H}
//! records the signs ahead of a𝐧 and the residue vector Y_H the residues of
//! 𝐧 modulo each prime in 𝒫_H = [ε²H/2, ε²H]. The central quantity is the
//! mutual information I(X_H, Y_H) in bits, computed from the plug-in
//! entropies of the weighted empirical joint distribution under the window
//! law, with Miller–Madow bias correction in sampled mode. Small mutual
//! information at some scale H ≤ H/(ln H · ln ln ln H) is the decrement the
//! scale scan looks for, although at desk scales that threshold dwarfs any
//! achievable value and the scan reports raw mi prominently and the
//! threshold as annotation.
//!
//! The F(X, Y) identity cross-checks the construction: the dilated
//! correlation of the logavg module can be reassembled per n from the pair
//! (X_H, Y_H) alone, because the congruence a𝐧 + j ≡ 0 (mod ap) only needs
//! 𝐧 mod p and every factor index j + p·b_i then lands inside [1, H]. The
//! two code paths must agree exactly.

use std::collections::{HashMap, HashSet};
use std::f64::consts::LN_2;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::logavg::{dilated_correlation, dilation_primes, CorrelationSpec, LogWindow};
use crate::nilseq::DeterministicSequence;
use crate::numeric::{compensated_sum, par_range_max, par_range_sum, NeumaierSum, RANGE_CHUNK};
use crate::rng::{stream_rng, SAMPLE_CHUNK};
use crate::source::SignSource;
use crate::Mode;

/// Exact mode enumerates every window point; cap the pass size.
pub const MAX_EXACT_MI_WINDOW: u64 = 1_000_000;

/// Exact mode caps the pattern length (2^24 possible patterns).
pub const MAX_EXACT_MI_H: u64 = 24;

/// Pattern keys are packed into a u64 bit per position.
pub const MAX_SAMPLED_MI_H: u64 = 63;

/// The sign pattern (s(a·n + j))_{j=1..H}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternBlock {
    pub a: u64,
    pub signs: Vec<i8>,
}

impl PatternBlock {
    pub fn h(&self) -> u64 {
        self.signs.len() as u64
    }
}

/// Read the length-H pattern ahead of a·n from the source.
pub fn pattern_block(n: u64, a: u64, h: u64, source: &dyn SignSource) -> Result<PatternBlock> {
    if n == 0 || a == 0 || h == 0 {
        return Err(Error::Domain(format!(
            "pattern block needs n, a, H >= 1 (got n = {n}, a = {a}, H = {h})"
        )));
    }
    let base = a
        .checked_mul(n)
        .and_then(|v| v.checked_add(h))
        .ok_or_else(|| Error::Domain(format!("a*n + H overflows u64 at n = {n}")))?;
    source.require(base - h + 1, base)?;
    let signs = (1..=h).map(|j| source.sign(a * n + j)).collect();
    Ok(PatternBlock { a, signs })
}

/// Residues of n modulo each prime of 𝒫_H, in ascending prime order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResidueVector {
    pub primes: Vec<u64>,
    pub residues: Vec<u64>,
    /// Π p when it fits in a u128; None past 2^128, where the vector form
    /// is the only usable representation anyway.
    pub p_h: Option<u128>,
}

impl ResidueVector {
    /// Rebuild n mod P_H from the residues by the Chinese remainder
    /// theorem; the round-trip check that the vector loses nothing.
    pub fn crt_reconstruct(&self) -> Option<u128> {
        let p = self.p_h?;
        let mut acc: u128 = 0;
        for (&pi, &ri) in self.primes.iter().zip(&self.residues) {
            let mi = p / pi as u128;
            let inv = mod_inverse((mi % pi as u128) as u64, pi)?;
            // ((r·inv) mod p_i) · M_i < P, so the term needs no reduction.
            let term = ((ri as u128 * inv as u128) % pi as u128) * mi;
            acc = add_mod(acc, term % p, p);
        }
        Some(acc)
    }
}

fn add_mod(a: u128, b: u128, m: u128) -> u128 {
    // a, b < m; the sum can overflow u128 only when it also exceeds m.
    match a.checked_add(b) {
        Some(s) if s < m => s,
        Some(s) => s - m,
        None => a - (m - b),
    }
}

/// Inverse of a mod p for prime p, by extended Euclid; None when a ≡ 0.
fn mod_inverse(a: u64, p: u64) -> Option<u64> {
    if a % p == 0 {
        return None;
    }
    let (mut r0, mut r1) = (p as i128, (a % p) as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 != 1 {
        return None;
    }
    Some(t0.rem_euclid(p as i128) as u64)
}

/// The residue vector of n over the primes in [ε²H/2, ε²H].
pub fn residue_vector(n: u64, h: u64, eps: f64) -> Result<ResidueVector> {
    if n == 0 {
        return Err(Error::Domain("residue vector needs n >= 1".into()));
    }
    let primes = dilation_primes(h, eps)?;
    let residues = primes.iter().map(|&p| n % p).collect();
    let p_h = primes
        .iter()
        .try_fold(1u128, |acc, &p| acc.checked_mul(p as u128));
    Ok(ResidueVector {
        primes,
        residues,
        p_h,
    })
}

/// The scale threshold H/(ln H · ln ln ln H); positive only past e^e.
pub fn mi_threshold(h: u64) -> Result<f64> {
    if h < 16 {
        return Err(Error::Domain(format!(
            "threshold H/(ln H · ln ln ln H) undefined for H = {h}: it needs \
             ln ln ln H > 0, which starts at H = 16"
        )));
    }
    let hf = h as f64;
    Ok(hf / (hf.ln() * hf.ln().ln().ln()))
}

/// One mutual-information measurement.
#[derive(Clone, Copy, Debug)]
pub struct MiRow {
    pub h: u64,
    /// Entropies in bits; Miller–Madow corrected in sampled mode.
    pub entropy_x_bits: f64,
    pub entropy_y_bits: f64,
    pub entropy_joint_bits: f64,
    /// H(X) + H(Y) − H(X,Y), clamped at zero; the headline value
    /// (bias-corrected when sampled).
    pub mi_bits: f64,
    /// The uncorrected plug-in value, clamped, reported alongside because
    /// the estimator bias at large H is uncharacterized.
    pub mi_plugin_bits: f64,
    /// How far below zero the raw difference fell before clamping.
    pub negative_excess: f64,
    /// Scale threshold; None below H = 16 where it is undefined.
    pub threshold: Option<f64>,
    /// mi ≤ threshold (false when the threshold is undefined).
    pub flagged: bool,
    /// 3·(joint cells)/(2·S·ln 2): three times the Miller–Madow bias scale.
    pub bias_tolerance: f64,
    pub cells_x: u64,
    pub cells_y: u64,
    pub cells_joint: u64,
    pub mode: Mode,
    /// Draws in sampled mode, 0 in exact mode.
    pub samples: u64,
    /// Effective support: the draw count, or the inverse participation
    /// ratio (Σw)²/Σw² of the window weights in exact mode.
    pub effective_support: f64,
}

struct Dist {
    bits: f64,
    cells: u64,
}

/// Entropy in bits of a weighted empirical distribution given as (key,
/// weight) pairs; duplicates are merged. The stable sort keeps equal keys
/// in build order, so the compensated group sums are reproducible.
fn entropy_weighted<K: Ord + Copy>(mut pairs: Vec<(K, f64)>) -> Dist {
    pairs.sort_by(|a, b| a.0.cmp(&b.0));
    let total = compensated_sum(pairs.iter().map(|p| p.1));
    let mut bits = NeumaierSum::new();
    let mut cells = 0u64;
    let mut i = 0;
    while i < pairs.len() {
        let key = pairs[i].0;
        let mut group = NeumaierSum::new();
        while i < pairs.len() && pairs[i].0 == key {
            group.add(pairs[i].1);
            i += 1;
        }
        let q = group.total() / total;
        if q > 0.0 {
            bits.add(-(q * q.log2()));
        }
        cells += 1;
    }
    Dist {
        bits: bits.total(),
        cells,
    }
}

/// Plug-in entropy in bits from integer counts totalling `s`; duplicates
/// are merged exactly. H = log2 S − (Σ c·log2 c)/S.
fn entropy_counts<K: Ord + Copy>(mut pairs: Vec<(K, u64)>, s: u64) -> Dist {
    pairs.sort_unstable_by(|a, b| a.0.cmp(&b.0));
    let mut acc = NeumaierSum::new();
    let mut cells = 0u64;
    let mut i = 0;
    while i < pairs.len() {
        let key = pairs[i].0;
        let mut c = 0u64;
        while i < pairs.len() && pairs[i].0 == key {
            c += pairs[i].1;
            i += 1;
        }
        let cf = c as f64;
        acc.add(cf * cf.log2());
        cells += 1;
    }
    let sf = s as f64;
    Dist {
        bits: sf.log2() - acc.total() / sf,
        cells,
    }
}

/// The (pattern bits, mixed-radix residue key) cell of one n.
struct CellMap<'a> {
    source: &'a dyn SignSource,
    a: u64,
    h: u64,
    primes: Vec<u64>,
}

impl CellMap<'_> {
    fn cell(&self, n: u64) -> (u64, u128) {
        let mut x = 0u64;
        for j in 1..=self.h {
            if self.source.sign(self.a * n + j) > 0 {
                x |= 1 << (j - 1);
            }
        }
        let mut y = 0u128;
        for &p in &self.primes {
            y = y * p as u128 + (n % p) as u128;
        }
        (x, y)
    }
}

fn assemble_row(
    h: u64,
    ex: Dist,
    ey: Dist,
    exy: Dist,
    correction_scale: f64, // 1/(2·S·ln 2); zero in exact mode
    mode: Mode,
    samples: u64,
    effective_support: f64,
) -> MiRow {
    let mm = |d: &Dist| d.bits + (d.cells as f64 - 1.0) * correction_scale;
    let hx = mm(&ex);
    let hy = mm(&ey);
    let hxy = mm(&exy);
    let mi_raw = hx + hy - hxy;
    let mi_plugin_raw = ex.bits + ey.bits - exy.bits;
    let threshold = mi_threshold(h).ok();
    let mi_bits = mi_raw.max(0.0);
    MiRow {
        h,
        entropy_x_bits: hx,
        entropy_y_bits: hy,
        entropy_joint_bits: hxy,
        mi_bits,
        mi_plugin_bits: mi_plugin_raw.max(0.0),
        negative_excess: (-mi_raw).max(0.0),
        threshold,
        flagged: threshold.is_some_and(|t| mi_bits <= t),
        bias_tolerance: 3.0 * exy.cells as f64 / (2.0 * effective_support * LN_2),
        cells_x: ex.cells,
        cells_y: ey.cells,
        cells_joint: exy.cells,
        mode,
        samples,
        effective_support,
    }
}

/// I(X_H, Y_H) in bits under the window law, from the weighted empirical
/// distribution (exact mode) or a seeded Monte-Carlo histogram with
/// Miller–Madow correction (sampled mode).
pub fn mutual_information(
    window: &LogWindow,
    a: u64,
    h: u64,
    eps: f64,
    source: &dyn SignSource,
    mode: Mode,
) -> Result<MiRow> {
    if a == 0 || h == 0 {
        return Err(Error::Domain(format!(
            "mutual information needs a, H >= 1 (got a = {a}, H = {h})"
        )));
    }
    if h > MAX_SAMPLED_MI_H {
        return Err(Error::Resource(format!(
            "pattern keys pack into a u64: H = {h} exceeds {MAX_SAMPLED_MI_H}"
        )));
    }
    let primes = dilation_primes(h, eps)?;
    if primes
        .iter()
        .try_fold(1u128, |acc, &p| acc.checked_mul(p as u128))
        .is_none()
    {
        return Err(Error::Resource(
            "the prime product P_H exceeds u128; residue keys cannot be formed".into(),
        ));
    }
    let hi = a
        .checked_mul(window.x())
        .and_then(|v| v.checked_add(h))
        .ok_or_else(|| Error::Domain("a*X + H overflows u64".into()))?;
    source.require(a * window.lo() + 1, hi)?;
    let cell_map = CellMap {
        source,
        a,
        h,
        primes,
    };
    match mode {
        Mode::Exact => {
            if h > MAX_EXACT_MI_H {
                return Err(Error::Resource(format!(
                    "exact mode enumerates 2^H patterns: H = {h} exceeds \
                     {MAX_EXACT_MI_H}; use sampled mode"
                )));
            }
            if window.len() > MAX_EXACT_MI_WINDOW {
                return Err(Error::Resource(format!(
                    "exact mode limited to windows of <= {MAX_EXACT_MI_WINDOW} \
                     integers (got {}); use sampled mode",
                    window.len()
                )));
            }
            let (lo, x) = (window.lo(), window.x());
            let n_chunks = (x - lo) / RANGE_CHUNK + 1;
            let cells: Vec<(u64, u128, f64)> = (0..n_chunks)
                .into_par_iter()
                .map(|c| {
                    let start = lo + c * RANGE_CHUNK;
                    let end = (start + RANGE_CHUNK - 1).min(x);
                    (start..=end)
                        .map(|n| {
                            let (xk, yk) = cell_map.cell(n);
                            (xk, yk, window.weight(n))
                        })
                        .collect::<Vec<_>>()
                })
                .collect::<Vec<_>>()
                .concat();
            let sum_w = compensated_sum(cells.iter().map(|c| c.2));
            let sum_w2 = compensated_sum(cells.iter().map(|c| c.2 * c.2));
            let effective = sum_w * sum_w / sum_w2;
            let ex = entropy_weighted(cells.iter().map(|&(xk, _, w)| (xk, w)).collect());
            let ey = entropy_weighted(cells.iter().map(|&(_, yk, w)| (yk, w)).collect());
            let exy = entropy_weighted(cells.iter().map(|&(xk, yk, w)| ((xk, yk), w)).collect());
            Ok(assemble_row(h, ex, ey, exy, 0.0, mode, 0, effective))
        }
        Mode::Sampled { count, seed } => {
            if count == 0 {
                return Err(Error::Domain("sampled mode needs count >= 1".into()));
            }
            let n_chunks = count.div_ceil(SAMPLE_CHUNK);
            let maps: Vec<HashMap<(u64, u128), u64>> = (0..n_chunks)
                .into_par_iter()
                .map(|c| {
                    let mut rng = stream_rng(seed, c);
                    let in_chunk = SAMPLE_CHUNK.min(count - c * SAMPLE_CHUNK);
                    let mut map: HashMap<(u64, u128), u64> = HashMap::new();
                    for _ in 0..in_chunk {
                        let n = window.sample(&mut rng);
                        *map.entry(cell_map.cell(n)).or_insert(0) += 1;
                    }
                    map
                })
                .collect();
            let mut joint: HashMap<(u64, u128), u64> = HashMap::new();
            for map in maps {
                for (k, v) in map {
                    *joint.entry(k).or_insert(0) += v;
                }
            }
            let jointv: Vec<((u64, u128), u64)> = joint.into_iter().collect();
            let cells_joint = jointv.len() as u64;
            if count < 10 * cells_joint {
                return Err(Error::Statistical(format!(
                    "sampled mutual information needs >= 10 draws per observed \
                     joint cell (the 10x support rule): {count} draws over \
                     {cells_joint} cells"
                )));
            }
            let ex = entropy_counts(
                jointv.iter().map(|&((xk, _), c)| (xk, c)).collect(),
                count,
            );
            let ey = entropy_counts(
                jointv.iter().map(|&((_, yk), c)| (yk, c)).collect(),
                count,
            );
            let exy = entropy_counts(jointv, count);
            let correction = 1.0 / (2.0 * count as f64 * LN_2);
            Ok(assemble_row(
                h,
                ex,
                ey,
                exy,
                correction,
                mode,
                count,
                count as f64,
            ))
        }
    }
}

/// The scale scan: MI rows for every multiple of a in [H₋, H₊].
#[derive(Clone, Debug)]
pub struct MiScan {
    pub rows: Vec<MiRow>,
    /// The smallest flagged H, when any row has mi ≤ threshold.
    pub smallest_flagged: Option<u64>,
}

pub fn entropy_scan(
    window: &LogWindow,
    a: u64,
    h_minus: u64,
    h_plus: u64,
    eps: f64,
    source: &dyn SignSource,
    mode: Mode,
) -> Result<MiScan> {
    if a == 0 {
        return Err(Error::Domain("scan needs a >= 1".into()));
    }
    // Errors below 16, where the threshold is undefined.
    mi_threshold(h_minus)?;
    if h_minus > h_plus {
        return Err(Error::Domain(format!(
            "scan range is empty: H- = {h_minus} > H+ = {h_plus}"
        )));
    }
    let mut rows = Vec::new();
    let mut h = h_minus.div_ceil(a) * a;
    while h <= h_plus {
        rows.push(mutual_information(window, a, h, eps, source, mode)?);
        h += a;
    }
    let smallest_flagged = rows.iter().find(|r| r.flagged).map(|r| r.h);
    Ok(MiScan {
        rows,
        smallest_flagged,
    })
}

/// Both sides of the F(X, Y) identity plus the largest per-n discrepancy.
#[derive(Clone, Copy, Debug)]
pub struct FXyCheck {
    /// E F(X_H, Y_H), assembled from pattern and residue data alone.
    pub lhs: f64,
    /// The dilated correlation computed directly from the source.
    pub rhs: f64,
    /// max over the window of |F(X_H, Y_H)(n) − inner(n)| (raw integers).
    pub max_abs_diff: f64,
}

/// F(x, y): the dilated inner sum reassembled from the pattern x and the
/// residue vector y. The congruence a·n + j ≡ 0 (mod ap) depends on n only
/// through n mod p, namely j ≡ a·((p − y_p) mod p) (mod ap), and every
/// factor index j + p·b_i of an admissible j lies in [1, H], so the signs
/// come out of x directly.
fn f_of_xy(spec: &CorrelationSpec, a: u64, h: u64, primes: &[u64], x: &[i8], y: &[u64]) -> i64 {
    let b_min = *spec.b().iter().min().unwrap() as i64;
    let b_max = *spec.b().iter().max().unwrap() as i64;
    let mut total: i64 = 0;
    for (idx, &p) in primes.iter().enumerate() {
        let ap = (a * p) as i64;
        let j_lo = 1 - p as i64 * b_min;
        let j_hi = h as i64 - p as i64 * b_max;
        if j_lo > j_hi {
            continue;
        }
        let r = a as i64 * (((p - y[idx] % p) % p) as i64);
        let mut j = j_lo + (r - j_lo).rem_euclid(ap);
        while j <= j_hi {
            let mut prod: i64 = 1;
            for &bi in spec.b() {
                let m = j + p as i64 * bi as i64;
                prod *= x[(m - 1) as usize] as i64;
            }
            total += prod;
            j += ap;
        }
    }
    total
}

/// Verify E F(X_H, Y_H) = dilated correlation: the same finite sum reached
/// through two code paths, one reading only (pattern, residues) per n, the
/// other reading the source directly.
pub fn f_xy_identity_check(
    spec: &CorrelationSpec,
    window: &LogWindow,
    h: u64,
    eps: f64,
    source: &dyn SignSource,
) -> Result<FXyCheck> {
    let rhs = dilated_correlation(spec, h, eps, window, source)?;
    let primes = dilation_primes(h, eps)?;
    if primes.is_empty() {
        return Ok(FXyCheck {
            lhs: 0.0,
            rhs,
            max_abs_diff: 0.0,
        });
    }
    // dilated_correlation already enforced the uniform dilation.
    let a = spec.a()[0];
    let per_n_lhs = |n: u64| -> i64 {
        let signs: Vec<i8> = (1..=h).map(|j| source.sign(a * n + j)).collect();
        let residues: Vec<u64> = primes.iter().map(|&p| n % p).collect();
        f_of_xy(spec, a, h, &primes, &signs, &residues)
    };
    let lhs = par_range_sum(window.lo(), window.x(), |n| per_n_lhs(n) as f64 / n as f64)
        / window.normalizer();
    let max_abs_diff = par_range_max(window.lo(), window.x(), |n| {
        let direct = crate::logavg::dilated_inner(spec, a, h, &primes, n, source);
        (per_n_lhs(n) - direct).abs() as f64
    });
    Ok(FXyCheck {
        lhs,
        rhs,
        max_abs_diff,
    })
}

/// Maximum block length for the complexity counter.
pub const MAX_COMPLEXITY_BLOCK: u64 = 100_000;

/// log₂(distinct ε-rounded length-N blocks over the sampled positions) / N:
/// an empirical lower proxy for topological entropy at resolution ε.
pub fn block_complexity(
    seq: &DeterministicSequence,
    n_len: u64,
    eps: f64,
    positions: &[u64],
) -> Result<f64> {
    if n_len == 0 {
        return Err(Error::Domain("block length N must be >= 1".into()));
    }
    if n_len > MAX_COMPLEXITY_BLOCK {
        return Err(Error::Resource(format!(
            "block length {n_len} exceeds the {MAX_COMPLEXITY_BLOCK} cap"
        )));
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::Domain(format!("eps = {eps} must be positive")));
    }
    if positions.is_empty() {
        return Err(Error::Domain(
            "block complexity needs at least one sample position".into(),
        ));
    }
    let mut seen: HashSet<Vec<(i64, i64)>> = HashSet::new();
    for &m in positions {
        m.checked_add(n_len)
            .ok_or_else(|| Error::Domain(format!("position {m} + N overflows u64")))?;
        let key: Vec<(i64, i64)> = (0..n_len)
            .map(|j| {
                let v = seq.eval(m + j);
                ((v.re / eps).floor() as i64, (v.im / eps).floor() as i64)
            })
            .collect();
        seen.insert(key);
    }
    Ok((seen.len() as f64).log2() / n_len as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logavg::make_window;
    use crate::nilseq::Block;
    use crate::sieve::{liouville_u64, LiouvilleTable};
    use crate::source::{ConstSource, HalfResidueSource, SyntheticIid};
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pattern_block_matches_pointwise_oracle() {
        let block = pattern_block(5, 3, 6, &ConstSource::plus()).unwrap();
        assert_eq!(block.signs, vec![1; 6]);
        assert_eq!(block.h(), 6);
        let table = LiouvilleTable::build(50_000).unwrap();
        let block = pattern_block(1, 1, 4, &table).unwrap();
        assert_eq!(block.signs, vec![-1, -1, 1, -1], "λ(2..5)");
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let n = 1 + rng.random::<u64>() % 10_000;
            let a = 1 + rng.random::<u64>() % 2;
            let block = pattern_block(n, a, 8, &table).unwrap();
            for (j, &s) in block.signs.iter().enumerate() {
                assert_eq!(s, liouville_u64(a * n + j as u64 + 1));
            }
        }
    }

    #[test]
    fn residue_vector_examples_and_crt_round_trip() {
        let empty = residue_vector(7, 10, 0.4).unwrap();
        assert!(empty.primes.is_empty());
        assert_eq!(empty.p_h, Some(1));
        assert_eq!(empty.crt_reconstruct(), Some(0));

        let v = residue_vector(100, 100, 0.5).unwrap();
        assert_eq!(v.primes, vec![13, 17, 19, 23]);
        assert_eq!(v.residues, vec![9, 15, 5, 8]);
        assert_eq!(v.p_h, Some(96_577));
        for n in [5u64, 97, 12_345, 96_578] {
            let v = residue_vector(n, 100, 0.5).unwrap();
            assert_eq!(v.crt_reconstruct(), Some(n as u128 % 96_577));
        }
    }

    #[test]
    fn exact_mi_of_independent_source_is_near_zero() {
        let window = make_window(200_000, 100.0).unwrap();
        let row = mutual_information(&window, 1, 6, 1.0, &SyntheticIid::new(3), Mode::Exact)
            .unwrap();
        assert!(row.mi_bits >= 0.0);
        assert!(
            row.mi_bits <= row.bias_tolerance,
            "mi {} vs tolerance {}",
            row.mi_bits,
            row.bias_tolerance
        );
        assert!(row.cells_x <= 64);
        assert_eq!(row.cells_y, 15, "residues mod 3 and mod 5");
        assert_eq!(row.samples, 0);
    }

    #[test]
    fn exact_mi_equals_pattern_entropy_under_residue_coupling() {
        // Signs depend on n only through n mod 13, and 13 is one of the
        // primes of Y, so X is a function of Y and I(X,Y) = H(X).
        let window = make_window(50_000, 50.0).unwrap();
        let source = HalfResidueSource::new(13).unwrap();
        let row = mutual_information(&window, 1, 20, 1.0, &source, Mode::Exact).unwrap();
        assert!(
            (row.mi_bits - row.entropy_x_bits).abs() <= 1e-9,
            "mi {} vs H(X) {}",
            row.mi_bits,
            row.entropy_x_bits
        );
        assert!(row.mi_bits <= row.entropy_x_bits.min(row.entropy_y_bits) + 1e-12);
        assert!(row.cells_x as u64 <= 13);
    }

    #[test]
    fn sampled_mi_tracks_the_exact_oracle() {
        let table = LiouvilleTable::build(1_000_100).unwrap();
        let window = make_window(1_000_000, 100.0).unwrap();
        let exact = mutual_information(&window, 1, 8, 1.0, &table, Mode::Exact).unwrap();
        let sampled = mutual_information(
            &window,
            1,
            8,
            1.0,
            &table,
            Mode::Sampled {
                count: 200_000,
                seed: 9,
            },
        )
        .unwrap();
        let tol = exact.bias_tolerance + sampled.bias_tolerance;
        assert!(
            (sampled.mi_bits - exact.mi_bits).abs() <= tol,
            "sampled {} vs exact {} (tol {tol})",
            sampled.mi_bits,
            exact.mi_bits
        );
        assert!(sampled.mi_plugin_bits >= 0.0);
        assert!(sampled.samples == 200_000);
    }

    #[test]
    fn exact_mi_is_invariant_under_sign_relabeling() {
        struct Flip<'a>(&'a LiouvilleTable);
        impl SignSource for Flip<'_> {
            fn coverage(&self) -> (u64, u64) {
                self.0.coverage()
            }
            fn sign(&self, n: u64) -> i8 {
                -self.0.sign(n)
            }
        }
        let table = LiouvilleTable::build(60_000).unwrap();
        let window = make_window(50_000, 50.0).unwrap();
        let plain = mutual_information(&window, 1, 10, 1.0, &table, Mode::Exact).unwrap();
        let flipped =
            mutual_information(&window, 1, 10, 1.0, &Flip(&table), Mode::Exact).unwrap();
        assert!((plain.mi_bits - flipped.mi_bits).abs() <= 1e-12);
        assert!((plain.entropy_x_bits - flipped.entropy_x_bits).abs() <= 1e-12);
    }

    #[test]
    fn entropy_ignores_prime_ordering_of_residue_keys() {
        // The same residue data keyed in two prime orders is a relabeling;
        // the entropy helper must not care.
        let forward: Vec<(u128, f64)> = (0..1000u64)
            .map(|n| ((n % 13) as u128 * 17 + (n % 17) as u128, 1.0 / (n + 1) as f64))
            .collect();
        let backward: Vec<(u128, f64)> = (0..1000u64)
            .map(|n| ((n % 17) as u128 * 13 + (n % 13) as u128, 1.0 / (n + 1) as f64))
            .collect();
        let a = entropy_weighted(forward);
        let b = entropy_weighted(backward);
        assert_eq!(a.cells, b.cells);
        assert!((a.bits - b.bits).abs() <= 1e-12);
    }

    #[test]
    fn dropping_a_prime_never_raises_mi() {
        let table = LiouvilleTable::build(60_000).unwrap();
        let window = make_window(50_000, 50.0).unwrap();
        // ε = 1.0 keeps primes {11,13,17,19}; ε = 0.95 drops 19.
        let full = mutual_information(&window, 1, 20, 1.0, &table, Mode::Exact).unwrap();
        let coarse = mutual_information(&window, 1, 20, 0.95, &table, Mode::Exact).unwrap();
        assert_eq!(full.cells_y % coarse.cells_y, 0, "coarsening nests");
        assert!(
            coarse.mi_bits <= full.mi_bits + 1e-9,
            "coarse {} vs full {}",
            coarse.mi_bits,
            full.mi_bits
        );
    }

    #[test]
    fn threshold_is_pinned_and_guarded() {
        assert!(matches!(mi_threshold(15), Err(Error::Domain(_))));
        let t16 = mi_threshold(16).unwrap();
        assert!(
            (t16 - 294.6029630518388).abs() <= 1e-10 * t16,
            "threshold(16) = {t16}"
        );
        let t24 = mi_threshold(24).unwrap();
        assert!((t24 - 52.01013957921682).abs() <= 1e-10 * t24);
    }

    #[test]
    fn thin_sampling_trips_the_ten_x_rule() {
        let table = LiouvilleTable::build(110_000).unwrap();
        let window = make_window(100_000, 100.0).unwrap();
        let err = mutual_information(
            &window,
            1,
            8,
            1.0,
            &table,
            Mode::Sampled { count: 60, seed: 1 },
        )
        .unwrap_err();
        match err {
            Error::Statistical(msg) => assert!(msg.contains("10"), "{msg}"),
            other => panic!("expected statistical error, got {other:?}"),
        }
    }

    #[test]
    fn scan_flags_every_scale_of_an_independent_source() {
        let window = make_window(100_000, 100.0).unwrap();
        let scan = entropy_scan(
            &window,
            4,
            16,
            24,
            0.7,
            &SyntheticIid::new(11),
            Mode::Exact,
        )
        .unwrap();
        assert_eq!(
            scan.rows.iter().map(|r| r.h).collect::<Vec<_>>(),
            vec![16, 20, 24]
        );
        for row in &scan.rows {
            assert!(row.flagged, "H = {} should be flagged", row.h);
            assert!(row.threshold.unwrap() > row.mi_bits);
        }
        assert_eq!(scan.smallest_flagged, Some(16));
    }

    #[test]
    fn scan_rejects_scales_below_sixteen() {
        let window = make_window(1_000, 10.0).unwrap();
        assert!(matches!(
            entropy_scan(&window, 1, 8, 24, 0.7, &ConstSource::plus(), Mode::Exact),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn f_xy_identity_empty_prime_set() {
        let spec = CorrelationSpec::new(vec![1], vec![0]).unwrap();
        let window = make_window(1_000, 10.0).unwrap();
        let check = f_xy_identity_check(&spec, &window, 4, 0.5, &ConstSource::plus()).unwrap();
        assert_eq!(check.lhs, 0.0);
        assert_eq!(check.rhs, 0.0);
        assert_eq!(check.max_abs_diff, 0.0);
    }

    #[test]
    fn f_xy_identity_holds_exactly() {
        let table = LiouvilleTable::build(60_000).unwrap();
        let window = make_window(10_000, 10.0).unwrap();
        let spec = CorrelationSpec::new(vec![1], vec![0]).unwrap();
        let check = f_xy_identity_check(&spec, &window, 30, 0.8, &table).unwrap();
        assert!(check.max_abs_diff == 0.0, "per-n diff {}", check.max_abs_diff);
        assert!((check.lhs - check.rhs).abs() <= 1e-12);
        assert!(check.rhs != 0.0, "a nonzero case exercises the identity");

        let window = make_window(20_000, 20.0).unwrap();
        let spec = CorrelationSpec::new(vec![2, 2], vec![0, 1]).unwrap();
        let check = f_xy_identity_check(&spec, &window, 30, 0.8, &table).unwrap();
        assert!(check.max_abs_diff == 0.0);
        assert!((check.lhs - check.rhs).abs() <= 1e-12);
    }

    #[test]
    fn block_complexity_of_periodic_and_iid_sequences() {
        let periodic = DeterministicSequence::alternating();
        let positions: Vec<u64> = (1..=200).collect();
        let c = block_complexity(&periodic, 8, 0.5, &positions).unwrap();
        assert!(c <= (2.0f64).log2() / 8.0 + 1e-12, "period 2: {c}");

        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let values: Vec<Complex64> = (0..10_008)
            .map(|_| Complex64::new(if rng.random::<bool>() { 1.0 } else { -1.0 }, 0.0))
            .collect();
        let table = DeterministicSequence::table(1, values);
        let positions: Vec<u64> = (1..=10_000).collect();
        let c = block_complexity(&table, 8, 0.5, &positions).unwrap();
        assert!(c > 0.9, "iid signs fill the block space: {c}");
    }

    #[test]
    fn block_complexity_decreases_as_resolution_coarsens() {
        let seq = DeterministicSequence::block_adversarial(vec![
            Block {
                start: 0,
                len: 64,
                alpha: 0.137,
            },
            Block {
                start: 64,
                len: 64,
                alpha: 0.519,
            },
            Block {
                start: 128,
                len: 64,
                alpha: 0.871,
            },
        ])
        .unwrap();
        let positions: Vec<u64> = (1..=150).collect();
        let mut last = f64::INFINITY;
        for eps in [0.1, 0.2, 0.4] {
            let c = block_complexity(&seq, 32, eps, &positions).unwrap();
            assert!(c <= last + 1e-12, "complexity must not grow with eps");
            last = c;
        }
        assert!(last > 0.0, "phase blocks stay distinguishable at eps = 0.4");
    }

    #[test]
    fn exact_mode_budget_errors() {
        let window = make_window(2_000_000, 10.0).unwrap();
        assert!(matches!(
            mutual_information(&window, 1, 8, 1.0, &ConstSource::plus(), Mode::Exact),
            Err(Error::Resource(_))
        ));
        let window = make_window(10_000, 10.0).unwrap();
        assert!(matches!(
            mutual_information(&window, 1, 25, 1.0, &ConstSource::plus(), Mode::Exact),
            Err(Error::Resource(_))
        ));
    }
}
