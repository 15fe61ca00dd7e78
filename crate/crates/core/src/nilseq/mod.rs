//! Deterministic test sequences and the nilsequence correlation machinery:
//! the exponential-sum maximal operator, Heisenberg (2-step) nilsequence
//! evaluation, the adversarial block construction, phase-net counting, and
//! the moment/Chebyshev tail check.
//!
//! The central estimator is
//! E sup_g |Σ_{h=1}^H s(𝐧+h) F(g^h x₀)| / H under the window law of 𝐧,
//! where the supremum ranges over the group parameter *inside* the
//! expectation. For 1-step sequences F(g^h x₀) = e(hα) the inner supremum
//! is the exponential-sum maximal operator of [`phase_sup`]; for the
//! Heisenberg case it is approximated on a coordinate grid and never
//! marked certified.

pub mod adversary;
pub mod heisenberg;
pub mod phase_sup;

use std::sync::Mutex;

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;

pub use adversary::{
    build_adversarial_sequence, read_advs, recompute_block_score, write_advs, AdversaryBuild,
    Level, LevelReport,
};
pub use heisenberg::{heisenberg_eval, FourierTerm, HeisPoint, Observable, PolySequence};
pub use phase_sup::{eval_phase_sum, linear_phase_sup};

use crate::error::{Error, Result};
use crate::logavg::LogWindow;
use crate::numeric::par_range_sum;
use crate::rng::par_sample_stats;
use crate::source::SignSource;
use crate::{Estimate, Mode};

/// e(t) = exp(2πi t).
pub fn e_phase(t: f64) -> Complex64 {
    let (s, c) = (std::f64::consts::TAU * t).sin_cos();
    Complex64::new(c, s)
}

/// One phase block: f(start + h) = e(α h) for 1 ≤ h ≤ len.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Block {
    pub start: u64,
    pub len: u64,
    pub alpha: f64,
}

/// The supremum's argument: a frequency for 1-step sequences, a group
/// element for the Heisenberg case.
#[derive(Clone, Copy, Debug)]
pub enum SupParam {
    Alpha(f64),
    Group(HeisPoint),
}

/// Result of a supremum computation.
#[derive(Clone, Copy, Debug)]
pub struct SupResult {
    pub best: SupParam,
    pub value: f64,
    /// True only when the value carries the rigorous ≥ sup − ε_acc
    /// guarantee.
    pub certified: bool,
    /// Grid points or evaluations spent.
    pub grid_size: u64,
}

/// The sequence catalogue: everything the Sarnak-side experiments consume.
#[derive(Clone, Debug)]
pub enum SequenceKind {
    Constant(Complex64),
    /// f(n) = values[n mod q].
    Periodic(Vec<Complex64>),
    /// f(n) = e(nα).
    LinearPhase { alpha: f64 },
    /// Explicit values on [offset, offset + len), 0 elsewhere.
    Table { offset: u64, values: Vec<Complex64> },
    /// f(h) = F(g(h)·x₀) on the Heisenberg nilmanifold.
    Heisenberg {
        poly: PolySequence,
        x0: HeisPoint,
        obs: Observable,
    },
    /// Phase blocks from the adversarial construction, 0 off blocks.
    BlockAdversarial { blocks: Vec<Block> },
}

/// A bounded deterministic sequence with a declared sup bound.
#[derive(Clone, Debug)]
pub struct DeterministicSequence {
    kind: SequenceKind,
    bound: f64,
}

impl DeterministicSequence {
    pub fn constant(c: Complex64) -> DeterministicSequence {
        DeterministicSequence {
            bound: c.norm(),
            kind: SequenceKind::Constant(c),
        }
    }

    pub fn periodic(values: Vec<Complex64>) -> Result<DeterministicSequence> {
        if values.is_empty() {
            return Err(Error::Domain("periodic sequence needs period >= 1".into()));
        }
        let bound = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        Ok(DeterministicSequence {
            bound,
            kind: SequenceKind::Periodic(values),
        })
    }

    /// f(n) = (−1)^n as the 2-periodic special case.
    pub fn alternating() -> DeterministicSequence {
        DeterministicSequence::periodic(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(-1.0, 0.0),
        ])
        .unwrap()
    }

    pub fn linear_phase(alpha: f64) -> Result<DeterministicSequence> {
        if !alpha.is_finite() {
            return Err(Error::Domain(format!("alpha = {alpha} must be finite")));
        }
        Ok(DeterministicSequence {
            bound: 1.0,
            kind: SequenceKind::LinearPhase { alpha },
        })
    }

    pub fn table(offset: u64, values: Vec<Complex64>) -> DeterministicSequence {
        let bound = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        DeterministicSequence {
            bound,
            kind: SequenceKind::Table { offset, values },
        }
    }

    pub fn heisenberg(
        poly: PolySequence,
        x0: HeisPoint,
        obs: Observable,
    ) -> Result<DeterministicSequence> {
        if !x0.is_finite() {
            return Err(Error::Domain("base point must be finite".into()));
        }
        Ok(DeterministicSequence {
            bound: obs.bound(),
            kind: SequenceKind::Heisenberg { poly, x0, obs },
        })
    }

    /// Blocks must be pairwise disjoint as integer intervals
    /// (start, start+len].
    pub fn block_adversarial(mut blocks: Vec<Block>) -> Result<DeterministicSequence> {
        blocks.sort_by_key(|b| b.start);
        for (i, b) in blocks.iter().enumerate() {
            if b.len == 0 || !b.alpha.is_finite() {
                return Err(Error::Domain(format!("block {i} invalid")));
            }
            if i > 0 {
                let prev = &blocks[i - 1];
                if prev.start + prev.len > b.start {
                    return Err(Error::Domain(format!(
                        "blocks overlap: ({}, len {}) and ({}, len {})",
                        prev.start, prev.len, b.start, b.len
                    )));
                }
            }
        }
        Ok(DeterministicSequence {
            bound: 1.0,
            kind: SequenceKind::BlockAdversarial { blocks },
        })
    }

    pub fn kind(&self) -> &SequenceKind {
        &self.kind
    }

    /// Declared sup bound C with |f(n)| ≤ C everywhere.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn eval(&self, n: u64) -> Complex64 {
        match &self.kind {
            SequenceKind::Constant(c) => *c,
            SequenceKind::Periodic(values) => values[(n % values.len() as u64) as usize],
            SequenceKind::LinearPhase { alpha } => {
                // Reduce n·α with n split into exact halves so the phase
                // stays accurate for large n.
                let hi = (n >> 32) as f64 * 4294967296.0;
                let lo = (n & 0xffff_ffff) as f64;
                e_phase((hi * alpha).fract() + (lo * alpha).fract())
            }
            SequenceKind::Table { offset, values } => {
                if n >= *offset && n - offset < values.len() as u64 {
                    values[(n - offset) as usize]
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            SequenceKind::Heisenberg { poly, x0, obs } => {
                heisenberg_eval(poly, x0, obs, n as i64)
            }
            SequenceKind::BlockAdversarial { blocks } => {
                let idx = blocks.partition_point(|b| b.start < n);
                if idx == 0 {
                    return Complex64::new(0.0, 0.0);
                }
                let b = &blocks[idx - 1];
                if n > b.start && n - b.start <= b.len {
                    e_phase(b.alpha * (n - b.start) as f64)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
        }
    }
}

/// Which supremum the correlation estimator takes per sample.
#[derive(Clone, Debug)]
pub enum NilSupSpec {
    OneStep { eps_acc: f64, certified: bool },
    /// Coordinate grid of `grid`³ group elements; heuristic only.
    Heisenberg {
        x0: HeisPoint,
        obs: Observable,
        grid: u32,
    },
}

/// An estimate plus whether every inner supremum was certified.
#[derive(Clone, Copy, Debug)]
pub struct NilCorrEstimate {
    pub estimate: Estimate,
    pub certified: bool,
}

/// Exact evaluation caps at this window size; the per-n supremum makes a
/// full pass quadratic-ish in budget terms.
pub const MAX_EXACT_NILCORR_WINDOW: u64 = 100_000;

/// E sup_g |Σ_{h=1}^H s(𝐧+h) F(g^h x₀)| / H under the window law.
pub fn nil_correlation_sup(
    window: &LogWindow,
    h: u64,
    spec: &NilSupSpec,
    mode: Mode,
    source: &dyn SignSource,
) -> Result<NilCorrEstimate> {
    if h < 2 || (h as f64) > window.omega() {
        return Err(Error::Domain(format!(
            "H = {h}, omega = {} violate 2 <= H <= omega <= X",
            window.omega()
        )));
    }
    match spec {
        NilSupSpec::OneStep { eps_acc, .. } => {
            if !(*eps_acc > 0.0) || !eps_acc.is_finite() {
                return Err(Error::Domain(format!(
                    "accuracy eps_acc = {eps_acc} must be positive"
                )));
            }
        }
        NilSupSpec::Heisenberg { grid, .. } => {
            if *grid == 0 || *grid > 64 {
                return Err(Error::Resource(format!(
                    "heisenberg grid {grid} outside 1..=64"
                )));
            }
        }
    }
    source.require(window.lo() + 1, window.x() + h)?;
    let failure: Mutex<Option<Error>> = Mutex::new(None);
    let per_n = |n: u64| -> f64 {
        let weights: Vec<Complex64> = (1..=h)
            .map(|j| Complex64::new(source.sign(n + j) as f64, 0.0))
            .collect();
        let sup = match spec {
            NilSupSpec::OneStep { eps_acc, certified } => {
                match linear_phase_sup(&weights, *eps_acc, *certified) {
                    Ok(r) => r.value,
                    Err(e) => {
                        let mut slot = failure.lock().unwrap();
                        if slot.is_none() {
                            *slot = Some(e);
                        }
                        0.0
                    }
                }
            }
            NilSupSpec::Heisenberg { x0, obs, grid } => {
                let g = *grid as u64;
                let mut best = 0.0f64;
                for ix in 0..g {
                    for iy in 0..g {
                        for iz in 0..g {
                            let elt = HeisPoint::new(
                                ix as f64 / g as f64,
                                iy as f64 / g as f64,
                                iz as f64 / g as f64,
                            );
                            let mut sum = Complex64::new(0.0, 0.0);
                            for (j, w) in weights.iter().enumerate() {
                                let p = elt.pow(j as i64 + 1).mul(x0).reduce();
                                sum += w * obs.eval(&p);
                            }
                            best = best.max(sum.norm());
                        }
                    }
                }
                best
            }
        };
        sup / h as f64
    };
    let certified = matches!(
        spec,
        NilSupSpec::OneStep {
            certified: true,
            ..
        }
    );
    let estimate = match mode {
        Mode::Exact => {
            if window.len() > MAX_EXACT_NILCORR_WINDOW {
                return Err(Error::Resource(format!(
                    "exact nil-correlation limited to windows of <= \
                     {MAX_EXACT_NILCORR_WINDOW} integers (got {}); use sampled mode",
                    window.len()
                )));
            }
            let raw = par_range_sum(window.lo(), window.x(), |n| per_n(n) / n as f64);
            Estimate::exact(raw / window.normalizer())
        }
        Mode::Sampled { count, seed } => {
            if count == 0 {
                return Err(Error::Domain("sampled mode needs count >= 1".into()));
            }
            let (mean, stderr) =
                par_sample_stats(count, seed, |rng: &mut ChaCha8Rng| per_n(window.sample(rng)));
            Estimate::sampled(mean, stderr, count, seed)
        }
    };
    if let Some(e) = failure.into_inner().unwrap().take() {
        return Err(e);
    }
    Ok(NilCorrEstimate {
        estimate,
        certified,
    })
}

/// Count distinct ε-rounded phase blocks (e(αh))_{h=1..N} over the α-grid
/// of spacing ε/(2πN); the grid is fine enough that every block is within
/// rounding reach of a grid block.
pub fn phase_block_net(n: u64, eps: f64) -> Result<u64> {
    if n == 0 {
        return Err(Error::Domain("block length N must be >= 1".into()));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("eps = {eps} must lie in (0, 1)")));
    }
    let m = (std::f64::consts::TAU * n as f64 / eps).ceil() as u64;
    if m > 100_000_000 {
        return Err(Error::Resource(format!(
            "phase net grid of {m} points exceeds the 1e8 budget"
        )));
    }
    let mut seen = std::collections::HashSet::new();
    for i in 0..m {
        let alpha = i as f64 / m as f64;
        let rot = e_phase(alpha);
        let mut cur = Complex64::new(1.0, 0.0);
        let mut key = Vec::with_capacity(n as usize);
        for _ in 0..n {
            cur *= rot;
            key.push(((cur.re / eps).floor() as i64, (cur.im / eps).floor() as i64));
        }
        seen.insert(key);
    }
    Ok(seen.len() as u64)
}

/// Empirical 2k-th moment E |Σ_{h=1}^H s(𝐧+h) F_h|^{2k} over the window,
/// and the Chebyshev tail bound (εH)^{−2k} · moment for
/// P(|Σ| ≥ εH).
pub fn block_moment_bound_check(
    window: &LogWindow,
    h: u64,
    k: u32,
    phases: &[Complex64],
    eps: f64,
    source: &dyn SignSource,
) -> Result<(f64, f64)> {
    if k == 0 || 2 * k as u64 > h {
        return Err(Error::Domain(format!(
            "moment order k = {k} violates 1 <= 2k <= H = {h}"
        )));
    }
    if phases.len() as u64 != h {
        return Err(Error::Domain(format!(
            "phase table has {} entries, expected H = {h}",
            phases.len()
        )));
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::Domain(format!("eps = {eps} must be positive")));
    }
    source.require(window.lo() + 1, window.x() + h)?;
    let raw = par_range_sum(window.lo(), window.x(), |n| {
        let mut sum = Complex64::new(0.0, 0.0);
        for (j, f) in phases.iter().enumerate() {
            sum += f * (source.sign(n + j as u64 + 1) as f64);
        }
        sum.norm_sqr().powi(k as i32) / n as f64
    });
    let moment = raw / window.normalizer();
    let bound = moment / (eps * h as f64).powi(2 * k as i32);
    Ok((moment, bound))
}
