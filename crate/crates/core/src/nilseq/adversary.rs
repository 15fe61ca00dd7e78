//! Adversarial block sequence: a deterministic sequence built to correlate
//! with a given sign source.
//!
//! For each schedule level (H, ω, X) the construction scans
//! n ∈ [max(H ln H, X/ω), X], computes the phase-aligned score
//! score(n) = max_α Re Σ_{h=1}^H s(n+h) e(hα) / (n+h), keeps the n whose
//! score clears the threshold c·ε·H/n, greedily extracts an H-separated
//! subset in ascending order, and defines f(n+h) = e(α_n h) on the
//! resulting disjoint blocks, 0 elsewhere. The schedule condition
//! H_{i+1} ≥ 100·X_i keeps blocks of different levels disjoint.
//!
//! Maximizing the real part rather than the modulus makes the construction
//! self-certifying: the sum of the kept scores equals the real part of the
//! sequence's correlation against the source, restricted to the blocks, so
//! an independent pass can recompute the bookkeeping exactly.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;

use super::phase_sup::{eval_phase_sum, quick_phase_sup, Objective};
use super::{Block, DeterministicSequence};
use crate::error::{Error, Result};
use crate::numeric::NeumaierSum;
use crate::source::SignSource;

/// One schedule entry (H, ω, X).
#[derive(Clone, Copy, Debug)]
pub struct Level {
    pub h: u64,
    pub omega: f64,
    pub x: u64,
}

/// Per-level construction bookkeeping.
#[derive(Clone, Copy, Debug)]
pub struct LevelReport {
    pub level: usize,
    pub h: u64,
    pub scan_lo: u64,
    pub scan_hi: u64,
    pub scanned: u64,
    /// n clearing the score threshold, before separation.
    pub selected: u64,
    /// n kept by the greedy H-separated extraction.
    pub kept: u64,
    pub c_used: f64,
    /// Σ 1/n over kept n.
    pub mass: f64,
    /// Σ score(n) over kept n; equals the real part of the recomputed
    /// block correlation.
    pub score_sum: f64,
    /// c·ε·H·mass, the certified lower bound implied by the threshold.
    pub guaranteed: f64,
    pub empty: bool,
}

/// The constructed sequence plus its audit trail.
#[derive(Clone, Debug)]
pub struct AdversaryBuild {
    pub seq: DeterministicSequence,
    pub blocks: Vec<Block>,
    pub reports: Vec<LevelReport>,
}

fn validate_schedule(schedule: &[Level]) -> Result<()> {
    if schedule.is_empty() {
        return Err(Error::Domain("schedule must contain at least one level".into()));
    }
    for (i, lv) in schedule.iter().enumerate() {
        if lv.h < 1 || !lv.omega.is_finite() || (lv.h as f64) > lv.omega || lv.omega > lv.x as f64
        {
            return Err(Error::Domain(format!(
                "level {i}: H = {}, omega = {}, X = {} violate 1 <= H <= omega <= X",
                lv.h, lv.omega, lv.x
            )));
        }
        if i > 0 {
            let prev_x = schedule[i - 1].x;
            if lv.h < prev_x.saturating_mul(100) {
                return Err(Error::Domain(format!(
                    "level {i}: H = {} violates the scale gap H_(i+1) >= 100 X_i \
                     (X_{} = {prev_x})",
                    lv.h,
                    i - 1
                )));
            }
        }
    }
    Ok(())
}

/// Build the block sequence. `c_override` replaces the default threshold
/// constant (1/4 of the mean normalized score of the scan).
pub fn build_adversarial_sequence(
    source: &dyn SignSource,
    eps: f64,
    schedule: &[Level],
    c_override: Option<f64>,
) -> Result<AdversaryBuild> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::Domain(format!("eps = {eps} must be positive")));
    }
    validate_schedule(schedule)?;
    let scan_floor = |lv: &Level| -> u64 {
        let hf = lv.h as f64;
        ((hf * hf.ln()).ceil().max(0.0) as u64)
            .max((lv.x as f64 / lv.omega).ceil() as u64)
            .max(1)
    };
    let cover_hi = schedule
        .iter()
        .map(|lv| lv.x.checked_add(lv.h))
        .collect::<Option<Vec<_>>>()
        .and_then(|v| v.into_iter().max())
        .ok_or_else(|| Error::Domain("X + H overflows u64".into()))?;
    let cover_lo = schedule.iter().map(|lv| scan_floor(lv) + 1).min().unwrap();
    source.require(cover_lo, cover_hi)?;

    let mut blocks: Vec<Block> = Vec::new();
    let mut reports = Vec::with_capacity(schedule.len());
    for (level, lv) in schedule.iter().enumerate() {
        let h = lv.h;
        let hf = h as f64;
        let scan_lo = scan_floor(lv);
        let scan_hi = lv.x;
        if scan_lo > scan_hi {
            reports.push(LevelReport {
                level,
                h,
                scan_lo,
                scan_hi,
                scanned: 0,
                selected: 0,
                kept: 0,
                c_used: c_override.unwrap_or(0.0),
                mass: 0.0,
                score_sum: 0.0,
                guaranteed: 0.0,
                empty: true,
            });
            continue;
        }
        // Phase and aligned score per n, in scan order.
        let scored: Vec<(f64, f64)> = (scan_lo..=scan_hi)
            .into_par_iter()
            .map(|n| {
                let weights: Vec<Complex64> = (1..=h)
                    .map(|j| Complex64::new(source.sign(n + j) as f64 / (n + j) as f64, 0.0))
                    .collect();
                quick_phase_sup(&weights, Objective::RealPart)
            })
            .collect();
        let scanned = scored.len() as u64;
        let c_used = c_override.unwrap_or_else(|| {
            let mut gamma = NeumaierSum::new();
            for (i, &(_, score)) in scored.iter().enumerate() {
                let n = scan_lo + i as u64;
                gamma.add(score * n as f64 / (eps * hf));
            }
            gamma.total() / scanned as f64 / 4.0
        });
        let mut selected = 0u64;
        let mut kept = 0u64;
        let mut mass = NeumaierSum::new();
        let mut score_sum = NeumaierSum::new();
        let mut last_kept: Option<u64> = None;
        for (i, &(alpha, score)) in scored.iter().enumerate() {
            let n = scan_lo + i as u64;
            if score < c_used * eps * hf / n as f64 {
                continue;
            }
            selected += 1;
            if let Some(prev) = last_kept {
                if n - prev < h {
                    continue;
                }
            }
            last_kept = Some(n);
            kept += 1;
            mass.add(1.0 / n as f64);
            score_sum.add(score);
            blocks.push(Block {
                start: n,
                len: h,
                alpha,
            });
        }
        let mass = mass.total();
        reports.push(LevelReport {
            level,
            h,
            scan_lo,
            scan_hi,
            scanned,
            selected,
            kept,
            c_used,
            mass,
            score_sum: score_sum.total(),
            guaranteed: c_used * eps * hf * mass,
            empty: kept == 0,
        });
    }
    for pair in blocks.windows(2) {
        if pair[0].start + pair[0].len > pair[1].start {
            return Err(Error::Invariant(format!(
                "constructed blocks overlap: ({}, len {}) and ({}, len {})",
                pair[0].start, pair[0].len, pair[1].start, pair[1].len
            )));
        }
    }
    let seq = DeterministicSequence::block_adversarial(blocks.clone())?;
    Ok(AdversaryBuild {
        seq,
        blocks,
        reports,
    })
}

/// Recompute Σ Re S_n(α_n) over the blocks from the source directly; the
/// independent check against `LevelReport::score_sum`.
pub fn recompute_block_score(source: &dyn SignSource, blocks: &[Block]) -> Result<f64> {
    let mut total = NeumaierSum::new();
    for b in blocks {
        source.require(b.start + 1, b.start + b.len)?;
        let weights: Vec<Complex64> = (1..=b.len)
            .map(|j| {
                Complex64::new(
                    source.sign(b.start + j) as f64 / (b.start + j) as f64,
                    0.0,
                )
            })
            .collect();
        total.add(eval_phase_sum(&weights, b.alpha).re);
    }
    Ok(total.total())
}

const ADVS_MAGIC: &[u8; 4] = b"ADVS";
const ADVS_VERSION: u16 = 1;

/// Serialize blocks: magic "ADVS", version u16 LE, block count u64 LE,
/// then per block start u64, length u64, α binary64, all little-endian.
pub fn write_advs(path: &Path, blocks: &[Block]) -> Result<()> {
    let mut buf = Vec::with_capacity(14 + 24 * blocks.len());
    buf.extend_from_slice(ADVS_MAGIC);
    buf.extend_from_slice(&ADVS_VERSION.to_le_bytes());
    buf.extend_from_slice(&(blocks.len() as u64).to_le_bytes());
    for b in blocks {
        buf.extend_from_slice(&b.start.to_le_bytes());
        buf.extend_from_slice(&b.len.to_le_bytes());
        buf.extend_from_slice(&b.alpha.to_le_bytes());
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn read_advs(path: &Path) -> Result<Vec<Block>> {
    let data = fs::read(path).map_err(|e| Error::io(path, e))?;
    if data.len() < 14 {
        return Err(Error::format(path, "file shorter than the 14-byte header"));
    }
    if &data[0..4] != ADVS_MAGIC {
        return Err(Error::format(path, "bad magic, expected ADVS"));
    }
    let version = u16::from_le_bytes([data[4], data[5]]);
    if version != ADVS_VERSION {
        return Err(Error::format(
            path,
            format!("unsupported version {version}, expected {ADVS_VERSION}"),
        ));
    }
    let count = u64::from_le_bytes(data[6..14].try_into().unwrap());
    let expected = 14usize
        .checked_add((count as usize).checked_mul(24).unwrap_or(usize::MAX))
        .unwrap_or(usize::MAX);
    if data.len() != expected {
        return Err(Error::format(
            path,
            format!("length {} does not match {count} blocks", data.len()),
        ));
    }
    let mut blocks = Vec::with_capacity(count as usize);
    for i in 0..count as usize {
        let off = 14 + 24 * i;
        let start = u64::from_le_bytes(data[off..off + 8].try_into().unwrap());
        let len = u64::from_le_bytes(data[off + 8..off + 16].try_into().unwrap());
        let alpha = f64::from_le_bytes(data[off + 16..off + 24].try_into().unwrap());
        if len == 0 || !alpha.is_finite() {
            return Err(Error::format(path, format!("block {i} invalid")));
        }
        blocks.push(Block { start, len, alpha });
    }
    Ok(blocks)
}
