//! Experiment runners and sieve-cache management.

use std::fs;
use std::path::{Path, PathBuf};

use liouville_core::entropy::{entropy_scan, mutual_information, MiRow};
use liouville_core::gowers::local_uniformity_expectation;
use liouville_core::logavg::{
    chowla_correlation, make_window, sarnak_correlation, CorrelationResult, CorrelationSpec,
    Method,
};
use liouville_core::nilseq::heisenberg::{HeisPoint, Observable};
use liouville_core::nilseq::{
    build_adversarial_sequence, nil_correlation_sup, write_advs, DeterministicSequence, Level,
    NilSupSpec,
};
use liouville_core::rng::stream_rng;
use liouville_core::sieve::{
    self, cache, liouville_u64, mangoldt, mobius_u64, LiouvilleTable, PrimeTable,
};
use liouville_core::source::{ConstSource, HalfResidueSource, SignSource, SyntheticIid};
use liouville_core::{Error, Estimate, Mode, Result};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::config::{
    AdversaryConfig, ChowlaConfig, EntropyConfig, ExperimentConfig, GowersConfig, NilcorrConfig,
    ObsName, SarnakConfig, SeqConfig, SieveConfig, SourceConfig, SuiteConfig, SupConfig,
    resolve_mode,
};
use crate::report::{fmt_f64, Cell, ParamEcho, Report};

/// Cache files cover fixed word-aligned spans of this many integers.
pub const CACHE_SPAN: u64 = 1 << 24;

/// Per-row factorization keeps the sieve table small.
pub const MAX_SIEVE_ROWS: u64 = 10_000;
pub const MAX_SIEVE_HI: u64 = 10_000_000_000;

/// Runner-wide context resolved from globals and config.
pub struct RunCtx {
    pub seed: u64,
    pub cache: Option<PathBuf>,
}

/// What happened to one cache span during acquisition.
#[derive(Clone, Debug)]
pub struct SpanStatus {
    pub path: PathBuf,
    pub lo: u64,
    pub hi: u64,
    pub built: bool,
}

fn round_up_span(n: u64) -> u64 {
    n.div_ceil(CACHE_SPAN) * CACHE_SPAN
}

/// Sieve λ over [1, n_hi], reading and extending the segment cache when a
/// directory is configured.
pub fn acquire_table(
    n_hi: u64,
    cache_dir: Option<&Path>,
) -> Result<(LiouvilleTable, Vec<SpanStatus>)> {
    let Some(dir) = cache_dir else {
        return Ok((LiouvilleTable::build(n_hi)?, Vec::new()));
    };
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let target = round_up_span(n_hi.max(1));
    let primes = PrimeTable::up_to(sieve::isqrt(target))?;
    let spans: Vec<(u64, u64)> = (0..target / CACHE_SPAN)
        .map(|k| (1 + k * CACHE_SPAN, 1 + (k + 1) * CACHE_SPAN))
        .collect();
    let pieces: Vec<(SpanStatus, Vec<u64>)> = spans
        .par_iter()
        .map(|&(lo, hi)| -> Result<(SpanStatus, Vec<u64>)> {
            let path = dir.join(cache::segment_file_name(lo, hi));
            if path.exists() {
                // An unreadable or corrupt file is treated as missing and
                // rebuilt; `cache verify` is the tool that reports
                // corruption without repairing it.
                if let Ok((got_lo, got_hi, words)) = cache::read_segment_file(&path) {
                    if (got_lo, got_hi) == (lo, hi) {
                        return Ok((
                            SpanStatus {
                                path,
                                lo,
                                hi,
                                built: false,
                            },
                            words,
                        ));
                    }
                }
            }
            let seg = sieve::build_segment_with(&primes, lo, hi, sieve::Features::default())?;
            let words = seg.liouville_words().to_vec();
            cache::write_segment_file(&path, lo, hi, &words)?;
            Ok((
                SpanStatus {
                    path,
                    lo,
                    hi,
                    built: true,
                },
                words,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut statuses = Vec::with_capacity(pieces.len());
    let mut parts = Vec::with_capacity(pieces.len());
    for (status, words) in pieces {
        parts.push((status.lo, status.hi, words));
        statuses.push(status);
    }
    Ok((LiouvilleTable::from_parts(target, parts)?, statuses))
}

enum Source {
    Table(LiouvilleTable),
    Const(ConstSource),
    Iid(SyntheticIid),
    Half(HalfResidueSource),
}

impl Source {
    fn as_sign_source(&self) -> &dyn SignSource {
        match self {
            Source::Table(t) => t,
            Source::Const(c) => c,
            Source::Iid(s) => s,
            Source::Half(h) => h,
        }
    }
}

fn make_source(
    cfg: &Option<SourceConfig>,
    needed_hi: u64,
    ctx: &RunCtx,
) -> Result<(Source, String)> {
    let cfg = cfg.clone().unwrap_or(SourceConfig::Liouville);
    let echo = cfg.echo();
    let source = match cfg {
        SourceConfig::Liouville => Source::Table(acquire_table(needed_hi, ctx.cache.as_deref())?.0),
        SourceConfig::Constant => Source::Const(ConstSource::plus()),
        SourceConfig::Synthetic => Source::Iid(SyntheticIid::new(ctx.seed)),
        SourceConfig::HalfResidue { p0 } => Source::Half(HalfResidueSource::new(p0)?),
    };
    Ok((source, echo))
}

fn mode_cells(method: Method, samples: u64, seed: Option<u64>) -> (Cell, Cell, Cell) {
    let name = match method {
        Method::Exact => "exact",
        Method::Sampled => "sampled",
    };
    (
        Cell::S(name.into()),
        Cell::U(samples),
        seed.map_or(Cell::Null, Cell::U),
    )
}

fn estimate_cells(est: &Estimate) -> (Cell, Cell, Cell, Cell, Cell) {
    let method = if est.samples == 0 { "exact" } else { "sampled" };
    (
        Cell::F(est.value),
        Cell::F(est.stderr),
        Cell::S(method.into()),
        Cell::U(est.samples),
        est.seed.map_or(Cell::Null, Cell::U),
    )
}

pub fn run(config: &ExperimentConfig, ctx: &RunCtx) -> Result<Report> {
    match config {
        ExperimentConfig::Sieve(c) => run_sieve(c),
        ExperimentConfig::Chowla(c) => run_chowla(c, ctx),
        ExperimentConfig::Sarnak(c) => run_sarnak(c, ctx),
        ExperimentConfig::Gowers(c) => run_gowers(c, ctx),
        ExperimentConfig::Nilcorr(c) => run_nilcorr(c, ctx),
        ExperimentConfig::Entropy(c) => run_entropy(c, ctx),
        ExperimentConfig::Adversary(c) => run_adversary(c, ctx),
        ExperimentConfig::Suite(c) => run_suite(c, ctx),
    }
}

fn run_sieve(c: &SieveConfig) -> Result<Report> {
    if c.hi > MAX_SIEVE_HI {
        return Err(Error::Resource(format!(
            "sieve rows use per-n factorization; hi = {} exceeds {MAX_SIEVE_HI}",
            c.hi
        )));
    }
    let rows_n = c.hi - c.lo + 1;
    if rows_n > MAX_SIEVE_ROWS {
        return Err(Error::Resource(format!(
            "sieve table of {rows_n} rows exceeds the {MAX_SIEVE_ROWS} cap; \
             narrow [lo, hi]"
        )));
    }
    let rows: Vec<Vec<Cell>> = (c.lo..=c.hi)
        .into_par_iter()
        .map(|n| {
            vec![
                Cell::U(n),
                Cell::I(liouville_u64(n) as i64),
                Cell::I(mobius_u64(n) as i64),
                Cell::F(mangoldt(n)),
            ]
        })
        .collect();
    let mut echo = ParamEcho::new();
    echo.push_u64("lo", c.lo).push_u64("hi", c.hi);
    Ok(Report {
        experiment: "sieve",
        params: echo.finish(),
        seed: 0,
        columns: vec!["n", "lambda", "mobius", "mangoldt"],
        rows,
    })
}

fn correlation_cells(x: u64, omega: f64, r: &CorrelationResult) -> Vec<Cell> {
    let (method, samples, seed) = mode_cells(r.method, r.sample_count, r.seed);
    vec![
        Cell::U(x),
        Cell::F(omega),
        Cell::F(r.normalized),
        Cell::F(r.raw_sum),
        Cell::F(r.stderr),
        method,
        samples,
        seed,
    ]
}

fn run_chowla(c: &ChowlaConfig, ctx: &RunCtx) -> Result<Report> {
    let spec = CorrelationSpec::new(c.a.clone(), c.b.clone())?;
    let mode = resolve_mode(c.mode, c.samples, ctx.seed)?;
    // (X, ω) pairs, one output row each.
    let windows: Vec<(u64, f64)> = match (&c.omega, &c.omega_grid) {
        (Some(omega), None) => vec![(c.x.unwrap(), *omega)],
        (None, Some(grid)) if c.coupled => grid.iter().map(|&g| (g as u64, g)).collect(),
        (None, Some(grid)) => grid.iter().map(|&g| (c.x.unwrap(), g)).collect(),
        _ => unreachable!("validated at parse time"),
    };
    let needed = windows
        .iter()
        .map(|&(x, _)| needed_hi_chowla(&spec, x))
        .max()
        .unwrap();
    let (source, source_echo) = make_source(&c.source, needed, ctx)?;
    let mut rows = Vec::new();
    for &(x, omega) in &windows {
        let window = make_window(x, omega)?;
        let r = chowla_correlation(&spec, &window, source.as_sign_source(), mode)?;
        rows.push(correlation_cells(x, omega, &r));
    }
    let mut echo = ParamEcho::new();
    echo.push_u64s("a", &c.a)
        .push_u64s("b", &c.b)
        .push("source", &source_echo)
        .push("coupled", c.coupled.to_string())
        .push_u64("seed", ctx.seed);
    Ok(Report {
        experiment: "chowla",
        params: echo.finish(),
        seed: ctx.seed,
        columns: vec![
            "x", "omega", "normalized", "raw", "stderr", "method", "samples", "sample_seed",
        ],
        rows,
    })
}

fn needed_hi_chowla(spec: &CorrelationSpec, x: u64) -> u64 {
    spec.a()
        .iter()
        .zip(spec.b())
        .map(|(&a, &b)| a.saturating_mul(x).saturating_add(b))
        .max()
        .unwrap()
}

fn build_sequence(cfg: &SeqConfig) -> Result<DeterministicSequence> {
    Ok(match cfg {
        SeqConfig::Alternating => DeterministicSequence::alternating(),
        SeqConfig::Constant { re, im } => {
            DeterministicSequence::constant(Complex64::new(*re, *im))
        }
        SeqConfig::LinearPhase { alpha } => DeterministicSequence::linear_phase(*alpha)?,
        SeqConfig::Periodic { values } => DeterministicSequence::periodic(
            values.iter().map(|v| Complex64::new(v[0], v[1])).collect(),
        )?,
        SeqConfig::Blocks { blocks } => DeterministicSequence::block_adversarial(
            blocks
                .iter()
                .map(|b| liouville_core::nilseq::Block {
                    start: b.start,
                    len: b.len,
                    alpha: b.alpha,
                })
                .collect(),
        )?,
    })
}

fn seq_echo(cfg: &SeqConfig) -> String {
    match cfg {
        SeqConfig::Alternating => "alternating".into(),
        SeqConfig::Constant { re, im } => format!("constant({} {})", fmt_f64(*re), fmt_f64(*im)),
        SeqConfig::LinearPhase { alpha } => format!("linear_phase({})", fmt_f64(*alpha)),
        SeqConfig::Periodic { values } => format!("periodic(q={})", values.len()),
        SeqConfig::Blocks { blocks } => format!("blocks(count={})", blocks.len()),
    }
}

fn run_sarnak(c: &SarnakConfig, ctx: &RunCtx) -> Result<Report> {
    let seq = build_sequence(&c.sequence)?;
    let mode = resolve_mode(c.mode, c.samples, ctx.seed)?;
    let (source, source_echo) = make_source(&c.source, c.x, ctx)?;
    let window = make_window(c.x, c.omega)?;
    let parts = sarnak_correlation(&seq, &window, source.as_sign_source(), mode)?;
    let rows = ["re", "im"]
        .iter()
        .zip(parts.iter())
        .map(|(component, r)| {
            let (method, samples, seed) = mode_cells(r.method, r.sample_count, r.seed);
            vec![
                Cell::S((*component).into()),
                Cell::F(r.normalized),
                Cell::F(r.raw_sum),
                Cell::F(r.stderr),
                method,
                samples,
                seed,
            ]
        })
        .collect();
    let mut echo = ParamEcho::new();
    echo.push("sequence", seq_echo(&c.sequence))
        .push_u64("x", c.x)
        .push_f64("omega", c.omega)
        .push("source", &source_echo)
        .push_u64("seed", ctx.seed);
    Ok(Report {
        experiment: "sarnak",
        params: echo.finish(),
        seed: ctx.seed,
        columns: vec![
            "component",
            "normalized",
            "raw",
            "stderr",
            "method",
            "samples",
            "sample_seed",
        ],
        rows,
    })
}

fn run_gowers(c: &GowersConfig, ctx: &RunCtx) -> Result<Report> {
    let mode = resolve_mode(c.mode, c.samples, ctx.seed)?;
    let omegas: Vec<f64> = match (&c.omega, &c.omega_grid) {
        (Some(omega), None) => vec![*omega],
        (None, Some(grid)) => grid.clone(),
        _ => unreachable!("validated at parse time"),
    };
    let (source, source_echo) = make_source(&c.source, c.x + c.h, ctx)?;
    let mut rows = Vec::new();
    for &omega in &omegas {
        let window = make_window(c.x, omega)?;
        let est = local_uniformity_expectation(c.d, c.h, &window, source.as_sign_source(), mode)?;
        let (value, stderr, _, samples, seed) = estimate_cells(&est);
        rows.push(vec![
            Cell::U(c.d as u64),
            Cell::U(c.h),
            Cell::U(c.x),
            Cell::F(omega),
            value,
            stderr,
            samples,
            seed,
        ]);
    }
    let mut echo = ParamEcho::new();
    echo.push("source", &source_echo).push_u64("seed", ctx.seed);
    Ok(Report {
        experiment: "gowers",
        params: echo.finish(),
        seed: ctx.seed,
        columns: vec![
            "d", "H", "X", "omega", "estimate", "stderr", "samples", "seed",
        ],
        rows,
    })
}

fn run_nilcorr(c: &NilcorrConfig, ctx: &RunCtx) -> Result<Report> {
    let mode = resolve_mode(c.mode, c.samples, ctx.seed)?;
    let sup_cfg = c.sup.clone().unwrap_or(SupConfig::OneStep {
        eps_acc: 1e-3,
        certified: false,
    });
    let (sup, sup_echo) = match &sup_cfg {
        SupConfig::OneStep { eps_acc, certified } => (
            NilSupSpec::OneStep {
                eps_acc: *eps_acc,
                certified: *certified,
            },
            format!("one_step(eps_acc={};certified={certified})", fmt_f64(*eps_acc)),
        ),
        SupConfig::Heisenberg { x0, obs, grid } => (
            NilSupSpec::Heisenberg {
                x0: HeisPoint::new(x0[0], x0[1], x0[2]),
                obs: match obs {
                    ObsName::PhaseX => Observable::phase_x(),
                    ObsName::PhaseZ => Observable::phase_z(),
                },
                grid: *grid,
            },
            format!(
                "heisenberg(x0=[{} {} {}];obs={};grid={grid})",
                fmt_f64(x0[0]),
                fmt_f64(x0[1]),
                fmt_f64(x0[2]),
                match obs {
                    ObsName::PhaseX => "phase_x",
                    ObsName::PhaseZ => "phase_z",
                },
            ),
        ),
    };
    let (source, source_echo) = make_source(&c.source, c.x + c.h, ctx)?;
    let window = make_window(c.x, c.omega)?;
    let r = nil_correlation_sup(&window, c.h, &sup, mode, source.as_sign_source())?;
    let (value, stderr, method, samples, seed) = estimate_cells(&r.estimate);
    let mut echo = ParamEcho::new();
    echo.push("sup", &sup_echo)
        .push("source", &source_echo)
        .push_u64("seed", ctx.seed);
    Ok(Report {
        experiment: "nilcorr",
        params: echo.finish(),
        seed: ctx.seed,
        columns: vec![
            "h",
            "x",
            "omega",
            "estimate",
            "stderr",
            "certified",
            "method",
            "samples",
            "sample_seed",
        ],
        rows: vec![vec![
            Cell::U(c.h),
            Cell::U(c.x),
            Cell::F(c.omega),
            value,
            stderr,
            Cell::B(r.certified),
            method,
            samples,
            seed,
        ]],
    })
}

fn mi_row_cells(row: &MiRow) -> Vec<Cell> {
    vec![
        Cell::U(row.h),
        Cell::F(row.entropy_x_bits),
        Cell::F(row.entropy_y_bits),
        Cell::F(row.entropy_joint_bits),
        Cell::F(row.mi_bits),
        row.threshold.map_or(Cell::Null, Cell::F),
        Cell::B(row.flagged),
        Cell::S(
            match row.mode {
                Mode::Exact => "exact",
                Mode::Sampled { .. } => "sampled",
            }
            .into(),
        ),
        Cell::U(row.samples),
    ]
}

fn run_entropy(c: &EntropyConfig, ctx: &RunCtx) -> Result<Report> {
    let mode = resolve_mode(c.mode, c.samples, ctx.seed)?;
    let h_max = c.h.or(c.h_plus).unwrap();
    let needed = c.a.saturating_mul(c.x).saturating_add(h_max);
    let (source, source_echo) = make_source(&c.source, needed, ctx)?;
    let window = make_window(c.x, c.omega)?;
    let rows: Vec<Vec<Cell>> = if let Some(h) = c.h {
        let row = mutual_information(&window, c.a, h, c.eps, source.as_sign_source(), mode)?;
        vec![mi_row_cells(&row)]
    } else {
        let scan = entropy_scan(
            &window,
            c.a,
            c.h_minus.unwrap(),
            c.h_plus.unwrap(),
            c.eps,
            source.as_sign_source(),
            mode,
        )?;
        scan.rows.iter().map(mi_row_cells).collect()
    };
    let mut echo = ParamEcho::new();
    echo.push_u64("a", c.a)
        .push_f64("eps", c.eps)
        .push_u64("x", c.x)
        .push_f64("omega", c.omega)
        .push("source", &source_echo)
        .push_u64("seed", ctx.seed);
    Ok(Report {
        experiment: "entropy",
        params: echo.finish(),
        seed: ctx.seed,
        columns: vec![
            "H",
            "entropy_x_bits",
            "entropy_y_bits",
            "entropy_joint_bits",
            "mi_bits",
            "threshold",
            "flagged",
            "mode",
            "samples",
        ],
        rows,
    })
}

fn run_adversary(c: &AdversaryConfig, ctx: &RunCtx) -> Result<Report> {
    let schedule: Vec<Level> = c
        .schedule
        .iter()
        .map(|l| Level {
            h: l.h,
            omega: l.omega,
            x: l.x,
        })
        .collect();
    let needed = schedule
        .iter()
        .map(|l| l.x.saturating_add(l.h))
        .max()
        .unwrap();
    let (source, source_echo) = make_source(&c.source, needed, ctx)?;
    let build = build_adversarial_sequence(source.as_sign_source(), c.eps, &schedule, c.c)?;
    if let Some(path) = &c.advs_out {
        write_advs(path, &build.blocks)?;
    }
    let rows = build
        .reports
        .iter()
        .map(|r| {
            vec![
                Cell::U(r.level as u64),
                Cell::U(r.h),
                Cell::U(r.scan_lo),
                Cell::U(r.scan_hi),
                Cell::U(r.scanned),
                Cell::U(r.selected),
                Cell::U(r.kept),
                Cell::F(r.c_used),
                Cell::F(r.mass),
                Cell::F(r.score_sum),
                Cell::F(r.guaranteed),
                Cell::B(r.empty),
            ]
        })
        .collect();
    let mut echo = ParamEcho::new();
    let sched_echo: Vec<String> = c
        .schedule
        .iter()
        .map(|l| format!("(h={};omega={};x={})", l.h, fmt_f64(l.omega), l.x))
        .collect();
    echo.push_f64("eps", c.eps)
        .push("schedule", format!("[{}]", sched_echo.join(" ")))
        .push("source", &source_echo)
        .push_u64("seed", ctx.seed);
    if let Some(cv) = c.c {
        echo.push_f64("c", cv);
    }
    Ok(Report {
        experiment: "adversary",
        params: echo.finish(),
        seed: ctx.seed,
        columns: vec![
            "level",
            "h",
            "scan_lo",
            "scan_hi",
            "scanned",
            "selected",
            "kept",
            "c_used",
            "mass",
            "score_sum",
            "guaranteed",
            "empty",
        ],
        rows,
    })
}

/// The suite's per-quantity sampling sizes; fixed so the combined table is
/// a stable artifact for a given (X, ω, seed).
const SUITE_GOWERS_SAMPLES: u64 = 1 << 16;
const SUITE_NILCORR_SAMPLES: u64 = 1 << 12;
const SUITE_H: u64 = 64;
const SUITE_ENTROPY_H: u64 = 16;

fn run_suite(c: &SuiteConfig, ctx: &RunCtx) -> Result<Report> {
    let (table, _) = acquire_table(c.x + SUITE_H, ctx.cache.as_deref())?;
    let window = make_window(c.x, c.omega)?;
    let source: &dyn SignSource = &table;
    let mut rows: Vec<Vec<Cell>> = Vec::with_capacity(6);

    let push_corr = |rows: &mut Vec<Vec<Cell>>, name: &str, r: &CorrelationResult| {
        let (method, samples, seed) = mode_cells(r.method, r.sample_count, r.seed);
        rows.push(vec![
            Cell::S(name.into()),
            Cell::F(r.normalized),
            Cell::F(r.stderr),
            method,
            samples,
            seed,
        ]);
    };
    let push_est = |rows: &mut Vec<Vec<Cell>>, name: &str, est: &Estimate| {
        let (value, stderr, method, samples, seed) = estimate_cells(est);
        rows.push(vec![Cell::S(name.into()), value, stderr, method, samples, seed]);
    };

    let k1 = CorrelationSpec::new(vec![1], vec![0])?;
    push_corr(
        &mut rows,
        "chowla_k1",
        &chowla_correlation(&k1, &window, source, Mode::Exact)?,
    );

    let k2 = CorrelationSpec::new(vec![1, 1], vec![0, 1])?;
    push_corr(
        &mut rows,
        "chowla_k2",
        &chowla_correlation(&k2, &window, source, Mode::Exact)?,
    );

    let alternating = DeterministicSequence::alternating();
    let sarnak = sarnak_correlation(&alternating, &window, source, Mode::Exact)?;
    push_corr(&mut rows, "sarnak_alternating_re", &sarnak[0]);

    let gowers = local_uniformity_expectation(
        2,
        SUITE_H,
        &window,
        source,
        Mode::Sampled {
            count: SUITE_GOWERS_SAMPLES,
            seed: ctx.seed,
        },
    )?;
    push_est(&mut rows, "gowers_u2_local", &gowers);

    let nil = nil_correlation_sup(
        &window,
        SUITE_H,
        &NilSupSpec::OneStep {
            eps_acc: 1e-3,
            certified: false,
        },
        Mode::Sampled {
            count: SUITE_NILCORR_SAMPLES,
            seed: ctx.seed,
        },
        source,
    )?;
    push_est(&mut rows, "nilcorr_one_step", &nil.estimate);

    let mi = mutual_information(&window, 1, SUITE_ENTROPY_H, 1.0, source, Mode::Exact)?;
    rows.push(vec![
        Cell::S("entropy_mi_bits".into()),
        Cell::F(mi.mi_bits),
        Cell::F(0.0),
        Cell::S("exact".into()),
        Cell::U(0),
        Cell::Null,
    ]);

    let mut echo = ParamEcho::new();
    echo.push_u64("x", c.x)
        .push_f64("omega", c.omega)
        .push_u64("h", SUITE_H)
        .push_u64("entropy_h", SUITE_ENTROPY_H)
        .push_u64("gowers_samples", SUITE_GOWERS_SAMPLES)
        .push_u64("nilcorr_samples", SUITE_NILCORR_SAMPLES)
        .push("source", "liouville")
        .push_u64("seed", ctx.seed);
    Ok(Report {
        experiment: "suite",
        params: echo.finish(),
        seed: ctx.seed,
        columns: vec![
            "quantity",
            "value",
            "stderr",
            "method",
            "samples",
            "sample_seed",
        ],
        rows,
    })
}

/// `cache build`: sieve and persist every span up to n_max.
pub fn cache_build(dir: &Path, n_max: u64) -> Result<Report> {
    let (_, statuses) = acquire_table(n_max, Some(dir))?;
    let rows = statuses
        .iter()
        .map(|s| {
            vec![
                Cell::S(s.path.file_name().unwrap().to_string_lossy().into_owned()),
                Cell::U(s.lo),
                Cell::U(s.hi),
                Cell::S(if s.built { "built" } else { "cached" }.into()),
            ]
        })
        .collect();
    let mut echo = ParamEcho::new();
    echo.push("op", "build").push_u64("n_max", n_max);
    Ok(Report {
        experiment: "cache",
        params: echo.finish(),
        seed: 0,
        columns: vec!["file", "lo", "hi", "status"],
        rows,
    })
}

/// Spot checks per segment: 1% of the covered range, capped at 1000.
fn spot_check_count(lo: u64, hi: u64) -> u64 {
    ((hi - lo) / 100).clamp(1, 1000)
}

/// `cache verify`: CRC pass plus a seeded random λ spot-check against
/// trial factorization. Any mismatch aborts with an error naming the file.
pub fn cache_verify(dir: &Path, seed: u64) -> Result<Report> {
    let files = cache::list_segment_files(dir)?;
    if files.is_empty() {
        return Err(Error::Domain(format!(
            "no cache segments found in {}",
            dir.display()
        )));
    }
    let mut rows = Vec::new();
    for (path, name_lo, name_hi) in &files {
        // read_segment_file re-derives the CRC and fails on mismatch.
        let (lo, hi, words) = cache::read_segment_file(path)?;
        if (lo, hi) != (*name_lo, *name_hi) {
            return Err(Error::format(
                path,
                format!(
                    "header range [{lo}, {hi}) does not match the file \
                     name's [{name_lo}, {name_hi})"
                ),
            ));
        }
        let checks = spot_check_count(lo, hi);
        let mut rng = stream_rng(seed, lo);
        for _ in 0..checks {
            let n = lo + rng.random::<u64>() % (hi - lo);
            let bit = (words[((n - lo) / 64) as usize] >> ((n - lo) % 64)) & 1;
            let stored: i8 = if bit == 1 { -1 } else { 1 };
            let truth = liouville_u64(n);
            if stored != truth {
                return Err(Error::format(
                    path,
                    format!(
                        "lambda({n}) spot check failed: stored {stored}, \
                         factorization gives {truth}"
                    ),
                ));
            }
        }
        rows.push(vec![
            Cell::S(path.file_name().unwrap().to_string_lossy().into_owned()),
            Cell::U(lo),
            Cell::U(hi),
            Cell::B(true),
            Cell::U(checks),
        ]);
    }
    let mut echo = ParamEcho::new();
    echo.push("op", "verify").push_u64("seed", seed);
    Ok(Report {
        experiment: "cache",
        params: echo.finish(),
        seed,
        columns: vec!["file", "lo", "hi", "crc_ok", "spot_checks"],
        rows,
    })
}

/// The highest λ argument a config can touch, or 0 when it needs no table.
fn needed_hi(config: &ExperimentConfig) -> u64 {
    let uses_table = |s: &Option<SourceConfig>| {
        matches!(s.clone().unwrap_or(SourceConfig::Liouville), SourceConfig::Liouville)
    };
    match config {
        ExperimentConfig::Sieve(_) => 0,
        ExperimentConfig::Chowla(c) => {
            if !uses_table(&c.source) {
                return 0;
            }
            let spec = match CorrelationSpec::new(c.a.clone(), c.b.clone()) {
                Ok(s) => s,
                Err(_) => return 0,
            };
            let xs: Vec<u64> = if c.coupled {
                c.omega_grid
                    .as_deref()
                    .unwrap_or(&[])
                    .iter()
                    .map(|&g| g as u64)
                    .collect()
            } else {
                c.x.into_iter().collect()
            };
            xs.iter().map(|&x| needed_hi_chowla(&spec, x)).max().unwrap_or(0)
        }
        ExperimentConfig::Sarnak(c) => {
            if uses_table(&c.source) {
                c.x
            } else {
                0
            }
        }
        ExperimentConfig::Gowers(c) => {
            if uses_table(&c.source) {
                c.x + c.h
            } else {
                0
            }
        }
        ExperimentConfig::Nilcorr(c) => {
            if uses_table(&c.source) {
                c.x + c.h
            } else {
                0
            }
        }
        ExperimentConfig::Entropy(c) => {
            if uses_table(&c.source) {
                c.a
                    .saturating_mul(c.x)
                    .saturating_add(c.h.or(c.h_plus).unwrap_or(0))
            } else {
                0
            }
        }
        ExperimentConfig::Adversary(c) => {
            if uses_table(&c.source) {
                c.schedule
                    .iter()
                    .map(|l| l.x.saturating_add(l.h))
                    .max()
                    .unwrap_or(0)
            } else {
                0
            }
        }
        ExperimentConfig::Suite(c) => c.x + SUITE_H,
    }
}

/// `cache gc`: drop segments no config in the directory can reach.
///
/// Every `*.json` in the directory is parsed as an experiment config; a
/// segment survives if its range starts at or below the span-rounded
/// maximum λ argument any config needs. An unparseable config aborts the
/// collection — deleting data a config might still describe is worse than
/// keeping it.
pub fn cache_gc(dir: &Path) -> Result<Report> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut max_needed = 0u64;
    let mut config_count = 0u64;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| {
            Error::format(&path, format!("not a valid experiment config: {e}"))
        })?;
        let kind = value
            .get("experiment")
            .and_then(|v| v.as_str())
            .ok_or_else(|| {
                Error::format(&path, "config lacks an \"experiment\" field")
            })?
            .to_owned();
        let config = crate::config::parse_config(&text, &kind)
            .map_err(|e| Error::format(&path, format!("not a valid experiment config: {e}")))?;
        max_needed = max_needed.max(needed_hi(&config));
        config_count += 1;
    }
    let keep_limit = if max_needed == 0 {
        0
    } else {
        round_up_span(max_needed)
    };
    let files = cache::list_segment_files(dir)?;
    let mut rows = Vec::new();
    for (path, lo, hi) in files {
        let keep = lo < keep_limit;
        if !keep {
            fs::remove_file(&path).map_err(|e| Error::io(&path, e))?;
        }
        rows.push(vec![
            Cell::S(path.file_name().unwrap().to_string_lossy().into_owned()),
            Cell::U(lo),
            Cell::U(hi),
            Cell::S(if keep { "kept" } else { "removed" }.into()),
        ]);
    }
    let mut echo = ParamEcho::new();
    echo.push("op", "gc")
        .push_u64("configs", config_count)
        .push_u64("max_needed", max_needed);
    Ok(Report {
        experiment: "cache",
        params: echo.finish(),
        seed: 0,
        columns: vec!["file", "lo", "hi", "action"],
        rows,
    })
}
