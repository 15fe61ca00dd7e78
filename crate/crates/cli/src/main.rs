//! lioulab: deterministic experiments on multiplicative sign patterns.
//!
//! Every command reads one experiment configuration (a JSON file via
//! `--config`, or the equivalent inline flags), runs it on a rayon pool of
//! the requested size, and writes a CSV and/or JSON report. For a fixed
//! (config, seed, code version) the CSV output is byte-identical
//! regardless of thread count; timing lives only in the JSON form.
//!
//! Exit codes: 0 success; 2 configuration error (bad parameters,
//! violated preconditions, failed statistical validity); 3 environment
//! error (missing coverage, exceeded budgets, IO, corrupt files);
//! 4 internal invariant violation (a bug).

mod config;
mod experiments;
mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use liouville_core::{Error, Result};

use config::{parse_config, ExperimentConfig, FormatName};
use experiments::RunCtx;
use report::{json_string, Report};

#[derive(Parser)]
#[command(name = "lioulab", version, about = "Deterministic sign-pattern experiment runner")]
struct Cli {
    /// Worker threads for the rayon pool [default: all cores]
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Directory holding sieve segment files (created on demand)
    #[arg(long, global = true)]
    cache: Option<PathBuf>,

    /// Report base path; writes BASE.csv and BASE.json [default: stdout]
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for every sampled computation [default: 0]
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Restrict output to one format [default: both to files, csv to stdout]
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

impl From<FormatArg> for FormatName {
    fn from(f: FormatArg) -> FormatName {
        match f {
            FormatArg::Json => FormatName::Json,
            FormatArg::Csv => FormatName::Csv,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate lambda, mu, and the von Mangoldt function over [lo, hi]
    Sieve(SieveArgs),
    /// Logarithmically averaged sign correlation E s(a1 n + b1)...s(ak n + bk)
    Chowla(ChowlaArgs),
    /// Logarithmically averaged correlation against a deterministic sequence
    Sarnak(SarnakArgs),
    /// Expected local uniformity norm E ||s||_{U^d[n, n+H]}
    Gowers(GowersArgs),
    /// Expected phase-supremum correlation E sup |sum s(n+h) F(g^h x)| / H
    Nilcorr(NilcorrArgs),
    /// Pattern/residue mutual information and the scale scan
    Entropy(EntropyArgs),
    /// Multi-scale adversarial block sequence construction
    Adversary(AdversaryArgs),
    /// All six headline quantities on one shared window, one combined table
    Suite(SuiteArgs),
    /// Sieve cache administration
    Cache(CacheArgs),
}

#[derive(Args)]
struct SieveArgs {
    /// JSON config file (mutually exclusive with inline parameters)
    #[arg(long)]
    config: Option<PathBuf>,
    /// First n [default: 1]
    #[arg(long)]
    lo: Option<u64>,
    /// Last n (at most 10000 rows)
    #[arg(long)]
    hi: Option<u64>,
}

#[derive(Args)]
struct ChowlaArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dilations a1,...,ak
    #[arg(long, value_delimiter = ',')]
    a: Option<Vec<u64>>,
    /// Shifts b1,...,bk
    #[arg(long, value_delimiter = ',')]
    b: Option<Vec<u64>>,
    /// Window top X
    #[arg(long)]
    x: Option<u64>,
    /// Window depth: the window is [X/omega, X]
    #[arg(long)]
    omega: Option<f64>,
    /// Ascending omega values, one report row each
    #[arg(long, value_delimiter = ',')]
    omega_grid: Option<Vec<f64>>,
    /// Couple X = omega across the grid (pure log average)
    #[arg(long, action = clap::ArgAction::SetTrue)]
    coupled: Option<bool>,
    /// exact | sampled [default: exact]
    #[arg(long)]
    mode: Option<String>,
    /// Draw count for sampled mode
    #[arg(long)]
    samples: Option<u64>,
    /// liouville | constant | synthetic | {"half_residue":{"p0":P}}
    #[arg(long)]
    source: Option<String>,
}

#[derive(Args)]
struct SarnakArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// alternating | {"linear_phase":{"alpha":A}} | {"periodic":{"values":[[re,im],..]}} | ...
    #[arg(long)]
    sequence: Option<String>,
    #[arg(long)]
    x: Option<u64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    source: Option<String>,
}

#[derive(Args)]
struct GowersArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Norm order d in 1..=6
    #[arg(long)]
    d: Option<u32>,
    /// Local block length H
    #[arg(long)]
    h: Option<u64>,
    #[arg(long)]
    x: Option<u64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    omega_grid: Option<Vec<f64>>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    source: Option<String>,
}

#[derive(Args)]
struct NilcorrArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Correlation length H
    #[arg(long)]
    h: Option<u64>,
    #[arg(long)]
    x: Option<u64>,
    #[arg(long)]
    omega: Option<f64>,
    /// {"one_step":{"eps_acc":E,"certified":B}} | {"heisenberg":{...}}
    /// [default: one_step, eps_acc 1e-3, heuristic]
    #[arg(long)]
    sup: Option<String>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    source: Option<String>,
}

#[derive(Args)]
struct EntropyArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Pattern dilation a [default: 1]
    #[arg(long)]
    a: Option<u64>,
    /// Single scale H (alternative to the h-minus/h-plus scan)
    #[arg(long)]
    h: Option<u64>,
    /// Scan start (>= 16)
    #[arg(long)]
    h_minus: Option<u64>,
    /// Scan end
    #[arg(long)]
    h_plus: Option<u64>,
    /// Dilation parameter: primes are drawn from [eps^2 H / 2, eps^2 H]
    /// [default: 1.0]
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    x: Option<u64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    source: Option<String>,
}

#[derive(Args)]
struct AdversaryArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Selection threshold scale
    #[arg(long)]
    eps: Option<f64>,
    /// JSON level list: [{"h":H,"omega":W,"x":X},...]
    #[arg(long)]
    schedule: Option<String>,
    /// Override the selection constant c [default: mean score / 4]
    #[arg(long)]
    c: Option<f64>,
    /// Persist the block list in ADVS format at this path
    #[arg(long)]
    advs_out: Option<PathBuf>,
    #[arg(long)]
    source: Option<String>,
}

#[derive(Args)]
struct SuiteArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Shared window top [default: 1000000]
    #[arg(long)]
    x: Option<u64>,
    /// Shared window depth [default: 100]
    #[arg(long)]
    omega: Option<f64>,
}

#[derive(Args)]
struct CacheArgs {
    #[command(subcommand)]
    op: CacheOp,
}

#[derive(Subcommand)]
enum CacheOp {
    /// Sieve and persist segments covering [1, n_max]
    Build {
        #[arg(long)]
        n_max: u64,
    },
    /// CRC check plus a seeded random spot-check against factorization
    Verify,
    /// Remove segments no config file in the cache directory needs
    Gc,
}

/// A flag value that is either inline JSON or a bare enum-variant name.
fn json_or_bare(s: &str) -> serde_json::Value {
    serde_json::from_str(s).unwrap_or_else(|_| serde_json::Value::String(s.to_owned()))
}

type JsonMap = serde_json::Map<String, serde_json::Value>;

fn put(map: &mut JsonMap, key: &str, v: Option<serde_json::Value>) {
    if let Some(v) = v {
        map.insert(key.to_owned(), v);
    }
}

fn u64v(v: &Option<u64>) -> Option<serde_json::Value> {
    v.map(|x| serde_json::Value::from(x))
}

fn f64v(v: &Option<f64>) -> Option<serde_json::Value> {
    v.map(serde_json::Value::from)
}

fn strv(v: &Option<String>) -> Option<serde_json::Value> {
    v.as_deref().map(json_or_bare)
}

/// Assemble the inline flags of one subcommand into the config JSON map.
fn inline_map(cmd: &Command) -> JsonMap {
    let mut m = JsonMap::new();
    match cmd {
        Command::Sieve(a) => {
            put(&mut m, "lo", u64v(&a.lo));
            put(&mut m, "hi", u64v(&a.hi));
        }
        Command::Chowla(a) => {
            put(
                &mut m,
                "a",
                a.a.as_ref().map(|v| serde_json::Value::from(v.clone())),
            );
            put(
                &mut m,
                "b",
                a.b.as_ref().map(|v| serde_json::Value::from(v.clone())),
            );
            put(&mut m, "x", u64v(&a.x));
            put(&mut m, "omega", f64v(&a.omega));
            put(
                &mut m,
                "omega_grid",
                a.omega_grid
                    .as_ref()
                    .map(|v| serde_json::Value::from(v.clone())),
            );
            if a.coupled == Some(true) {
                m.insert("coupled".into(), serde_json::Value::from(true));
            }
            put(&mut m, "mode", strv(&a.mode));
            put(&mut m, "samples", u64v(&a.samples));
            put(&mut m, "source", strv(&a.source));
        }
        Command::Sarnak(a) => {
            put(&mut m, "sequence", strv(&a.sequence));
            put(&mut m, "x", u64v(&a.x));
            put(&mut m, "omega", f64v(&a.omega));
            put(&mut m, "mode", strv(&a.mode));
            put(&mut m, "samples", u64v(&a.samples));
            put(&mut m, "source", strv(&a.source));
        }
        Command::Gowers(a) => {
            put(&mut m, "d", a.d.map(serde_json::Value::from));
            put(&mut m, "h", u64v(&a.h));
            put(&mut m, "x", u64v(&a.x));
            put(&mut m, "omega", f64v(&a.omega));
            put(
                &mut m,
                "omega_grid",
                a.omega_grid
                    .as_ref()
                    .map(|v| serde_json::Value::from(v.clone())),
            );
            put(&mut m, "mode", strv(&a.mode));
            put(&mut m, "samples", u64v(&a.samples));
            put(&mut m, "source", strv(&a.source));
        }
        Command::Nilcorr(a) => {
            put(&mut m, "h", u64v(&a.h));
            put(&mut m, "x", u64v(&a.x));
            put(&mut m, "omega", f64v(&a.omega));
            put(&mut m, "sup", strv(&a.sup));
            put(&mut m, "mode", strv(&a.mode));
            put(&mut m, "samples", u64v(&a.samples));
            put(&mut m, "source", strv(&a.source));
        }
        Command::Entropy(a) => {
            put(&mut m, "a", u64v(&a.a));
            put(&mut m, "h", u64v(&a.h));
            put(&mut m, "h_minus", u64v(&a.h_minus));
            put(&mut m, "h_plus", u64v(&a.h_plus));
            put(&mut m, "eps", f64v(&a.eps));
            put(&mut m, "x", u64v(&a.x));
            put(&mut m, "omega", f64v(&a.omega));
            put(&mut m, "mode", strv(&a.mode));
            put(&mut m, "samples", u64v(&a.samples));
            put(&mut m, "source", strv(&a.source));
        }
        Command::Adversary(a) => {
            put(&mut m, "eps", f64v(&a.eps));
            put(&mut m, "schedule", strv(&a.schedule));
            put(&mut m, "c", f64v(&a.c));
            put(
                &mut m,
                "advs_out",
                a.advs_out
                    .as_ref()
                    .map(|p| serde_json::Value::String(p.display().to_string())),
            );
            put(&mut m, "source", strv(&a.source));
        }
        Command::Suite(a) => {
            put(&mut m, "x", u64v(&a.x));
            put(&mut m, "omega", f64v(&a.omega));
        }
        Command::Cache(_) => {}
    }
    m
}

fn command_kind(cmd: &Command) -> &'static str {
    match cmd {
        Command::Sieve(_) => "sieve",
        Command::Chowla(_) => "chowla",
        Command::Sarnak(_) => "sarnak",
        Command::Gowers(_) => "gowers",
        Command::Nilcorr(_) => "nilcorr",
        Command::Entropy(_) => "entropy",
        Command::Adversary(_) => "adversary",
        Command::Suite(_) => "suite",
        Command::Cache(_) => "cache",
    }
}

fn config_path(cmd: &Command) -> Option<&PathBuf> {
    match cmd {
        Command::Sieve(a) => a.config.as_ref(),
        Command::Chowla(a) => a.config.as_ref(),
        Command::Sarnak(a) => a.config.as_ref(),
        Command::Gowers(a) => a.config.as_ref(),
        Command::Nilcorr(a) => a.config.as_ref(),
        Command::Entropy(a) => a.config.as_ref(),
        Command::Adversary(a) => a.config.as_ref(),
        Command::Suite(a) => a.config.as_ref(),
        Command::Cache(_) => None,
    }
}

/// Resolve the experiment config from file or inline flags — never both.
fn load_config(cmd: &Command) -> Result<ExperimentConfig> {
    let kind = command_kind(cmd);
    let inline = inline_map(cmd);
    match (config_path(cmd), inline.is_empty()) {
        (Some(path), true) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            parse_config(&text, kind)
        }
        (Some(_), false) => Err(Error::Domain(
            "give either --config or inline experiment parameters, not both".into(),
        )),
        (None, _) => {
            let mut map = inline;
            map.insert(
                "experiment".into(),
                serde_json::Value::String(kind.to_owned()),
            );
            let text = serde_json::Value::Object(map).to_string();
            parse_config(&text, kind)
        }
    }
}

fn categorize(e: &Error) -> (&'static str, i32) {
    match e {
        Error::Domain(_) => ("domain", 2),
        Error::Contract(_) => ("contract", 2),
        Error::Statistical(_) => ("statistical", 2),
        Error::Coverage { .. } => ("coverage", 3),
        Error::Resource(_) => ("resource", 3),
        Error::Io { .. } => ("io", 3),
        Error::Format { .. } => ("format", 3),
        Error::Invariant(_) => ("invariant", 4),
    }
}

/// Write or print the report according to --out/--format.
fn emit(report: &Report, out: Option<&Path>, format: Option<FormatName>, wall: f64) -> Result<()> {
    match out {
        None => {
            match format.unwrap_or(FormatName::Csv) {
                FormatName::Csv => print!("{}", report.to_csv()),
                FormatName::Json => print!("{}", report.to_json(wall)),
            }
            Ok(())
        }
        Some(path) => {
            let base = match path.extension().and_then(|e| e.to_str()) {
                Some("csv") | Some("json") => path.with_extension(""),
                _ => path.to_path_buf(),
            };
            if let Some(parent) = base.parent() {
                if !parent.as_os_str().is_empty() {
                    fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
                }
            }
            let mut written = Vec::new();
            if format != Some(FormatName::Json) {
                let p = base.with_extension("csv");
                fs::write(&p, report.to_csv()).map_err(|e| Error::io(&p, e))?;
                written.push(p);
            }
            if format != Some(FormatName::Csv) {
                let p = base.with_extension("json");
                fs::write(&p, report.to_json(wall)).map_err(|e| Error::io(&p, e))?;
                written.push(p);
            }
            for p in written {
                eprintln!("wrote {}", p.display());
            }
            Ok(())
        }
    }
}

fn real_main(cli: Cli) -> Result<()> {
    // The cache command is administration, not an experiment.
    if let Command::Cache(args) = &cli.command {
        let dir = cli
            .cache
            .as_deref()
            .ok_or_else(|| Error::Domain("the cache command needs --cache DIR".into()))?;
        if let Some(n) = cli.threads {
            build_pool(n)?;
        }
        let start = Instant::now();
        let report = match args.op {
            CacheOp::Build { n_max } => {
                if n_max == 0 {
                    return Err(Error::Domain("cache build needs n_max >= 1".into()));
                }
                experiments::cache_build(dir, n_max)?
            }
            CacheOp::Verify => experiments::cache_verify(dir, cli.seed.unwrap_or(0))?,
            CacheOp::Gc => experiments::cache_gc(dir)?,
        };
        let wall = start.elapsed().as_secs_f64();
        return emit(
            &report,
            cli.out.as_deref(),
            cli.format.map(FormatName::from),
            wall,
        );
    }

    let config = load_config(&cli.command)?;
    let shared = config.shared();
    let seed = cli.seed.or(shared.seed).unwrap_or(0);
    let threads = cli.threads.or(shared.threads);
    let cache = cli.cache.clone().or(shared.cache);
    let out = cli.out.clone().or(shared.out);
    let format = cli.format.map(FormatName::from).or(shared.format);

    if let Some(n) = threads {
        build_pool(n)?;
    }
    let ctx = RunCtx { seed, cache };
    let start = Instant::now();
    let report = experiments::run(&config, &ctx)?;
    let wall = start.elapsed().as_secs_f64();
    emit(&report, out.as_deref(), format, wall)
}

fn build_pool(threads: usize) -> Result<()> {
    if threads == 0 {
        return Err(Error::Domain("--threads must be >= 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Invariant(format!("thread pool: {e}")))
}

fn main() {
    let cli = Cli::parse();
    match real_main(cli) {
        Ok(()) => {}
        Err(e) => {
            let (category, code) = categorize(&e);
            eprintln!(
                "{{\"error\": {{\"category\": {}, \"message\": {}}}}}",
                json_string(category),
                json_string(&e.to_string())
            );
            std::process::exit(code);
        }
    }
}
