//! Strict experiment configuration.
//!
//! A configuration arrives either as a JSON file or as command-line flags
//! assembled into the same JSON object; both go through one serde schema
//! per experiment kind with unknown keys rejected by name. Cheap
//! precondition checks run here, before any sieve or window work starts;
//! the core operations re-validate and remain the authority.

use std::path::PathBuf;

use liouville_core::logavg::CorrelationSpec;
use liouville_core::{Error, Mode, Result};
use serde::Deserialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    Exact,
    Sampled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormatName {
    Json,
    Csv,
}

/// Where the ±1 signs come from.
#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceConfig {
    /// The Liouville function, sieved (and cached when --cache is set).
    Liouville,
    /// The all-ones source; correlations become window means.
    Constant,
    /// Seeded i.i.d. fair signs.
    Synthetic,
    /// sign(n) = +1 iff n mod p0 lies in the lower half of [0, p0).
    HalfResidue { p0: u64 },
}

impl SourceConfig {
    pub fn echo(&self) -> String {
        match self {
            SourceConfig::Liouville => "liouville".into(),
            SourceConfig::Constant => "constant".into(),
            SourceConfig::Synthetic => "synthetic".into(),
            SourceConfig::HalfResidue { p0 } => format!("half_residue(p0={p0})"),
        }
    }
}

/// Deterministic sequences available to the sarnak command.
#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeqConfig {
    Alternating,
    Constant { re: f64, im: f64 },
    LinearPhase { alpha: f64 },
    Periodic { values: Vec<[f64; 2]> },
    Blocks { blocks: Vec<BlockConfig> },
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockConfig {
    pub start: u64,
    pub len: u64,
    pub alpha: f64,
}

/// Which supremum the nilcorr command takes per window point.
#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupConfig {
    OneStep {
        eps_acc: f64,
        certified: bool,
    },
    Heisenberg {
        x0: [f64; 3],
        obs: ObsName,
        grid: u32,
    },
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObsName {
    PhaseX,
    PhaseZ,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelConfig {
    pub h: u64,
    pub omega: f64,
    pub x: u64,
}

/// Fields every experiment kind shares; command-line globals override
/// them, they override the built-in defaults.
#[derive(Clone, Debug, Default)]
pub struct SharedConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub cache: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub format: Option<FormatName>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SieveConfig {
    #[serde(default = "default_one")]
    pub lo: u64,
    pub hi: u64,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub cache: Option<PathBuf>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<FormatName>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChowlaConfig {
    pub a: Vec<u64>,
    pub b: Vec<u64>,
    #[serde(default)]
    pub x: Option<u64>,
    #[serde(default)]
    pub omega: Option<f64>,
    #[serde(default)]
    pub omega_grid: Option<Vec<f64>>,
    /// In coupled mode the grid entries are shared X = ω values.
    #[serde(default)]
    pub coupled: bool,
    #[serde(default)]
    pub mode: Option<ModeName>,
    #[serde(default)]
    pub samples: Option<u64>,
    #[serde(default)]
    pub source: Option<SourceConfig>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub cache: Option<PathBuf>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<FormatName>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SarnakConfig {
    pub sequence: SeqConfig,
    pub x: u64,
    pub omega: f64,
    #[serde(default)]
    pub mode: Option<ModeName>,
    #[serde(default)]
    pub samples: Option<u64>,
    #[serde(default)]
    pub source: Option<SourceConfig>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub cache: Option<PathBuf>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<FormatName>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GowersConfig {
    pub d: u32,
    pub h: u64,
    pub x: u64,
    #[serde(default)]
    pub omega: Option<f64>,
    #[serde(default)]
    pub omega_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub mode: Option<ModeName>,
    #[serde(default)]
    pub samples: Option<u64>,
    #[serde(default)]
    pub source: Option<SourceConfig>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub cache: Option<PathBuf>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<FormatName>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NilcorrConfig {
    pub h: u64,
    pub x: u64,
    pub omega: f64,
    #[serde(default)]
    pub sup: Option<SupConfig>,
    #[serde(default)]
    pub mode: Option<ModeName>,
    #[serde(default)]
    pub samples: Option<u64>,
    #[serde(default)]
    pub source: Option<SourceConfig>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub cache: Option<PathBuf>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<FormatName>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropyConfig {
    #[serde(default = "default_one")]
    pub a: u64,
    #[serde(default)]
    pub h: Option<u64>,
    #[serde(default)]
    pub h_minus: Option<u64>,
    #[serde(default)]
    pub h_plus: Option<u64>,
    #[serde(default = "default_eps")]
    pub eps: f64,
    pub x: u64,
    pub omega: f64,
    #[serde(default)]
    pub mode: Option<ModeName>,
    #[serde(default)]
    pub samples: Option<u64>,
    #[serde(default)]
    pub source: Option<SourceConfig>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub cache: Option<PathBuf>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<FormatName>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversaryConfig {
    pub eps: f64,
    pub schedule: Vec<LevelConfig>,
    #[serde(default)]
    pub c: Option<f64>,
    /// Where to persist the block list in ADVS format.
    #[serde(default)]
    pub advs_out: Option<PathBuf>,
    #[serde(default)]
    pub source: Option<SourceConfig>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub cache: Option<PathBuf>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<FormatName>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    #[serde(default = "default_suite_x")]
    pub x: u64,
    #[serde(default = "default_suite_omega")]
    pub omega: f64,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub cache: Option<PathBuf>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<FormatName>,
}

fn default_one() -> u64 {
    1
}

fn default_eps() -> f64 {
    1.0
}

fn default_suite_x() -> u64 {
    1_000_000
}

fn default_suite_omega() -> f64 {
    100.0
}

/// One parsed experiment of any kind.
#[derive(Clone, Debug)]
pub enum ExperimentConfig {
    Sieve(SieveConfig),
    Chowla(ChowlaConfig),
    Sarnak(SarnakConfig),
    Gowers(GowersConfig),
    Nilcorr(NilcorrConfig),
    Entropy(EntropyConfig),
    Adversary(AdversaryConfig),
    Suite(SuiteConfig),
}

impl ExperimentConfig {
    pub fn shared(&self) -> SharedConfig {
        macro_rules! pick {
            ($c:expr) => {
                SharedConfig {
                    seed: $c.seed,
                    threads: $c.threads,
                    cache: $c.cache.clone(),
                    out: $c.out.clone(),
                    format: $c.format,
                }
            };
        }
        match self {
            ExperimentConfig::Sieve(c) => pick!(c),
            ExperimentConfig::Chowla(c) => pick!(c),
            ExperimentConfig::Sarnak(c) => pick!(c),
            ExperimentConfig::Gowers(c) => pick!(c),
            ExperimentConfig::Nilcorr(c) => pick!(c),
            ExperimentConfig::Entropy(c) => pick!(c),
            ExperimentConfig::Adversary(c) => pick!(c),
            ExperimentConfig::Suite(c) => pick!(c),
        }
    }
}

fn config_err(e: serde_json::Error) -> Error {
    Error::Domain(format!("config: {e}"))
}

/// Parse an experiment configuration from JSON text. `expected_kind` is
/// the subcommand the user invoked; the config's `experiment` field must
/// agree.
pub fn parse_config(text: &str, expected_kind: &str) -> Result<ExperimentConfig> {
    let mut value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::Domain(format!("config is not valid JSON: {e}")))?;
    let kind = value
        .get("experiment")
        .and_then(|v| v.as_str())
        .ok_or_else(|| {
            Error::Domain("config must carry an \"experiment\" field naming the kind".into())
        })?
        .to_owned();
    if kind != expected_kind {
        return Err(Error::Domain(format!(
            "config declares experiment \"{kind}\" but the {expected_kind} command was invoked"
        )));
    }
    // The envelope key is consumed here; the typed schemas hold only the
    // experiment parameters.
    value.as_object_mut().unwrap().remove("experiment");
    let parsed = match kind.as_str() {
        "sieve" => ExperimentConfig::Sieve(serde_json::from_value(value).map_err(config_err)?),
        "chowla" => ExperimentConfig::Chowla(serde_json::from_value(value).map_err(config_err)?),
        "sarnak" => ExperimentConfig::Sarnak(serde_json::from_value(value).map_err(config_err)?),
        "gowers" => ExperimentConfig::Gowers(serde_json::from_value(value).map_err(config_err)?),
        "nilcorr" => {
            ExperimentConfig::Nilcorr(serde_json::from_value(value).map_err(config_err)?)
        }
        "entropy" => {
            ExperimentConfig::Entropy(serde_json::from_value(value).map_err(config_err)?)
        }
        "adversary" => {
            ExperimentConfig::Adversary(serde_json::from_value(value).map_err(config_err)?)
        }
        "suite" => ExperimentConfig::Suite(serde_json::from_value(value).map_err(config_err)?),
        other => {
            return Err(Error::Domain(format!(
                "unknown experiment kind \"{other}\"; expected one of sieve, chowla, sarnak, \
                 gowers, nilcorr, entropy, adversary, suite"
            )))
        }
    };
    validate(&parsed)?;
    Ok(parsed)
}

/// Resolve (mode, samples) into the core Mode, rejecting inconsistent
/// combinations.
pub fn resolve_mode(mode: Option<ModeName>, samples: Option<u64>, seed: u64) -> Result<Mode> {
    match (mode.unwrap_or(ModeName::Exact), samples) {
        (ModeName::Exact, None) => Ok(Mode::Exact),
        (ModeName::Exact, Some(_)) => Err(Error::Domain(
            "\"samples\" is only meaningful with \"mode\": \"sampled\"".into(),
        )),
        (ModeName::Sampled, Some(count)) => Ok(Mode::Sampled { count, seed }),
        (ModeName::Sampled, None) => Err(Error::Domain(
            "sampled mode requires a \"samples\" count".into(),
        )),
    }
}

fn check_window(x: u64, omega: f64) -> Result<()> {
    if !(omega >= 1.0) || !omega.is_finite() || omega > x as f64 {
        return Err(Error::Domain(format!(
            "omega = {omega}, X = {x} violate 1 <= omega <= X"
        )));
    }
    Ok(())
}

fn check_window_with_h(h: u64, x: u64, omega: f64) -> Result<()> {
    if h < 2 || !omega.is_finite() || (h as f64) > omega || omega > x as f64 {
        return Err(Error::Domain(format!(
            "H = {h}, omega = {omega}, X = {x} violate 2 <= H <= omega <= X"
        )));
    }
    Ok(())
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Domain("omega_grid must not be empty".into()));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Domain(
            "omega_grid must be strictly ascending".into(),
        ));
    }
    Ok(())
}

/// Cheap precondition checks, run before any sieve work starts.
fn validate(config: &ExperimentConfig) -> Result<()> {
    match config {
        ExperimentConfig::Sieve(c) => {
            if c.lo == 0 || c.hi < c.lo {
                return Err(Error::Domain(format!(
                    "sieve range [{}, {}] violates 1 <= lo <= hi",
                    c.lo, c.hi
                )));
            }
            Ok(())
        }
        ExperimentConfig::Chowla(c) => {
            // Nondegeneracy of (a, b), rejected before computation.
            CorrelationSpec::new(c.a.clone(), c.b.clone())?;
            resolve_mode(c.mode, c.samples, 0)?;
            match (&c.omega, &c.omega_grid, c.coupled) {
                (Some(_), Some(_), _) => Err(Error::Domain(
                    "give either \"omega\" or \"omega_grid\", not both".into(),
                )),
                (None, None, _) => Err(Error::Domain(
                    "chowla needs \"omega\" or \"omega_grid\"".into(),
                )),
                (Some(_), None, true) => Err(Error::Domain(
                    "coupled mode scans \"omega_grid\" with X = omega; a single \
                     \"omega\" does not apply"
                        .into(),
                )),
                (Some(omega), None, false) => {
                    let x = c.x.ok_or_else(|| Error::Domain("chowla needs \"x\"".into()))?;
                    check_window(x, *omega)
                }
                (None, Some(grid), coupled) => {
                    check_grid(grid)?;
                    if coupled {
                        if c.x.is_some() {
                            return Err(Error::Domain(
                                "coupled mode sets X = omega per grid entry; \"x\" \
                                 must be absent"
                                    .into(),
                            ));
                        }
                        for &g in grid {
                            check_window(g as u64, g)?;
                        }
                    } else {
                        let x =
                            c.x.ok_or_else(|| Error::Domain("chowla needs \"x\"".into()))?;
                        for &g in grid {
                            check_window(x, g)?;
                        }
                    }
                    Ok(())
                }
            }
        }
        ExperimentConfig::Sarnak(c) => {
            resolve_mode(c.mode, c.samples, 0)?;
            check_window(c.x, c.omega)
        }
        ExperimentConfig::Gowers(c) => {
            resolve_mode(c.mode, c.samples, 0)?;
            match (&c.omega, &c.omega_grid) {
                (Some(_), Some(_)) => Err(Error::Domain(
                    "give either \"omega\" or \"omega_grid\", not both".into(),
                )),
                (None, None) => Err(Error::Domain(
                    "gowers needs \"omega\" or \"omega_grid\"".into(),
                )),
                (Some(omega), None) => check_window_with_h(c.h, c.x, *omega),
                (None, Some(grid)) => {
                    check_grid(grid)?;
                    for &g in grid {
                        check_window_with_h(c.h, c.x, g)?;
                    }
                    Ok(())
                }
            }
        }
        ExperimentConfig::Nilcorr(c) => {
            resolve_mode(c.mode, c.samples, 0)?;
            check_window_with_h(c.h, c.x, c.omega)
        }
        ExperimentConfig::Entropy(c) => {
            resolve_mode(c.mode, c.samples, 0)?;
            check_window(c.x, c.omega)?;
            if c.a == 0 {
                return Err(Error::Domain("entropy needs a >= 1".into()));
            }
            match (c.h, c.h_minus, c.h_plus) {
                (Some(h), None, None) => {
                    if h == 0 {
                        Err(Error::Domain("entropy needs H >= 1".into()))
                    } else {
                        Ok(())
                    }
                }
                (None, Some(lo), Some(hi)) => {
                    if lo > hi {
                        Err(Error::Domain(format!(
                            "scan range is empty: h_minus = {lo} > h_plus = {hi}"
                        )))
                    } else {
                        Ok(())
                    }
                }
                _ => Err(Error::Domain(
                    "entropy needs either \"h\" or both \"h_minus\" and \"h_plus\"".into(),
                )),
            }
        }
        ExperimentConfig::Adversary(c) => {
            if !(c.eps > 0.0) || !c.eps.is_finite() {
                return Err(Error::Domain(format!(
                    "eps = {} must be positive",
                    c.eps
                )));
            }
            if c.schedule.is_empty() {
                return Err(Error::Domain(
                    "adversary needs a nonempty \"schedule\"".into(),
                ));
            }
            Ok(())
        }
        // The suite's uniformity and phase-sup rows run at H = 64, so the
        // shared window must be at least that deep.
        ExperimentConfig::Suite(c) => check_window_with_h(64, c.x, c.omega),
    }
}
