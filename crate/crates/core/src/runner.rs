//! Config-driven experiment runner.
//!
//! A run reads one TOML file:
//!
//! ```toml
//! experiment = "CORRELATION"   # CONVERGENCE | KAPPA | RANK_ONE | MPS_EXPECT | CORRELATION | ASSUMPTIONS
//! out = "out"                  # optional; relative to the working directory
//!
//! [driver]
//! kind = "IID"                 # IID | ROTATION | MARKOV | FIXED_PLUS_NOISE
//! dim = 2
//! kraus_rank = 4
//! seed = 7
//!
//! [params]                     # experiment-specific, all optional
//! separations = [1, 12]
//!
//! [tolerances]                 # optional overrides
//! limit_tol = 1e-12
//! ```
//!
//! Kind-specific driver keys:
//!
//! - `IID`: `trace_preserving` (default `true`).
//! - `ROTATION`: `omega0`, `alpha` (default `(√5 − 1)/2`), optional `base`
//!   channel and `hamiltonian` (row-major real pairs); missing pieces are
//!   drawn from `seed`.
//! - `FIXED_PLUS_NOISE`: `base` channel, `epsilon` (default `0`).
//! - `MARKOV`: `channels` (list of channels), `transition` (row-stochastic).
//!
//! A channel is an inline table with a `type`: `depolarizing`, `identity`,
//! `amplitude_damping` (`gamma`), `random` (`seed`, `trace_preserving`),
//! `unitary` (`seed`), `hennion` (`matrix`) or `file` (`path` to a Kraus JSON
//! file, relative to the config file).
//!
//! Observables are either a path to an observable JSON file or an inline
//! table `{ support = [m, n], matrix = [[re, im], …] }`.
//!
//! Every output file is written to the output directory and hashed into
//! `manifest.json` together with the effective config and the crate version.
//! Outputs do not depend on the thread count.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cpmaps::{CPMap, DEFAULT_PROBES};
use crate::ergodic::{golden_alpha, validate_assumptions, ErgodicDriver};
use crate::error::Error;
use crate::fit::linear_fit;
use crate::io::{observable_from_json, read_kraus};
use crate::matcore::{hermitian_defect, CMat, HermMatrix, C64, TOL_HERM};
use crate::mps::{correlation, finite_expectation, gauge_fix, thermo_expectation, thermo_expectation_ratio, LocalObservable, MpsChain};
use crate::process::{kappa_estimate, limit_sequence, rank_one_error, right_perron_distance, Side};
use crate::rng::{keyed_rng, random_unitary, tag};
use crate::table::Table;

pub const MAX_DIM: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Experiment {
    Convergence,
    Kappa,
    RankOne,
    MpsExpect,
    Correlation,
    Assumptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub driver: DriverConfig,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DriverKindName {
    Iid,
    Rotation,
    Markov,
    FixedPlusNoise,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriverConfig {
    pub kind: DriverKindName,
    pub dim: usize,
    #[serde(default = "one")]
    pub kraus_rank: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_preserving: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<ChannelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channels: Option<Vec<ChannelSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transition: Option<Vec<Vec<f64>>>,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelSpec {
    Depolarizing,
    Identity,
    AmplitudeDamping { gamma: f64 },
    Random { seed: u64, #[serde(default = "yes")] trace_preserving: bool },
    Unitary { seed: u64 },
    Hennion { matrix: Vec<Vec<f64>> },
    File { path: PathBuf },
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObservableSpec {
    Path(PathBuf),
    Inline { support: [i64; 2], matrix: Vec<[f64; 2]> },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// CONVERGENCE: largest `N`; KAPPA: `N_max`; RANK_ONE: largest `n − m`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    /// RANK_ONE: smallest `n − m`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_min: Option<usize>,
    /// KAPPA and RANK_ONE: number of averaged windows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_windows: Option<usize>,
    /// Starting depth of the limit sequences.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    /// MPS_EXPECT: half-lengths `N` of the chains `[−N, N]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain_half_lengths: Option<Vec<i64>>,
    /// CORRELATION: inclusive range `[s_min, s_max]` of separations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub separations: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observable: Option<ObservableSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observable2: Option<ObservableSpec>,
    /// Only `"periodic"` is supported.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<String>,
    /// ASSUMPTIONS: window horizon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_probes: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit_tol: Option<f64>,
}

pub const DEFAULT_LIMIT_TOL: f64 = 1e-12;

/// Failure classes with their process exit codes.
#[derive(Debug)]
pub enum RunError {
    Config(String),
    Assumption(Vec<String>),
    Convergence(String),
    Other(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Assumption(_) => 3,
            RunError::Convergence(_) => 4,
            RunError::Other(_) => 1,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "config error: {m}"),
            RunError::Assumption(v) => write!(f, "assumption failure: {}", v.join("; ")),
            RunError::Convergence(m) => write!(f, "convergence failure: {m}"),
            RunError::Other(m) => write!(f, "error: {m}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::Convergence { .. } | Error::SpectralGap(_) => RunError::Convergence(e.to_string()),
            other => RunError::Other(other.to_string()),
        }
    }
}

fn config_err(field: &str, msg: impl std::fmt::Display) -> RunError {
    RunError::Config(format!("{field}: {msg}"))
}

/// Parses and validates a config; `base_dir` resolves relative file paths.
pub fn parse_config(text: &str) -> Result<RunConfig, RunError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| RunError::Config(e.to_string()))?;
    validate_config(&cfg)?;
    Ok(cfg)
}

pub fn validate_config(cfg: &RunConfig) -> Result<(), RunError> {
    let d = &cfg.driver;
    if d.dim == 0 || d.dim > MAX_DIM {
        return Err(config_err("driver.dim", format!("{} is outside 1..={MAX_DIM}", d.dim)));
    }
    if d.kraus_rank == 0 || d.kraus_rank > d.dim * d.dim {
        return Err(config_err("driver.kraus_rank", format!("{} is outside 1..={}", d.kraus_rank, d.dim * d.dim)));
    }
    if let Some(b) = &cfg.params.boundary {
        if b != "periodic" {
            return Err(config_err(
                "params.boundary",
                format!("{b:?} is not supported; only periodic chains are implemented"),
            ));
        }
    }
    if let Some(t) = cfg.tolerances.limit_tol {
        if !(t > 0.0) {
            return Err(config_err("tolerances.limit_tol", "must be positive"));
        }
    }
    if let Some([lo, hi]) = cfg.params.separations {
        if lo == 0 || lo > hi {
            return Err(config_err("params.separations", "must be [s_min, s_max] with 1 ≤ s_min ≤ s_max"));
        }
    }
    let needs = |field: &str, present: bool| {
        if present {
            Ok(())
        } else {
            Err(config_err(field, "required for this driver kind"))
        }
    };
    match d.kind {
        DriverKindName::FixedPlusNoise => needs("driver.base", d.base.is_some())?,
        DriverKindName::Markov => {
            needs("driver.channels", d.channels.is_some())?;
            needs("driver.transition", d.transition.is_some())?;
        }
        _ => {}
    }
    Ok(())
}

fn build_channel(spec: &ChannelSpec, dim: usize, rank: usize, base_dir: &Path, field: &str) -> Result<CPMap, RunError> {
    let ch = match spec {
        ChannelSpec::Depolarizing => CPMap::depolarizing(dim),
        ChannelSpec::Identity => CPMap::identity(dim),
        ChannelSpec::AmplitudeDamping { gamma } => {
            if dim != 2 {
                return Err(config_err(field, "amplitude damping is defined for dim = 2"));
            }
            if !(0.0..=1.0).contains(gamma) {
                return Err(config_err(field, format!("gamma = {gamma} is outside [0, 1]")));
            }
            CPMap::amplitude_damping(*gamma)
        }
        ChannelSpec::Random { seed, trace_preserving } => {
            ErgodicDriver::iid(dim, rank, *seed, *trace_preserving).map_err(|e| config_err(field, e))?.channel_at(0)
        }
        ChannelSpec::Unitary { seed } => {
            let mut rng = keyed_rng(*seed, tag::BASE, 0);
            CPMap::unitary(random_unitary(dim, &mut rng)).map_err(|e| config_err(field, e))?
        }
        ChannelSpec::Hennion { matrix } => {
            let n = matrix.len();
            if matrix.iter().any(|r| r.len() != n) {
                return Err(config_err(field, "hennion matrix must be square"));
            }
            let a = DMatrix::from_fn(n, n, |i, j| matrix[i][j]);
            CPMap::hennion_embed(&a).map_err(|e| config_err(field, e))?
        }
        ChannelSpec::File { path } => read_kraus(&base_dir.join(path)).map_err(|e| config_err(field, e))?,
    };
    if ch.dim() != dim {
        return Err(config_err(field, format!("channel has dimension {}, driver has {dim}", ch.dim())));
    }
    if ch.rank() > dim * dim {
        return Err(config_err(field, format!("{} Kraus operators exceed dim² = {}", ch.rank(), dim * dim)));
    }
    Ok(ch)
}

pub fn build_driver(d: &DriverConfig, base_dir: &Path) -> Result<ErgodicDriver, RunError> {
    let cfg = |e: Error| config_err("driver", e);
    match d.kind {
        DriverKindName::Iid => ErgodicDriver::iid(d.dim, d.kraus_rank, d.seed, d.trace_preserving.unwrap_or(true)).map_err(cfg),
        DriverKindName::Rotation => {
            let seeded = ErgodicDriver::rotation_seeded(d.dim, d.kraus_rank, d.seed).map_err(cfg)?;
            let crate::ergodic::DriverKind::Rotation { base, hamiltonian, omega0, .. } = seeded.kind().clone() else {
                unreachable!("rotation_seeded builds a rotation driver")
            };
            let base = match &d.base {
                Some(spec) => build_channel(spec, d.dim, d.kraus_rank, base_dir, "driver.base")?,
                None => base,
            };
            let hamiltonian = match &d.hamiltonian {
                Some(list) => {
                    if list.len() != d.dim * d.dim {
                        return Err(config_err("driver.hamiltonian", format!("expected {} entries", d.dim * d.dim)));
                    }
                    let m = CMat::from_row_iterator(d.dim, d.dim, list.iter().map(|&[re, im]| C64::new(re, im)));
                    let defect = hermitian_defect(&m);
                    if defect > TOL_HERM {
                        return Err(config_err("driver.hamiltonian", Error::NotHermitian(defect)));
                    }
                    HermMatrix::from_hermitian_part(&m)
                }
                None => hamiltonian,
            };
            ErgodicDriver::rotation(base, hamiltonian, d.omega0.unwrap_or(omega0), d.alpha.unwrap_or_else(golden_alpha), d.seed)
                .map_err(cfg)
        }
        DriverKindName::FixedPlusNoise => {
            let base = build_channel(d.base.as_ref().expect("validated"), d.dim, d.kraus_rank, base_dir, "driver.base")?;
            ErgodicDriver::fixed_plus_noise(base, d.epsilon.unwrap_or(0.0), d.seed).map_err(cfg)
        }
        DriverKindName::Markov => {
            let channels = d
                .channels
                .as_ref()
                .expect("validated")
                .iter()
                .enumerate()
                .map(|(i, s)| build_channel(s, d.dim, d.kraus_rank, base_dir, &format!("driver.channels[{i}]")))
                .collect::<Result<Vec<_>, _>>()?;
            let rows = d.transition.as_ref().expect("validated");
            let k = rows.len();
            if rows.iter().any(|r| r.len() != k) {
                return Err(config_err("driver.transition", "must be square"));
            }
            let p = DMatrix::from_fn(k, k, |i, j| rows[i][j]);
            ErgodicDriver::markov(channels, p, d.seed).map_err(|e| config_err("driver.transition", e))
        }
    }
}

fn build_observable(spec: &ObservableSpec, base_dir: &Path, field: &str) -> Result<LocalObservable, RunError> {
    let text = match spec {
        ObservableSpec::Path(p) => std::fs::read_to_string(base_dir.join(p)).map_err(|e| config_err(field, e))?,
        ObservableSpec::Inline { support, matrix } => serde_json::json!({ "support": support, "matrix": matrix }).to_string(),
    };
    observable_from_json(&text).map_err(|e| config_err(field, e))
}

/// Files produced by a run, keyed by name.
pub type Outputs = BTreeMap<String, Vec<u8>>;

#[derive(Serialize)]
struct Manifest<'a> {
    version: &'a str,
    experiment: Experiment,
    config: &'a RunConfig,
    config_text: &'a str,
    outputs: Vec<ManifestEntry>,
}

#[derive(Serialize)]
struct ManifestEntry {
    file: String,
    sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn json_bytes<T: Serialize>(v: &T) -> Result<Vec<u8>, RunError> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| RunError::Other(e.to_string()))?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn csv_bytes(t: &Table) -> Result<Vec<u8>, RunError> {
    Ok(t.to_csv()?.into_bytes())
}

/// Runs one experiment and returns its output files (without the manifest).
pub fn execute(cfg: &RunConfig, base_dir: &Path) -> Result<Outputs, RunError> {
    let driver = build_driver(&cfg.driver, base_dir)?;
    let p = &cfg.params;
    let tol = cfg.tolerances.limit_tol.unwrap_or(DEFAULT_LIMIT_TOL);
    let depth = p.depth.unwrap_or(8);
    let mut out = Outputs::new();
    match cfg.experiment {
        Experiment::Convergence => {
            let n_max = p.n_max.unwrap_or(16);
            let limit = limit_sequence(&driver, Side::Right, depth, tol)?;
            let rows: Vec<(usize, f64)> = (1..=n_max)
                .into_par_iter()
                .map(|n| right_perron_distance(&driver, n).map(|d| (n, d)))
                .collect::<Result<_, _>>()?;
            let mut t = Table::new(&["n", "d_right_perron_z0"]);
            for (n, d) in rows {
                t.push(vec![n.into(), d.into()])?;
            }
            out.insert("convergence.csv".into(), csv_bytes(&t)?);
            out.insert("convergence.json".into(), json_bytes(&serde_json::json!({ "limit_depth": limit.depth() }))?);
        }
        Experiment::Kappa => {
            let est = kappa_estimate(&driver, p.n_max.unwrap_or(12), p.n_windows.unwrap_or(8))?;
            let mut t = Table::new(&["n", "mean_ln_c", "per_step", "windows_used"]);
            for r in &est.table {
                t.push(vec![r.n.into(), r.mean_ln_c.into(), r.per_step.into(), r.windows_used.into()])?;
            }
            out.insert("kappa.csv".into(), csv_bytes(&t)?);
            out.insert(
                "kappa.json".into(),
                json_bytes(&serde_json::json!({ "kappa_hat": est.kappa_hat, "warnings": est.warnings }))?,
            );
        }
        Experiment::RankOne => {
            let (lo, hi) = (p.n_min.unwrap_or(2), p.n_max.unwrap_or(14));
            let windows = p.n_windows.unwrap_or(1).max(1);
            let right = limit_sequence(&driver, Side::Right, depth, tol)?;
            let left = limit_sequence(&driver, Side::Left, depth, tol)?;
            let jobs: Vec<(usize, usize)> = (lo..=hi).flat_map(|g| (0..windows).map(move |w| (g, w))).collect();
            let vals: Vec<(usize, f64, f64)> = jobs
                .into_par_iter()
                .map(|(g, w)| {
                    let m = (w * (hi + 1)) as i64;
                    rank_one_error(&driver, m, m + g as i64, &right, &left).map(|e| (g, e.sampled, e.split_bound))
                })
                .collect::<Result<_, _>>()?;
            let mut t = Table::new(&["n_minus_m", "sampled", "split_bound"]);
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for g in lo..=hi {
                let here: Vec<&(usize, f64, f64)> = vals.iter().filter(|v| v.0 == g).collect();
                let sampled = here.iter().map(|v| v.1).sum::<f64>() / here.len() as f64;
                let split = here.iter().map(|v| v.2).sum::<f64>() / here.len() as f64;
                t.push(vec![g.into(), sampled.into(), split.into()])?;
                if sampled > 0.0 {
                    xs.push(g as f64);
                    ys.push(sampled.ln());
                }
            }
            let fit = linear_fit(&xs, &ys);
            let kappa = kappa_estimate(&driver, hi.max(2), windows)?;
            out.insert("rank_one.csv".into(), csv_bytes(&t)?);
            out.insert(
                "rank_one.json".into(),
                json_bytes(&serde_json::json!({
                    "slope": fit.map(|f| f.slope),
                    "mu_hat": fit.map(|f| f.slope.exp()),
                    "log_envelope_intercept": fit.map(|f| f.upper_envelope_intercept()),
                    "kappa_hat": kappa.kappa_hat,
                    "kappa_warnings": kappa.warnings,
                }))?,
            );
        }
        Experiment::MpsExpect => {
            let spec = p.observable.as_ref().ok_or_else(|| config_err("params.observable", "required"))?;
            let o = build_observable(spec, base_dir, "params.observable")?;
            check_phys_dim(&o, &driver, "params.observable")?;
            let (a, b) = o.support();
            let right = limit_sequence(&driver, Side::Right, depth, tol)?;
            let left = limit_sequence(&driver, Side::Left, depth, tol)?;
            let gauge = gauge_fix(&driver, &left, &right, a, b)?;
            let w = thermo_expectation(&gauge, &o)?;
            let ratio = thermo_expectation_ratio(&gauge, &o)?;
            let lengths = p.chain_half_lengths.clone().unwrap_or_else(|| (2..=14).step_by(2).collect());
            for &n in &lengths {
                if -n > a || n < b {
                    return Err(config_err("params.chain_half_lengths", format!("[-{n}, {n}] does not contain the support")));
                }
            }
            let rows: Vec<(i64, f64)> = lengths
                .par_iter()
                .map(|&n| {
                    let chain = MpsChain::from_driver(&driver, -n, n)?;
                    finite_expectation(&chain, &o).map(|v| (n, v))
                })
                .collect::<Result<_, Error>>()?;
            let mut t = Table::new(&["n", "finite", "thermo", "gap"]);
            for (n, v) in rows {
                t.push(vec![n.into(), v.into(), w.into(), (v - w).abs().into()])?;
            }
            out.insert("mps_expect.csv".into(), csv_bytes(&t)?);
            out.insert("mps_expect.json".into(), json_bytes(&serde_json::json!({ "thermo": w, "ratio_formula": ratio }))?);
        }
        Experiment::Correlation => {
            let d = driver.kraus_rank();
            let o1 = match &p.observable {
                Some(s) => build_observable(s, base_dir, "params.observable")?,
                None => default_observable(d, cfg.driver.seed, 0),
            };
            let o2 = match &p.observable2 {
                Some(s) => build_observable(s, base_dir, "params.observable2")?,
                None => default_observable(d, cfg.driver.seed, 1),
            };
            check_phys_dim(&o1, &driver, "params.observable")?;
            check_phys_dim(&o2, &driver, "params.observable2")?;
            let [s_min, s_max] = p.separations.unwrap_or([1, 12]);
            let (m1, n1) = o1.support();
            let len2 = o2.len() as i64;
            let right = limit_sequence(&driver, Side::Right, depth, tol)?;
            let left = limit_sequence(&driver, Side::Left, depth, tol)?;
            let gauge = gauge_fix(&driver, &left, &right, m1, n1 + s_max as i64 + len2 - 1)?;
            let rows = (s_min..=s_max)
                .into_par_iter()
                .map(|s| {
                    let start = n1 + s as i64;
                    let shifted = LocalObservable::new((start, start + len2 - 1), o2.matrix().clone(), d)?;
                    correlation(&gauge, &o1, &shifted).map(|c| (s, c))
                })
                .collect::<Result<Vec<_>, Error>>()?;
            let mut t = Table::new(&["separation", "w12", "w1", "w2", "connected"]);
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for (s, c) in &rows {
                t.push(vec![(*s).into(), c.w12.into(), c.w1.into(), c.w2.into(), c.connected.into()])?;
                if c.connected != 0.0 {
                    xs.push(*s as f64);
                    ys.push(c.connected.abs().ln());
                }
            }
            let fit = linear_fit(&xs, &ys);
            out.insert("correlation.csv".into(), csv_bytes(&t)?);
            out.insert(
                "correlation.json".into(),
                json_bytes(&serde_json::json!({
                    "rate": fit.map(|f| f.slope.exp()),
                    "log_envelope_intercept": fit.map(|f| f.upper_envelope_intercept()),
                }))?,
            );
        }
        Experiment::Assumptions => {
            let report = validate_assumptions(&driver, p.horizon.unwrap_or(8), p.n_probes.unwrap_or(DEFAULT_PROBES));
            out.insert("assumptions.json".into(), json_bytes(&report)?);
            let violations = report.violations();
            if !violations.is_empty() {
                return Err(RunError::Assumption(violations.iter().map(|s| s.to_string()).collect()));
            }
        }
    }
    Ok(out)
}

fn check_phys_dim(o: &LocalObservable, driver: &ErgodicDriver, field: &str) -> Result<(), RunError> {
    if o.phys_dim() != driver.kraus_rank() {
        return Err(config_err(
            field,
            format!("acts on spins of dimension {}, driver has {} Kraus operators", o.phys_dim(), driver.kraus_rank()),
        ));
    }
    Ok(())
}

/// Diagonal single-site observable `diag(0, 1, …, d−1)` rotated by a seeded
/// unitary.
fn default_observable(d: usize, seed: u64, index: i64) -> LocalObservable {
    let mut rng = keyed_rng(seed, tag::SAMPLES, index);
    let u = random_unitary(d, &mut rng);
    let diag = HermMatrix::from_real_diagonal(&(0..d).map(|k| k as f64).collect::<Vec<_>>());
    let m = &u * diag.as_mat() * u.adjoint();
    LocalObservable::new((0, 0), HermMatrix::from_hermitian_part(&m).into_inner(), d).expect("valid single-site observable")
}

/// Command-line overrides.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

/// Parses the config at `path`, runs it and writes outputs plus
/// `manifest.json`. Assumption failures still write their report.
pub fn run(path: &Path, opts: &RunOptions) -> Result<PathBuf, RunError> {
    let text = std::fs::read_to_string(path).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
    let mut cfg = parse_config(&text)?;
    if let Some(seed) = opts.seed {
        cfg.driver.seed = seed;
    }
    // where the files land is not part of the experiment, so `--out` stays out of the manifest
    let out_dir = opts.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads.unwrap_or(0))
        .build()
        .map_err(|e| RunError::Other(e.to_string()))?;
    let (outputs, status) = match pool.install(|| execute(&cfg, &base_dir)) {
        Ok(o) => (o, Ok(())),
        Err(RunError::Assumption(v)) => {
            // the report is still useful, so rerun just the report
            let driver = build_driver(&cfg.driver, &base_dir)?;
            let p = &cfg.params;
            let report = validate_assumptions(&driver, p.horizon.unwrap_or(8), p.n_probes.unwrap_or(DEFAULT_PROBES));
            let mut o = Outputs::new();
            o.insert("assumptions.json".into(), json_bytes(&report)?);
            (o, Err(RunError::Assumption(v)))
        }
        Err(e) => return Err(e),
    };
    write_outputs(&out_dir, &cfg, &text, &outputs)?;
    status.map(|_| out_dir)
}

fn write_outputs(dir: &Path, cfg: &RunConfig, text: &str, outputs: &Outputs) -> Result<(), RunError> {
    let io = |e: std::io::Error| RunError::Other(format!("{}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut entries = Vec::new();
    for (name, bytes) in outputs {
        std::fs::write(dir.join(name), bytes).map_err(io)?;
        entries.push(ManifestEntry { file: name.clone(), sha256: sha256_hex(bytes) });
    }
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        experiment: cfg.experiment,
        config: cfg,
        config_text: text,
        outputs: entries,
    };
    std::fs::write(dir.join("manifest.json"), json_bytes(&manifest)?).map_err(io)?;
    Ok(())
}
