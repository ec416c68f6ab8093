//! Experiment runner: JSON configuration, parameter sweeps, fits and CSV output.

mod output;
mod scenarios;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channels::{ChannelKind, ChannelSpec};
use crate::deformed::Strength;
use crate::fermion::{fit_power_law, PowerLawFit};
use crate::models::{ModelKind, ModelSpec};
use crate::numeric::{DENSE_QUBIT_CAP, SPARSE_QUBIT_CAP};
use crate::symmetry::SymmetryKind;

pub use output::{emit_csv, emit_plotdata, plot_points, write_outputs, OutputFiles, PlotPoint, COLUMNS};

/// Bumped whenever the CSV column set changes.
pub const SCHEMA_VERSION: u32 = 1;
pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    QfiScaling,
    ThetaCurves,
    ChannelSweep,
    Deformed,
    Subsystem,
    Hadamard,
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::QfiScaling,
        Scenario::ThetaCurves,
        Scenario::ChannelSweep,
        Scenario::Deformed,
        Scenario::Subsystem,
        Scenario::Hadamard,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::QfiScaling => "qfi_scaling",
            Scenario::ThetaCurves => "theta_curves",
            Scenario::ChannelSweep => "channel_sweep",
            Scenario::Deformed => "deformed",
            Scenario::Subsystem => "subsystem",
            Scenario::Hadamard => "hadamard",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Scenario::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown scenario `{s}`; expected one of {}", Scenario::ALL.map(|x| x.name()).join(", ")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Probe {
    /// Ground state of the configured model.
    Critical,
    CriticalFm,
    CriticalAfm,
    Ghz,
    SpinCoherent,
    Oat,
}

impl Probe {
    pub fn name(self) -> &'static str {
        match self {
            Probe::Critical => "critical",
            Probe::CriticalFm => "critical_fm",
            Probe::CriticalAfm => "critical_afm",
            Probe::Ghz => "ghz",
            Probe::SpinCoherent => "spin_coherent",
            Probe::Oat => "oat",
        }
    }
}

/// θ grid: an explicit list or `points` samples of `[min, max]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ThetaGrid {
    Values(Vec<f64>),
    Range {
        min: f64,
        max: f64,
        points: usize,
        #[serde(default)]
        log: bool,
    },
}

impl ThetaGrid {
    pub fn values(&self) -> Result<Vec<f64>, ConfigError> {
        let v = match self {
            ThetaGrid::Values(v) => v.clone(),
            ThetaGrid::Range { min, max, points, log } => {
                if *points < 1 || !(min.is_finite() && max.is_finite()) || max < min {
                    return Err(ConfigError::field("theta", "range needs finite min ≤ max and at least one point"));
                }
                if *points == 1 {
                    vec![*min]
                } else if *log {
                    crate::subsys::log_grid(*min, *max, *points).map_err(|e| ConfigError::field("theta", e.to_string()))?
                } else {
                    (0..*points).map(|k| min + (max - min) * k as f64 / (*points - 1) as f64).collect()
                }
            }
        };
        if v.is_empty() || v.iter().any(|t| !t.is_finite()) {
            return Err(ConfigError::field("theta", "grid must be non-empty and finite"));
        }
        Ok(v)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Scenario>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub probes: Vec<Probe>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<ThetaGrid>,
    /// Chain lengths (rungs for the ladder).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sizes: Vec<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub p_values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub l_sub: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub betas: Vec<Strength>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<usize>,
    /// Free-fermion sizes appended to `qfi_scaling` as a large-L extrapolation.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fermion_sizes: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub symmetries: Vec<SymmetryKind>,
}

/// Configuration after defaults are applied and every field validated.
#[derive(Clone, Debug, Serialize)]
pub struct ResolvedConfig {
    pub scenario: Scenario,
    pub model: ModelSpec,
    pub channel: Option<ChannelSpec>,
    pub probes: Vec<Probe>,
    pub thetas: Vec<f64>,
    pub sizes: Vec<usize>,
    pub seed: u64,
    pub p_values: Vec<f64>,
    pub l_sub: Vec<usize>,
    pub betas: Vec<Strength>,
    pub shots: usize,
    pub fermion_sizes: Vec<usize>,
    pub symmetries: Vec<SymmetryKind>,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError { field: field.into(), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid `{}`: {}", self.field, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(ConfigError),
    #[error("numeric failure in {module}::{op}: {source}")]
    Numeric {
        module: &'static str,
        op: &'static str,
        #[source]
        source: crate::Error,
    },
    #[error("output error: {0}")]
    Output(String),
}

impl RunError {
    /// Process exit code: 2 for configuration problems, 3 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Output(_) => 2,
            RunError::Numeric { .. } => 3,
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

pub(crate) trait Context<T> {
    fn ctx(self, module: &'static str, op: &'static str) -> Result<T, RunError>;
}

impl<T> Context<T> for crate::Result<T> {
    fn ctx(self, module: &'static str, op: &'static str) -> Result<T, RunError> {
        self.map_err(|source| match source {
            crate::Error::InvalidArgument { field, message } => RunError::Config(ConfigError::field(field, message)),
            source => RunError::Numeric { module, op, source },
        })
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    serde_json::from_str(text).map_err(|e| ConfigError::field("config", e.to_string()))
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::field("config", format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn default_sizes(s: Scenario) -> Vec<usize> {
    match s {
        Scenario::QfiScaling => (2..=7).map(|k| 2 * k).collect(),
        Scenario::ThetaCurves => vec![10],
        Scenario::ChannelSweep => vec![4, 6, 8],
        Scenario::Deformed => vec![4, 5],
        Scenario::Subsystem => vec![14],
        Scenario::Hadamard => vec![8, 10, 12],
    }
}

fn default_theta(s: Scenario) -> ThetaGrid {
    match s {
        Scenario::ThetaCurves => ThetaGrid::Range { min: -0.2, max: 0.2, points: 41, log: false },
        Scenario::Subsystem => ThetaGrid::Range { min: 1e-3, max: 1.0, points: crate::subsys::DEFAULT_GRID_POINTS, log: true },
        Scenario::Hadamard => ThetaGrid::Values(vec![1e-3]),
        _ => ThetaGrid::Values(vec![0.0]),
    }
}

fn check_range(field: &str, v: f64, lo: f64, hi: f64) -> Result<(), ConfigError> {
    if !(v >= lo && v <= hi) {
        return Err(ConfigError::field(field, format!("{v} outside [{lo}, {hi}]")));
    }
    Ok(())
}

impl ExperimentConfig {
    /// Apply scenario defaults, check every field and hash the result.
    pub fn resolve(&self, scenario: Option<Scenario>, seed_override: Option<u64>) -> Result<ResolvedConfig, ConfigError> {
        let scenario = match (scenario, self.scenario) {
            (Some(a), Some(b)) if a != b => {
                return Err(ConfigError::field("scenario", format!("command line says `{a}`, config says `{b}`")))
            }
            (Some(a), _) | (None, Some(a)) => a,
            (None, None) => return Err(ConfigError::field("scenario", "not given")),
        };
        let model = self.model.clone().unwrap_or_else(|| match scenario {
            Scenario::Deformed => ModelSpec::cluster_ladder(4),
            _ => ModelSpec::tfim(4, 1.0, 1.0),
        });
        let sizes = if self.sizes.is_empty() { default_sizes(scenario) } else { self.sizes.clone() };
        let probes = if !self.probes.is_empty() {
            self.probes.clone()
        } else {
            match scenario {
                Scenario::QfiScaling => vec![Probe::Ghz, Probe::CriticalFm, Probe::CriticalAfm, Probe::SpinCoherent],
                Scenario::ChannelSweep => vec![Probe::Critical, Probe::Ghz],
                _ => vec![Probe::Critical],
            }
        };
        let thetas = self.theta.clone().unwrap_or_else(|| default_theta(scenario)).values()?;
        let p_values = if !self.p_values.is_empty() {
            self.p_values.clone()
        } else {
            self.channel.as_ref().map(|c| vec![c.p]).unwrap_or_default()
        };
        let l_sub = if self.l_sub.is_empty() && scenario == Scenario::Subsystem { vec![6, 8, 10] } else { self.l_sub.clone() };
        let betas = if self.betas.is_empty() && scenario == Scenario::Deformed {
            (0..=8).map(|k| Strength::Finite(0.25 * k as f64)).collect()
        } else {
            self.betas.clone()
        };
        let symmetries = if self.symmetries.is_empty() {
            vec![SymmetryKind::ParityX, SymmetryKind::Reflection, SymmetryKind::Translation]
        } else {
            self.symmetries.clone()
        };
        let seed = seed_override.unwrap_or(self.seed);
        let mut r = ResolvedConfig {
            scenario,
            model,
            channel: self.channel.clone(),
            probes,
            thetas,
            sizes,
            seed,
            p_values,
            l_sub,
            betas,
            shots: self.shots.unwrap_or(10_000),
            fermion_sizes: self.fermion_sizes.clone(),
            symmetries,
            config_hash: String::new(),
        };
        r.validate()?;
        let canonical = serde_json::to_string(&r).map_err(|e| ConfigError::field("config", e.to_string()))?;
        r.config_hash = hex(&Sha256::digest(canonical.as_bytes()));
        Ok(r)
    }
}

impl ResolvedConfig {
    fn validate(&self) -> Result<(), ConfigError> {
        if self.sizes.is_empty() {
            return Err(ConfigError::field("sizes", "empty"));
        }
        let ed_cap = match self.scenario {
            Scenario::ChannelSweep => 8,
            Scenario::Deformed => 7,
            _ => DENSE_QUBIT_CAP.min(SPARSE_QUBIT_CAP),
        };
        for &l in &self.sizes {
            if l < 2 || l > ed_cap {
                return Err(ConfigError::field("sizes", format!("{l} outside [2, {ed_cap}] for {}", self.scenario)));
            }
            let spec = ModelSpec { sites: l, ..self.model.clone() };
            spec.validate().map_err(|e| ConfigError::field("model", e.to_string()))?;
        }
        let is_tfim = matches!(self.model.kind, ModelKind::Tfim { .. });
        match self.scenario {
            Scenario::QfiScaling => {
                if self.probes.contains(&Probe::Critical) && matches!(self.model.kind, ModelKind::ClusterLadder { .. }) {
                    return Err(ConfigError::field("model", "ladder probes are handled by the deformed scenario"));
                }
                if !self.fermion_sizes.is_empty() {
                    if !is_tfim {
                        return Err(ConfigError::field("fermion_sizes", "free-fermion extension needs a tfim model"));
                    }
                    if self.fermion_sizes.iter().any(|&l| !(4..=4096).contains(&l)) {
                        return Err(ConfigError::field("fermion_sizes", "sizes must lie in [4, 4096]"));
                    }
                }
            }
            Scenario::ThetaCurves | Scenario::Hadamard => {
                if !is_tfim {
                    return Err(ConfigError::field("model", "symmetry protocols use the tfim model"));
                }
                if self.sizes.iter().any(|l| l % 2 != 0 || *l < 4) {
                    return Err(ConfigError::field("sizes", "staggered imprinters need even L ≥ 4"));
                }
                if self.symmetries.contains(&SymmetryKind::ParityZ) {
                    return Err(ConfigError::field("symmetries", "parity_z does not anticommute with a Z imprinter"));
                }
            }
            Scenario::ChannelSweep => {
                let c = self.channel.as_ref().ok_or_else(|| ConfigError::field("channel", "required for channel_sweep"))?;
                if c.kind != ChannelKind::GlobalDephase && self.p_values.is_empty() {
                    return Err(ConfigError::field("p_values", "empty"));
                }
                for &p in &self.p_values {
                    let hi = if c.kind == ChannelKind::DephaseZ { 0.4999999 } else { 1.0 };
                    check_range("p_values", p, 0.0, hi)?;
                }
                for &l in &self.sizes {
                    let spec = ChannelSpec { p: self.p_values.first().copied().unwrap_or(c.p), ..c.clone() };
                    spec.validate(l).map_err(|e| ConfigError::field("channel", e.to_string()))?;
                }
                if self.probes.contains(&Probe::Critical) && matches!(self.model.kind, ModelKind::ClusterLadder { .. }) {
                    return Err(ConfigError::field("model", "channel sweeps use chain models"));
                }
            }
            Scenario::Deformed => {
                if !matches!(self.model.kind, ModelKind::ClusterLadder { .. }) {
                    return Err(ConfigError::field("model", "deformed scenario needs the cluster_ladder model"));
                }
                if self.sizes.iter().any(|&r| r < 3) {
                    return Err(ConfigError::field("sizes", "rungs must lie in [3, 7]"));
                }
                if self.betas.is_empty() {
                    return Err(ConfigError::field("betas", "empty"));
                }
                if self.shots < 2 {
                    return Err(ConfigError::field("shots", "need at least two samples"));
                }
            }
            Scenario::Subsystem => {
                if !matches!(self.model.kind, ModelKind::Tfim { .. } | ModelKind::Xxz { .. }) {
                    return Err(ConfigError::field("model", "subsystem protocols support tfim and xxz"));
                }
                if let ModelKind::Xxz { anisotropy } = self.model.kind {
                    if !(anisotropy > -1.0 && anisotropy <= 1.0) {
                        return Err(ConfigError::field("model", "xxz anisotropy must lie in (-1, 1]"));
                    }
                }
                if self.l_sub.is_empty() {
                    return Err(ConfigError::field("l_sub", "empty"));
                }
                if matches!(self.model.kind, ModelKind::Xxz { .. }) && self.l_sub.iter().any(|s| s % 2 == 0) {
                    return Err(ConfigError::field("l_sub", "the xxz string parity vanishes at even L_sub; use odd values"));
                }
                for &l in &self.sizes {
                    if self.l_sub.iter().any(|&s| s < 2 || s >= l) {
                        return Err(ConfigError::field("l_sub", format!("entries must lie in [2, {}]", l - 1)));
                    }
                }
                if self.thetas.len() < crate::subsys::MIN_WINDOW_POINTS {
                    return Err(ConfigError::field("theta", format!("need at least {} points", crate::subsys::MIN_WINDOW_POINTS)));
                }
                for &t in &self.thetas {
                    check_range("theta", t, 0.0, std::f64::consts::FRAC_PI_2)?;
                }
            }
        }
        Ok(())
    }
}

/// One row of output.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentRecord {
    pub scenario: Scenario,
    pub model: String,
    pub model_params: String,
    pub channel: String,
    pub channel_params: String,
    pub probe: String,
    pub l: usize,
    pub l_sub: Option<usize>,
    pub theta: Option<f64>,
    pub p: Option<f64>,
    pub beta: Option<f64>,
    pub observable: String,
    pub value: f64,
    pub variance: Option<f64>,
    pub delta_theta: Option<f64>,
    pub qfi: Option<f64>,
    pub reference: Option<f64>,
    pub fit_exponent: Option<f64>,
    pub fit_prefactor: Option<f64>,
    pub fit_r2: Option<f64>,
    pub seed: u64,
    pub config_hash: String,
}

/// Which records to fit and against which size column.
#[derive(Clone, Debug, PartialEq)]
pub struct FitSpec {
    pub observable: String,
    pub probe: Option<String>,
    pub against_l_sub: bool,
}

/// Power-law fit of `value` against `L` (or `L_sub`) over the matching records.
pub fn fit(records: &[ExperimentRecord], spec: &FitSpec) -> crate::Result<PowerLawFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = records
        .iter()
        .filter(|r| r.observable == spec.observable && spec.probe.as_ref().is_none_or(|p| &r.probe == p))
        .filter_map(|r| {
            let x = if spec.against_l_sub { r.l_sub? } else { r.l };
            Some((x as f64, r.value))
        })
        .unzip();
    fit_power_law(&xs, &ys, None)
}

/// SplitMix64 finalizer of `seed ⊕ index`, the per-point seed.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Run a resolved configuration; rows come back sorted by `(L, θ, p)`.
pub fn run(cfg: &ResolvedConfig) -> Result<Vec<ExperimentRecord>, RunError> {
    let mut rows = match cfg.scenario {
        Scenario::QfiScaling => scenarios::qfi_scaling(cfg)?,
        Scenario::ThetaCurves => scenarios::theta_curves(cfg)?,
        Scenario::ChannelSweep => scenarios::channel_sweep(cfg)?,
        Scenario::Deformed => scenarios::deformed(cfg)?,
        Scenario::Subsystem => scenarios::subsystem(cfg)?,
        Scenario::Hadamard => scenarios::hadamard(cfg)?,
    };
    let key = |x: Option<f64>| x.unwrap_or(f64::NEG_INFINITY);
    rows.sort_by(|a, b| {
        a.l.cmp(&b.l)
            .then(key(a.theta).total_cmp(&key(b.theta)))
            .then(key(a.p).total_cmp(&key(b.p)))
    });
    Ok(rows)
}
