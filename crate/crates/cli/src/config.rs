//! Run configuration: an optional TOML file overlaid with command-line flags.
//!
//! ```toml
//! model = "qubit"          # qubit | ququart | mixed | tomo-p1 | tomo-p995 | bloch:x,y,z | probs:x0,x1;z0,z1
//! m = 1000000
//! rng_seed = 7
//! reps = 200
//! m_grid = [100, 1000, 10000]
//! epsilon_exp = 0
//! workers = 4
//! seed_file = "seed.bin"
//! out = "run.upq"
//! ```
//!
//! Flags win over file values; the worker count falls back to the
//! `UPQRNG_WORKERS` environment variable and then to the number of CPUs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;
use sha2::{Digest, Sha256};
use upqrng::quantum::bloch_to_density;
use upqrng::simulate::{qubit_experiment_model, ququart_experiment_model};
use upqrng::tomo::TomoSource;
use upqrng::{BlochVector, ProbVector, SourceModel};

use crate::CliError;

pub const WORKERS_ENV: &str = "UPQRNG_WORKERS";
pub const DEFAULT_M_GRID: [u64; 5] = [100, 1_000, 10_000, 100_000, 1_000_000];

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub model: Option<String>,
    pub m: Option<u64>,
    pub rng_seed: Option<u64>,
    pub reps: Option<usize>,
    pub m_grid: Option<Vec<u64>>,
    pub epsilon_exp: Option<u32>,
    pub workers: Option<usize>,
    pub seed_file: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Input(format!("config {}: {e}", path.display())))
    }
}

/// Named or inline source specification.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Qubit,
    Ququart,
    /// Maximally mixed qubit; certifies nothing.
    Mixed,
    /// Pure qubit with r_x = 0.9947, r_z = 0.004.
    TomoP1,
    /// Purity 0.995 qubit with r_y = 0, r_z = 0.004.
    TomoP995,
    Bloch([f64; 3]),
    Probs { x: Vec<f64>, z: Vec<f64> },
}

fn parse_floats(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| CliError::Input(format!("bad number {v:?}: {e}"))))
        .collect()
}

impl FromStr for ModelSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let s = s.trim();
        match s {
            "qubit" => return Ok(Self::Qubit),
            "ququart" => return Ok(Self::Ququart),
            "mixed" => return Ok(Self::Mixed),
            "tomo-p1" => return Ok(Self::TomoP1),
            "tomo-p995" => return Ok(Self::TomoP995),
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("bloch:") {
            let v = parse_floats(rest)?;
            let [x, y, z] = v[..] else {
                return Err(CliError::Input(format!("bloch model needs 3 components, got {}", v.len())));
            };
            return Ok(Self::Bloch([x, y, z]));
        }
        if let Some(rest) = s.strip_prefix("probs:") {
            let (x, z) = rest
                .split_once(';')
                .ok_or_else(|| CliError::Input("probs model is `probs:x0,x1,..;z0,z1,..`".into()))?;
            return Ok(Self::Probs { x: parse_floats(x)?, z: parse_floats(z)? });
        }
        Err(CliError::Input(format!(
            "unknown model {s:?} (qubit, ququart, mixed, tomo-p1, tomo-p995, bloch:x,y,z, probs:..;..)"
        )))
    }
}

impl ModelSpec {
    pub fn canonical(&self) -> String {
        match self {
            Self::Qubit => "qubit".into(),
            Self::Ququart => "ququart".into(),
            Self::Mixed => "mixed".into(),
            Self::TomoP1 => "tomo-p1".into(),
            Self::TomoP995 => "tomo-p995".into(),
            Self::Bloch([x, y, z]) => format!("bloch:{x},{y},{z}"),
            Self::Probs { x, z } => {
                let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
                format!("probs:{};{}", join(x), join(z))
            }
        }
    }

    fn bloch_model(label: &str, r: BlochVector) -> Result<SourceModel, CliError> {
        Ok(SourceModel::from_density(label, bloch_to_density(&r)?)?)
    }

    pub fn source(&self) -> Result<SourceModel, CliError> {
        match self {
            Self::Qubit => Ok(qubit_experiment_model()),
            Self::Ququart => Ok(ququart_experiment_model()),
            Self::Mixed => Ok(SourceModel::from_probs("mixed", ProbVector::uniform(2)?, ProbVector::uniform(2)?)?),
            Self::TomoP1 => Self::bloch_model("tomo-p1", TomoSource::pure(0.9947, 0.004)?.bloch),
            Self::TomoP995 => {
                let rx = (2.0f64 * 0.995 - 1.0 - 0.004f64 * 0.004).sqrt();
                Self::bloch_model("tomo-p995", BlochVector::new(rx, 0.0, 0.004)?)
            }
            Self::Bloch([x, y, z]) => Self::bloch_model("bloch", BlochVector::new(*x, *y, *z)?),
            Self::Probs { x, z } => Ok(SourceModel::from_probs(
                "custom",
                ProbVector::new(x.clone())?,
                ProbVector::new(z.clone())?,
            )?),
        }
    }
}

/// Effective settings after merging file and flags.
#[derive(Debug, Clone)]
pub struct Settings {
    pub model: ModelSpec,
    pub m: Option<u64>,
    pub rng_seed: u64,
    pub reps: usize,
    pub m_grid: Vec<u64>,
    pub epsilon_exp: u32,
    pub workers: usize,
    pub seed_file: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

/// Values given on the command line.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub model: Option<String>,
    pub m: Option<u64>,
    pub rng_seed: Option<u64>,
    pub reps: Option<usize>,
    pub m_grid: Option<Vec<u64>>,
    pub epsilon_exp: Option<u32>,
    pub workers: Option<usize>,
    pub seed_file: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

fn env_workers() -> Result<Option<usize>, CliError> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|e| CliError::Input(format!("{WORKERS_ENV}={v:?}: {e}"))),
        _ => Ok(None),
    }
}

impl Settings {
    pub fn resolve(file: FileConfig, flags: Overrides) -> Result<Self, CliError> {
        let model = flags.model.or(file.model).unwrap_or_else(|| "qubit".into()).parse()?;
        let workers = match flags.workers.or(file.workers) {
            Some(w) => w,
            None => env_workers()?
                .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
        };
        let reps = flags.reps.or(file.reps).unwrap_or(200);
        if reps == 0 {
            return Err(CliError::Input("--reps must be at least 1".into()));
        }
        Ok(Self {
            model,
            m: flags.m.or(file.m),
            rng_seed: flags.rng_seed.or(file.rng_seed).unwrap_or(1),
            reps,
            m_grid: flags.m_grid.or(file.m_grid).unwrap_or_else(|| DEFAULT_M_GRID.to_vec()),
            epsilon_exp: flags.epsilon_exp.or(file.epsilon_exp).unwrap_or(0),
            workers: workers.max(1),
            seed_file: flags.seed_file.or(file.seed_file),
            out: flags.out.or(file.out),
        })
    }

    pub fn require_m(&self) -> Result<u64, CliError> {
        self.m.ok_or_else(|| CliError::Input("--m is required".into()))
    }

    pub fn require_out(&self) -> Result<&Path, CliError> {
        self.out.as_deref().ok_or_else(|| CliError::Input("--out is required".into()))
    }
}

/// Hex digest (first 16 hex digits of SHA-256) of `key=value` lines.
pub fn config_hash(entries: &[(&str, String)]) -> String {
    let mut text = String::new();
    for (k, v) in entries {
        let _ = writeln!(text, "{k}={v}");
    }
    digest_hex(text.as_bytes())
}

pub fn digest_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().take(8).map(|b| format!("{b:02x}")).collect()
}

pub fn tool_version() -> String {
    format!("upqrng {}", env!("CARGO_PKG_VERSION"))
}

/// `tool=…; config=…` stamp written into every output.
pub fn stamp(hash: &str) -> String {
    format!("tool={}; config={hash}", tool_version())
}
