//! Run manifest: the effective configuration, input and output digests,
//! and anything the run flagged, so a run can be audited and repeated.

use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;
use crate::domain::LabelScheme;
use crate::ranking::TieBreak;

pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

impl FileDigest {
    pub fn of(path: impl Into<String>, bytes: &[u8]) -> Self {
        FileDigest {
            path: path.into(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        }
    }
}

/// The parameters that shape every numeric artifact, collected in one place.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub r: f64,
    pub damping: f64,
    pub katz_alpha: Option<f64>,
    pub alpha_fraction: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub rbo_p: f64,
    pub rbo_depth: usize,
    pub pct: f64,
    pub tie_break: TieBreak,
    pub rng_seed: Option<u64>,
    pub label_scheme: Option<LabelScheme>,
}

impl ParamSummary {
    pub fn from_config(cfg: &PipelineConfig, scheme: Option<LabelScheme>) -> Self {
        ParamSummary {
            r: cfg.weights.r,
            damping: cfg.centrality.damping,
            katz_alpha: cfg.centrality.katz_alpha,
            alpha_fraction: cfg.centrality.alpha_fraction,
            tolerance: cfg.centrality.tolerance,
            max_iterations: cfg.centrality.max_iterations,
            rbo_p: cfg.compare.p,
            rbo_depth: cfg.compare.depth,
            pct: cfg.selection.pct,
            tie_break: TieBreak::AscendingId,
            rng_seed: cfg.rng_seed(),
            label_scheme: scheme,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileEntry {
    pub id: String,
    pub simulated: bool,
    pub nodes: usize,
    pub edges: usize,
    pub selected: usize,
    /// Katz attenuation actually used (resolved from the spectral radius).
    pub katz_alpha: Option<f64>,
    pub spectral_radius: Option<f64>,
    /// Measures that did not converge or had a degenerate spectrum.
    pub flagged_measures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub params: ParamSummary,
    /// The full effective configuration, after command-line overrides.
    pub config: PipelineConfig,
    pub config_sha256: Option<String>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub profiles: Vec<ProfileEntry>,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
}

pub fn now_unix_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis())
}
