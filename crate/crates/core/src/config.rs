//! Pipeline configuration, read from TOML.
//!
//! ```toml
//! [run]
//! out_dir = "artifacts"
//! strict = false
//!
//! [weights]
//! r = 0.9
//!
//! [simulation]          # needed only when a profile is simulated
//! rng_seed = 7
//! corpus_size = 10000
//! class_skew = { pro = 3.0 }
//!
//! [[profiles]]
//! id = "p1"
//! training_topics = { pro = 1.0 }
//! training_watch_count = 30
//!
//! [[profiles]]          # a recorded crawl
//! id = "p2"
//! log = "logs/p2.jsonl"
//! metadata = "logs/p2_meta.jsonl"
//! labels = "labels/p2.csv"
//! ```
//!
//! Relative paths are resolved against the config file's directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::centrality::SolverParams;
use crate::domain::LabelScheme;
use crate::error::{AuditError, Result};
use crate::metrics::CompareParams;
use crate::recgraph::{PathMode, DEFAULT_DECAY};
use crate::sim::{ProfileSpec, QuerySeedPolicy, SimConfig, MIN_PERSONALIZATION_WATCHES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub out_dir: PathBuf,
    /// Abort on non-converged centrality instead of flagging it.
    pub strict: bool,
    pub path_mode: PathMode,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            out_dir: PathBuf::from("artifacts"),
            strict: false,
            path_mode: PathMode::Directed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightsSection {
    pub r: f64,
}

impl Default for WeightsSection {
    fn default() -> Self {
        WeightsSection { r: DEFAULT_DECAY }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionSection {
    pub pct: f64,
}

impl Default for SelectionSection {
    fn default() -> Self {
        SelectionSection { pct: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestSection {
    pub keyword: String,
    /// Drop (rather than keep) videos whose titles are unknown.
    pub strict_titles: bool,
}

impl Default for IngestSection {
    fn default() -> Self {
        IngestSection {
            keyword: "abortion".into(),
            strict_titles: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelsSection {
    /// Inferred from the label files when absent.
    pub scheme: Option<LabelScheme>,
}

/// One audited profile: either a recorded crawl (`log` set) or a simulated
/// sock puppet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<PathBuf>,
    #[serde(default)]
    pub training_topics: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub training_watch_count: Option<usize>,
    #[serde(default)]
    pub query_seed_policy: QuerySeedPolicy,
}

impl ProfileConfig {
    pub fn is_simulated(&self) -> bool {
        self.log.is_none()
    }

    pub fn spec(&self) -> ProfileSpec {
        ProfileSpec {
            profile_id: self.id.clone(),
            training_topics: self.training_topics.clone(),
            training_watch_count: self.training_watch_count.unwrap_or(
                if self.training_topics.is_empty() {
                    0
                } else {
                    MIN_PERSONALIZATION_WATCHES
                },
            ),
            query_seed_policy: self.query_seed_policy,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub run: RunSection,
    pub weights: WeightsSection,
    pub centrality: SolverParams,
    pub selection: SelectionSection,
    pub compare: CompareParams,
    pub ingest: IngestSection,
    pub labels: LabelsSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimConfig>,
    pub profiles: Vec<ProfileConfig>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub strict: bool,
}

impl PipelineConfig {
    /// Parses TOML text. `rng_seed` must be written out explicitly whenever
    /// a profile is simulated: runs are never seeded from the clock.
    pub fn from_toml(text: &str) -> Result<Self> {
        let value: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| toml_error(text, e))?;
        let seed_given = value
            .get("simulation")
            .and_then(|s| s.as_table())
            .is_some_and(|s| s.contains_key("rng_seed"));
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| toml_error(text, e))?;
        if cfg.profiles.iter().any(ProfileConfig::is_simulated) && !seed_given {
            return Err(AuditError::parameter(
                "simulated profiles need an explicit [simulation] rng_seed",
            ));
        }
        Ok(cfg)
    }

    /// Reads the file and resolves relative profile paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AuditError::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in &mut cfg.profiles {
            for f in [&mut p.log, &mut p.metadata, &mut p.labels]
                .into_iter()
                .flatten()
            {
                if f.is_relative() {
                    *f = base.join(&*f);
                }
            }
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(dir) = &o.out_dir {
            self.run.out_dir = dir.clone();
        }
        if let Some(seed) = o.seed {
            if let Some(sim) = &mut self.simulation {
                sim.rng_seed = seed;
            }
        }
        self.run.strict |= o.strict;
    }

    pub fn rng_seed(&self) -> Option<u64> {
        self.simulation.as_ref().map(|s| s.rng_seed)
    }

    /// Checks every parameter before any work starts.
    pub fn validate(&self) -> Result<()> {
        if !(self.weights.r > 0.0 && self.weights.r < 1.0) {
            return Err(AuditError::parameter(format!(
                "rank decay r must lie in (0, 1), got {}",
                self.weights.r
            )));
        }
        self.centrality.validate()?;
        self.compare.validate()?;
        crate::ranking::selection_size(1, self.selection.pct)?;
        if self.profiles.is_empty() {
            return Err(AuditError::parameter("the config lists no profiles"));
        }
        let mut ids = std::collections::HashSet::new();
        for p in &self.profiles {
            if p.id.is_empty() || p.id.contains(['/', '\\']) || p.id.starts_with('.') {
                return Err(AuditError::parameter(format!(
                    "profile id {:?} is not a valid directory name",
                    p.id
                )));
            }
            if !ids.insert(&p.id) {
                return Err(AuditError::parameter(format!(
                    "profile id {:?} appears twice",
                    p.id
                )));
            }
            if p.is_simulated() {
                if p.metadata.is_some() || p.labels.is_some() {
                    return Err(AuditError::parameter(format!(
                        "profile {:?} gives metadata or labels without a log",
                        p.id
                    )));
                }
                let Some(sim) = &self.simulation else {
                    return Err(AuditError::parameter(format!(
                        "profile {:?} has no log and there is no [simulation] section",
                        p.id
                    )));
                };
                sim.validate()?;
                if self.labels.scheme.is_some_and(|s| s != sim.scheme) {
                    return Err(AuditError::parameter(
                        "[labels] scheme differs from the simulation scheme",
                    ));
                }
            } else if p.metadata.is_none() || p.labels.is_none() {
                return Err(AuditError::parameter(format!(
                    "recorded profile {:?} needs metadata and labels files",
                    p.id
                )));
            } else if !p.training_topics.is_empty() || p.training_watch_count.is_some() {
                return Err(AuditError::parameter(format!(
                    "recorded profile {:?} cannot carry training settings",
                    p.id
                )));
            }
        }
        Ok(())
    }
}

fn toml_error(text: &str, e: toml::de::Error) -> AuditError {
    let line = e.span().map_or(0, |s| {
        text[..s.start.min(text.len())].matches('\n').count() + 1
    });
    AuditError::parse(line, e.message().to_string())
}
