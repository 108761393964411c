//! Shared vocabulary: videos, watch events, session logs, labels and bias scores.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::hash::Hash;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{AuditError, Result};

/// Opaque video identifier. Platform IDs and synthetic IDs share this type.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct VideoId(String);

impl VideoId {
    pub fn new(id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        if id.is_empty() {
            return Err(AuditError::integrity("video id must be non-empty"));
        }
        Ok(VideoId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for VideoId {
    type Error = AuditError;

    fn try_from(value: String) -> Result<Self> {
        VideoId::new(value)
    }
}

impl From<VideoId> for String {
    fn from(id: VideoId) -> String {
        id.0
    }
}

impl fmt::Display for VideoId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for VideoId {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VideoMeta {
    pub id: VideoId,
    pub title: String,
    pub duration_s: u64,
    pub view_count: u64,
    pub channel: String,
}

/// One watch: the video played and the recommendation list shown next to it.
/// Position in `recommendations` is the rank (0 = top of the list).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecEvent {
    pub profile_id: String,
    pub step: u64,
    pub watched: VideoId,
    pub recommendations: Vec<VideoId>,
    pub is_seed: bool,
}

impl RecEvent {
    pub fn new(
        profile_id: impl Into<String>,
        step: u64,
        watched: VideoId,
        recommendations: Vec<VideoId>,
        is_seed: bool,
    ) -> Result<Self> {
        let event = RecEvent {
            profile_id: profile_id.into(),
            step,
            watched,
            recommendations,
            is_seed,
        };
        event.validate()?;
        Ok(event)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::with_capacity(self.recommendations.len());
        for rec in &self.recommendations {
            if rec == &self.watched {
                return Err(AuditError::integrity(format!(
                    "video {} recommended next to itself at step {}",
                    rec, self.step
                )));
            }
            if !seen.insert(rec) {
                return Err(AuditError::integrity(format!(
                    "video {} recommended twice at step {}",
                    rec, self.step
                )));
            }
        }
        Ok(())
    }
}

/// Ordered watch events of one profile plus whatever metadata is known.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SessionLog {
    pub profile_id: String,
    pub events: Vec<RecEvent>,
    pub metadata: BTreeMap<VideoId, VideoMeta>,
}

impl SessionLog {
    pub fn new(
        profile_id: impl Into<String>,
        events: Vec<RecEvent>,
        metadata: BTreeMap<VideoId, VideoMeta>,
    ) -> Result<Self> {
        let log = SessionLog {
            profile_id: profile_id.into(),
            events,
            metadata,
        };
        log.validate()?;
        Ok(log)
    }

    pub fn empty(profile_id: impl Into<String>) -> Self {
        SessionLog {
            profile_id: profile_id.into(),
            ..Default::default()
        }
    }

    /// Checks the no-rewatch rule, step ordering and per-event invariants.
    pub fn validate(&self) -> Result<()> {
        let mut watched = HashSet::with_capacity(self.events.len());
        let mut last_step: Option<u64> = None;
        for event in &self.events {
            event.validate()?;
            if event.profile_id != self.profile_id {
                return Err(AuditError::integrity(format!(
                    "event at step {} belongs to profile {:?}, log is {:?}",
                    event.step, event.profile_id, self.profile_id
                )));
            }
            if let Some(prev) = last_step {
                if event.step <= prev {
                    return Err(AuditError::integrity(format!(
                        "steps must strictly increase ({} after {})",
                        event.step, prev
                    )));
                }
            }
            last_step = Some(event.step);
            if !watched.insert(&event.watched) {
                return Err(AuditError::integrity(format!(
                    "video {} watched more than once",
                    event.watched
                )));
            }
        }
        Ok(())
    }

    pub fn title_of(&self, id: &VideoId) -> Option<&str> {
        self.metadata.get(id).map(|m| m.title.as_str())
    }

    /// Every referenced video that has no metadata entry, sorted.
    pub fn missing_metadata(&self) -> Vec<VideoId> {
        let mut missing: Vec<VideoId> = self
            .referenced_ids()
            .into_iter()
            .filter(|id| !self.metadata.contains_key(id))
            .collect();
        missing.sort();
        missing
    }

    pub fn referenced_ids(&self) -> Vec<VideoId> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for event in &self.events {
            for id in std::iter::once(&event.watched).chain(&event.recommendations) {
                if seen.insert(id) {
                    out.push(id.clone());
                }
            }
        }
        out
    }
}

/// Which of the two label vocabularies a dataset uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelScheme {
    Stance,
    Veracity,
}

impl fmt::Display for LabelScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelScheme::Stance => f.write_str("stance"),
            LabelScheme::Veracity => f.write_str("veracity"),
        }
    }
}

impl FromStr for LabelScheme {
    type Err = AuditError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "stance" => Ok(LabelScheme::Stance),
            "veracity" => Ok(LabelScheme::Veracity),
            other => Err(AuditError::parameter(format!(
                "unknown label scheme {other:?}"
            ))),
        }
    }
}

/// Per-item bias score: -1, 0 or +1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BiasValue(i8);

impl BiasValue {
    pub const NEGATIVE: BiasValue = BiasValue(-1);
    pub const NEUTRAL: BiasValue = BiasValue(0);
    pub const POSITIVE: BiasValue = BiasValue(1);

    pub fn as_i8(self) -> i8 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0)
    }
}

/// A label vocabulary. Implemented by [`StanceLabel`] and [`VeracityLabel`];
/// keeping them as separate types means one dataset cannot mix the two.
pub trait Label:
    Copy
    + Eq
    + Ord
    + Hash
    + fmt::Debug
    + fmt::Display
    + FromStr<Err = AuditError>
    + Send
    + Sync
    + 'static
{
    const SCHEME: LabelScheme;
    /// Variants in canonical (−1, 0, +1) order.
    const ALL: &'static [Self];

    fn score(self) -> BiasValue;

    fn is_neutral(self) -> bool {
        self.score() == BiasValue::NEUTRAL
    }
}

pub fn label_to_score<L: Label>(label: L) -> BiasValue {
    label.score()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StanceLabel {
    ProAbortion,
    Neutral,
    AntiAbortion,
}

impl Label for StanceLabel {
    const SCHEME: LabelScheme = LabelScheme::Stance;
    const ALL: &'static [Self] = &[
        StanceLabel::ProAbortion,
        StanceLabel::Neutral,
        StanceLabel::AntiAbortion,
    ];

    fn score(self) -> BiasValue {
        match self {
            StanceLabel::ProAbortion => BiasValue::NEGATIVE,
            StanceLabel::Neutral => BiasValue::NEUTRAL,
            StanceLabel::AntiAbortion => BiasValue::POSITIVE,
        }
    }
}

impl fmt::Display for StanceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StanceLabel::ProAbortion => "pro",
            StanceLabel::Neutral => "neutral",
            StanceLabel::AntiAbortion => "anti",
        })
    }
}

impl FromStr for StanceLabel {
    type Err = AuditError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_lowercase().as_str() {
            "pro" | "pro-abortion" | "pro_abortion" => Ok(StanceLabel::ProAbortion),
            "neutral" => Ok(StanceLabel::Neutral),
            "anti" | "anti-abortion" | "anti_abortion" => Ok(StanceLabel::AntiAbortion),
            other => Err(AuditError::parameter(format!(
                "unknown stance label {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VeracityLabel {
    DebunksMisinformation,
    Neutral,
    /// Also covers videos described as "deceptive".
    Misinformation,
}

impl Label for VeracityLabel {
    const SCHEME: LabelScheme = LabelScheme::Veracity;
    const ALL: &'static [Self] = &[
        VeracityLabel::DebunksMisinformation,
        VeracityLabel::Neutral,
        VeracityLabel::Misinformation,
    ];

    fn score(self) -> BiasValue {
        match self {
            VeracityLabel::DebunksMisinformation => BiasValue::NEGATIVE,
            VeracityLabel::Neutral => BiasValue::NEUTRAL,
            VeracityLabel::Misinformation => BiasValue::POSITIVE,
        }
    }
}

impl fmt::Display for VeracityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VeracityLabel::DebunksMisinformation => "debunk",
            VeracityLabel::Neutral => "neutral",
            VeracityLabel::Misinformation => "misinfo",
        })
    }
}

impl FromStr for VeracityLabel {
    type Err = AuditError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_lowercase().as_str() {
            "debunk" | "debunks" | "debunks-misinformation" | "debunks_misinformation" => {
                Ok(VeracityLabel::DebunksMisinformation)
            }
            "neutral" => Ok(VeracityLabel::Neutral),
            "misinfo" | "misinformation" | "deceptive" => Ok(VeracityLabel::Misinformation),
            other => Err(AuditError::parameter(format!(
                "unknown veracity label {other:?}"
            ))),
        }
    }
}
