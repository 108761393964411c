//! Session-log and metadata file formats, topic filtering and seed pruning.
//!
//! Session logs are JSON Lines, one watch event per line:
//!
//! ```text
//! {"profile_id":"p1","step":0,"watched_id":"abc","is_seed":true,
//!  "recommendations":[{"video_id":"def","rank":0},{"video_id":"ghi","rank":1}]}
//! ```
//!
//! Ranks are 0-based and must be contiguous within a line. Metadata files are
//! JSON Lines keyed by `video_id`:
//!
//! ```text
//! {"video_id":"abc","title":"...","duration_s":312,"view_count":1045,"channel":"..."}
//! ```

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::domain::{RecEvent, SessionLog, VideoId, VideoMeta};
use crate::error::{AuditError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub events_read: usize,
    pub events_accepted: usize,
    pub events_rejected: usize,
    pub rejections: Vec<Rejection>,
    pub videos_filtered_by_title: usize,
    pub events_filtered_by_title: usize,
    pub seeds_pruned: usize,
    pub metadata_missing: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct RankedRecord {
    video_id: String,
    rank: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct EventRecord {
    profile_id: String,
    step: u64,
    watched_id: String,
    is_seed: bool,
    recommendations: Vec<RankedRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct MetaRecord {
    video_id: String,
    title: String,
    duration_s: u64,
    view_count: u64,
    channel: String,
}

fn event_from_record(rec: EventRecord) -> Result<RecEvent> {
    let watched = VideoId::new(rec.watched_id)?;
    let mut ranked = rec.recommendations;
    ranked.sort_by_key(|r| r.rank);
    for (expected, r) in ranked.iter().enumerate() {
        if r.rank != expected {
            return Err(AuditError::integrity(format!(
                "ranks must be contiguous from 0; expected {expected}, found {}",
                r.rank
            )));
        }
    }
    let recommendations = ranked
        .into_iter()
        .map(|r| VideoId::new(r.video_id))
        .collect::<Result<Vec<_>>>()?;
    RecEvent::new(
        rec.profile_id,
        rec.step,
        watched,
        recommendations,
        rec.is_seed,
    )
}

/// Streams a session log. Malformed lines are rejected and reported; a
/// video watched twice aborts the parse because it breaks the no-rewatch rule.
pub fn parse_session_log<R: BufRead>(reader: R) -> Result<(SessionLog, IngestReport)> {
    let mut report = IngestReport::default();
    let mut events: Vec<RecEvent> = Vec::new();
    let mut watched: HashSet<VideoId> = HashSet::new();
    let mut profile: Option<String> = None;

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| AuditError::io("<session log>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        report.events_read += 1;

        let parsed = serde_json::from_str::<EventRecord>(&line)
            .map_err(|e| AuditError::parse(lineno, e.to_string()))
            .and_then(event_from_record)
            .and_then(|event| {
                if let Some(p) = &profile {
                    if &event.profile_id != p {
                        return Err(AuditError::integrity(format!(
                            "profile {:?} differs from {:?} earlier in the file",
                            event.profile_id, p
                        )));
                    }
                }
                if let Some(prev) = events.last() {
                    if event.step <= prev.step {
                        return Err(AuditError::integrity(format!(
                            "step {} does not follow step {}",
                            event.step, prev.step
                        )));
                    }
                }
                Ok(event)
            });

        match parsed {
            Ok(event) => {
                if !watched.insert(event.watched.clone()) {
                    return Err(AuditError::integrity(format!(
                        "line {lineno}: video {} watched more than once",
                        event.watched
                    )));
                }
                profile.get_or_insert_with(|| event.profile_id.clone());
                events.push(event);
                report.events_accepted += 1;
            }
            Err(err) => {
                report.events_rejected += 1;
                report.rejections.push(Rejection {
                    line: lineno,
                    reason: err.to_string(),
                });
            }
        }
    }

    let log = SessionLog {
        profile_id: profile.unwrap_or_default(),
        events,
        metadata: BTreeMap::new(),
    };
    Ok((log, report))
}

pub fn parse_metadata<R: BufRead>(reader: R) -> Result<BTreeMap<VideoId, VideoMeta>> {
    let mut out = BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| AuditError::io("<metadata>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: MetaRecord =
            serde_json::from_str(&line).map_err(|e| AuditError::parse(lineno, e.to_string()))?;
        let id =
            VideoId::new(rec.video_id).map_err(|e| AuditError::parse(lineno, e.to_string()))?;
        let meta = VideoMeta {
            id: id.clone(),
            title: rec.title,
            duration_s: rec.duration_s,
            view_count: rec.view_count,
            channel: rec.channel,
        };
        if out.insert(id.clone(), meta).is_some() {
            return Err(AuditError::integrity(format!(
                "metadata line {lineno}: duplicate entry for {id}"
            )));
        }
    }
    Ok(out)
}

pub fn write_session_log<W: Write>(log: &SessionLog, mut out: W) -> Result<()> {
    for event in &log.events {
        let rec = EventRecord {
            profile_id: event.profile_id.clone(),
            step: event.step,
            watched_id: event.watched.to_string(),
            is_seed: event.is_seed,
            recommendations: event
                .recommendations
                .iter()
                .enumerate()
                .map(|(rank, id)| RankedRecord {
                    video_id: id.to_string(),
                    rank,
                })
                .collect(),
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")
            .map_err(|e| AuditError::io("<session log>", e))?;
    }
    Ok(())
}

pub fn write_metadata<'a, W: Write>(
    metadata: impl IntoIterator<Item = &'a VideoMeta>,
    mut out: W,
) -> Result<()> {
    for meta in metadata {
        let rec = MetaRecord {
            video_id: meta.id.to_string(),
            title: meta.title.clone(),
            duration_s: meta.duration_s,
            view_count: meta.view_count,
            channel: meta.channel.clone(),
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")
            .map_err(|e| AuditError::io("<metadata>", e))?;
    }
    Ok(())
}

/// Case-insensitive substring test with Unicode lowercasing.
pub fn title_mentions(title: &str, keyword: &str) -> bool {
    keyword.is_empty() || title.to_lowercase().contains(&keyword.to_lowercase())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FilterOutcome {
    pub videos_removed: usize,
    pub events_removed: usize,
}

/// Keeps only videos whose title mentions `keyword`. Videos without a known
/// title are kept unless `strict_titles` is set. Removing an entry from a
/// recommendation list moves the items below it up one rank.
pub fn filter_topic(
    log: &SessionLog,
    keyword: &str,
    strict_titles: bool,
) -> (SessionLog, FilterOutcome) {
    let keep = |id: &VideoId| match log.title_of(id) {
        Some(title) => title_mentions(title, keyword),
        None => !strict_titles,
    };

    let mut removed: HashSet<&VideoId> = HashSet::new();
    let mut events = Vec::with_capacity(log.events.len());
    let mut events_removed = 0;
    for event in &log.events {
        if !keep(&event.watched) {
            removed.insert(&event.watched);
            events_removed += 1;
            continue;
        }
        let recommendations = event
            .recommendations
            .iter()
            .filter(|id| {
                let k = keep(id);
                if !k {
                    removed.insert(id);
                }
                k
            })
            .cloned()
            .collect();
        events.push(RecEvent {
            recommendations,
            ..event.clone()
        });
    }

    let filtered = SessionLog {
        profile_id: log.profile_id.clone(),
        events,
        metadata: log.metadata.clone(),
    };
    (
        filtered,
        FilterOutcome {
            videos_removed: removed.len(),
            events_removed,
        },
    )
}

/// Removes the events of seed videos that never show up in any
/// recommendation list. Repeats until no further seed qualifies, since
/// dropping one seed's list can orphan another seed.
pub fn prune_unrecommended(log: &SessionLog) -> (SessionLog, usize) {
    let mut events = log.events.clone();
    let mut pruned = 0;
    loop {
        let recommended: HashSet<&VideoId> = events
            .iter()
            .flat_map(|e| e.recommendations.iter())
            .collect();
        let drop: HashSet<usize> = events
            .iter()
            .enumerate()
            .filter(|(_, e)| e.is_seed && !recommended.contains(&e.watched))
            .map(|(i, _)| i)
            .collect();
        if drop.is_empty() {
            break;
        }
        pruned += drop.len();
        events = events
            .into_iter()
            .enumerate()
            .filter(|(i, _)| !drop.contains(i))
            .map(|(_, e)| e)
            .collect();
    }
    (
        SessionLog {
            profile_id: log.profile_id.clone(),
            events,
            metadata: log.metadata.clone(),
        },
        pruned,
    )
}

/// Canonical cleaning order: topic filter first, then seed pruning.
pub fn clean(
    log: &SessionLog,
    keyword: &str,
    strict_titles: bool,
    report: &mut IngestReport,
) -> SessionLog {
    let (filtered, outcome) = filter_topic(log, keyword, strict_titles);
    report.videos_filtered_by_title += outcome.videos_removed;
    report.events_filtered_by_title += outcome.events_removed;
    let (pruned, n) = prune_unrecommended(&filtered);
    report.seeds_pruned += n;
    report.metadata_missing = pruned.missing_metadata().len();
    pruned
}
