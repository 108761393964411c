//! Composite-score ranking, top-percent selection and label joins.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::centrality::ScoreVector;
use crate::domain::{BiasValue, Label, LabelScheme, StanceLabel, VeracityLabel, VideoId};
use crate::error::{AuditError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// Equal scores are ordered by ascending video id.
    #[default]
    AscendingId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    /// 1-based.
    pub rank: usize,
    pub video_id: VideoId,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RankedList {
    pub entries: Vec<RankedEntry>,
    pub tie_break: TieBreak,
}

impl RankedList {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> Vec<VideoId> {
        self.entries.iter().map(|e| e.video_id.clone()).collect()
    }
}

/// Descending by score; ties by ascending id.
pub fn rank_videos(composite: &ScoreVector) -> RankedList {
    let mut order: Vec<usize> = (0..composite.len()).collect();
    order.sort_by(|&a, &b| {
        composite.scores[b]
            .total_cmp(&composite.scores[a])
            .then_with(|| composite.ids[a].cmp(&composite.ids[b]))
    });
    let entries = order
        .into_iter()
        .enumerate()
        .map(|(i, k)| RankedEntry {
            rank: i + 1,
            video_id: composite.ids[k].clone(),
            score: composite.scores[k],
        })
        .collect();
    RankedList {
        entries,
        tie_break: TieBreak::AscendingId,
    }
}

/// ceil(pct/100 · n), so any non-empty list selects at least one entry.
pub fn selection_size(n: usize, pct: f64) -> Result<usize> {
    if !(pct > 0.0 && pct <= 100.0) {
        return Err(AuditError::parameter(format!(
            "percentage must lie in (0, 100], got {pct}"
        )));
    }
    let exact = pct * n as f64 / 100.0;
    let nearest = exact.round();
    let size = if (exact - nearest).abs() < 1e-9 {
        nearest
    } else {
        exact.ceil()
    };
    Ok((size as usize).min(n))
}

/// Keeps the first ceil(pct/100 · N) entries. A score tie straddling the
/// cut is settled by the list's existing tie-break order.
pub fn select_top_percent(rl: &RankedList, pct: f64) -> Result<RankedList> {
    let k = selection_size(rl.len(), pct)?;
    Ok(RankedList {
        entries: rl.entries[..k].to_vec(),
        tie_break: rl.tie_break,
    })
}

/// Annotations for one label scheme.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelFile<L: Label> {
    pub labels: BTreeMap<VideoId, L>,
}

#[derive(Debug, Deserialize)]
struct LabelRow {
    video_id: String,
    label: String,
}

/// Reads a `video_id,label` CSV. An unknown label string is a parse error
/// carrying the file line number.
pub fn parse_label_file<L: Label, R: Read>(reader: R) -> Result<LabelFile<L>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["video_id", "label"] {
        return Err(AuditError::parse(
            1,
            "label file header must be `video_id,label`",
        ));
    }
    let mut labels = BTreeMap::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let rec: LabelRow = row
            .deserialize(Some(&headers))
            .map_err(|e| AuditError::parse(line, e.to_string()))?;
        let id = VideoId::new(rec.video_id).map_err(|e| AuditError::parse(line, e.to_string()))?;
        let label: L = rec
            .label
            .parse()
            .map_err(|e: AuditError| AuditError::parse(line, e.to_string()))?;
        if let Some(prev) = labels.insert(id.clone(), label) {
            if prev != label {
                return Err(AuditError::parse(
                    line,
                    format!("video {id} labeled both {prev} and {label}"),
                ));
            }
        }
    }
    Ok(LabelFile { labels })
}

pub fn write_label_file<L: Label, W: Write>(labels: &LabelFile<L>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["video_id", "label"])?;
    for (id, label) in &labels.labels {
        w.write_record([id.as_str(), &label.to_string()])?;
    }
    w.flush().map_err(|e| AuditError::io("<labels>", e))?;
    Ok(())
}

/// A label file whose scheme is only known at run time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnyLabels {
    Stance(LabelFile<StanceLabel>),
    Veracity(LabelFile<VeracityLabel>),
}

impl AnyLabels {
    /// Parses with an explicit scheme, or infers it from the first
    /// non-neutral label. An all-neutral file is read as stance.
    pub fn parse(bytes: &[u8], scheme: Option<LabelScheme>) -> Result<Self> {
        let scheme = match scheme {
            Some(s) => s,
            None => infer_scheme(bytes, 1)?,
        };
        Ok(match scheme {
            LabelScheme::Stance => AnyLabels::Stance(parse_label_file(bytes)?),
            LabelScheme::Veracity => AnyLabels::Veracity(parse_label_file(bytes)?),
        })
    }

    pub fn scheme(&self) -> LabelScheme {
        match self {
            AnyLabels::Stance(_) => LabelScheme::Stance,
            AnyLabels::Veracity(_) => LabelScheme::Veracity,
        }
    }
}

fn infer_scheme(bytes: &[u8], column: usize) -> Result<LabelScheme> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(bytes);
    for row in rdr.records() {
        let row = row?;
        let Some(label) = row.get(column) else {
            continue;
        };
        if let Ok(l) = label.parse::<StanceLabel>() {
            if !l.is_neutral() {
                return Ok(LabelScheme::Stance);
            }
        }
        if let Ok(l) = label.parse::<VeracityLabel>() {
            if !l.is_neutral() {
                return Ok(LabelScheme::Veracity);
            }
        }
    }
    Ok(LabelScheme::Stance)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledEntry<L: Label> {
    pub rank: usize,
    pub video_id: VideoId,
    pub label: L,
    pub bias: BiasValue,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledRanking<L: Label> {
    pub entries: Vec<LabeledEntry<L>>,
    pub scheme: LabelScheme,
}

impl<L: Label> LabeledRanking<L> {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn bias_values(&self) -> Vec<BiasValue> {
        self.entries.iter().map(|e| e.bias).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MergeStats {
    /// Labeled videos that were not part of the selection.
    pub extra_labels_ignored: usize,
}

/// Attaches a label to every selected video, keeping rank order. Any
/// selected video without a label aborts with the full list of gaps.
pub fn merge_labels<L: Label>(
    rl: &RankedList,
    labels: &LabelFile<L>,
) -> Result<(LabeledRanking<L>, MergeStats)> {
    let mut missing = Vec::new();
    let mut entries = Vec::with_capacity(rl.len());
    for e in &rl.entries {
        match labels.labels.get(&e.video_id) {
            Some(&label) => entries.push(LabeledEntry {
                rank: e.rank,
                video_id: e.video_id.clone(),
                label,
                bias: label.score(),
            }),
            None => missing.push(e.video_id.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(AuditError::IncompleteLabels { ids: missing });
    }
    let selected: HashSet<&VideoId> = rl.entries.iter().map(|e| &e.video_id).collect();
    let extra = labels
        .labels
        .keys()
        .filter(|id| !selected.contains(id))
        .count();
    Ok((
        LabeledRanking {
            entries,
            scheme: L::SCHEME,
        },
        MergeStats {
            extra_labels_ignored: extra,
        },
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassDistribution<L: Label> {
    /// Every label of the scheme, including those with zero count.
    pub classes: BTreeMap<L, (usize, f64)>,
    pub total: usize,
}

pub fn class_distribution<L: Label>(lr: &LabeledRanking<L>) -> Result<ClassDistribution<L>> {
    if lr.is_empty() {
        return Err(AuditError::parameter(
            "class distribution of an empty selection",
        ));
    }
    let mut counts: HashMap<L, usize> = HashMap::new();
    for e in &lr.entries {
        *counts.entry(e.label).or_default() += 1;
    }
    let total = lr.len();
    let classes = L::ALL
        .iter()
        .map(|&l| {
            let c = counts.get(&l).copied().unwrap_or(0);
            (l, (c, c as f64 / total as f64))
        })
        .collect();
    Ok(ClassDistribution { classes, total })
}

#[derive(Debug, Serialize, Deserialize)]
struct RankingRow {
    rank: usize,
    video_id: String,
    composite_score: f64,
}

pub fn write_ranking_csv<W: Write>(rl: &RankedList, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for e in &rl.entries {
        w.serialize(RankingRow {
            rank: e.rank,
            video_id: e.video_id.to_string(),
            composite_score: e.score,
        })?;
    }
    w.flush().map_err(|e| AuditError::io("<ranking>", e))?;
    Ok(())
}

pub fn read_ranking_csv<R: Read>(reader: R) -> Result<RankedList> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut entries = Vec::new();
    for (i, row) in rdr.deserialize::<RankingRow>().enumerate() {
        let row = row?;
        if row.rank != i + 1 {
            return Err(AuditError::integrity(format!(
                "ranking row {} has rank {}, expected {}",
                i + 1,
                row.rank,
                i + 1
            )));
        }
        entries.push(RankedEntry {
            rank: row.rank,
            video_id: VideoId::new(row.video_id)?,
            score: row.composite_score,
        });
    }
    Ok(RankedList {
        entries,
        tie_break: TieBreak::AscendingId,
    })
}

/// Annotator hand-off: `rank,video_id,title,composite_score`.
pub fn write_selection_csv<W: Write>(
    rl: &RankedList,
    title_of: impl Fn(&VideoId) -> Option<String>,
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["rank", "video_id", "title", "composite_score"])?;
    for e in &rl.entries {
        w.write_record([
            e.rank.to_string(),
            e.video_id.to_string(),
            title_of(&e.video_id).unwrap_or_default(),
            e.score.to_string(),
        ])?;
    }
    w.flush().map_err(|e| AuditError::io("<selection>", e))?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct SelectionRow {
    rank: usize,
    video_id: String,
    #[allow(dead_code)]
    title: String,
    composite_score: f64,
}

pub fn read_selection_csv<R: Read>(reader: R) -> Result<RankedList> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut entries = Vec::new();
    for row in rdr.deserialize::<SelectionRow>() {
        let row = row?;
        entries.push(RankedEntry {
            rank: row.rank,
            video_id: VideoId::new(row.video_id)?,
            score: row.composite_score,
        });
    }
    if entries.windows(2).any(|w| w[0].rank >= w[1].rank) {
        return Err(AuditError::integrity(
            "selection ranks must strictly increase",
        ));
    }
    Ok(RankedList {
        entries,
        tie_break: TieBreak::AscendingId,
    })
}

pub fn write_labeled_csv<L: Label, W: Write>(lr: &LabeledRanking<L>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["rank", "video_id", "label", "bias"])?;
    for e in &lr.entries {
        w.write_record([
            e.rank.to_string(),
            e.video_id.to_string(),
            e.label.to_string(),
            e.bias.as_i8().to_string(),
        ])?;
    }
    w.flush().map_err(|e| AuditError::io("<labeled>", e))?;
    Ok(())
}

pub fn read_labeled_csv<L: Label, R: Read>(reader: R) -> Result<LabeledRanking<L>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut entries = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize| {
            row.get(i)
                .ok_or_else(|| AuditError::parse(line, "missing column"))
        };
        let rank: usize = field(0)?
            .parse()
            .map_err(|_| AuditError::parse(line, "rank is not an integer"))?;
        let video_id =
            VideoId::new(field(1)?).map_err(|e| AuditError::parse(line, e.to_string()))?;
        let label: L = field(2)?
            .parse()
            .map_err(|e: AuditError| AuditError::parse(line, e.to_string()))?;
        entries.push(LabeledEntry {
            rank,
            video_id,
            label,
            bias: label.score(),
        });
    }
    if entries.windows(2).any(|w| w[0].rank >= w[1].rank) {
        return Err(AuditError::integrity(
            "labeled ranks must strictly increase",
        ));
    }
    Ok(LabeledRanking {
        entries,
        scheme: L::SCHEME,
    })
}

/// A labeled selection whose scheme is only known at run time.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyLabeled {
    Stance(LabeledRanking<StanceLabel>),
    Veracity(LabeledRanking<VeracityLabel>),
}

impl AnyLabels {
    pub fn merge(&self, rl: &RankedList) -> Result<(AnyLabeled, MergeStats)> {
        Ok(match self {
            AnyLabels::Stance(f) => {
                let (lr, stats) = merge_labels(rl, f)?;
                (AnyLabeled::Stance(lr), stats)
            }
            AnyLabels::Veracity(f) => {
                let (lr, stats) = merge_labels(rl, f)?;
                (AnyLabeled::Veracity(lr), stats)
            }
        })
    }
}

impl AnyLabeled {
    pub fn scheme(&self) -> LabelScheme {
        match self {
            AnyLabeled::Stance(_) => LabelScheme::Stance,
            AnyLabeled::Veracity(_) => LabelScheme::Veracity,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            AnyLabeled::Stance(lr) => lr.len(),
            AnyLabeled::Veracity(lr) => lr.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn bias_values(&self) -> Vec<BiasValue> {
        match self {
            AnyLabeled::Stance(lr) => lr.bias_values(),
            AnyLabeled::Veracity(lr) => lr.bias_values(),
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        match self {
            AnyLabeled::Stance(lr) => write_labeled_csv(lr, out),
            AnyLabeled::Veracity(lr) => write_labeled_csv(lr, out),
        }
    }

    /// Reads `rank,video_id,label,bias`, inferring the scheme from the
    /// label column when none is given.
    pub fn read_csv(bytes: &[u8], scheme: Option<LabelScheme>) -> Result<Self> {
        let scheme = match scheme {
            Some(s) => s,
            None => infer_scheme(bytes, 2)?,
        };
        Ok(match scheme {
            LabelScheme::Stance => AnyLabeled::Stance(read_labeled_csv(bytes)?),
            LabelScheme::Veracity => AnyLabeled::Veracity(read_labeled_csv(bytes)?),
        })
    }

    /// `(label, count, fraction)` for every label of the scheme, in score order.
    pub fn class_rows(&self) -> Result<Vec<(String, usize, f64)>> {
        fn rows<L: Label>(lr: &LabeledRanking<L>) -> Result<Vec<(String, usize, f64)>> {
            let dist = class_distribution(lr)?;
            Ok(L::ALL
                .iter()
                .map(|l| {
                    let (c, f) = dist.classes[l];
                    (l.to_string(), c, f)
                })
                .collect())
        }
        match self {
            AnyLabeled::Stance(lr) => rows(lr),
            AnyLabeled::Veracity(lr) => rows(lr),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::centrality::Measure;
    use proptest::prelude::*;

    fn vid(s: &str) -> VideoId {
        VideoId::new(s).unwrap()
    }

    fn composite(pairs: &[(&str, f64)]) -> ScoreVector {
        ScoreVector::new(
            Measure::Composite,
            pairs.iter().map(|(i, _)| vid(i)).collect(),
            pairs.iter().map(|(_, s)| *s).collect(),
        )
    }

    fn order(rl: &RankedList) -> Vec<&str> {
        rl.entries.iter().map(|e| e.video_id.as_str()).collect()
    }

    fn ranked(ids: &[&str]) -> RankedList {
        let n = ids.len();
        rank_videos(&composite(
            &ids.iter()
                .enumerate()
                .map(|(i, id)| (*id, (n - i) as f64))
                .collect::<Vec<_>>(),
        ))
    }

    fn stance(rows: &[(&str, StanceLabel)]) -> LabelFile<StanceLabel> {
        LabelFile {
            labels: rows.iter().map(|(i, l)| (vid(i), *l)).collect(),
        }
    }

    #[test]
    fn ranks_descending_by_score() {
        let rl = rank_videos(&composite(&[("A", 3.0), ("B", 1.0), ("C", 2.0)]));
        assert_eq!(order(&rl), vec!["A", "C", "B"]);
        assert_eq!(
            rl.entries.iter().map(|e| e.rank).collect::<Vec<_>>(),
            vec![1, 2, 3]
        );
    }

    #[test]
    fn ties_broken_by_id() {
        let rl = rank_videos(&composite(&[("B", 1.0), ("A", 1.0)]));
        assert_eq!(order(&rl), vec!["A", "B"]);
    }

    #[test]
    fn selection_sizes_use_ceiling() {
        assert_eq!(selection_size(3241, 1.0).unwrap(), 33);
        assert_eq!(selection_size(100, 1.0).unwrap(), 1);
        assert_eq!(selection_size(101, 1.0).unwrap(), 2);
        assert_eq!(selection_size(1, 1.0).unwrap(), 1);
        assert_eq!(selection_size(0, 1.0).unwrap(), 0);
        assert_eq!(selection_size(7, 100.0).unwrap(), 7);
        for pct in [0.0, -1.0, 100.5, f64::NAN] {
            assert!(matches!(
                selection_size(10, pct),
                Err(AuditError::Parameter(_))
            ));
        }
    }

    #[test]
    fn tie_at_cutoff_is_not_expanded() {
        let rl = rank_videos(&composite(&[("b", 1.0), ("a", 1.0), ("c", 0.5)]));
        let top = select_top_percent(&rl, 1.0).unwrap();
        assert_eq!(order(&top), vec!["a"]);
    }

    #[test]
    fn merge_complete_and_incomplete() {
        let rl = ranked(&["x", "y"]);
        let labels = stance(&[("x", StanceLabel::ProAbortion), ("y", StanceLabel::Neutral)]);
        let (lr, stats) = merge_labels(&rl, &labels).unwrap();
        assert_eq!(lr.len(), 2);
        assert_eq!(lr.entries[0].bias, BiasValue::NEGATIVE);
        assert_eq!(stats.extra_labels_ignored, 0);

        let partial = stance(&[("x", StanceLabel::ProAbortion)]);
        match merge_labels(&rl, &partial) {
            Err(AuditError::IncompleteLabels { ids }) => assert_eq!(ids, vec![vid("y")]),
            other => panic!("expected incomplete labels, got {other:?}"),
        }
    }

    #[test]
    fn merge_counts_extra_labels() {
        let rl = ranked(&["x"]);
        let labels = stance(&[
            ("x", StanceLabel::AntiAbortion),
            ("q", StanceLabel::Neutral),
            ("r", StanceLabel::ProAbortion),
        ]);
        let (lr, stats) = merge_labels(&rl, &labels).unwrap();
        assert_eq!(lr.len(), 1);
        assert_eq!(stats.extra_labels_ignored, 2);
    }

    #[test]
    fn label_file_parsing() {
        let text = "video_id,label\na,PRO\nb, neutral \nc,Anti\n";
        let lf: LabelFile<StanceLabel> = parse_label_file(text.as_bytes()).unwrap();
        assert_eq!(lf.labels[&vid("c")], StanceLabel::AntiAbortion);
        assert_eq!(lf.labels[&vid("b")], StanceLabel::Neutral);

        let bad = "video_id,label\na,pro\nb,misinfo\n";
        match parse_label_file::<StanceLabel, _>(bad.as_bytes()) {
            Err(AuditError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(parse_label_file::<StanceLabel, _>("id,lab\n".as_bytes()).is_err());
    }

    #[test]
    fn label_scheme_inference() {
        let v = AnyLabels::parse(b"video_id,label\na,neutral\nb,misinfo\n", None).unwrap();
        assert_eq!(v.scheme(), LabelScheme::Veracity);
        let s = AnyLabels::parse(b"video_id,label\na,anti\n", None).unwrap();
        assert_eq!(s.scheme(), LabelScheme::Stance);
        assert!(AnyLabels::parse(b"video_id,label\na,anti\nb,debunk\n", None).is_err());
    }

    #[test]
    fn class_distribution_examples() {
        let rl = ranked(&["a", "b", "c", "d"]);
        let labels = stance(&[
            ("a", StanceLabel::ProAbortion),
            ("b", StanceLabel::AntiAbortion),
            ("c", StanceLabel::ProAbortion),
            ("d", StanceLabel::Neutral),
        ]);
        let (lr, _) = merge_labels(&rl, &labels).unwrap();
        let cd = class_distribution(&lr).unwrap();
        assert_eq!(cd.total, 4);
        assert_eq!(cd.classes[&StanceLabel::ProAbortion], (2, 0.5));
        assert_eq!(cd.classes[&StanceLabel::AntiAbortion], (1, 0.25));
        assert_eq!(cd.classes[&StanceLabel::Neutral], (1, 0.25));

        let rl = ranked(&["a", "c"]);
        let (lr, _) = merge_labels(&rl, &labels).unwrap();
        let cd = class_distribution(&lr).unwrap();
        assert_eq!(cd.classes[&StanceLabel::ProAbortion], (2, 1.0));

        let empty = LabeledRanking::<StanceLabel> {
            entries: vec![],
            scheme: LabelScheme::Stance,
        };
        assert!(class_distribution(&empty).is_err());
    }

    #[test]
    fn ranking_csv_round_trip() {
        let rl = rank_videos(&composite(&[("a", 0.1 + 0.2), ("b", 1e-300), ("c", 5.5)]));
        let mut buf = Vec::new();
        write_ranking_csv(&rl, &mut buf).unwrap();
        assert!(buf.starts_with(b"rank,video_id,composite_score\n"));
        assert_eq!(read_ranking_csv(buf.as_slice()).unwrap(), rl);
    }

    #[test]
    fn selection_and_labeled_csv_round_trip() {
        let rl = ranked(&["a", "b"]);
        let mut buf = Vec::new();
        write_selection_csv(&rl, |id| Some(format!("title, {id}")), &mut buf).unwrap();
        assert_eq!(read_selection_csv(buf.as_slice()).unwrap(), rl);

        let labels = stance(&[
            ("a", StanceLabel::AntiAbortion),
            ("b", StanceLabel::Neutral),
        ]);
        let (lr, _) = merge_labels(&rl, &labels).unwrap();
        let mut buf = Vec::new();
        write_labeled_csv(&lr, &mut buf).unwrap();
        assert_eq!(
            read_labeled_csv::<StanceLabel, _>(buf.as_slice()).unwrap(),
            lr
        );
    }

    proptest! {
        #[test]
        fn selection_size_is_exact_ceiling(n in 1usize..100_000, pct in 1u32..=100) {
            let k = selection_size(n, pct as f64).unwrap();
            // Integer ceiling of pct*n/100.
            let expected = (pct as usize * n).div_ceil(100);
            prop_assert_eq!(k, expected);
            prop_assert!(k >= 1);
        }

        #[test]
        fn full_selection_preserves_order(scores in proptest::collection::vec(0u8..5, 1..30)) {
            let pairs: Vec<(String, f64)> = scores.iter().enumerate().map(|(i, &s)| (format!("v{i:02}"), s as f64)).collect();
            let borrowed: Vec<(&str, f64)> = pairs.iter().map(|(i, s)| (i.as_str(), *s)).collect();
            let rl = rank_videos(&composite(&borrowed));
            prop_assert_eq!(&select_top_percent(&rl, 100.0).unwrap(), &rl);
            for w in rl.entries.windows(2) {
                prop_assert!(w[0].score > w[1].score || (w[0].score == w[1].score && w[0].video_id < w[1].video_id));
            }
        }

        #[test]
        fn merged_ranks_strictly_increase(n in 1usize..40, pct in 1.0f64..100.0) {
            let ids: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
            let borrowed: Vec<&str> = ids.iter().map(|s| s.as_str()).collect();
            let rl = select_top_percent(&ranked(&borrowed), pct).unwrap();
            let labels = LabelFile { labels: ids.iter().enumerate().map(|(i, id)| (vid(id), StanceLabel::ALL[i % 3])).collect() };
            let (lr, _) = merge_labels(&rl, &labels).unwrap();
            prop_assert!(lr.entries.windows(2).all(|w| w[0].rank < w[1].rank));
            let cd = class_distribution(&lr).unwrap();
            let total: f64 = cd.classes.values().map(|(_, f)| f).sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
        }
    }
}
