//! End-to-end orchestration: inputs to every artifact of a run.
//!
//! All artifacts are computed in memory first and written only once the
//! whole run has succeeded, so a failing run leaves no partial output. The
//! one exception is `annotation_gap.csv`, written when selected videos lack
//! labels so that annotators know what to label next.

use std::collections::BTreeMap;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::centrality::{
    influence, measure_correlation, CorrelationMatrix, Influence, Measure, ScoreVector,
};
use crate::config::{PipelineConfig, ProfileConfig};
use crate::domain::{LabelScheme, SessionLog, VideoId};
use crate::error::{AuditError, Result};
use crate::export::{export_graph, ExportFormat};
use crate::ingest::{
    clean, parse_metadata, parse_session_log, write_metadata, write_session_log, IngestReport,
};
use crate::manifest::{
    now_unix_ms, sha256_hex, FileDigest, ParamSummary, ProfileEntry, RunManifest, TOOL_NAME,
    TOOL_VERSION,
};
use crate::metrics::{
    bias_report, compare_rankings, write_bias_csv, write_overlap_csv, BiasReport, OverlapReport,
};
use crate::ranking::{
    rank_videos, select_top_percent, write_ranking_csv, write_selection_csv, AnyLabeled, AnyLabels,
    RankedList,
};
use crate::recgraph::{build_graph, graph_stats, GraphStats, PathMode, RecGraph};
use crate::sim::{generate_corpus, run_sock_puppet};

/// Files of one run, keyed by path relative to the output directory.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Artifacts {
    pub files: BTreeMap<String, Vec<u8>>,
}

impl Artifacts {
    pub fn insert(&mut self, path: impl Into<String>, bytes: Vec<u8>) {
        self.files.insert(path.into(), bytes);
    }

    pub fn get(&self, path: &str) -> Option<&[u8]> {
        self.files.get(path).map(Vec::as_slice)
    }

    pub fn digests(&self) -> Vec<FileDigest> {
        self.files
            .iter()
            .map(|(p, b)| FileDigest::of(p.clone(), b))
            .collect()
    }

    /// Writes every file under `dir`, creating directories as needed.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        for (rel, bytes) in &self.files {
            let path = dir.join(rel);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent).map_err(|e| AuditError::io(parent, e))?;
            }
            std::fs::write(&path, bytes).map_err(|e| AuditError::io(&path, e))?;
        }
        Ok(())
    }
}

/// A profile's cleaned log and annotations, ready for analysis.
#[derive(Debug, Clone)]
pub struct ProfileInput {
    pub id: String,
    pub simulated: bool,
    pub log: SessionLog,
    pub report: IngestReport,
    pub labels: AnyLabels,
    pub input_digests: Vec<FileDigest>,
    /// Generated input files (simulated profiles only).
    pub generated: Vec<(String, Vec<u8>)>,
}

/// Everything computed for one profile before labels are attached.
#[derive(Debug, Clone)]
pub struct ProfileAnalysis {
    pub log: SessionLog,
    pub report: IngestReport,
    pub graph: RecGraph,
    pub influence: Influence,
    pub correlation: Option<CorrelationMatrix>,
    pub ranking: RankedList,
    pub selection: RankedList,
}

impl ProfileAnalysis {
    /// Katz attenuation and spectral radius actually used.
    pub fn katz_resolution(&self) -> (Option<f64>, Option<f64>) {
        self.influence
            .raw
            .iter()
            .find(|s| s.measure == Measure::Katz)
            .map_or((None, None), |s| {
                (
                    s.params.as_ref().and_then(|p| p.katz_alpha),
                    s.spectral_radius,
                )
            })
    }
}

/// Cleans a raw log and runs graph construction, the six measures, ranking
/// and top-percent selection.
pub fn analyze(
    log: &SessionLog,
    mut report: IngestReport,
    cfg: &PipelineConfig,
) -> Result<ProfileAnalysis> {
    let cleaned = clean(
        log,
        &cfg.ingest.keyword,
        cfg.ingest.strict_titles,
        &mut report,
    );
    let graph = build_graph(&cleaned).assign_weights(cfg.weights.r)?;
    if graph.node_count() == 0 {
        return Err(AuditError::integrity(format!(
            "profile {:?} has no videos left after cleaning",
            log.profile_id
        )));
    }
    let influence = influence(&graph, &cfg.centrality)?;
    if cfg.run.strict {
        if let Some(sv) = influence.raw.iter().find(|s| !s.converged()) {
            let c = sv
                .convergence
                .unwrap_or_else(|| unreachable!("exact measures always converge"));
            return Err(AuditError::NonConvergence {
                measure: sv.measure.to_string(),
                iterations: c.iterations,
                residual: c.residual,
            });
        }
    }
    let correlation = measure_correlation(&influence.raw).ok();
    let ranking = rank_videos(&influence.composite);
    let selection = select_top_percent(&ranking, cfg.selection.pct)?;
    Ok(ProfileAnalysis {
        log: cleaned,
        report,
        graph,
        influence,
        correlation,
        ranking,
        selection,
    })
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| AuditError::io(path, e))
}

/// Parses a session log plus its metadata file into one log.
pub fn read_log(log_bytes: &[u8], meta_bytes: &[u8]) -> Result<(SessionLog, IngestReport)> {
    let (mut log, report) = parse_session_log(BufReader::new(log_bytes))?;
    log.metadata = parse_metadata(BufReader::new(meta_bytes))?;
    Ok((log, report))
}

fn recorded_input(p: &ProfileConfig, scheme: Option<LabelScheme>) -> Result<ProfileInput> {
    let paths: Vec<&PathBuf> = [&p.log, &p.metadata, &p.labels]
        .into_iter()
        .flatten()
        .collect();
    let [log_path, meta_path, label_path] = paths[..] else {
        return Err(AuditError::parameter(format!(
            "profile {:?} lacks input files",
            p.id
        )));
    };
    let log_bytes = read_file(log_path)?;
    let meta_bytes = read_file(meta_path)?;
    let label_bytes = read_file(label_path)?;
    let (log, report) = read_log(&log_bytes, &meta_bytes)?;
    let labels = AnyLabels::parse(&label_bytes, scheme)?;
    Ok(ProfileInput {
        id: p.id.clone(),
        simulated: false,
        log,
        report,
        labels,
        input_digests: vec![
            FileDigest::of(log_path.display().to_string(), &log_bytes),
            FileDigest::of(meta_path.display().to_string(), &meta_bytes),
            FileDigest::of(label_path.display().to_string(), &label_bytes),
        ],
        generated: Vec::new(),
    })
}

/// Produces the session log, metadata and ground-truth labels of every
/// simulated profile. Profiles run in parallel, each with its own RNG.
pub fn simulate_inputs(cfg: &PipelineConfig) -> Result<Vec<ProfileInput>> {
    let simulated: Vec<&ProfileConfig> = cfg.profiles.iter().filter(|p| p.is_simulated()).collect();
    if simulated.is_empty() {
        return Ok(Vec::new());
    }
    let sim = cfg
        .simulation
        .as_ref()
        .ok_or_else(|| AuditError::parameter("simulated profiles need a [simulation] section"))?;
    let corpus = generate_corpus(sim)?;
    simulated
        .par_iter()
        .map(|p| {
            let run = run_sock_puppet(&p.spec(), &corpus, sim)?;
            let mut log_bytes = Vec::new();
            write_session_log(&run.log, &mut log_bytes)?;
            let mut meta_bytes = Vec::new();
            write_metadata(run.log.metadata.values(), &mut meta_bytes)?;
            let mut truth = corpus.clone();
            let keep: Vec<usize> = run
                .log
                .metadata
                .keys()
                .filter_map(|id| corpus.index_of(id))
                .collect();
            truth.videos = keep.iter().map(|&i| corpus.videos[i].clone()).collect();
            truth.classes = keep.iter().map(|&i| corpus.classes[i]).collect();
            let label_bytes = truth.label_csv()?;

            // Read back through the same parsers as recorded crawls.
            let (log, report) = read_log(&log_bytes, &meta_bytes)?;
            let labels = AnyLabels::parse(&label_bytes, Some(sim.scheme))?;
            Ok(ProfileInput {
                id: p.id.clone(),
                simulated: true,
                log,
                report,
                labels,
                input_digests: Vec::new(),
                generated: vec![
                    (format!("{}/session_log.jsonl", p.id), log_bytes),
                    (format!("{}/metadata.jsonl", p.id), meta_bytes),
                    (format!("{}/labels.csv", p.id), label_bytes),
                ],
            })
        })
        .collect()
}

/// Loads recorded profiles from disk and simulates the rest, in config order.
pub fn load_inputs(cfg: &PipelineConfig) -> Result<Vec<ProfileInput>> {
    let mut simulated = simulate_inputs(cfg)?.into_iter();
    cfg.profiles
        .iter()
        .map(|p| {
            if p.is_simulated() {
                Ok(simulated
                    .next()
                    .expect("one simulated input per simulated profile"))
            } else {
                recorded_input(p, cfg.labels.scheme)
            }
        })
        .collect()
}

/// `video_id,measure,raw,normalized`, one row per node and measure, with the
/// composite last.
pub fn scores_csv(inf: &Influence) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["video_id", "measure", "raw", "normalized"])?;
    let rows = inf.raw.iter().zip(&inf.normalized);
    for (raw, norm) in rows {
        for (i, id) in raw.ids.iter().enumerate() {
            w.write_record([
                id.as_str(),
                raw.measure.name(),
                &raw.scores[i].to_string(),
                &norm.scores[i].to_string(),
            ])?;
        }
    }
    let c = &inf.composite;
    for (i, id) in c.ids.iter().enumerate() {
        let v = c.scores[i].to_string();
        w.write_record([id.as_str(), Measure::Composite.name(), &v, &v])?;
    }
    finish(w)
}

/// Reads the composite rows back out of a scores CSV.
pub fn read_composite(bytes: &[u8]) -> Result<ScoreVector> {
    let mut rdr = csv::Reader::from_reader(bytes);
    let (mut ids, mut scores) = (Vec::new(), Vec::new());
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        if row.get(1) != Some(Measure::Composite.name()) {
            continue;
        }
        let id = VideoId::new(row.get(0).unwrap_or_default())
            .map_err(|e| AuditError::parse(line, e.to_string()))?;
        let score: f64 = row
            .get(2)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| AuditError::parse(line, "composite score is not a number"))?;
        ids.push(id);
        scores.push(score);
    }
    if ids.is_empty() {
        return Err(AuditError::parse(0, "scores file has no composite rows"));
    }
    let mut sv = ScoreVector::new(Measure::Composite, ids, scores);
    sv.normalized = true;
    Ok(sv)
}

pub fn correlation_csv(m: &CorrelationMatrix) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["measure".to_string()];
    header.extend(m.measures.iter().map(|x| x.to_string()));
    w.write_record(&header)?;
    for (measure, row) in m.measures.iter().zip(&m.values) {
        let mut rec = vec![measure.to_string()];
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    finish(w)
}

pub fn stats_csv(rows: &[(String, GraphStats)]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "graph",
        "nodes",
        "edges",
        "avg_degree",
        "avg_path_length",
        "diameter",
    ])?;
    for (name, s) in rows {
        w.write_record([
            name.clone(),
            s.node_count.to_string(),
            s.edge_count.to_string(),
            s.avg_degree.to_string(),
            s.avg_path_length.to_string(),
            s.diameter.to_string(),
        ])?;
    }
    finish(w)
}

pub fn class_distribution_csv(rows: &[(String, AnyLabeled)]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["profile", "label", "count", "fraction"])?;
    for (profile, lr) in rows {
        for (label, count, frac) in lr.class_rows()? {
            w.write_record([profile.clone(), label, count.to_string(), frac.to_string()])?;
        }
    }
    finish(w)
}

/// `profile,rank,video_id,title` for every selected video without a label.
pub fn annotation_gap_csv(gaps: &[(String, usize, VideoId, String)]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["profile", "rank", "video_id", "title"])?;
    for (profile, rank, id, title) in gaps {
        w.write_record([profile.as_str(), &rank.to_string(), id.as_str(), title])?;
    }
    finish(w)
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    w.into_inner()
        .map_err(|e| AuditError::io("<csv buffer>", std::io::Error::other(e.to_string())))
}

fn bytes_of(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

/// Pairwise overlap of the profiles' full rankings, in config order. OC
/// covers every ranked video; RBO stops at the configured depth.
pub fn pairwise_overlap(
    rankings: &[(String, Vec<VideoId>)],
    cfg: &PipelineConfig,
) -> Result<Vec<OverlapReport>> {
    let mut out = Vec::new();
    for i in 0..rankings.len() {
        for j in i + 1..rankings.len() {
            let (a, la) = &rankings[i];
            let (b, lb) = &rankings[j];
            out.push(compare_rankings((a, b), la, lb, &cfg.compare)?);
        }
    }
    Ok(out)
}

/// Result of a successful run.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub artifacts: Artifacts,
    pub manifest: RunManifest,
    pub bias: Vec<BiasReport>,
    pub overlap: Vec<OverlapReport>,
}

/// A run that stopped because selected videos lack labels.
#[derive(Debug)]
pub enum PipelineFailure {
    Error(AuditError),
    AnnotationGap { error: AuditError, gap_csv: Vec<u8> },
}

impl From<AuditError> for PipelineFailure {
    fn from(e: AuditError) -> Self {
        PipelineFailure::Error(e)
    }
}

impl PipelineFailure {
    pub fn error(&self) -> &AuditError {
        match self {
            PipelineFailure::Error(e) | PipelineFailure::AnnotationGap { error: e, .. } => e,
        }
    }
}

/// Runs the whole audit in memory. `config_text` is digested into the
/// manifest when given.
pub fn run_pipeline(
    cfg: &PipelineConfig,
    config_text: Option<&[u8]>,
) -> Result<PipelineRun, PipelineFailure> {
    let started = now_unix_ms();
    cfg.validate()?;
    let inputs = load_inputs(cfg)?;
    let scheme = inputs.first().map(|i| i.labels.scheme());
    if inputs.iter().any(|i| Some(i.labels.scheme()) != scheme) {
        return Err(
            AuditError::parameter("all profiles of a run must use one label scheme").into(),
        );
    }

    let analyses: Vec<ProfileAnalysis> = inputs
        .iter()
        .map(|input| analyze(&input.log, input.report.clone(), cfg))
        .collect::<Result<_>>()?;

    // Attach labels, collecting every gap before failing.
    let mut gaps = Vec::new();
    let mut labeled = Vec::new();
    for (input, a) in inputs.iter().zip(&analyses) {
        match input.labels.merge(&a.selection) {
            Ok((lr, _)) => labeled.push((input.id.clone(), lr)),
            Err(AuditError::IncompleteLabels { ids }) => {
                for e in a
                    .selection
                    .entries
                    .iter()
                    .filter(|e| ids.contains(&e.video_id))
                {
                    let title = a.log.title_of(&e.video_id).unwrap_or_default().to_string();
                    gaps.push((input.id.clone(), e.rank, e.video_id.clone(), title));
                }
            }
            Err(e) => return Err(e.into()),
        }
    }
    if !gaps.is_empty() {
        let ids = gaps.iter().map(|g| g.2.clone()).collect();
        return Err(PipelineFailure::AnnotationGap {
            error: AuditError::IncompleteLabels { ids },
            gap_csv: annotation_gap_csv(&gaps)?,
        });
    }

    let mut art = Artifacts::default();
    let mut stats_rows = Vec::new();
    let mut entries = Vec::new();
    for (input, a) in inputs.iter().zip(&analyses) {
        let dir = &input.id;
        for (path, bytes) in &input.generated {
            art.insert(path.clone(), bytes.clone());
        }
        stats_rows.push((input.id.clone(), graph_stats(&a.graph, cfg.run.path_mode)?));
        art.insert(
            format!("{dir}/graph.graphml"),
            export_graph(&a.graph, ExportFormat::GraphMl)?,
        );
        art.insert(
            format!("{dir}/graph.json"),
            export_graph(&a.graph, ExportFormat::JsonEdgeList)?,
        );
        art.insert(format!("{dir}/scores.csv"), scores_csv(&a.influence)?);
        if let Some(m) = &a.correlation {
            art.insert(format!("{dir}/correlation.csv"), correlation_csv(m)?);
        }
        art.insert(
            format!("{dir}/ranking.csv"),
            bytes_of(|b| write_ranking_csv(&a.ranking, b))?,
        );
        let title_of = |id: &VideoId| a.log.title_of(id).map(str::to_string);
        art.insert(
            format!("{dir}/selection.csv"),
            bytes_of(|b| write_selection_csv(&a.selection, title_of, b))?,
        );
        art.insert(
            format!("{dir}/ingest_report.json"),
            serde_json::to_vec_pretty(&a.report).map_err(AuditError::from)?,
        );

        let (katz_alpha, spectral_radius) = a.katz_resolution();
        entries.push(ProfileEntry {
            id: input.id.clone(),
            simulated: input.simulated,
            nodes: a.graph.node_count(),
            edges: a.graph.edge_count(),
            selected: a.selection.len(),
            katz_alpha,
            spectral_radius,
            flagged_measures: a
                .influence
                .flagged()
                .iter()
                .map(|m| m.to_string())
                .collect(),
        });
    }

    let mut bias = Vec::new();
    for (id, lr) in &labeled {
        art.insert(format!("{id}/labeled.csv"), bytes_of(|b| lr.write_csv(b))?);
        bias.push(bias_report(id, lr.scheme(), &lr.bias_values())?);
    }
    let rankings: Vec<(String, Vec<VideoId>)> = inputs
        .iter()
        .zip(&analyses)
        .map(|(i, a)| (i.id.clone(), a.ranking.ids()))
        .collect();
    let overlap = pairwise_overlap(&rankings, cfg)?;

    art.insert("stats.csv", stats_csv(&stats_rows)?);
    art.insert("bias.csv", bytes_of(|b| write_bias_csv(&bias, b))?);
    art.insert("overlap.csv", bytes_of(|b| write_overlap_csv(&overlap, b))?);
    art.insert("class_distribution.csv", class_distribution_csv(&labeled)?);

    let manifest = RunManifest {
        tool: TOOL_NAME.into(),
        version: TOOL_VERSION.into(),
        params: ParamSummary::from_config(cfg, scheme),
        config: cfg.clone(),
        config_sha256: config_text.map(sha256_hex),
        inputs: inputs
            .iter()
            .flat_map(|i| i.input_digests.clone())
            .collect(),
        outputs: art.digests(),
        profiles: entries,
        started_unix_ms: started,
        finished_unix_ms: now_unix_ms(),
    };
    art.insert(
        "manifest.json",
        serde_json::to_vec_pretty(&manifest).map_err(AuditError::from)?,
    );
    Ok(PipelineRun {
        artifacts: art,
        manifest,
        bias,
        overlap,
    })
}

/// Runs the audit and writes its artifacts under `cfg.run.out_dir`.
pub fn run_and_write(
    cfg: &PipelineConfig,
    config_text: Option<&[u8]>,
) -> Result<PipelineRun, PipelineFailure> {
    match run_pipeline(cfg, config_text) {
        Ok(run) => {
            run.artifacts.write_to(&cfg.run.out_dir)?;
            Ok(run)
        }
        Err(PipelineFailure::AnnotationGap { error, gap_csv }) => {
            let mut art = Artifacts::default();
            art.insert("annotation_gap.csv", gap_csv.clone());
            art.write_to(&cfg.run.out_dir)?;
            Err(PipelineFailure::AnnotationGap { error, gap_csv })
        }
        Err(e) => Err(e),
    }
}

/// Path mode named on the command line.
pub fn path_mode(undirected: bool) -> PathMode {
    if undirected {
        PathMode::Undirected
    } else {
        PathMode::Directed
    }
}
