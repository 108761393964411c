use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use recaudit::centrality::{influence, measure_correlation, SolverParams};
use recaudit::config::{Overrides, PipelineConfig};
use recaudit::domain::{LabelScheme, VideoId};
use recaudit::error::{AuditError, Result};
use recaudit::export::{export_graph, parse_json_edge_list, ExportFormat};
use recaudit::ingest::{clean, parse_metadata, write_metadata, write_session_log};
use recaudit::metrics::{
    bias_report, compare_rankings, write_bias_csv, write_overlap_csv, CompareParams, RboVariant,
};
use recaudit::pipeline::{
    annotation_gap_csv, class_distribution_csv, correlation_csv, path_mode, read_composite,
    read_log, run_and_write, scores_csv, simulate_inputs, stats_csv, Artifacts, PipelineFailure,
};
use recaudit::ranking::{
    rank_videos, read_ranking_csv, read_selection_csv, select_top_percent, write_ranking_csv,
    write_selection_csv, AnyLabeled, AnyLabels,
};
use recaudit::recgraph::{build_graph, graph_stats};

/// Audit recommendation graphs built from sock-puppet session logs.
#[derive(Debug, Parser)]
#[command(name = "recaudit", version, about)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Pipeline config (TOML); its sections supply defaults to every subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory that receives all output files.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Overrides the simulation rng_seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Abort when a centrality solver does not converge.
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate session logs, metadata and ground-truth labels for the configured profiles.
    Simulate,
    /// Validate, topic-filter and prune a session log.
    Ingest {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        metadata: PathBuf,
        #[arg(long)]
        keyword: Option<String>,
        #[arg(long)]
        strict_titles: bool,
    },
    /// Build the weighted recommendation graph of a cleaned log.
    Build {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        metadata: PathBuf,
        /// Rank decay of the click model.
        #[arg(long)]
        r: Option<f64>,
    },
    /// Node/edge counts, average degree, path length and diameter.
    Stats {
        /// Graph JSON files; repeat for several graphs.
        #[arg(long, required = true)]
        graph: Vec<PathBuf>,
        #[arg(long)]
        undirected: bool,
    },
    /// Compute the six centrality measures and their composite.
    Centrality {
        #[arg(long)]
        graph: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Order videos by composite score.
    Rank {
        #[arg(long)]
        scores: PathBuf,
    },
    /// Keep the top percent of a ranking for annotation.
    Select {
        #[arg(long)]
        ranking: PathBuf,
        #[arg(long)]
        pct: Option<f64>,
        /// Metadata used to fill in titles.
        #[arg(long)]
        metadata: Option<PathBuf>,
    },
    /// Attach annotations to a selection.
    MergeLabels {
        #[arg(long)]
        selection: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        scheme: Option<LabelScheme>,
    },
    /// Total bias and class distribution of labeled selections.
    Bias {
        /// Labeled CSVs; repeat for several profiles.
        #[arg(long, required = true)]
        labeled: Vec<PathBuf>,
        #[arg(long)]
        scheme: Option<LabelScheme>,
    },
    /// Overlap coefficient and RBO between two profile directories.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        extrapolated: bool,
        /// Compare the top-percent selections (selection.csv) instead of the full rankings (ranking.csv).
        #[arg(long)]
        selection: bool,
    },
    /// Write a graph as GraphML, DOT or JSON.
    Export {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value = "graphml")]
        format: ExportFormat,
    },
    /// Run every stage from the config file.
    Pipeline,
}

#[derive(Debug, Args)]
struct SolverArgs {
    #[arg(long)]
    damping: Option<f64>,
    #[arg(long)]
    alpha_fraction: Option<f64>,
    #[arg(long)]
    katz_alpha: Option<f64>,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
}

impl SolverArgs {
    fn apply(&self, p: &mut SolverParams) {
        if let Some(v) = self.damping {
            p.damping = v;
        }
        if let Some(v) = self.alpha_fraction {
            p.alpha_fraction = v;
        }
        if self.katz_alpha.is_some() {
            p.katz_alpha = self.katz_alpha;
        }
        if let Some(v) = self.tolerance {
            p.tolerance = v;
        }
        if let Some(v) = self.max_iterations {
            p.max_iterations = v;
        }
    }
}

struct Context {
    cfg: PipelineConfig,
    config_text: Option<Vec<u8>>,
    out_dir: PathBuf,
}

impl Context {
    fn new(g: &Global) -> Result<Self> {
        let (mut cfg, config_text) = match &g.config {
            Some(path) => {
                let text = fs::read(path).map_err(|e| AuditError::io(path, e))?;
                (PipelineConfig::load(path)?, Some(text))
            }
            None => (PipelineConfig::default(), None),
        };
        cfg.apply(&Overrides {
            out_dir: g.out_dir.clone(),
            seed: g.seed,
            strict: g.strict,
        });
        let out_dir = match (&g.out_dir, &g.config) {
            (Some(d), _) => d.clone(),
            (None, Some(_)) => cfg.run.out_dir.clone(),
            (None, None) => PathBuf::from("."),
        };
        Ok(Context {
            cfg,
            config_text,
            out_dir,
        })
    }

    fn require_config(&self) -> Result<()> {
        if self.config_text.is_none() {
            return Err(AuditError::parameter("this command needs --config"));
        }
        Ok(())
    }

    fn write(&self, art: &Artifacts) -> Result<()> {
        art.write_to(&self.out_dir)?;
        for path in art.files.keys() {
            println!("{}", self.out_dir.join(path).display());
        }
        Ok(())
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| AuditError::io(path, e))
}

fn buf(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut b = Vec::new();
    f(&mut b)?;
    Ok(b)
}

/// Display name of an input file: its directory for the conventional
/// per-profile file names, its stem otherwise.
fn name_of(path: &Path) -> String {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("input");
    let conventional = ["graph", "labeled", "selection", "ranking"];
    match path
        .parent()
        .and_then(|p| p.file_name())
        .and_then(|s| s.to_str())
    {
        Some(dir) if conventional.contains(&stem) => dir.to_string(),
        _ => stem.to_string(),
    }
}

fn run(cli: Cli) -> Result<(), PipelineFailure> {
    let ctx = Context::new(&cli.global)?;
    let cfg = &ctx.cfg;
    let mut art = Artifacts::default();
    match cli.command {
        Command::Simulate => {
            ctx.require_config()?;
            cfg.validate()?;
            for input in simulate_inputs(cfg)? {
                for (path, bytes) in input.generated {
                    art.insert(path, bytes);
                }
            }
        }
        Command::Ingest {
            log,
            metadata,
            keyword,
            strict_titles,
        } => {
            let (raw, mut report) = read_log(&read(&log)?, &read(&metadata)?)?;
            let keyword = keyword.unwrap_or_else(|| cfg.ingest.keyword.clone());
            let cleaned = clean(
                &raw,
                &keyword,
                strict_titles || cfg.ingest.strict_titles,
                &mut report,
            );
            art.insert("clean_log.jsonl", buf(|b| write_session_log(&cleaned, b))?);
            art.insert(
                "clean_metadata.jsonl",
                buf(|b| write_metadata(cleaned.metadata.values(), b))?,
            );
            art.insert(
                "ingest_report.json",
                serde_json::to_vec_pretty(&report).map_err(AuditError::from)?,
            );
        }
        Command::Build { log, metadata, r } => {
            let (log, _) = read_log(&read(&log)?, &read(&metadata)?)?;
            let g = build_graph(&log).assign_weights(r.unwrap_or(cfg.weights.r))?;
            art.insert("graph.json", export_graph(&g, ExportFormat::JsonEdgeList)?);
        }
        Command::Stats { graph, undirected } => {
            let mode = if undirected {
                path_mode(true)
            } else {
                cfg.run.path_mode
            };
            let mut rows = Vec::new();
            for path in &graph {
                let g = parse_json_edge_list(&read(path)?)?;
                rows.push((name_of(path), graph_stats(&g, mode)?));
            }
            art.insert("stats.csv", stats_csv(&rows)?);
        }
        Command::Centrality { graph, solver } => {
            let g = parse_json_edge_list(&read(&graph)?)?;
            let mut params = cfg.centrality.clone();
            solver.apply(&mut params);
            let inf = influence(&g, &params)?;
            let flagged = inf.flagged();
            if let Some(sv) = inf.raw.iter().find(|s| !s.converged()) {
                if cfg.run.strict {
                    let c = sv.convergence.expect("iterative measure");
                    return Err(AuditError::NonConvergence {
                        measure: sv.measure.to_string(),
                        iterations: c.iterations,
                        residual: c.residual,
                    }
                    .into());
                }
                let names: Vec<String> = flagged.iter().map(|m| m.to_string()).collect();
                eprintln!("warning: flagged measures: {}", names.join(", "));
            }
            art.insert("scores.csv", scores_csv(&inf)?);
            if let Ok(m) = measure_correlation(&inf.raw) {
                art.insert("correlation.csv", correlation_csv(&m)?);
            }
        }
        Command::Rank { scores } => {
            let composite = read_composite(&read(&scores)?)?;
            let rl = rank_videos(&composite);
            art.insert("ranking.csv", buf(|b| write_ranking_csv(&rl, b))?);
        }
        Command::Select {
            ranking,
            pct,
            metadata,
        } => {
            let rl = read_ranking_csv(read(&ranking)?.as_slice())?;
            let sel = select_top_percent(&rl, pct.unwrap_or(cfg.selection.pct))?;
            let meta = match &metadata {
                Some(p) => parse_metadata(BufReader::new(read(p)?.as_slice()))?,
                None => Default::default(),
            };
            let title_of = |id: &VideoId| meta.get(id).map(|m| m.title.clone());
            art.insert(
                "selection.csv",
                buf(|b| write_selection_csv(&sel, title_of, b))?,
            );
        }
        Command::MergeLabels {
            selection,
            labels,
            scheme,
        } => {
            let sel = read_selection_csv(read(&selection)?.as_slice())?;
            let labels = AnyLabels::parse(&read(&labels)?, scheme.or(cfg.labels.scheme))?;
            match labels.merge(&sel) {
                Ok((lr, stats)) => {
                    if stats.extra_labels_ignored > 0 {
                        eprintln!(
                            "note: {} labels were not in the selection",
                            stats.extra_labels_ignored
                        );
                    }
                    art.insert("labeled.csv", buf(|b| lr.write_csv(b))?);
                }
                Err(AuditError::IncompleteLabels { ids }) => {
                    let profile = name_of(&selection);
                    let gaps: Vec<_> = sel
                        .entries
                        .iter()
                        .filter(|e| ids.contains(&e.video_id))
                        .map(|e| (profile.clone(), e.rank, e.video_id.clone(), String::new()))
                        .collect();
                    let mut gap = Artifacts::default();
                    gap.insert("annotation_gap.csv", annotation_gap_csv(&gaps)?);
                    ctx.write(&gap)?;
                    return Err(AuditError::IncompleteLabels { ids }.into());
                }
                Err(e) => return Err(e.into()),
            }
        }
        Command::Bias { labeled, scheme } => {
            let mut reports = Vec::new();
            let mut rows = Vec::new();
            for path in &labeled {
                let lr = AnyLabeled::read_csv(&read(path)?, scheme.or(cfg.labels.scheme))?;
                let name = name_of(path);
                reports.push(bias_report(&name, lr.scheme(), &lr.bias_values())?);
                rows.push((name, lr));
            }
            art.insert("bias.csv", buf(|b| write_bias_csv(&reports, b))?);
            art.insert("class_distribution.csv", class_distribution_csv(&rows)?);
        }
        Command::Compare {
            a,
            b,
            p,
            depth,
            extrapolated,
            selection,
        } => {
            let params = CompareParams {
                p: p.unwrap_or(cfg.compare.p),
                depth: depth.unwrap_or(cfg.compare.depth),
                variant: if extrapolated {
                    RboVariant::Extrapolated
                } else {
                    cfg.compare.variant
                },
                overlap: cfg.compare.overlap,
            };
            let load = |dir: &Path| -> Result<Vec<VideoId>> {
                let rl = if selection {
                    read_selection_csv(read(&dir.join("selection.csv"))?.as_slice())?
                } else {
                    read_ranking_csv(read(&dir.join("ranking.csv"))?.as_slice())?
                };
                Ok(rl.ids())
            };
            let (la, lb) = (load(&a)?, load(&b)?);
            let report = compare_rankings((&dir_name(&a), &dir_name(&b)), &la, &lb, &params)?;
            art.insert("overlap.csv", buf(|w| write_overlap_csv(&[report], w))?);
        }
        Command::Export { graph, format } => {
            let g = parse_json_edge_list(&read(&graph)?)?;
            art.insert(
                format!("graph.{}", format.extension()),
                export_graph(&g, format)?,
            );
        }
        Command::Pipeline => {
            ctx.require_config()?;
            let run = match run_and_write(cfg, ctx.config_text.as_deref()) {
                Ok(run) => run,
                Err(PipelineFailure::AnnotationGap { error, .. }) => {
                    eprintln!(
                        "annotation gap listed in {}",
                        cfg.run.out_dir.join("annotation_gap.csv").display()
                    );
                    return Err(error.into());
                }
                Err(e) => return Err(e),
            };
            for p in &run.manifest.profiles {
                if !p.flagged_measures.is_empty() {
                    eprintln!(
                        "warning: {}: flagged measures: {}",
                        p.id,
                        p.flagged_measures.join(", ")
                    );
                }
            }
            for b in &run.bias {
                println!("{}: total bias {:.4}", b.profile_id, b.total_bias);
            }
            println!("artifacts written to {}", cfg.run.out_dir.display());
            return Ok(());
        }
    }
    ctx.write(&art)?;
    Ok(())
}

fn dir_name(dir: &Path) -> String {
    dir.file_name()
        .and_then(|s| s.to_str())
        .map_or_else(|| dir.display().to_string(), str::to_string)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            let err = failure.error();
            eprintln!("error: {err}");
            ExitCode::from(err.category().exit_code() as u8)
        }
    }
}
