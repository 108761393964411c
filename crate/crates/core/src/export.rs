//! Layout-free graph serializations.
//!
//! The JSON edge list is lossless and can be read back with
//! [`parse_json_edge_list`]:
//!
//! ```text
//! {"directed":true,
//!  "nodes":[{"id":"a","title":"...","duration_s":60,"view_count":10,"channel":"..."},{"id":"b"}],
//!  "edges":[{"source":"a","target":"b","rank":0,"weight":1.0}]}
//! ```
//!
//! Node metadata fields are present only when known.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::{VideoId, VideoMeta};
use crate::error::{AuditError, Result};
use crate::recgraph::{Edge, RecGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    GraphMl,
    JsonEdgeList,
    Dot,
}

impl ExportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ExportFormat::GraphMl => "graphml",
            ExportFormat::JsonEdgeList => "json",
            ExportFormat::Dot => "dot",
        }
    }
}

impl FromStr for ExportFormat {
    type Err = AuditError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "graphml" => Ok(ExportFormat::GraphMl),
            "json" | "jsonedgelist" | "json-edge-list" => Ok(ExportFormat::JsonEdgeList),
            "dot" => Ok(ExportFormat::Dot),
            other => Err(AuditError::parameter(format!(
                "unknown export format {other:?}"
            ))),
        }
    }
}

pub fn export_graph(g: &RecGraph, format: ExportFormat) -> Result<Vec<u8>> {
    let weights = g
        .weights()
        .ok_or_else(|| AuditError::parameter("export needs edge weights; assign them first"))?;
    match format {
        ExportFormat::GraphMl => Ok(graphml(g, weights).into_bytes()),
        ExportFormat::Dot => Ok(dot(g, weights).into_bytes()),
        ExportFormat::JsonEdgeList => {
            let mut bytes = serde_json::to_vec(&to_json(g, Some(weights)))?;
            bytes.push(b'\n');
            Ok(bytes)
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonNode {
    id: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    title: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    duration_s: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    view_count: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    channel: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonEdge {
    source: String,
    target: String,
    rank: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    weight: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonGraph {
    directed: bool,
    nodes: Vec<JsonNode>,
    edges: Vec<JsonEdge>,
}

fn to_json(g: &RecGraph, weights: Option<&[f64]>) -> JsonGraph {
    let nodes = (0..g.node_count())
        .map(|v| {
            let m = g.meta(v);
            JsonNode {
                id: g.id(v).to_string(),
                title: m.map(|m| m.title.clone()),
                duration_s: m.map(|m| m.duration_s),
                view_count: m.map(|m| m.view_count),
                channel: m.map(|m| m.channel.clone()),
            }
        })
        .collect();
    let edges = g
        .edges()
        .iter()
        .enumerate()
        .map(|(i, e)| JsonEdge {
            source: g.id(e.src).to_string(),
            target: g.id(e.dst).to_string(),
            rank: e.rank,
            weight: weights.map(|w| w[i]),
        })
        .collect();
    JsonGraph {
        directed: true,
        nodes,
        edges,
    }
}

/// JSON edge list without requiring weights (used for unweighted intermediates).
pub fn to_json_edge_list(g: &RecGraph) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec(&to_json(g, g.weights()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn parse_json_edge_list(bytes: &[u8]) -> Result<RecGraph> {
    let parsed: JsonGraph = serde_json::from_slice(bytes)?;
    if !parsed.directed {
        return Err(AuditError::integrity("recommendation graphs are directed"));
    }
    let mut ids = Vec::with_capacity(parsed.nodes.len());
    let mut meta = Vec::with_capacity(parsed.nodes.len());
    for node in parsed.nodes {
        let id = VideoId::new(node.id)?;
        let m = match (node.title, node.duration_s, node.view_count, node.channel) {
            (Some(title), Some(duration_s), Some(view_count), Some(channel)) => Some(VideoMeta {
                id: id.clone(),
                title,
                duration_s,
                view_count,
                channel,
            }),
            (None, None, None, None) => None,
            _ => {
                return Err(AuditError::integrity(format!(
                    "node {id} has partial metadata"
                )))
            }
        };
        ids.push(id);
        meta.push(m);
    }
    let index: std::collections::HashMap<&str, usize> = ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let lookup = |s: &str| {
        index
            .get(s)
            .copied()
            .ok_or_else(|| AuditError::integrity(format!("edge references unknown node {s:?}")))
    };
    let mut edges = Vec::with_capacity(parsed.edges.len());
    let mut weights = Vec::with_capacity(parsed.edges.len());
    let mut weighted = None;
    for e in &parsed.edges {
        edges.push(Edge {
            src: lookup(&e.source)?,
            dst: lookup(&e.target)?,
            rank: e.rank,
        });
        match (weighted, e.weight) {
            (None, w) => weighted = Some(w.is_some()),
            (Some(true), None) | (Some(false), Some(_)) => {
                return Err(AuditError::integrity(
                    "either every edge has a weight or none does",
                ))
            }
            _ => {}
        }
        if let Some(w) = e.weight {
            weights.push(w);
        }
    }
    let weights = match weighted {
        Some(true) => Some(weights),
        Some(false) => None,
        // No edges: an edgeless graph is trivially weighted.
        None => Some(Vec::new()),
    };
    RecGraph::from_parts(ids, meta, edges, weights)
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn graphml(g: &RecGraph, weights: &[f64]) -> String {
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    s.push_str(
        "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\" \
         xmlns:xsi=\"http://www.w3.org/2001/XMLSchema-instance\" \
         xsi:schemaLocation=\"http://graphml.graphdrawing.org/xmlns \
         http://graphml.graphdrawing.org/xmlns/1.0/graphml.xsd\">\n",
    );
    s.push_str("  <key id=\"title\" for=\"node\" attr.name=\"title\" attr.type=\"string\"/>\n");
    s.push_str("  <key id=\"views\" for=\"node\" attr.name=\"views\" attr.type=\"long\"/>\n");
    s.push_str("  <key id=\"duration\" for=\"node\" attr.name=\"duration\" attr.type=\"long\"/>\n");
    s.push_str("  <key id=\"channel\" for=\"node\" attr.name=\"channel\" attr.type=\"string\"/>\n");
    s.push_str("  <key id=\"rank\" for=\"edge\" attr.name=\"rank\" attr.type=\"int\"/>\n");
    s.push_str("  <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"double\"/>\n");
    s.push_str("  <graph id=\"recommendations\" edgedefault=\"directed\">\n");
    for v in 0..g.node_count() {
        let id = xml_escape(g.id(v).as_str());
        match g.meta(v) {
            Some(m) => {
                let _ = writeln!(s, "    <node id=\"{id}\">");
                let _ = writeln!(
                    s,
                    "      <data key=\"title\">{}</data>",
                    xml_escape(&m.title)
                );
                let _ = writeln!(s, "      <data key=\"views\">{}</data>", m.view_count);
                let _ = writeln!(s, "      <data key=\"duration\">{}</data>", m.duration_s);
                let _ = writeln!(
                    s,
                    "      <data key=\"channel\">{}</data>",
                    xml_escape(&m.channel)
                );
                s.push_str("    </node>\n");
            }
            None => {
                let _ = writeln!(s, "    <node id=\"{id}\"/>");
            }
        }
    }
    for (i, e) in g.edges().iter().enumerate() {
        let _ = writeln!(
            s,
            "    <edge id=\"e{i}\" source=\"{}\" target=\"{}\">",
            xml_escape(g.id(e.src).as_str()),
            xml_escape(g.id(e.dst).as_str())
        );
        let _ = writeln!(s, "      <data key=\"rank\">{}</data>", e.rank);
        let _ = writeln!(s, "      <data key=\"weight\">{}</data>", weights[i]);
        s.push_str("    </edge>\n");
    }
    s.push_str("  </graph>\n</graphml>\n");
    s
}

fn dot_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn dot(g: &RecGraph, weights: &[f64]) -> String {
    let mut s = String::from("digraph recommendations {\n");
    for v in 0..g.node_count() {
        let id = dot_quote(g.id(v).as_str());
        match g.meta(v) {
            Some(m) => {
                let _ = writeln!(
                    s,
                    "  {id} [label={}, views={}, duration={}];",
                    dot_quote(&m.title),
                    m.view_count,
                    m.duration_s
                );
            }
            None => {
                let _ = writeln!(s, "  {id};");
            }
        }
    }
    for (i, e) in g.edges().iter().enumerate() {
        let _ = writeln!(
            s,
            "  {} -> {} [rank={}, weight={}];",
            dot_quote(g.id(e.src).as_str()),
            dot_quote(g.id(e.dst).as_str()),
            e.rank,
            weights[i]
        );
    }
    s.push_str("}\n");
    s
}
