//! The six influence measures, their normalization, and the composite score.
//!
//! Degree measures are exact counts/sums. Eigenvector, PageRank, Katz and
//! HITS are iterative; each records a [`Convergence`] so callers can see
//! when a solver stopped at `max_iterations` or the spectrum was degenerate.

mod solvers;
mod spectral;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use solvers::{
    eigen_centrality, hits, hits_authority, in_degree, katz, pagerank, weighted_in_degree, Hits,
};
pub use spectral::{spectral_radius, SpectralRadius};

use crate::domain::VideoId;
use crate::error::{AuditError, Result};
use crate::recgraph::RecGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    InDegree,
    WeightedInDegree,
    Eigen,
    PageRank,
    Katz,
    Authority,
    Composite,
}

impl Measure {
    /// The six measures summed into the composite, in canonical order.
    pub const SIX: [Measure; 6] = [
        Measure::InDegree,
        Measure::WeightedInDegree,
        Measure::Eigen,
        Measure::PageRank,
        Measure::Katz,
        Measure::Authority,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Measure::InDegree => "in_degree",
            Measure::WeightedInDegree => "weighted_in_degree",
            Measure::Eigen => "eigen",
            Measure::PageRank => "pagerank",
            Measure::Katz => "katz",
            Measure::Authority => "authority",
            Measure::Composite => "composite",
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Measure {
    type Err = AuditError;

    fn from_str(s: &str) -> Result<Self> {
        Measure::SIX
            .iter()
            .chain(std::iter::once(&Measure::Composite))
            .find(|m| m.name() == s)
            .copied()
            .ok_or_else(|| AuditError::parameter(format!("unknown measure {s:?}")))
    }
}

/// Whether each iterative measure reads edge weights or plain 0/1 links.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Weighting {
    pub eigen: bool,
    pub pagerank: bool,
    pub katz: bool,
    pub authority: bool,
}

impl Default for Weighting {
    fn default() -> Self {
        Weighting {
            eigen: true,
            pagerank: true,
            katz: true,
            authority: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverParams {
    pub damping: f64,
    /// Fixed Katz attenuation. When `None`, `alpha_fraction / ρ(A)` is used.
    pub katz_alpha: Option<f64>,
    pub alpha_fraction: f64,
    pub katz_beta: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub weighting: Weighting,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            damping: 0.85,
            katz_alpha: None,
            alpha_fraction: 0.9,
            katz_beta: 1.0,
            tolerance: 1e-10,
            max_iterations: 1000,
            weighting: Weighting::default(),
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(AuditError::parameter(format!(
                "damping must lie in (0, 1), got {}",
                self.damping
            )));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(AuditError::parameter("tolerance must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(AuditError::parameter("max_iterations must be at least 1"));
        }
        if !(self.alpha_fraction > 0.0 && self.alpha_fraction < 1.0) {
            return Err(AuditError::parameter(format!(
                "katz alpha_fraction must lie in (0, 1), got {}",
                self.alpha_fraction
            )));
        }
        if !(self.katz_beta > 0.0 && self.katz_beta.is_finite()) {
            return Err(AuditError::parameter("katz beta must be positive"));
        }
        if let Some(a) = self.katz_alpha {
            if !(a > 0.0 && a.is_finite()) {
                return Err(AuditError::parameter("katz alpha must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub converged: bool,
    pub iterations: usize,
    pub residual: f64,
    /// Set when the spectrum has no usable dominant eigenpair.
    pub degenerate: bool,
}

impl Convergence {
    fn not_converged(iterations: usize) -> Self {
        Convergence {
            converged: false,
            iterations,
            residual: f64::INFINITY,
            degenerate: false,
        }
    }
}

/// One score per graph node, aligned with `ids`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    pub measure: Measure,
    pub ids: Vec<VideoId>,
    pub scores: Vec<f64>,
    pub normalized: bool,
    pub convergence: Option<Convergence>,
    pub params: Option<SolverParams>,
    pub eigenvalue: Option<f64>,
    pub spectral_radius: Option<f64>,
}

impl ScoreVector {
    pub fn new(measure: Measure, ids: Vec<VideoId>, scores: Vec<f64>) -> Self {
        debug_assert_eq!(ids.len(), scores.len());
        ScoreVector {
            measure,
            ids,
            scores,
            normalized: false,
            convergence: None,
            params: None,
            eigenvalue: None,
            spectral_radius: None,
        }
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn get(&self, id: &VideoId) -> Option<f64> {
        self.ids
            .iter()
            .position(|x| x == id)
            .map(|i| self.scores[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VideoId, f64)> {
        self.ids.iter().zip(self.scores.iter().copied())
    }

    /// True for exact measures and for iterative ones that met tolerance.
    pub fn converged(&self) -> bool {
        self.convergence
            .is_none_or(|c| c.converged && !c.degenerate)
    }
}

/// Min-max rescaling to [0, 1]. A constant vector maps to all zeros.
pub fn normalize(sv: &ScoreVector) -> ScoreVector {
    let min = sv.scores.iter().copied().fold(f64::INFINITY, f64::min);
    let max = sv.scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    let scores = if sv.scores.is_empty() || range <= 0.0 {
        vec![0.0; sv.scores.len()]
    } else {
        sv.scores.iter().map(|&x| (x - min) / range).collect()
    };
    ScoreVector {
        scores,
        normalized: true,
        ..sv.clone()
    }
}

/// Sums six normalized vectors, one per measure. The summation runs in the
/// canonical measure order whatever order the inputs arrive in.
pub fn composite(svs: &[ScoreVector]) -> Result<ScoreVector> {
    let mut by_measure: HashMap<Measure, &ScoreVector> = HashMap::new();
    for sv in svs {
        if sv.measure == Measure::Composite {
            return Err(AuditError::parameter(
                "composite cannot take a composite as input",
            ));
        }
        if by_measure.insert(sv.measure, sv).is_some() {
            return Err(AuditError::parameter(format!(
                "measure {} given twice",
                sv.measure
            )));
        }
        if !sv.normalized {
            return Err(AuditError::parameter(format!(
                "measure {} must be normalized before summing",
                sv.measure
            )));
        }
    }
    let ordered: Vec<&ScoreVector> = Measure::SIX
        .iter()
        .map(|m| {
            by_measure
                .get(m)
                .copied()
                .ok_or_else(|| AuditError::parameter(format!("measure {m} missing")))
        })
        .collect::<Result<_>>()?;

    let ids = ordered[0].ids.clone();
    let position: HashMap<&VideoId, usize> =
        ids.iter().enumerate().map(|(i, id)| (id, i)).collect();
    let mut total = vec![0.0; ids.len()];
    for sv in ordered {
        if sv.len() != ids.len() {
            return Err(AuditError::integrity(format!(
                "measure {} covers {} nodes, expected {}",
                sv.measure,
                sv.len(),
                ids.len()
            )));
        }
        if sv.ids == ids {
            for (t, s) in total.iter_mut().zip(&sv.scores) {
                *t += s;
            }
        } else {
            let mut slots: Vec<Option<f64>> = vec![None; ids.len()];
            for (id, s) in sv.iter() {
                let i = *position.get(id).ok_or_else(|| {
                    AuditError::integrity(format!(
                        "measure {} scores unknown node {id}",
                        sv.measure
                    ))
                })?;
                slots[i] = Some(s);
            }
            for (t, s) in total.iter_mut().zip(slots) {
                *t += s.ok_or_else(|| {
                    AuditError::integrity(format!("measure {} misses a node", sv.measure))
                })?;
            }
        }
    }
    Ok(ScoreVector::new(Measure::Composite, ids, total))
}

/// Average ranks (1-based), ties sharing the mean of their positions.
pub fn fractional_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation. A constant input has no rank variation; its
/// correlation with anything else is reported as 0.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (fractional_ranks(a), fractional_ranks(b));
    let n = ra.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return 0.0;
    }
    (cov / (va.sqrt() * vb.sqrt())).clamp(-1.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationMatrix {
    pub measures: Vec<Measure>,
    pub values: Vec<Vec<f64>>,
}

pub fn measure_correlation(svs: &[ScoreVector]) -> Result<CorrelationMatrix> {
    let n = svs.first().map_or(0, |s| s.len());
    if n < 2 {
        return Err(AuditError::parameter(
            "rank correlation needs at least two nodes",
        ));
    }
    if svs.iter().any(|s| s.ids != svs[0].ids) {
        return Err(AuditError::integrity("score vectors cover different nodes"));
    }
    let k = svs.len();
    let mut values = vec![vec![0.0; k]; k];
    for i in 0..k {
        values[i][i] = 1.0;
        for j in i + 1..k {
            let r = spearman(&svs[i].scores, &svs[j].scores);
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    Ok(CorrelationMatrix {
        measures: svs.iter().map(|s| s.measure).collect(),
        values,
    })
}

/// Raw, normalized and composite scores for one graph.
#[derive(Debug, Clone)]
pub struct Influence {
    pub raw: Vec<ScoreVector>,
    pub normalized: Vec<ScoreVector>,
    pub composite: ScoreVector,
    pub hubs: Vec<f64>,
}

impl Influence {
    /// Measures whose solver did not converge (or hit a degenerate spectrum).
    pub fn flagged(&self) -> Vec<Measure> {
        self.raw
            .iter()
            .filter(|s| !s.converged())
            .map(|s| s.measure)
            .collect()
    }
}

/// Computes all six measures (concurrently), normalizes them and sums.
pub fn influence(g: &RecGraph, params: &SolverParams) -> Result<Influence> {
    params.validate()?;
    let ((indeg, windeg), ((eigen, pr), (kz, ht))) = rayon::join(
        || (in_degree(g), weighted_in_degree(g)),
        || {
            rayon::join(
                || (eigen_centrality(g, params), pagerank(g, params)),
                || (katz(g, params), hits(g, params)),
            )
        },
    );
    let ht = ht?;
    let raw = vec![indeg, windeg?, eigen?, pr?, kz?, ht.authority];
    let normalized: Vec<ScoreVector> = raw.iter().map(normalize).collect();
    let composite = composite(&normalized)?;
    Ok(Influence {
        raw,
        normalized,
        composite,
        hubs: ht.hubs,
    })
}
