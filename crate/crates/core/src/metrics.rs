//! Audit metrics: rank-weighted total bias, overlap coefficient and
//! rank-biased overlap (RBO).

use std::collections::HashSet;
use std::hash::Hash;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::domain::{BiasValue, LabelScheme};
use crate::error::{AuditError, Result};

/// Weight of the item at 0-based position j in a selection of n:
/// 2(n−j) / (n(n+1)). The weights sum to one.
pub fn rank_weight(n: usize, j: usize) -> f64 {
    debug_assert!(j < n);
    (2 * (n - j)) as f64 / (n as f64 * (n as f64 + 1.0))
}

/// Σⱼ 2(n−j)/(n(n+1)) · sⱼ, with position 0 the top-ranked item.
///
/// Evaluated as one integer numerator over n(n+1) so that uniform
/// labelings land exactly on −1, 0 or +1.
pub fn total_bias(scores: &[BiasValue]) -> Result<f64> {
    let n = scores.len();
    if n == 0 {
        return Err(AuditError::parameter("total bias of an empty selection"));
    }
    let numerator: i128 = scores
        .iter()
        .enumerate()
        .map(|(j, s)| (n - j) as i128 * i128::from(s.as_i8()))
        .sum();
    let denominator = n as i128 * (n as i128 + 1);
    Ok((2 * numerator) as f64 / denominator as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub profile_id: String,
    pub total_bias: f64,
    pub n: usize,
    pub scheme: LabelScheme,
}

pub fn bias_report(
    profile_id: &str,
    scheme: LabelScheme,
    scores: &[BiasValue],
) -> Result<BiasReport> {
    Ok(BiasReport {
        profile_id: profile_id.to_string(),
        total_bias: total_bias(scores)?,
        n: scores.len(),
        scheme,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapMeasure {
    /// |A∩B| / min(|A|, |B|)
    #[default]
    Coefficient,
    /// |A∩B| / |A∪B|
    Jaccard,
}

pub fn overlap_coefficient<T: Eq + Hash>(a: &HashSet<T>, b: &HashSet<T>) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(AuditError::parameter("overlap of an empty set"));
    }
    let shared = a.intersection(b).count();
    Ok(shared as f64 / a.len().min(b.len()) as f64)
}

pub fn jaccard<T: Eq + Hash>(a: &HashSet<T>, b: &HashSet<T>) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(AuditError::parameter("overlap of an empty set"));
    }
    let shared = a.intersection(b).count();
    Ok(shared as f64 / (a.len() + b.len() - shared) as f64)
}

pub fn set_overlap<T: Eq + Hash>(
    a: &HashSet<T>,
    b: &HashSet<T>,
    measure: OverlapMeasure,
) -> Result<f64> {
    match measure {
        OverlapMeasure::Coefficient => overlap_coefficient(a, b),
        OverlapMeasure::Jaccard => jaccard(a, b),
    }
}

pub const DEFAULT_RBO_P: f64 = 0.97;
pub const DEFAULT_RBO_DEPTH: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RboVariant {
    /// (1−p) Σ_{k=1..d} p^{k−1} A_k with a hard cut at depth d.
    #[default]
    Truncated,
    /// Point estimate assuming the agreement seen at the cut continues.
    Extrapolated,
}

fn check_rbo_args<T: Eq + Hash>(a: &[T], b: &[T], p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(AuditError::parameter(format!(
            "rbo persistence p must lie in (0, 1), got {p}"
        )));
    }
    for list in [a, b] {
        let mut seen = HashSet::with_capacity(list.len());
        if !list.iter().all(|x| seen.insert(x)) {
            return Err(AuditError::integrity("ranked list contains duplicates"));
        }
    }
    Ok(())
}

/// Incremental prefix-overlap counter: after `push(k)`, `overlap` is
/// |a[..k] ∩ b[..k]| (lists shorter than k contribute all their items).
struct PrefixOverlap<'a, T> {
    a: &'a [T],
    b: &'a [T],
    seen_a: HashSet<&'a T>,
    seen_b: HashSet<&'a T>,
    overlap: usize,
}

impl<'a, T: Eq + Hash> PrefixOverlap<'a, T> {
    fn new(a: &'a [T], b: &'a [T]) -> Self {
        PrefixOverlap {
            a,
            b,
            seen_a: HashSet::new(),
            seen_b: HashSet::new(),
            overlap: 0,
        }
    }

    /// Extends both prefixes to depth `k` (1-based) and returns the overlap.
    fn advance(&mut self, k: usize) -> usize {
        if let Some(x) = self.a.get(k - 1) {
            if self.seen_b.contains(x) {
                self.overlap += 1;
            }
            self.seen_a.insert(x);
        }
        if let Some(y) = self.b.get(k - 1) {
            if self.seen_a.contains(y) {
                self.overlap += 1;
            }
            self.seen_b.insert(y);
        }
        self.overlap
    }
}

/// Truncated RBO evaluated to d = min(depth, longer list length).
pub fn rbo<T: Eq + Hash>(a: &[T], b: &[T], p: f64, depth: usize) -> Result<f64> {
    check_rbo_args(a, b, p)?;
    let d = depth.min(a.len().max(b.len()));
    let mut counter = PrefixOverlap::new(a, b);
    // Kahan summation keeps identical long lists within ulps of 1 − p^d.
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    let mut weight = 1.0;
    for k in 1..=d {
        let x = counter.advance(k);
        let term = weight * x as f64 / k as f64 - comp;
        let t = sum + term;
        comp = (t - sum) - term;
        sum = t;
        weight *= p;
    }
    Ok((1.0 - p) * sum)
}

/// Extrapolated RBO over lists first truncated to `depth`; handles lists of
/// unequal length by treating the shorter one as exhausted.
pub fn rbo_ext<T: Eq + Hash>(a: &[T], b: &[T], p: f64, depth: usize) -> Result<f64> {
    check_rbo_args(a, b, p)?;
    let a = &a[..a.len().min(depth)];
    let b = &b[..b.len().min(depth)];
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let (s, l) = (short.len(), long.len());
    if s == 0 {
        return Ok(0.0);
    }
    let mut counter = PrefixOverlap::new(short, long);
    let mut sum = 0.0;
    let mut x_s = 0usize;
    let mut x_d = 0usize;
    let mut pd = 1.0;
    for d in 1..=l {
        x_d = counter.advance(d);
        pd *= p;
        if d == s {
            x_s = x_d;
        }
        sum += x_d as f64 / d as f64 * pd;
        if d > s {
            sum += (x_s * (d - s)) as f64 / (s * d) as f64 * pd;
        }
    }
    let x_l = x_d;
    let tail = ((x_l - x_s) as f64 / l as f64 + x_s as f64 / s as f64) * pd;
    Ok(((1.0 - p) / p * sum + tail).min(1.0))
}

pub fn rbo_variant<T: Eq + Hash>(
    a: &[T],
    b: &[T],
    p: f64,
    depth: usize,
    variant: RboVariant,
) -> Result<f64> {
    match variant {
        RboVariant::Truncated => rbo(a, b, p, depth),
        RboVariant::Extrapolated => rbo_ext(a, b, p, depth),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport {
    pub pair: (String, String),
    pub oc: f64,
    pub rbo: f64,
    pub p: f64,
    pub depth: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareParams {
    pub p: f64,
    pub depth: usize,
    pub variant: RboVariant,
    pub overlap: OverlapMeasure,
}

impl Default for CompareParams {
    fn default() -> Self {
        CompareParams {
            p: DEFAULT_RBO_P,
            depth: DEFAULT_RBO_DEPTH,
            variant: RboVariant::Truncated,
            overlap: OverlapMeasure::Coefficient,
        }
    }
}

impl CompareParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(AuditError::parameter(format!(
                "rbo p must lie in (0, 1), got {}",
                self.p
            )));
        }
        if self.depth == 0 {
            return Err(AuditError::parameter("rbo depth must be at least 1"));
        }
        Ok(())
    }
}

/// OC over the two video sets and RBO over the two rankings.
pub fn compare_rankings<T: Eq + Hash + Clone>(
    names: (&str, &str),
    a: &[T],
    b: &[T],
    params: &CompareParams,
) -> Result<OverlapReport> {
    params.validate()?;
    let sa: HashSet<T> = a.iter().cloned().collect();
    let sb: HashSet<T> = b.iter().cloned().collect();
    Ok(OverlapReport {
        pair: (names.0.to_string(), names.1.to_string()),
        oc: set_overlap(&sa, &sb, params.overlap)?,
        rbo: rbo_variant(a, b, params.p, params.depth, params.variant)?,
        p: params.p,
        depth: params.depth,
    })
}

pub fn write_bias_csv<W: Write>(reports: &[BiasReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["profile", "total_bias"])?;
    for r in reports {
        w.write_record([r.profile_id.clone(), r.total_bias.to_string()])?;
    }
    w.flush().map_err(|e| AuditError::io("<bias>", e))?;
    Ok(())
}

pub fn write_overlap_csv<W: Write>(reports: &[OverlapReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["pair", "oc", "rbo"])?;
    for r in reports {
        w.write_record([
            format!("{} & {}", r.pair.0, r.pair.1),
            r.oc.to_string(),
            r.rbo.to_string(),
        ])?;
    }
    w.flush().map_err(|e| AuditError::io("<overlap>", e))?;
    Ok(())
}
