use super::spectral::{is_acyclic, spectral_radius, Incoming};
use super::{Convergence, Measure, ScoreVector, SolverParams};
use crate::error::{AuditError, Result};
use crate::recgraph::RecGraph;

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn l2_normalize(x: &mut [f64]) -> f64 {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        for v in x.iter_mut() {
            *v /= norm;
        }
    }
    norm
}

/// Number of times each video was recommended.
pub fn in_degree(g: &RecGraph) -> ScoreVector {
    let scores = (0..g.node_count()).map(|v| g.in_degree(v) as f64).collect();
    ScoreVector::new(Measure::InDegree, g.ids().to_vec(), scores)
}

/// Sum of the rank weights on incoming edges.
pub fn weighted_in_degree(g: &RecGraph) -> Result<ScoreVector> {
    let weights = g
        .weights()
        .ok_or_else(|| AuditError::parameter("weighted in-degree needs edge weights"))?;
    let scores = (0..g.node_count())
        .map(|v| g.in_edges(v).iter().map(|&e| weights[e]).sum())
        .collect();
    Ok(ScoreVector::new(
        Measure::WeightedInDegree,
        g.ids().to_vec(),
        scores,
    ))
}

/// Dominant left eigenvector of the adjacency matrix, by power iteration on
/// I + Aᵀ (same eigenvectors, but the shift makes the Perron root strictly
/// dominant in modulus, so periodic graphs still converge).
pub fn eigen_centrality(g: &RecGraph, params: &SolverParams) -> Result<ScoreVector> {
    params.validate()?;
    if g.edge_count() == 0 {
        return Err(AuditError::parameter(
            "eigenvector centrality needs at least one edge",
        ));
    }
    let weighted = params.weighting.eigen;
    let a = Incoming::new(g, weighted)?;
    let n = g.node_count();
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut ax = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut conv = Convergence::not_converged(params.max_iterations);
    for it in 1..=params.max_iterations {
        a.transpose_mul(&x, &mut ax);
        for i in 0..n {
            next[i] = x[i] + ax[i];
        }
        l2_normalize(&mut next);
        let change = max_abs_diff(&next, &x);
        std::mem::swap(&mut x, &mut next);
        conv.iterations = it;
        conv.residual = change;
        if change < params.tolerance {
            conv.converged = true;
            break;
        }
    }
    a.transpose_mul(&x, &mut ax);
    let eigenvalue = ax.iter().map(|v| v * v).sum::<f64>().sqrt();
    if is_acyclic(g) {
        // Nilpotent adjacency: every eigenvalue is 0, no Perron vector exists.
        conv.degenerate = true;
        conv.converged = false;
    }
    let mut sv = ScoreVector::new(Measure::Eigen, g.ids().to_vec(), x);
    sv.convergence = Some(conv);
    sv.eigenvalue = Some(eigenvalue);
    sv.params = Some(params.clone());
    Ok(sv)
}

/// Damped PageRank over the (weighted) transition matrix. Mass sitting on
/// nodes without out-edges is spread uniformly.
pub fn pagerank(g: &RecGraph, params: &SolverParams) -> Result<ScoreVector> {
    params.validate()?;
    let n = g.node_count();
    if n == 0 {
        return Ok(ScoreVector::new(Measure::PageRank, Vec::new(), Vec::new()));
    }
    let weighted = params.weighting.pagerank;
    let mut out_total = vec![0.0; n];
    for (e, edge) in g.edges().iter().enumerate() {
        out_total[edge.src] += g.edge_value(e, weighted)?;
    }
    let mut a = Incoming::new(g, weighted)?;
    for v in 0..n {
        for k in a.ptr[v]..a.ptr[v + 1] {
            a.w[k] /= out_total[a.src[k]];
        }
    }
    let dangling: Vec<usize> = (0..n).filter(|&v| out_total[v] == 0.0).collect();

    let d = params.damping;
    let nf = n as f64;
    let mut x = vec![1.0 / nf; n];
    let mut next = vec![0.0; n];
    let mut conv = Convergence::not_converged(params.max_iterations);
    for it in 1..=params.max_iterations {
        let dangling_mass: f64 = dangling.iter().map(|&v| x[v]).sum();
        a.transpose_mul(&x, &mut next);
        let base = (1.0 - d) / nf + d * dangling_mass / nf;
        for v in next.iter_mut() {
            *v = d * *v + base;
        }
        let total: f64 = next.iter().sum();
        for v in next.iter_mut() {
            *v /= total;
        }
        let change = max_abs_diff(&next, &x);
        std::mem::swap(&mut x, &mut next);
        conv.iterations = it;
        conv.residual = change;
        if change < params.tolerance {
            conv.converged = true;
            break;
        }
    }
    let mut sv = ScoreVector::new(Measure::PageRank, g.ids().to_vec(), x);
    sv.convergence = Some(conv);
    sv.params = Some(params.clone());
    Ok(sv)
}

/// Katz centrality x = β Σₖ αᵏ (Aᵀ)ᵏ 1, iterated as x ← αAᵀx + β1.
pub fn katz(g: &RecGraph, params: &SolverParams) -> Result<ScoreVector> {
    params.validate()?;
    let weighted = params.weighting.katz;
    let n = g.node_count();
    let beta = params.katz_beta;

    let radius = spectral_radius(
        g,
        weighted,
        params.tolerance,
        params.max_iterations.max(1000),
    )?;
    let rho = radius.upper;
    let alpha = match params.katz_alpha {
        Some(alpha) => {
            if rho > 0.0 && alpha * rho >= 1.0 {
                return Err(AuditError::parameter(format!(
                    "katz alpha {alpha} must be below 1/rho = {} (spectral radius {rho})",
                    1.0 / rho
                )));
            }
            alpha
        }
        // Nilpotent adjacency: the series terminates for any alpha.
        None if rho == 0.0 => params.alpha_fraction,
        None => params.alpha_fraction / rho,
    };

    let a = Incoming::new(g, weighted)?;
    let mut x = vec![beta; n];
    let mut next = vec![0.0; n];
    let mut conv = Convergence::not_converged(params.max_iterations);
    if g.edge_count() == 0 {
        conv.converged = true;
        conv.iterations = 0;
        conv.residual = 0.0;
    } else {
        for it in 1..=params.max_iterations {
            a.transpose_mul(&x, &mut next);
            for v in next.iter_mut() {
                *v = alpha * *v + beta;
            }
            let scale = next.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let change = max_abs_diff(&next, &x) / scale;
            std::mem::swap(&mut x, &mut next);
            conv.iterations = it;
            conv.residual = change;
            if change < params.tolerance {
                conv.converged = true;
                break;
            }
        }
    }
    let mut resolved = params.clone();
    resolved.katz_alpha = Some(alpha);
    let mut sv = ScoreVector::new(Measure::Katz, g.ids().to_vec(), x);
    sv.convergence = Some(conv);
    sv.spectral_radius = Some(rho);
    sv.params = Some(resolved);
    Ok(sv)
}

#[derive(Debug, Clone)]
pub struct Hits {
    pub authority: ScoreVector,
    pub hubs: Vec<f64>,
}

/// HITS by alternating a = Aᵀh, h = Aa with L2 normalisation; the authority
/// vector converges to the dominant eigenvector of AᵀA.
pub fn hits(g: &RecGraph, params: &SolverParams) -> Result<Hits> {
    params.validate()?;
    if g.edge_count() == 0 {
        return Err(AuditError::parameter("HITS needs at least one edge"));
    }
    let weighted = params.weighting.authority;
    let n = g.node_count();
    let incoming = Incoming::new(g, weighted)?;
    let mut outgoing: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (e, edge) in g.edges().iter().enumerate() {
        outgoing[edge.src].push((edge.dst, g.edge_value(e, weighted)?));
    }

    let mut hub = vec![1.0; n];
    let mut auth = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut conv = Convergence::not_converged(params.max_iterations);
    for it in 1..=params.max_iterations {
        incoming.transpose_mul(&hub, &mut next);
        l2_normalize(&mut next);
        for (u, h) in hub.iter_mut().enumerate() {
            *h = outgoing[u].iter().map(|&(v, w)| w * next[v]).sum();
        }
        l2_normalize(&mut hub);
        let change = max_abs_diff(&next, &auth);
        std::mem::swap(&mut auth, &mut next);
        conv.iterations = it;
        conv.residual = change;
        if change < params.tolerance {
            conv.converged = true;
            break;
        }
    }
    let mut authority = ScoreVector::new(Measure::Authority, g.ids().to_vec(), auth);
    authority.convergence = Some(conv);
    authority.params = Some(params.clone());
    Ok(Hits {
        authority,
        hubs: hub,
    })
}

pub fn hits_authority(g: &RecGraph, params: &SolverParams) -> Result<ScoreVector> {
    hits(g, params).map(|h| h.authority)
}
