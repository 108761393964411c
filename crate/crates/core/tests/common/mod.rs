//! Test-only oracles: dense linear algebra and brute-force definitions that
//! share no code with the library's iterative solvers.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashSet};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::Rng;

use recaudit::domain::{RecEvent, SessionLog, VideoId};
use recaudit::recgraph::{build_graph, RecGraph};

pub fn vid(s: &str) -> VideoId {
    VideoId::new(s).unwrap()
}

/// A random crawl over `n` videos: every video is watched once, and each
/// watch recommends a random ordered subset of the others (each included
/// with probability `p`). With `ring` set, video i always recommends
/// video i+1 (mod n), which makes the graph strongly connected.
pub fn random_log<R: Rng>(rng: &mut R, n: usize, p: f64, ring: bool) -> SessionLog {
    let ids: Vec<VideoId> = (0..n).map(|i| vid(&format!("n{i}"))).collect();
    let mut events = Vec::with_capacity(n);
    for i in 0..n {
        let mut recs: Vec<usize> = (0..n)
            .filter(|&j| j != i && (rng.random::<f64>() < p || (ring && j == (i + 1) % n)))
            .collect();
        recs.shuffle(rng);
        events.push(
            RecEvent::new(
                "oracle",
                i as u64,
                ids[i].clone(),
                recs.into_iter().map(|j| ids[j].clone()).collect(),
                i == 0,
            )
            .unwrap(),
        );
    }
    SessionLog::new("oracle", events, BTreeMap::new()).unwrap()
}

pub fn random_graph<R: Rng>(rng: &mut R, n: usize, p: f64, ring: bool) -> RecGraph {
    build_graph(&random_log(rng, n, p, ring))
        .assign_weights(0.9)
        .unwrap()
}

/// Dense adjacency A[src, dst], holding rank weights or 0/1 links.
pub fn adjacency(g: &RecGraph, weighted: bool) -> DMatrix<f64> {
    let n = g.node_count();
    let mut a = DMatrix::zeros(n, n);
    for (e, edge) in g.edges().iter().enumerate() {
        a[(edge.src, edge.dst)] = if weighted {
            g.weights().unwrap()[e]
        } else {
            1.0
        };
    }
    a
}

pub fn column_sums(a: &DMatrix<f64>) -> Vec<f64> {
    (0..a.ncols()).map(|j| a.column(j).sum()).collect()
}

/// PageRank as the solution of the linear system
/// (I − d·(Pᵀ + (1/n)·1·δᵀ)) x = (1 − d)/n · 1, where P is the
/// row-normalized adjacency and δ marks dangling nodes.
pub fn pagerank_oracle(a: &DMatrix<f64>, d: f64) -> DVector<f64> {
    let n = a.nrows();
    let nf = n as f64;
    let mut m = DMatrix::zeros(n, n);
    for u in 0..n {
        let out: f64 = a.row(u).sum();
        for v in 0..n {
            m[(v, u)] = if out > 0.0 { a[(u, v)] / out } else { 1.0 / nf };
        }
    }
    let lhs = DMatrix::identity(n, n) - m * d;
    let rhs = DVector::from_element(n, (1.0 - d) / nf);
    let x = lhs
        .lu()
        .solve(&rhs)
        .expect("PageRank system is nonsingular");
    let total = x.sum();
    x / total
}

/// Katz as (I − αAᵀ)⁻¹ β1.
pub fn katz_oracle(a: &DMatrix<f64>, alpha: f64, beta: f64) -> DVector<f64> {
    let n = a.nrows();
    let lhs = DMatrix::identity(n, n) - a.transpose() * alpha;
    lhs.lu()
        .solve(&DVector::from_element(n, beta))
        .expect("Katz system is nonsingular below 1/rho")
}

/// (I + A)^(2^k) by repeated squaring, rescaled at every step, together
/// with the log-scale factors that were divided out along the way.
fn squared_powers(a: &DMatrix<f64>, k: usize) -> (DMatrix<f64>, f64) {
    let n = a.nrows();
    let mut b = DMatrix::identity(n, n) + a;
    let mut log_rate = 0.0;
    for i in 0..k {
        let s = b.norm();
        log_rate += s.ln() / 2f64.powi(i as i32);
        b /= s;
        b = &b * &b;
    }
    (b, log_rate)
}

/// Spectral radius of a nonnegative matrix. For such A the Perron root of
/// I + A is 1 + ρ(A), and ‖(I + A)^K‖^(1/K) tends to it; K = 2^60 leaves
/// even Jordan-block growth far below 1e-12.
pub fn spectral_radius_oracle(a: &DMatrix<f64>) -> f64 {
    let (_, log_rate) = squared_powers(a, 60);
    log_rate.exp() - 1.0
}

fn unit_positive(v: DVector<f64>) -> DVector<f64> {
    let v = if v.sum() < 0.0 { -v } else { v };
    let norm = v.norm();
    v / norm
}

/// Perron vector of Aᵀ: (I + Aᵀ)^K tends to a rank-one matrix whose
/// columns are all multiples of it. Only meaningful when the Perron root
/// is simple (strongly connected A).
pub fn eigen_oracle(a: &DMatrix<f64>) -> DVector<f64> {
    let (b, _) = squared_powers(&a.transpose(), 60);
    let best = (0..b.ncols())
        .max_by(|&i, &j| b.column(i).norm().total_cmp(&b.column(j).norm()))
        .unwrap();
    unit_positive(b.column(best).into_owned())
}

/// Dominant eigenvector of AᵀA, provided the top eigenvalue is separated
/// from the next by at least `min_gap` (relative); otherwise the authority
/// vector is not unique and there is nothing to compare against.
pub fn authority_oracle(a: &DMatrix<f64>, min_gap: f64) -> Option<DVector<f64>> {
    let ata = a.transpose() * a;
    let eig = SymmetricEigen::new(ata);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let top = eig.eigenvalues[order[0]];
    let second = order.get(1).map_or(0.0, |&i| eig.eigenvalues[i]);
    if top <= 0.0 || (top - second) / top < min_gap {
        return None;
    }
    Some(unit_positive(
        eig.eigenvectors.column(order[0]).into_owned(),
    ))
}

/// Rank-biased overlap straight from its definition: at each depth d the
/// overlap of the two prefixes is recomputed from scratch.
pub fn rbo_brute_force<T: std::hash::Hash + Eq + Clone>(
    a: &[T],
    b: &[T],
    p: f64,
    depth: usize,
) -> f64 {
    let d_max = depth.min(a.len().max(b.len()));
    let mut sum = 0.0;
    for d in 1..=d_max {
        let pa: HashSet<T> = a.iter().take(d).cloned().collect();
        let pb: HashSet<T> = b.iter().take(d).cloned().collect();
        let agreement = pa.intersection(&pb).count() as f64 / d as f64;
        sum += p.powi(d as i32 - 1) * agreement;
    }
    (1.0 - p) * sum
}

/// Total bias from its rank-weight definition, in exact rational form
/// (numerator and denominator as integers).
pub fn total_bias_oracle(scores: &[i8]) -> f64 {
    let n = scores.len() as i64;
    let num: i64 = scores
        .iter()
        .enumerate()
        .map(|(j, &s)| 2 * (n - j as i64) * s as i64)
        .sum();
    num as f64 / (n * (n + 1)) as f64
}

/// Values of `v` laid out in graph node order.
pub fn dvec(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

pub fn max_abs_diff(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).amax()
}
