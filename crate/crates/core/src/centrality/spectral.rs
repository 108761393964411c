//! Strongly connected components and spectral-radius bounds for the
//! nonnegative adjacency matrix of a [`RecGraph`].

use crate::recgraph::RecGraph;

/// Incoming-edge lists in compressed form: for node `v`, the pairs
/// `(src[k], w[k])` for `k in ptr[v]..ptr[v + 1]`.
#[derive(Debug, Clone)]
pub(crate) struct Incoming {
    pub ptr: Vec<usize>,
    pub src: Vec<usize>,
    pub w: Vec<f64>,
}

impl Incoming {
    pub fn new(g: &RecGraph, weighted: bool) -> crate::error::Result<Self> {
        let n = g.node_count();
        let mut ptr = Vec::with_capacity(n + 1);
        let mut src = Vec::with_capacity(g.edge_count());
        let mut w = Vec::with_capacity(g.edge_count());
        ptr.push(0);
        for v in 0..n {
            for &e in g.in_edges(v) {
                src.push(g.edges()[e].src);
                w.push(g.edge_value(e, weighted)?);
            }
            ptr.push(src.len());
        }
        Ok(Incoming { ptr, src, w })
    }

    /// y = Aᵀx
    pub fn transpose_mul(&self, x: &[f64], y: &mut [f64]) {
        for (v, out) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.ptr[v]..self.ptr[v + 1] {
                acc += self.w[k] * x[self.src[k]];
            }
            *out = acc;
        }
    }
}

/// Strongly connected components (iterative Kosaraju). Returns a component
/// id per node.
pub(crate) fn strong_components(g: &RecGraph) -> (Vec<usize>, usize) {
    let n = g.node_count();
    let edges = g.edges();

    // First pass: finishing order on the forward graph.
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut stack: Vec<(usize, usize)> = Vec::new();
    for root in 0..n {
        if visited[root] {
            continue;
        }
        visited[root] = true;
        stack.push((root, 0));
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            let out = g.out_edges(v);
            if *next < out.len() {
                let w = edges[out[*next]].dst;
                *next += 1;
                if !visited[w] {
                    visited[w] = true;
                    stack.push((w, 0));
                }
            } else {
                order.push(v);
                stack.pop();
            }
        }
    }

    // Second pass: reverse graph in reverse finishing order.
    let mut comp = vec![usize::MAX; n];
    let mut count = 0;
    let mut work = Vec::new();
    for &root in order.iter().rev() {
        if comp[root] != usize::MAX {
            continue;
        }
        comp[root] = count;
        work.push(root);
        while let Some(v) = work.pop() {
            for &e in g.in_edges(v) {
                let u = edges[e].src;
                if comp[u] == usize::MAX {
                    comp[u] = count;
                    work.push(u);
                }
            }
        }
        count += 1;
    }
    (comp, count)
}

/// True when the graph has no directed cycle, i.e. its adjacency matrix is
/// nilpotent and every eigenvalue is zero.
pub(crate) fn is_acyclic(g: &RecGraph) -> bool {
    let (_, count) = strong_components(g);
    count == g.node_count()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralRadius {
    /// Upper Collatz–Wielandt bound; never below the true radius.
    pub upper: f64,
    pub lower: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Brackets ρ(A) by running shifted power iteration on every nontrivial
/// strongly connected block. For an irreducible nonnegative block B and
/// any positive y, min (Bᵀy)ᵢ/yᵢ ≤ ρ(B) ≤ max (Bᵀy)ᵢ/yᵢ; ρ(A) is the max
/// over blocks.
pub fn spectral_radius(
    g: &RecGraph,
    weighted: bool,
    tolerance: f64,
    max_iterations: usize,
) -> crate::error::Result<SpectralRadius> {
    let (comp, count) = strong_components(g);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); count];
    for (v, &c) in comp.iter().enumerate() {
        members[c].push(v);
    }
    let mut best = SpectralRadius {
        upper: 0.0,
        lower: 0.0,
        iterations: 0,
        converged: true,
    };
    for block in members.iter().filter(|m| m.len() > 1) {
        let r = block_radius(g, &comp, block, weighted, tolerance, max_iterations)?;
        best.iterations = best.iterations.max(r.iterations);
        best.converged &= r.converged;
        best.upper = best.upper.max(r.upper);
        best.lower = best.lower.max(r.lower);
    }
    Ok(best)
}

fn block_radius(
    g: &RecGraph,
    comp: &[usize],
    block: &[usize],
    weighted: bool,
    tolerance: f64,
    max_iterations: usize,
) -> crate::error::Result<SpectralRadius> {
    let c = comp[block[0]];
    let local: std::collections::HashMap<usize, usize> =
        block.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    // Incoming edges restricted to the block, in local coordinates.
    let mut incoming: Vec<Vec<(usize, f64)>> = vec![Vec::new(); block.len()];
    for (i, &v) in block.iter().enumerate() {
        for &e in g.in_edges(v) {
            let u = g.edges()[e].src;
            if comp[u] == c {
                incoming[i].push((local[&u], g.edge_value(e, weighted)?));
            }
        }
    }
    let m = block.len();
    let mut y = vec![1.0; m];
    let mut by = vec![0.0; m];
    let mut upper = f64::INFINITY;
    let mut lower = 0.0;
    for it in 1..=max_iterations {
        for i in 0..m {
            by[i] = incoming[i].iter().map(|&(u, w)| w * y[u]).sum();
        }
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..m {
            let ratio = by[i] / y[i];
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
        upper = upper.min(hi);
        lower = f64::max(lower, lo);
        if upper - lower <= tolerance * upper.max(f64::MIN_POSITIVE) {
            return Ok(SpectralRadius {
                upper,
                lower,
                iterations: it,
                converged: true,
            });
        }
        // y <- (I + Bᵀ) y, rescaled to max 1; stays strictly positive.
        let mut peak = 0.0f64;
        for i in 0..m {
            y[i] += by[i];
            peak = peak.max(y[i]);
        }
        for yi in &mut y {
            *yi /= peak;
        }
    }
    Ok(SpectralRadius {
        upper,
        lower,
        iterations: max_iterations,
        converged: false,
    })
}
