//! Acceptance checks. Runs without the libtest harness so that every
//! criterion prints one PASS/FAIL line; the process exits non-zero if any
//! criterion fails.

mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use common::*;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use recaudit::centrality::{
    eigen_centrality, hits, in_degree, katz, normalize, pagerank, weighted_in_degree, Measure,
    ScoreVector, SolverParams,
};
use recaudit::config::PipelineConfig;
use recaudit::domain::BiasValue;
use recaudit::metrics::{rank_weight, rbo, total_bias};
use recaudit::pipeline::run_pipeline;
use recaudit::ranking::selection_size;
use recaudit::recgraph::{average_degree, geometric_weights};

type Check = (&'static str, Duration, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn geometric_weights_check() -> Outcome {
    let mut worst_sum = 0.0f64;
    let mut worst_ratio = 0.0f64;
    for n in 1..=64 {
        let w = geometric_weights(n, 0.9);
        worst_sum = worst_sum.max((w.iter().sum::<f64>() - 1.0).abs());
        for pair in w.windows(2) {
            worst_ratio = worst_ratio.max((pair[0] / pair[1] - 1.0 / 0.9).abs());
        }
    }
    outcome(
        worst_sum <= 1e-12 && worst_ratio <= 1e-12,
        format!("max |sum-1| = {worst_sum:.1e}, max |ratio-1/0.9| = {worst_ratio:.1e}"),
    )
}

/// (nodes, edges, published average degree) for the six audited profiles.
const PUBLISHED_GRAPHS: [(usize, usize, f64); 6] = [
    (6837, 53187, 7.78),
    (6974, 55432, 7.95),
    (3241, 14314, 4.42),
    (5761, 43171, 7.49),
    (6734, 47650, 7.08),
    (7486, 54474, 7.28),
];

fn published_degree_check() -> Outcome {
    let worst = PUBLISHED_GRAPHS
        .iter()
        .map(|&(v, e, published)| (average_degree(v, e) - published).abs())
        .fold(0.0, f64::max);
    outcome(worst <= 0.01, format!("max |E/V - published| = {worst:.4}"))
}

fn centrality_oracle_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let params = SolverParams {
        tolerance: 1e-13,
        max_iterations: 200_000,
        ..SolverParams::default()
    };
    let (mut err_linear, mut err_eigen) = (0.0f64, 0.0f64);
    let mut degree_exact = true;
    let (mut graphs, mut hits_checked) = (0, 0);
    while graphs < 150 {
        let n = rng.random_range(2..=8);
        let p = rng.random_range(0.1..0.6);
        // Every other graph gets a Hamiltonian ring so that the Perron root
        // is simple and eigenvector centrality has a unique answer.
        let g = random_graph(&mut rng, n, p, graphs % 2 == 0);
        if g.edge_count() == 0 {
            continue;
        }
        graphs += 1;
        let weighted = adjacency(&g, true);
        let plain = adjacency(&g, false);

        degree_exact &= in_degree(&g).scores == column_sums(&plain);
        let windeg = weighted_in_degree(&g).unwrap().scores;
        degree_exact &= windeg
            .iter()
            .zip(column_sums(&weighted))
            .all(|(x, y)| (x - y).abs() <= 4.0 * f64::EPSILON);

        let pr = pagerank(&g, &params).unwrap();
        err_linear = err_linear.max(max_abs_diff(
            &dvec(&pr.scores),
            &pagerank_oracle(&weighted, 0.85),
        ));
        let kz = katz(&g, &params).unwrap();
        let alpha = kz.params.as_ref().unwrap().katz_alpha.unwrap();
        err_linear = err_linear.max(max_abs_diff(
            &dvec(&kz.scores),
            &katz_oracle(&weighted, alpha, 1.0),
        ));

        if graphs % 2 == 1 {
            let ev = eigen_centrality(&g, &params).unwrap();
            err_eigen = err_eigen.max(max_abs_diff(&dvec(&ev.scores), &eigen_oracle(&weighted)));
        }
        if let Some(oracle) = authority_oracle(&plain, 1e-3) {
            let auth = hits(&g, &params).unwrap().authority;
            err_eigen = err_eigen.max(max_abs_diff(&dvec(&auth.scores), &oracle));
            hits_checked += 1;
        }
    }
    outcome(
        err_linear <= 1e-8 && err_eigen <= 1e-6 && degree_exact && hits_checked >= 100,
        format!(
            "{graphs} graphs ({hits_checked} with a HITS eigen-gap): linear err {err_linear:.1e}, \
             eigen err {err_eigen:.1e}, degrees exact = {degree_exact}"
        ),
    )
}

fn bias_values(v: &[i8]) -> Vec<BiasValue> {
    v.iter()
        .map(|&x| match x {
            -1 => BiasValue::NEGATIVE,
            0 => BiasValue::NEUTRAL,
            _ => BiasValue::POSITIVE,
        })
        .collect()
}

fn total_bias_check() -> Outcome {
    let all_neg = total_bias(&bias_values(&[-1; 33])).unwrap();
    let all_pos = total_bias(&bias_values(&[1; 33])).unwrap();
    let pair = total_bias(&bias_values(&[1, -1])).unwrap();
    let mut worst_sum = 0.0f64;
    for n in 1..=10_000 {
        let s: f64 = (0..n).map(|j| rank_weight(n, j)).sum();
        worst_sum = worst_sum.max((s - 1.0).abs());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_oracle = 0.0f64;
    for _ in 0..200 {
        let n = rng.random_range(1..=200);
        let v: Vec<i8> = (0..n).map(|_| rng.random_range(-1..=1)).collect();
        let got = total_bias(&bias_values(&v)).unwrap();
        worst_oracle = worst_oracle.max((got - total_bias_oracle(&v)).abs());
    }
    outcome(
        all_neg == -1.0
            && all_pos == 1.0
            && (pair - 1.0 / 3.0).abs() <= 1e-12
            && worst_sum <= 1e-9
            && worst_oracle <= 1e-12,
        format!(
            "all -1 = {all_neg}, all +1 = {all_pos}, (+1,-1) = {pair:.15}, \
             max |sum w - 1| = {worst_sum:.1e}"
        ),
    )
}

fn rbo_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let universe: Vec<u32> = (0..30).collect();
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let la = rng.random_range(1..=20);
        let lb = rng.random_range(1..=20);
        let a: Vec<u32> = universe.choose_multiple(&mut rng, la).copied().collect();
        let b: Vec<u32> = universe.choose_multiple(&mut rng, lb).copied().collect();
        let got = rbo(&a, &b, 0.97, 1000).unwrap();
        worst = worst.max((got - rbo_brute_force(&a, &b, 0.97, 1000)).abs());
    }
    let long: Vec<u32> = (0..1000).collect();
    let identical = rbo(&long, &long, 0.97, 1000).unwrap();
    let shifted: Vec<u32> = (1000..2000).collect();
    let disjoint = rbo(&long, &shifted, 0.97, 1000).unwrap();
    outcome(
        worst <= 1e-12 && identical >= 1.0 - 1e-13 && disjoint == 0.0,
        format!("max |rbo - brute force| = {worst:.1e}, identical = {identical:.16}, disjoint = {disjoint}"),
    )
}

fn planted_config(seed: u64, boosted: &str) -> PipelineConfig {
    PipelineConfig::from_toml(&format!(
        r#"
[simulation]
rng_seed = {seed}
corpus_size = 10000
steps = 5000
class_skew = {{ {boosted} = 3.0 }}

[[profiles]]
id = "puppet"
"#
    ))
    .unwrap()
}

fn planted_bias_check() -> Outcome {
    // "pro" scores -1 and "anti" scores +1.
    let mut report = Vec::new();
    let mut hits = [0usize; 2];
    for (k, (boosted, want_negative)) in [("pro", true), ("anti", false)].into_iter().enumerate() {
        let mut values = Vec::new();
        for seed in 0..10 {
            let run = run_pipeline(&planted_config(seed, boosted), None).expect("pipeline run");
            let b = run.bias[0].total_bias;
            if (b < 0.0) == want_negative && b != 0.0 {
                hits[k] += 1;
            }
            values.push(format!("{b:+.2}"));
        }
        report.push(format!(
            "{boosted}-skew {}/10 [{}]",
            hits[k],
            values.join(" ")
        ));
    }
    outcome(hits[0] >= 9 && hits[1] >= 9, report.join("; "))
}

fn selection_size_check() -> Outcome {
    let got: Vec<usize> = [1, 99, 100, 101, 3241]
        .iter()
        .map(|&n| selection_size(n, 1.0).unwrap())
        .collect();
    outcome(got == [1, 1, 1, 2, 33], format!("sizes {got:?}"))
}

fn csv_files(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|e| e == "csv") {
                let rel = path
                    .strip_prefix(root)
                    .unwrap()
                    .to_string_lossy()
                    .into_owned();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn determinism_check() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("run.toml");
    std::fs::write(
        &config,
        r#"
[simulation]
rng_seed = 77
corpus_size = 4000
steps = 1500
class_skew = { anti = 2.0 }

[[profiles]]
id = "trained"
training_topics = { anti = 1.0 }

[[profiles]]
id = "fresh"
"#,
    )
    .unwrap();
    let mut runs = Vec::new();
    for name in ["first", "second"] {
        let out = tmp.path().join(name);
        let run = Command::new(env!("CARGO_BIN_EXE_recaudit"))
            .arg("pipeline")
            .arg("--config")
            .arg(&config)
            .arg("--out-dir")
            .arg(&out)
            .output()
            .unwrap();
        if !run.status.success() {
            return outcome(false, format!("pipeline exited with {}", run.status));
        }
        runs.push(csv_files(&out));
    }
    let same = runs[0] == runs[1];
    outcome(
        same && runs[0].len() >= 10,
        format!("{} CSV files, byte-identical = {same}", runs[0].len()),
    )
}

fn argsort(v: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]).then(i.cmp(&j)));
    idx
}

fn normalization_order_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut preserved = 0;
    let mut tested = 0;
    while tested < 1000 {
        let n = rng.random_range(2..=200);
        let scale = 10f64.powi(rng.random_range(-6..=6));
        // A third of the vectors draw from a few integers so ties occur.
        let scores: Vec<f64> = if tested % 3 == 0 {
            (0..n)
                .map(|_| rng.random_range(0..5) as f64 * scale)
                .collect()
        } else {
            (0..n)
                .map(|_| rng.random_range(-1.0..1.0) * scale)
                .collect()
        };
        let (lo, hi) = scores
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| {
                (l.min(x), h.max(x))
            });
        if hi <= lo {
            continue;
        }
        tested += 1;
        let ids = (0..n).map(|i| vid(&format!("v{i}"))).collect();
        let sv = ScoreVector::new(Measure::PageRank, ids, scores);
        if argsort(&sv.scores) == argsort(&normalize(&sv).scores) {
            preserved += 1;
        }
    }
    outcome(
        preserved == tested,
        format!("{preserved}/{tested} orderings preserved"),
    )
}

fn main() {
    let checks: [Check; 9] = [
        (
            "geometric rank weights",
            Duration::from_secs(1),
            geometric_weights_check,
        ),
        (
            "published average degrees",
            Duration::from_secs(1),
            published_degree_check,
        ),
        (
            "centrality oracle equivalence",
            Duration::from_secs(30),
            centrality_oracle_check,
        ),
        (
            "total bias formula",
            Duration::from_secs(5),
            total_bias_check,
        ),
        ("rank-biased overlap", Duration::from_secs(10), rbo_check),
        (
            "planted-bias recovery",
            Duration::from_secs(300),
            planted_bias_check,
        ),
        (
            "selection size",
            Duration::from_secs(1),
            selection_size_check,
        ),
        (
            "pipeline determinism",
            Duration::from_secs(300),
            determinism_check,
        ),
        (
            "normalization order",
            Duration::from_secs(5),
            normalization_order_check,
        ),
    ];
    let mut failed = 0;
    for (i, (name, budget, check)) in checks.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let pass = result.pass && elapsed <= *budget;
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {} ({name}): {} [{:.2}s of {}s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            result.detail,
            elapsed.as_secs_f64(),
            budget.as_secs(),
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        checks.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
