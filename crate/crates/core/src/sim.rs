//! Synthetic black-box recommender and sock-puppet bots.
//!
//! The recommender knows each video's hidden class and scores candidates by
//! popularity, a planted per-class skew, the profile's learned affinity and
//! a same-class similarity bonus. Because the skew is known, the audit
//! pipeline's output can be checked against it.

use std::collections::{BTreeMap, VecDeque};

use rand::distr::weighted::WeightedIndex;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, LogNormal, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::domain::{
    Label, LabelScheme, RecEvent, SessionLog, StanceLabel, VeracityLabel, VideoId, VideoMeta,
};
use crate::error::{AuditError, Result};
use crate::ingest::title_mentions;
use crate::ranking::LabelFile;

/// Number of classes in either label scheme.
pub const CLASSES: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub corpus_size: usize,
    pub scheme: LabelScheme,
    /// Label name (e.g. `pro`, `neutral`, `anti`) to probability.
    pub class_mix: BTreeMap<String, f64>,
    pub affinity_strength: f64,
    /// Label name to multiplicative boost; absent labels default to 1.
    pub class_skew: BTreeMap<String, f64>,
    pub list_length_mean: f64,
    pub seed_count: usize,
    pub steps: usize,
    pub rng_seed: u64,
    pub keyword: String,
    /// Size of each video's fixed candidate pool.
    pub related_pool_size: usize,
    /// Share of each pool taken from the video's ring neighborhood; the
    /// rest is drawn by popularity from the whole corpus.
    pub locality: f64,
    /// Extra similarity for candidates sharing the watched video's class.
    pub similarity_bonus: f64,
    /// Standard deviation of the log-normal noise applied per scoring call.
    pub score_noise: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            corpus_size: 10_000,
            scheme: LabelScheme::Stance,
            class_mix: [("pro", 0.35), ("neutral", 0.3), ("anti", 0.35)]
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
            affinity_strength: 0.0,
            class_skew: BTreeMap::new(),
            list_length_mean: 8.0,
            seed_count: 20,
            steps: 5000,
            rng_seed: 0,
            keyword: "abortion".into(),
            related_pool_size: 40,
            locality: 0.9,
            similarity_bonus: 1.0,
            score_noise: 0.5,
        }
    }
}

/// Canonical label names of a scheme, ordered by bias score (−1, 0, +1).
pub fn class_names(scheme: LabelScheme) -> [String; CLASSES] {
    fn names<L: Label>() -> [String; CLASSES] {
        [
            L::ALL[0].to_string(),
            L::ALL[1].to_string(),
            L::ALL[2].to_string(),
        ]
    }
    match scheme {
        LabelScheme::Stance => names::<StanceLabel>(),
        LabelScheme::Veracity => names::<VeracityLabel>(),
    }
}

fn class_index(scheme: LabelScheme, name: &str) -> Result<usize> {
    fn idx<L: Label>(name: &str) -> Result<usize> {
        let label: L = name.parse()?;
        Ok(L::ALL
            .iter()
            .position(|&l| l == label)
            .expect("label in ALL"))
    }
    match scheme {
        LabelScheme::Stance => idx::<StanceLabel>(name),
        LabelScheme::Veracity => idx::<VeracityLabel>(name),
    }
}

fn per_class(
    scheme: LabelScheme,
    map: &BTreeMap<String, f64>,
    default: f64,
) -> Result<[f64; CLASSES]> {
    let mut out = [default; CLASSES];
    let mut seen = [false; CLASSES];
    for (name, &v) in map {
        let i = class_index(scheme, name)?;
        if seen[i] {
            return Err(AuditError::parameter(format!("label {name:?} given twice")));
        }
        seen[i] = true;
        out[i] = v;
    }
    Ok(out)
}

impl SimConfig {
    pub fn mix(&self) -> Result<[f64; CLASSES]> {
        let mix = per_class(self.scheme, &self.class_mix, 0.0)?;
        if mix.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(AuditError::parameter(
                "class_mix probabilities must be nonnegative",
            ));
        }
        let total: f64 = mix.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(AuditError::parameter(format!(
                "class_mix sums to {total}, not 1"
            )));
        }
        Ok(mix)
    }

    pub fn skew(&self) -> Result<[f64; CLASSES]> {
        let skew = per_class(self.scheme, &self.class_skew, 1.0)?;
        if skew.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(AuditError::parameter(
                "class_skew boosts must be nonnegative",
            ));
        }
        Ok(skew)
    }

    pub fn validate(&self) -> Result<()> {
        self.mix()?;
        self.skew()?;
        if !(self.list_length_mean > 0.0 && self.list_length_mean.is_finite()) {
            return Err(AuditError::parameter("list_length_mean must be positive"));
        }
        if !(self.affinity_strength >= 0.0 && self.affinity_strength.is_finite()) {
            return Err(AuditError::parameter(
                "affinity_strength must be nonnegative",
            ));
        }
        if !(0.0..=1.0).contains(&self.locality) {
            return Err(AuditError::parameter("locality must lie in [0, 1]"));
        }
        if !(self.similarity_bonus >= 0.0 && self.score_noise >= 0.0) {
            return Err(AuditError::parameter(
                "similarity_bonus and score_noise must be nonnegative",
            ));
        }
        Ok(())
    }
}

/// Generated videos with their hidden classes (index into [`class_names`]).
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub scheme: LabelScheme,
    pub videos: Vec<VideoMeta>,
    pub classes: Vec<usize>,
    pub popularity: Vec<f64>,
    /// Candidate pool per video, as corpus indices.
    pub related: Vec<Vec<usize>>,
}

impl SyntheticCorpus {
    pub fn len(&self) -> usize {
        self.videos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.videos.is_empty()
    }

    pub fn id(&self, i: usize) -> &VideoId {
        &self.videos[i].id
    }

    pub fn index_of(&self, id: &VideoId) -> Option<usize> {
        // Ids are generated as v%06d, in index order.
        id.as_str()
            .strip_prefix('v')
            .and_then(|s| s.parse::<usize>().ok())
            .filter(|&i| i < self.len() && self.videos[i].id == *id)
    }

    /// Ground-truth labels, for use as the annotation file of simulated runs.
    pub fn label_csv(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        match self.scheme {
            LabelScheme::Stance => {
                crate::ranking::write_label_file(&self.labels::<StanceLabel>(), &mut buf)?
            }
            LabelScheme::Veracity => {
                crate::ranking::write_label_file(&self.labels::<VeracityLabel>(), &mut buf)?
            }
        }
        Ok(buf)
    }

    pub fn labels<L: Label>(&self) -> LabelFile<L> {
        assert_eq!(
            L::SCHEME,
            self.scheme,
            "label type must match the corpus scheme"
        );
        LabelFile {
            labels: self
                .videos
                .iter()
                .zip(&self.classes)
                .map(|(v, &c)| (v.id.clone(), L::ALL[c]))
                .collect(),
        }
    }
}

pub fn generate_corpus(cfg: &SimConfig) -> Result<SyntheticCorpus> {
    cfg.validate()?;
    let mix = cfg.mix()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let n = cfg.corpus_size;
    let class_dist = WeightedIndex::new(mix).map_err(|e| AuditError::parameter(e.to_string()))?;
    let pop_dist = LogNormal::new(0.0, 1.0).expect("valid log-normal");

    let mut videos = Vec::with_capacity(n);
    let mut classes = Vec::with_capacity(n);
    let mut popularity = Vec::with_capacity(n);
    for i in 0..n {
        let class = class_dist.sample(&mut rng);
        let pop: f64 = pop_dist.sample(&mut rng);
        videos.push(VideoMeta {
            id: VideoId::new(format!("v{i:06}"))?,
            title: format!("{} talk #{i}", capitalize(&cfg.keyword)),
            duration_s: rng.random_range(60..1800),
            view_count: (pop * 10_000.0).round() as u64,
            channel: format!("channel-{:03}", i % 250),
        });
        classes.push(class);
        popularity.push(pop);
    }

    // Videos sit on a ring in index order. Most of a pool is the ring
    // neighborhood, so neighborhoods overlap and a crawl spreads outward;
    // the rest is drawn in proportion to popularity, giving shortcuts and
    // hubs. Classes are independent of ring position.
    let mut related = Vec::with_capacity(n);
    if n > 1 {
        let pool_dist = WeightedIndex::new(&popularity).expect("positive popularity");
        let want = cfg.related_pool_size.min(n - 1);
        let local = ((want as f64 * cfg.locality).round() as usize).min(want);
        for i in 0..n {
            let mut pool = Vec::with_capacity(want);
            let mut offset = 1;
            while pool.len() < local {
                let ahead = (i + offset) % n;
                let behind = (i + n - offset % n) % n;
                for c in [ahead, behind] {
                    if pool.len() < local && c != i && !pool.contains(&c) {
                        pool.push(c);
                    }
                }
                offset += 1;
            }
            let mut attempts = 0;
            while pool.len() < want && attempts < want * 50 {
                attempts += 1;
                let c = pool_dist.sample(&mut rng);
                if c != i && !pool.contains(&c) {
                    pool.push(c);
                }
            }
            related.push(pool);
        }
    } else {
        related.resize(n, Vec::new());
    }

    Ok(SyntheticCorpus {
        scheme: cfg.scheme,
        videos,
        classes,
        popularity,
        related,
    })
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuerySeedPolicy {
    /// Seeds come from one neutral search: popularity only.
    #[default]
    NeutralQuery,
    /// Seeds follow the profile's training topics.
    BiasedQueries,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub profile_id: String,
    /// Label name to training weight.
    #[serde(default)]
    pub training_topics: BTreeMap<String, f64>,
    #[serde(default = "default_training_watch_count")]
    pub training_watch_count: usize,
    #[serde(default)]
    pub query_seed_policy: QuerySeedPolicy,
}

/// A profile needs at least 22 watches before recommendations personalize.
pub const MIN_PERSONALIZATION_WATCHES: usize = 22;

fn default_training_watch_count() -> usize {
    MIN_PERSONALIZATION_WATCHES
}

impl ProfileSpec {
    /// A profile with no watch history.
    pub fn fresh(profile_id: impl Into<String>) -> Self {
        ProfileSpec {
            profile_id: profile_id.into(),
            training_topics: BTreeMap::new(),
            training_watch_count: 0,
            query_seed_policy: QuerySeedPolicy::NeutralQuery,
        }
    }

    pub fn trained(profile_id: impl Into<String>, topics: &[(&str, f64)], count: usize) -> Self {
        ProfileSpec {
            profile_id: profile_id.into(),
            training_topics: topics.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            training_watch_count: count,
            query_seed_policy: QuerySeedPolicy::NeutralQuery,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileState {
    pub profile_id: String,
    /// Share of training watches per class; uniform for an empty history.
    pub affinity: [f64; CLASSES],
    pub training_watched: Vec<usize>,
}

/// Per-run RNG: derived from the config seed and the profile id so that
/// profiles are independent but each is reproducible.
pub fn profile_rng(cfg: &SimConfig, profile_id: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(cfg.rng_seed.to_le_bytes());
    h.update(profile_id.as_bytes());
    let digest = h.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(seed)
}

pub fn train_profile<R: Rng + ?Sized>(
    spec: &ProfileSpec,
    corpus: &SyntheticCorpus,
    rng: &mut R,
) -> Result<ProfileState> {
    let count = spec.training_watch_count;
    if count > corpus.len() {
        return Err(AuditError::parameter(format!(
            "training_watch_count {count} exceeds corpus size {}",
            corpus.len()
        )));
    }
    if count == 0 {
        return Ok(ProfileState {
            profile_id: spec.profile_id.clone(),
            affinity: [1.0 / CLASSES as f64; CLASSES],
            training_watched: Vec::new(),
        });
    }
    let topics = per_class(corpus.scheme, &spec.training_topics, 0.0)?;
    if topics.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || topics.iter().sum::<f64>() <= 0.0 {
        return Err(AuditError::parameter(format!(
            "profile {} needs positive training_topics to train",
            spec.profile_id
        )));
    }

    let mut by_class: [Vec<usize>; CLASSES] = Default::default();
    for (i, &c) in corpus.classes.iter().enumerate() {
        by_class[c].push(i);
    }
    for pool in by_class.iter_mut() {
        pool.shuffle(rng);
    }
    let mut watched = Vec::with_capacity(count);
    let mut counts = [0usize; CLASSES];
    while watched.len() < count {
        let weights: Vec<f64> = (0..CLASSES)
            .map(|c| {
                if by_class[c].is_empty() {
                    0.0
                } else {
                    topics[c]
                }
            })
            .collect();
        let Ok(dist) = WeightedIndex::new(&weights) else {
            break;
        };
        let c = dist.sample(rng);
        let v = by_class[c].pop().expect("non-empty class pool");
        counts[c] += 1;
        watched.push(v);
    }
    let total = watched.len().max(1) as f64;
    Ok(ProfileState {
        profile_id: spec.profile_id.clone(),
        affinity: counts.map(|k| k as f64 / total),
        training_watched: watched,
    })
}

/// Draws a list length with mean exactly `mean`: 1 + Binomial(m, q) where
/// m = ⌈2(mean − 1)⌉ and q = (mean − 1)/m, giving support 1..=m+1.
pub fn draw_list_length<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> usize {
    if mean <= 1.0 {
        return 1;
    }
    let trials = (2.0 * (mean - 1.0)).ceil() as u64;
    let q = (mean - 1.0) / trials as f64;
    let extra = Binomial::new(trials, q)
        .expect("valid binomial")
        .sample(rng);
    1 + extra as usize
}

/// Scores the watched video's candidate pool and returns the top of it,
/// best first. `excluded[i]` marks videos that may not be recommended
/// (already watched); the watched video itself is always excluded.
pub fn recommend<R: Rng + ?Sized>(
    state: &ProfileState,
    watched: usize,
    corpus: &SyntheticCorpus,
    cfg: &SimConfig,
    excluded: &[bool],
    rng: &mut R,
) -> Result<Vec<usize>> {
    if watched >= corpus.len() {
        return Err(AuditError::parameter("watched video is not in the corpus"));
    }
    let skew = cfg.skew()?;
    let k = draw_list_length(rng, cfg.list_length_mean);
    let watched_class = corpus.classes[watched];
    let mut scored: Vec<(f64, usize)> = corpus.related[watched]
        .iter()
        .copied()
        .filter(|&c| c != watched && !excluded[c])
        .map(|c| {
            let class = corpus.classes[c];
            let similarity = if class == watched_class {
                1.0 + cfg.similarity_bonus
            } else {
                1.0
            };
            let noise = if cfg.score_noise > 0.0 {
                let z: f64 = StandardNormal.sample(rng);
                (cfg.score_noise * z).exp()
            } else {
                1.0
            };
            let score = corpus.popularity[c]
                * skew[class]
                * (1.0 + cfg.affinity_strength * state.affinity[class])
                * similarity
                * noise;
            (score, c)
        })
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    scored.truncate(k);
    Ok(scored.into_iter().map(|(_, c)| c).collect())
}

#[derive(Debug, Clone)]
pub struct SimulationRun {
    pub log: SessionLog,
    pub state: ProfileState,
}

/// Trains the profile, picks seeds from a search, then watches breadth-first:
/// each watch records the (topic-filtered) recommendation list and queues
/// the unwatched recommendations. Stops after `cfg.steps` watches or when
/// nothing is left to watch.
pub fn run_sock_puppet(
    spec: &ProfileSpec,
    corpus: &SyntheticCorpus,
    cfg: &SimConfig,
) -> Result<SimulationRun> {
    cfg.validate()?;
    if cfg.seed_count == 0 {
        return Err(AuditError::parameter(
            "a sock-puppet run needs at least one seed",
        ));
    }
    if corpus.is_empty() {
        return Err(AuditError::parameter(
            "cannot run a sock puppet on an empty corpus",
        ));
    }
    let mut rng = profile_rng(cfg, &spec.profile_id);
    let state = train_profile(spec, corpus, &mut rng)?;

    let mut seeds = pick_seeds(spec, corpus, cfg, &mut rng)?;
    // Seeds are not watched in search-result order.
    seeds.shuffle(&mut rng);
    let mut is_seed = vec![false; corpus.len()];
    for &s in &seeds {
        is_seed[s] = true;
    }

    let mut watched = vec![false; corpus.len()];
    let mut queued = vec![false; corpus.len()];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for &s in &seeds {
        queued[s] = true;
        queue.push_back(s);
    }
    let mut events = Vec::new();
    let mut referenced = vec![false; corpus.len()];
    while events.len() < cfg.steps {
        let Some(v) = queue.pop_front() else { break };
        if watched[v] {
            continue;
        }
        watched[v] = true;
        referenced[v] = true;
        let recs: Vec<usize> = recommend(&state, v, corpus, cfg, &watched, &mut rng)?
            .into_iter()
            .filter(|&r| title_mentions(&corpus.videos[r].title, &cfg.keyword))
            .collect();
        for &r in &recs {
            referenced[r] = true;
            if !watched[r] && !queued[r] {
                queued[r] = true;
                queue.push_back(r);
            }
        }
        events.push(RecEvent::new(
            spec.profile_id.clone(),
            events.len() as u64,
            corpus.id(v).clone(),
            recs.iter().map(|&r| corpus.id(r).clone()).collect(),
            is_seed[v],
        )?);
    }
    let metadata = (0..corpus.len())
        .filter(|&i| referenced[i])
        .map(|i| (corpus.id(i).clone(), corpus.videos[i].clone()))
        .collect();
    let log = SessionLog::new(spec.profile_id.clone(), events, metadata)?;
    Ok(SimulationRun { log, state })
}

fn pick_seeds<R: Rng + ?Sized>(
    spec: &ProfileSpec,
    corpus: &SyntheticCorpus,
    cfg: &SimConfig,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let topics = per_class(corpus.scheme, &spec.training_topics, 0.0)?;
    let biased = spec.query_seed_policy == QuerySeedPolicy::BiasedQueries
        && topics.iter().sum::<f64>() > 0.0;
    let mut weights: Vec<f64> = (0..corpus.len())
        .map(|i| {
            let w = corpus.popularity[i];
            if biased {
                w * topics[corpus.classes[i]]
            } else {
                w
            }
        })
        .collect();
    let want = cfg
        .seed_count
        .min(weights.iter().filter(|w| **w > 0.0).count());
    let mut seeds = Vec::with_capacity(want);
    // Sequential weighted draws without replacement.
    for _ in 0..want {
        let dist =
            WeightedIndex::new(&weights).map_err(|e| AuditError::parameter(e.to_string()))?;
        let s = dist.sample(rng);
        weights[s] = 0.0;
        seeds.push(s);
    }
    seeds.sort_unstable();
    Ok(seeds)
}

/// Expected sign of the audit's total bias given the planted skew: −1 when
/// the recommender favors the class scoring −1, +1 when it favors the class
/// scoring +1, 0 when those two are boosted equally.
pub fn planted_bias_oracle(cfg: &SimConfig) -> Result<i8> {
    let skew = cfg.skew()?;
    let (neg, pos) = (skew[0], skew[CLASSES - 1]);
    Ok(if neg > pos {
        -1
    } else if pos > neg {
        1
    } else {
        0
    })
}
