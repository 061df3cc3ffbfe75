//! Goal-reaching with shaped rewards and tabular Q-learning.
//!
//! The reward for landing in `s'` is `w_env * r_env + w_dist * r_dist` with
//! `r_env = 0` at the goal and `-1` elsewhere, and `r_dist` the negative
//! distance from `s'` to the goal: under an embedding (RA-LapRep, LapRep),
//! in normalized grid coordinates (L2), or zero (no shaping). Success is
//! always judged by reaching the goal, never by the shaped return.

use std::collections::BTreeMap;
use std::str::FromStr;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::envgrid::{Action, MazeSpec};
use crate::error::{Error, Result};
use crate::graph::{build_graph, StateGraph};
use crate::rng;
use crate::spectral::{embed_dist, eig_sym, ra_laprep, Embedding};
use crate::stats::mean_stderr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardKind {
    RaLaprep,
    Laprep,
    L2,
    None,
}

impl RewardKind {
    pub const ALL: [RewardKind; 4] = [
        RewardKind::RaLaprep,
        RewardKind::Laprep,
        RewardKind::L2,
        RewardKind::None,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RewardKind::RaLaprep => "ra_laprep",
            RewardKind::Laprep => "laprep",
            RewardKind::L2 => "l2",
            RewardKind::None => "none",
        }
    }

    pub fn needs_embedding(self) -> bool {
        matches!(self, RewardKind::RaLaprep | RewardKind::Laprep)
    }
}

impl std::fmt::Display for RewardKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RewardKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RewardKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown reward kind {s:?}")))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RewardSpec<'a> {
    pub kind: RewardKind,
    pub embedding: Option<&'a Embedding>,
    pub goal: usize,
    pub w_env: f64,
    pub w_dist: f64,
}

impl<'a> RewardSpec<'a> {
    pub fn new(kind: RewardKind, embedding: Option<&'a Embedding>, goal: usize) -> Self {
        RewardSpec {
            kind,
            embedding,
            goal,
            w_env: 0.5,
            w_dist: 0.5,
        }
    }
}

pub fn shaped_reward(spec: &RewardSpec, maze: &MazeSpec, s_next: usize) -> Result<f64> {
    let n = maze.n_states();
    if s_next >= n {
        return Err(Error::StateOutOfRange(s_next));
    }
    let r_env = if s_next == spec.goal { 0.0 } else { -1.0 };
    let r_dist = match spec.kind {
        RewardKind::RaLaprep | RewardKind::Laprep => {
            let e = spec
                .embedding
                .ok_or(Error::MissingEmbedding(spec.kind.name()))?;
            if e.n_states() != n {
                return Err(Error::DimensionMismatch(format!(
                    "embedding over {} states, maze has {n}",
                    e.n_states()
                )));
            }
            -embed_dist(e, s_next, spec.goal)
        }
        RewardKind::L2 => {
            let (ax, ay) = maze.normalized_position(s_next);
            let (gx, gy) = maze.normalized_position(spec.goal);
            -(ax - gx).hypot(ay - gy)
        }
        RewardKind::None => 0.0,
    };
    Ok(spec.w_env * r_env + spec.w_dist * r_dist)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QConfig {
    pub episodes: usize,
    pub step_size: f64,
    pub gamma: f64,
    pub eps_start: f64,
    pub eps_end: f64,
    /// Fraction of episodes over which epsilon decays linearly.
    pub eps_decay_frac: f64,
    /// Episode step cap.
    pub max_steps: usize,
}

impl Default for QConfig {
    fn default() -> Self {
        QConfig {
            episodes: 1000,
            step_size: 0.1,
            gamma: 0.99,
            eps_start: 1.0,
            eps_end: 0.05,
            eps_decay_frac: 0.3,
            max_steps: 150,
        }
    }
}

impl QConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1)");
        }
        if !(self.step_size > 0.0 && self.step_size <= 1.0) {
            return bad("step size must lie in (0, 1]");
        }
        if self.episodes == 0 || self.max_steps == 0 {
            return bad("episodes and max steps must be >= 1");
        }
        let unit = 0.0..=1.0;
        if !unit.contains(&self.eps_start) || !unit.contains(&self.eps_end) || !unit.contains(&self.eps_decay_frac) {
            return bad("epsilon schedule values must lie in [0, 1]");
        }
        Ok(())
    }

    pub fn epsilon(&self, episode: usize) -> f64 {
        let horizon = self.eps_decay_frac * self.episodes as f64;
        if horizon <= 0.0 {
            return self.eps_end;
        }
        let t = (episode as f64 / horizon).min(1.0);
        self.eps_start + t * (self.eps_end - self.eps_start)
    }
}

/// One (kind, goal, seed) training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub kind: RewardKind,
    pub goal: usize,
    pub seed: u64,
    pub success: Vec<bool>,
    pub steps: Vec<u32>,
    #[serde(skip)]
    pub q: Vec<[f64; 4]>,
}

impl RunRecord {
    /// Area under the success curve, normalized to [0, 1].
    pub fn auc(&self) -> f64 {
        self.success.iter().filter(|&&s| s).count() as f64 / self.success.len() as f64
    }

    /// Greedy action (lowest index among ties) for each state.
    pub fn greedy_policy(&self) -> Vec<Action> {
        self.q
            .iter()
            .map(|row| {
                let mut best = 0;
                for a in 1..4 {
                    if row[a] > row[best] {
                        best = a;
                    }
                }
                Action::ALL[best]
            })
            .collect()
    }
}

const EXPLORATION_TAG: u64 = 0x5348_4150_494e_4721;

fn check_goal(graph: &StateGraph, goal: usize) -> Result<()> {
    if goal >= graph.n_states() {
        return Err(Error::StateOutOfRange(goal));
    }
    if graph.geodesic_from(goal).iter().any(Option::is_none) {
        return Err(Error::UnreachableGoal(goal));
    }
    Ok(())
}

/// Epsilon-greedy tabular Q-learning from uniform random non-goal starts.
///
/// Episode `e` draws from stream `e` of the run seed, and every step draws
/// the same three numbers (exploration coin, random action, tie-break)
/// whether or not they are used, so runs with the same seed share their
/// noise across reward kinds. Hitting the step cap is a truncation, not a
/// terminal transition.
pub fn q_learning(maze: &MazeSpec, spec: &RewardSpec, config: &QConfig, seed: u64) -> Result<RunRecord> {
    config.validate()?;
    let graph = build_graph(maze);
    check_goal(&graph, spec.goal)?;
    let n = maze.n_states();
    if n < 2 {
        return Err(Error::InvalidConfig("need at least one non-goal state".into()));
    }
    // reward and next state for every (state, action)
    let mut next = vec![[0usize; 4]; n];
    let mut reward = vec![[0.0f64; 4]; n];
    for s in 0..n {
        for a in Action::ALL {
            let t = maze.step_state(s, a);
            next[s][a.index()] = t;
            reward[s][a.index()] = shaped_reward(spec, maze, t)?;
        }
    }

    let mut q = vec![[0.0f64; 4]; n];
    let mut success = Vec::with_capacity(config.episodes);
    let mut steps = Vec::with_capacity(config.episodes);
    let base = rng::derive(seed, EXPLORATION_TAG);
    for episode in 0..config.episodes {
        let mut rng = rng::stream(base, episode as u64);
        let eps = config.epsilon(episode);
        let mut s = rng.random_range(0..n - 1);
        if s >= spec.goal {
            s += 1;
        }
        let mut reached = false;
        let mut taken = 0u32;
        for _ in 0..config.max_steps {
            let coin: f64 = rng.random();
            let random_action = rng.random_range(0..4usize);
            let tie: u32 = rng.random();
            let a = if coin < eps {
                random_action
            } else {
                argmax_with_ties(&q[s], tie)
            };
            let t = next[s][a];
            let r = reward[s][a];
            let done = t == spec.goal;
            let bootstrap = if done { 0.0 } else { q[t].iter().copied().fold(f64::NEG_INFINITY, f64::max) };
            q[s][a] += config.step_size * (r + config.gamma * bootstrap - q[s][a]);
            taken += 1;
            s = t;
            if done {
                reached = true;
                break;
            }
        }
        success.push(reached);
        steps.push(taken);
    }
    Ok(RunRecord {
        kind: spec.kind,
        goal: spec.goal,
        seed,
        success,
        steps,
        q,
    })
}

fn argmax_with_ties(row: &[f64; 4], tie: u32) -> usize {
    let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut ties = [0usize; 4];
    let mut count = 0;
    for (a, &v) in row.iter().enumerate() {
        if v == best {
            ties[count] = a;
            count += 1;
        }
    }
    ties[tie as usize % count]
}

/// Embeddings available to the embedding-based reward kinds.
#[derive(Debug, Clone, Default)]
pub struct ShapingEmbeddings {
    pub ra_laprep: Option<Embedding>,
    pub laprep: Option<Embedding>,
}

impl ShapingEmbeddings {
    pub fn for_kind(&self, kind: RewardKind) -> Option<&Embedding> {
        match kind {
            RewardKind::RaLaprep => self.ra_laprep.as_ref(),
            RewardKind::Laprep => self.laprep.as_ref(),
            _ => None,
        }
    }
}

/// Trailing window used when locating episodes-to-threshold on the mean
/// success curve.
pub const SUCCESS_WINDOW: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KindSummary {
    /// Mean success per episode over all goals and seeds.
    pub curve: Vec<f64>,
    pub auc: f64,
    pub stderr: f64,
    /// Episodes until the trailing-window mean of `curve` reaches 0.9.
    pub episodes_to_90pct: Option<usize>,
    /// Per-run AUCs in goal-major, seed-minor order.
    pub run_aucs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapingRun {
    pub kinds: Vec<RewardKind>,
    pub goals: Vec<usize>,
    pub seeds: Vec<u64>,
    pub config: QConfig,
    pub runs: Vec<RunRecord>,
    pub summaries: BTreeMap<RewardKind, KindSummary>,
}

pub fn episodes_to_threshold(curve: &[f64], threshold: f64, window: usize) -> Option<usize> {
    let window = window.max(1);
    let mut sum = 0.0;
    for (e, &v) in curve.iter().enumerate() {
        sum += v;
        if e >= window {
            sum -= curve[e - window];
        }
        let len = (e + 1).min(window);
        if e + 1 >= window && sum / len as f64 >= threshold {
            return Some(e + 1);
        }
    }
    None
}

fn summarize(runs: &[&RunRecord]) -> KindSummary {
    let episodes = runs[0].success.len();
    let mut curve = vec![0.0; episodes];
    for r in runs {
        for (c, &s) in curve.iter_mut().zip(&r.success) {
            *c += if s { 1.0 } else { 0.0 };
        }
    }
    for c in &mut curve {
        *c /= runs.len() as f64;
    }
    let run_aucs: Vec<f64> = runs.iter().map(|r| r.auc()).collect();
    let (auc, stderr) = mean_stderr(&run_aucs);
    KindSummary {
        episodes_to_90pct: episodes_to_threshold(&curve, 0.9, SUCCESS_WINDOW),
        curve,
        auc,
        stderr,
        run_aucs,
    }
}

/// Full factorial kinds x goals x seeds. Runs execute in parallel; results
/// are ordered kind-major, then goal, then seed.
pub fn run_experiment(
    maze: &MazeSpec,
    embeddings: &ShapingEmbeddings,
    kinds: &[RewardKind],
    goals: &[usize],
    seeds: &[u64],
    config: &QConfig,
) -> Result<ShapingRun> {
    config.validate()?;
    if kinds.is_empty() || goals.is_empty() || seeds.is_empty() {
        return Err(Error::InvalidConfig("need at least one kind, goal and seed".into()));
    }
    for &k in kinds {
        if k.needs_embedding() && embeddings.for_kind(k).is_none() {
            return Err(Error::MissingEmbedding(k.name()));
        }
    }
    let jobs: Vec<(RewardKind, usize, u64)> = kinds
        .iter()
        .flat_map(|&k| goals.iter().flat_map(move |&g| seeds.iter().map(move |&s| (k, g, s))))
        .collect();
    let runs: Result<Vec<RunRecord>> = jobs
        .par_iter()
        .map(|&(kind, goal, seed)| {
            let spec = RewardSpec::new(kind, embeddings.for_kind(kind), goal);
            q_learning(maze, &spec, config, seed)
        })
        .collect();
    let runs = runs?;
    let mut summaries = BTreeMap::new();
    for &k in kinds {
        let mine: Vec<&RunRecord> = runs.iter().filter(|r| r.kind == k).collect();
        summaries.insert(k, summarize(&mine));
    }
    Ok(ShapingRun {
        kinds: kinds.to_vec(),
        goals: goals.to_vec(),
        seeds: seeds.to_vec(),
        config: *config,
        runs,
        summaries,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimensionPoint {
    pub d: usize,
    pub auc: f64,
    pub stderr: f64,
    pub run_aucs: Vec<f64>,
}

/// RA-LapRep shaping (ground-truth embedding) for each dimension in
/// `d_values`.
pub fn dimension_sweep(
    maze: &MazeSpec,
    d_values: &[usize],
    goals: &[usize],
    seeds: &[u64],
    config: &QConfig,
) -> Result<Vec<DimensionPoint>> {
    if d_values.is_empty() {
        return Err(Error::InvalidConfig("empty dimension list".into()));
    }
    let graph = build_graph(maze);
    let basis = eig_sym(&graph.laplacian())?;
    d_values
        .iter()
        .map(|&d| {
            let embeddings = ShapingEmbeddings {
                ra_laprep: Some(ra_laprep(&basis, d)?),
                laprep: None,
            };
            let run = run_experiment(maze, &embeddings, &[RewardKind::RaLaprep], goals, seeds, config)?;
            let s = &run.summaries[&RewardKind::RaLaprep];
            Ok(DimensionPoint {
                d,
                auc: s.auc,
                stderr: s.stderr,
                run_aucs: s.run_aucs.clone(),
            })
        })
        .collect()
}
