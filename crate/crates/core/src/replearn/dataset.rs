use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::envgrid::{Action, MazeSpec};
use crate::error::{Error, Result};
use crate::graph::{build_graph, StateGraph};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollectConfig {
    pub episodes: usize,
    /// Steps (transitions) per episode.
    pub episode_len: usize,
    /// Coverage temperature: start states are drawn with weight
    /// `exp(tau * [s is a bias cell])`.
    pub tau: f64,
    pub seed: u64,
}

impl Default for CollectConfig {
    fn default() -> Self {
        CollectConfig {
            episodes: 2_000,
            episode_len: 50,
            tau: 0.0,
            seed: 0,
        }
    }
}

/// Uniform-random-policy trajectories. Wall bumps appear as repeated states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionDataset {
    pub n_states: usize,
    pub episodes: Vec<Vec<usize>>,
    pub config: CollectConfig,
    pub visits: Vec<u64>,
}

impl TransitionDataset {
    /// Builds a dataset from given trajectories (one `Vec` of state indices
    /// per episode).
    pub fn from_episodes(n_states: usize, episodes: Vec<Vec<usize>>, config: CollectConfig) -> Result<Self> {
        let mut visits = vec![0u64; n_states];
        for ep in &episodes {
            for &s in ep {
                if s >= n_states {
                    return Err(Error::StateOutOfRange(s));
                }
                visits[s] += 1;
            }
        }
        Ok(TransitionDataset {
            n_states,
            episodes,
            config,
            visits,
        })
    }

    /// Number of consecutive-pair transitions.
    pub fn total_steps(&self) -> usize {
        self.episodes.iter().map(|e| e.len().saturating_sub(1)).sum()
    }

    pub fn total_states(&self) -> usize {
        self.episodes.iter().map(Vec::len).sum()
    }

    pub fn transitions(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.episodes
            .iter()
            .flat_map(|e| e.windows(2).map(|w| (w[0], w[1])))
    }

    /// Graph induced by the observed transitions over all maze states;
    /// unvisited states are isolated nodes.
    pub fn induced_graph(&self) -> StateGraph {
        StateGraph::from_transitions(self.n_states, self.transitions()).expect("states in range")
    }

    /// Checks every consecutive pair is a maze edge or a self-transition.
    pub fn consistent_with(&self, maze: &MazeSpec) -> bool {
        let g = build_graph(maze);
        self.n_states == maze.n_states() && self.transitions().all(|(a, b)| a == b || g.has_edge(a, b))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let data: TransitionDataset =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        TransitionDataset::from_episodes(data.n_states, data.episodes, data.config)
    }
}

/// Collects `episodes` trajectories of the uniform random policy. Episode
/// `k` uses stream `k` of the seed.
pub fn collect_dataset(maze: &MazeSpec, config: CollectConfig) -> Result<TransitionDataset> {
    if config.episode_len == 0 {
        return Err(Error::InvalidConfig("episode length must be >= 1".into()));
    }
    if !(config.tau >= 0.0) || !config.tau.is_finite() {
        return Err(Error::InvalidConfig("temperature must be a finite value >= 0".into()));
    }
    build_graph(maze).require_connected()?;
    let bias = maze.bias_states();
    if config.tau > 0.0 && bias.is_empty() {
        return Err(Error::NoBiasCells);
    }
    let n = maze.n_states();
    let mut is_bias = vec![false; n];
    for &s in &bias {
        is_bias[s] = true;
    }
    // weights relative to the bias cells keep exp() finite for large tau
    let weights: Vec<f64> = is_bias
        .iter()
        .map(|&b| if b { 1.0 } else { (-config.tau).exp() })
        .collect();
    let starts = WeightedIndex::new(&weights)
        .map_err(|e| Error::InvalidConfig(format!("start distribution: {e}")))?;

    let episodes: Vec<Vec<usize>> = (0..config.episodes)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng::stream(config.seed, k as u64);
            let mut s = starts.sample(&mut rng);
            let mut traj = Vec::with_capacity(config.episode_len + 1);
            traj.push(s);
            for _ in 0..config.episode_len {
                let a = Action::ALL[rng.random_range(0..4)];
                s = maze.step_state(s, a);
                traj.push(s);
            }
            traj
        })
        .collect();
    TransitionDataset::from_episodes(n, episodes, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envgrid::parse_maze;

    const TWO_ROOM: &str = "#######\n#..#..#\n#.....#\n#######";

    #[test]
    fn deterministic_and_consistent() {
        let maze = parse_maze(TWO_ROOM).unwrap();
        let cfg = CollectConfig {
            episodes: 50,
            episode_len: 20,
            tau: 0.0,
            seed: 3,
        };
        let a = collect_dataset(&maze, cfg).unwrap();
        let b = collect_dataset(&maze, cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.consistent_with(&maze));
        assert_eq!(a.total_steps(), 1000);
        assert_eq!(a.visits.iter().sum::<u64>() as usize, a.total_states());
    }

    #[test]
    fn uniform_visitation_on_two_room() {
        // the maze walk with wall bumps is symmetric, so its stationary
        // distribution is uniform; uniform starts keep it uniform
        let maze = parse_maze(TWO_ROOM).unwrap();
        let cfg = CollectConfig {
            episodes: 2000,
            episode_len: 50,
            tau: 0.0,
            seed: 1,
        };
        let data = collect_dataset(&maze, cfg).unwrap();
        let expected = data.total_states() as f64 / 9.0;
        for &v in &data.visits {
            assert!((v as f64 - expected).abs() < 0.2 * expected);
        }
    }

    #[test]
    fn temperature_needs_bias_cells() {
        let maze = parse_maze(TWO_ROOM).unwrap();
        let cfg = CollectConfig {
            tau: 1.0,
            ..CollectConfig::default()
        };
        assert!(matches!(collect_dataset(&maze, cfg), Err(Error::NoBiasCells)));
        let cfg = CollectConfig {
            episode_len: 0,
            ..CollectConfig::default()
        };
        assert!(collect_dataset(&maze, cfg).is_err());
    }

    #[test]
    fn high_temperature_starts_in_bias_room() {
        let maze = parse_maze("#######\n#BB#..#\n#BB...#\n#######").unwrap();
        let cfg = CollectConfig {
            episodes: 200,
            episode_len: 1,
            tau: 30.0,
            seed: 5,
        };
        let data = collect_dataset(&maze, cfg).unwrap();
        let bias = maze.bias_states();
        assert!(data.episodes.iter().all(|e| bias.contains(&e[0])));
    }

    #[test]
    fn json_round_trip() {
        let maze = parse_maze(TWO_ROOM).unwrap();
        let cfg = CollectConfig {
            episodes: 3,
            episode_len: 4,
            tau: 0.0,
            seed: 9,
        };
        let data = collect_dataset(&maze, cfg).unwrap();
        assert_eq!(TransitionDataset::from_json(&data.to_json().unwrap()).unwrap(), data);
    }
}
