use nalgebra::DMatrix;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::dataset::TransitionDataset;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub d: usize,
    pub iterations: usize,
    /// Initial Adam step size; decays linearly to a tenth of this by the
    /// last iteration.
    pub step_size: f64,
    pub batch_size: usize,
    /// Offsets between attraction pairs are Geometric(1 - discount) on
    /// {1, 2, ...}; 0 uses consecutive states only.
    pub discount: f64,
    /// Orthonormality penalty weight `b`.
    pub penalty: f64,
    pub seed: u64,
    /// Objective is recorded every this many iterations.
    pub log_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            d: 10,
            iterations: 50_000,
            step_size: 3e-2,
            batch_size: 1024,
            discount: 0.9,
            penalty: 5.0,
            seed: 0,
            log_every: 100,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.d < 2 {
            return bad("d must be >= 2");
        }
        if self.iterations == 0 || self.batch_size == 0 || self.log_every == 0 {
            return bad("iterations, batch size and log interval must be >= 1");
        }
        if !(self.step_size > 0.0) {
            return bad("step size must be > 0");
        }
        if !(0.0..1.0).contains(&self.discount) {
            return bad("discount must lie in [0, 1)");
        }
        if !(self.penalty > 0.0) {
            return bad("penalty weight must be > 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainLogEntry {
    pub iteration: usize,
    pub objective: f64,
    pub penalty: f64,
}

/// Tabular eigenvector approximations: column `i` of `f` approximates the
/// eigenvector of the `(i+1)`-th smallest Laplacian eigenvalue, scaled to
/// unit second moment under the dataset's state distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnedRep {
    pub f: DMatrix<f64>,
    pub config: TrainConfig,
    pub final_objective: f64,
    pub log: Vec<TrainLogEntry>,
}

impl LearnedRep {
    pub fn d(&self) -> usize {
        self.f.ncols()
    }

    /// `f` with every column rescaled to unit Euclidean norm.
    pub fn unit_columns(&self) -> DMatrix<f64> {
        let mut out = self.f.clone();
        for mut col in out.column_iter_mut() {
            let norm = col.norm();
            if norm > 0.0 {
                col /= norm;
            }
        }
        out
    }
}

/// Draws a pair offset `k >= 1` with `P(k) = (1 - discount) discount^(k-1)`.
pub fn sample_offset(discount: f64, rng: &mut rng::Rng) -> usize {
    if discount <= 0.0 {
        return 1;
    }
    let u: f64 = 1.0 - rng.random::<f64>(); // (0, 1]
    1 + (u.ln() / discount.ln()).floor() as usize
}

/// Flat index over every `(episode, position)`.
struct Positions<'a> {
    data: &'a TransitionDataset,
    /// cumulative counts of sampleable positions per episode
    starts: Vec<usize>,
    total: usize,
}

impl<'a> Positions<'a> {
    fn new(data: &'a TransitionDataset, skip_last: bool) -> Self {
        let mut starts = Vec::with_capacity(data.episodes.len());
        let mut total = 0;
        for ep in &data.episodes {
            starts.push(total);
            total += if skip_last { ep.len().saturating_sub(1) } else { ep.len() };
        }
        Positions { data, starts, total }
    }

    fn sample(&self, rng: &mut rng::Rng) -> (usize, usize) {
        let flat = rng.random_range(0..self.total);
        let ep = self.starts.partition_point(|&s| s <= flat) - 1;
        (ep, flat - self.starts[ep])
    }

    fn state(&self, ep: usize, t: usize) -> usize {
        self.data.episodes[ep][t]
    }
}

struct Adam {
    m: DMatrix<f64>,
    v: DMatrix<f64>,
    t: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(rows: usize, cols: usize) -> Self {
        Adam {
            m: DMatrix::zeros(rows, cols),
            v: DMatrix::zeros(rows, cols),
            t: 0,
        }
    }

    fn step(&mut self, params: &mut DMatrix<f64>, grad: &DMatrix<f64>, lr: f64) {
        self.t += 1;
        let bc1 = 1.0 - Self::BETA1.powi(self.t);
        let bc2 = 1.0 - Self::BETA2.powi(self.t);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grad.iter())
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            *m = Self::BETA1 * *m + (1.0 - Self::BETA1) * g;
            *v = Self::BETA2 * *v + (1.0 - Self::BETA2) * g * g;
            *p -= lr * (*m / bc1) / ((*v / bc2).sqrt() + Self::EPS);
        }
    }
}

/// Minimizes the generalized graph-drawing objective over a table `f`:
///
/// ```text
/// sum_i c_i E_pairs[(f_i(s) - f_i(s'))^2]
///   + b sum_{i,j} min(c_i, c_j) (E_s[f_i(s) f_j(s)] - delta_ij)^2
/// ```
///
/// with `c_i = d - i + 1`. Pairs are `(s_t, s_{t+k})` from one episode with
/// geometric offsets `k` (clipped at the episode end); `E_s` is over the
/// dataset's visited states. The penalty gradient uses two independent
/// state batches so it is unbiased.
pub fn train_graph_drawing(data: &TransitionDataset, config: TrainConfig) -> Result<LearnedRep> {
    config.validate()?;
    if data.total_steps() == 0 {
        return Err(Error::EmptyDataset);
    }
    data.induced_graph().require_connected()?;
    let n = data.n_states;
    let d = config.d;
    if d > n {
        return Err(Error::DimensionOutOfRange { d, max: n });
    }
    let coeff: Vec<f64> = (0..d).map(|i| (d - i) as f64).collect();
    let weight = DMatrix::from_fn(d, d, |i, j| coeff[i].min(coeff[j]));

    let mut rng = rng::stream(config.seed, 0);
    let limit = 3f64.sqrt();
    let mut f = DMatrix::from_fn(n, d, |_, _| rng.random_range(-limit..limit));

    let pair_positions = Positions::new(data, true);
    let state_positions = Positions::new(data, false);
    let batch = config.batch_size;
    let scale = 1.0 / batch as f64;

    let mut adam = Adam::new(n, d);
    let mut grad = DMatrix::zeros(n, d);
    let mut log = Vec::new();
    let mut initial = None;
    let mut smoothed: Option<f64> = None;
    let mut last = 0.0;

    let mut us = vec![0usize; batch];
    let mut ws = vec![0usize; batch];
    let mut first = vec![0usize; batch];
    let mut second = vec![0usize; batch];

    for it in 0..config.iterations {
        for k in 0..batch {
            let (ep, t) = pair_positions.sample(&mut rng);
            let len = data.episodes[ep].len();
            let off = sample_offset(config.discount, &mut rng);
            us[k] = pair_positions.state(ep, t);
            ws[k] = pair_positions.state(ep, (t + off).min(len - 1));
        }
        for slot in first.iter_mut().chain(second.iter_mut()) {
            let (ep, t) = state_positions.sample(&mut rng);
            *slot = state_positions.state(ep, t);
        }

        grad.fill(0.0);
        let mut attraction = 0.0;
        for k in 0..batch {
            let (u, w) = (us[k], ws[k]);
            if u == w {
                continue;
            }
            for i in 0..d {
                let diff = f[(u, i)] - f[(w, i)];
                attraction += coeff[i] * diff * diff;
                let g = 2.0 * coeff[i] * diff * scale;
                grad[(u, i)] += g;
                grad[(w, i)] -= g;
            }
        }
        attraction *= scale;

        // second moments from the first state batch
        let mut moments = DMatrix::<f64>::zeros(d, d);
        for &s in &first {
            for i in 0..d {
                let fi = f[(s, i)];
                for j in i..d {
                    moments[(i, j)] += fi * f[(s, j)];
                }
            }
        }
        moments *= scale;
        let mut penalty = 0.0;
        // coef[i][j] multiplies f_j(s) in the gradient of f_i(s)
        let mut coef = DMatrix::<f64>::zeros(d, d);
        for i in 0..d {
            for j in i..d {
                let dev = moments[(i, j)] - if i == j { 1.0 } else { 0.0 };
                // off-diagonal pairs appear as (i, j) and (j, i)
                let w = if i == j { weight[(i, j)] } else { 2.0 * weight[(i, j)] };
                penalty += w * dev * dev;
                let c = 2.0 * config.penalty * w * dev * scale;
                if i == j {
                    coef[(i, i)] += 2.0 * c;
                } else {
                    coef[(i, j)] += c;
                    coef[(j, i)] += c;
                }
            }
        }
        penalty *= config.penalty;
        for &s in &second {
            for i in 0..d {
                let mut g = 0.0;
                for j in 0..d {
                    g += coef[(i, j)] * f[(s, j)];
                }
                grad[(s, i)] += g;
            }
        }

        let objective = attraction + penalty;
        last = objective;
        let ema = match smoothed {
            None => objective,
            Some(prev) => 0.98 * prev + 0.02 * objective,
        };
        smoothed = Some(ema);
        let init = *initial.get_or_insert(objective);
        if !objective.is_finite() || ema > 10.0 * init {
            return Err(Error::DivergedObjective {
                iteration: it,
                value: ema,
                initial: init,
            });
        }
        if it % config.log_every == 0 || it + 1 == config.iterations {
            log.push(TrainLogEntry {
                iteration: it,
                objective,
                penalty,
            });
        }

        let progress = it as f64 / config.iterations as f64;
        adam.step(&mut f, &grad, config.step_size * (1.0 - 0.9 * progress));
    }

    Ok(LearnedRep {
        f,
        config,
        final_objective: last,
        log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envgrid::parse_maze;
    use crate::graph::build_graph;
    use crate::replearn::CollectConfig;
    use crate::spectral::eig_sym;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn dataset(n: usize, episodes: &[&[usize]]) -> TransitionDataset {
        let eps = episodes.iter().map(|e| e.to_vec()).collect();
        TransitionDataset::from_episodes(n, eps, CollectConfig::default()).unwrap()
    }

    fn quick(d: usize, seed: u64) -> TrainConfig {
        TrainConfig {
            d,
            iterations: 4000,
            batch_size: 256,
            seed,
            ..TrainConfig::default()
        }
    }

    fn abs_cos(a: &[f64], b: &[f64]) -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        (dot / (na * nb)).abs()
    }

    #[test]
    fn k2_second_column_is_the_fiedler_vector() {
        let data = dataset(2, &[&[0, 1], &[1, 0]]);
        let rep = train_graph_drawing(&data, quick(2, 3)).unwrap();
        let f2: Vec<f64> = rep.f.column(1).iter().copied().collect();
        let v2 = [1.0 / 2f64.sqrt(), -1.0 / 2f64.sqrt()];
        assert!(abs_cos(&f2, &v2) >= 0.999, "{} {}", abs_cos(&f2, &v2), rep.f);
    }

    #[test]
    fn p3_columns_align() {
        // padded with self-transitions so every state is visited equally
        let data = dataset(3, &[&[0, 1], &[1, 0], &[1, 2], &[2, 1], &[0, 0], &[2, 2]]);
        let rep = train_graph_drawing(&data, quick(3, 11)).unwrap();
        let g = build_graph(&parse_maze("#####\n#...#\n#####").unwrap());
        let b = eig_sym(&g.laplacian()).unwrap();
        for k in 1..3 {
            let f: Vec<f64> = rep.f.column(k).iter().copied().collect();
            let v: Vec<f64> = b.vector(k).iter().copied().collect();
            assert!(abs_cos(&f, &v) >= 0.99, "column {k}");
        }
    }

    #[test]
    fn offsets_are_geometric() {
        let discount: f64 = 0.9;
        let samples = 100_000;
        let bins = 30;
        let mut counts = vec![0usize; bins + 1];
        let mut rng = rng::stream(5, 0);
        for _ in 0..samples {
            let k = sample_offset(discount, &mut rng);
            assert!(k >= 1);
            counts[(k - 1).min(bins)] += 1;
        }
        let mut chi2 = 0.0;
        for (i, &c) in counts.iter().enumerate() {
            let p = if i < bins {
                (1.0 - discount) * discount.powi(i as i32)
            } else {
                discount.powi(bins as i32)
            };
            let expected = p * samples as f64;
            chi2 += (c as f64 - expected).powi(2) / expected;
        }
        let critical = ChiSquared::new(bins as f64).unwrap().inverse_cdf(0.999);
        assert!(chi2 < critical, "chi2 {chi2} >= {critical}");
        assert_eq!(sample_offset(0.0, &mut rng), 1);
    }

    #[test]
    fn seeded_runs_repeat() {
        let data = dataset(2, &[&[0, 1], &[1, 0]]);
        let cfg = TrainConfig {
            iterations: 200,
            ..quick(2, 9)
        };
        let a = train_graph_drawing(&data, cfg).unwrap();
        let b = train_graph_drawing(&data, cfg).unwrap();
        assert_eq!(a, b);
        let c = train_graph_drawing(&data, TrainConfig { seed: 10, ..cfg }).unwrap();
        assert_ne!(a.f, c.f);
    }

    #[test]
    fn objective_decreases() {
        let maze = parse_maze("#######\n#..#..#\n#.....#\n#######").unwrap();
        let data = crate::replearn::collect_dataset(
            &maze,
            CollectConfig {
                episodes: 200,
                ..CollectConfig::default()
            },
        )
        .unwrap();
        let rep = train_graph_drawing(&data, quick(4, 1)).unwrap();
        let head: f64 = rep.log[..5].iter().map(|e| e.objective).sum();
        let tail: f64 = rep.log[rep.log.len() - 5..].iter().map(|e| e.objective).sum();
        assert!(tail < head, "{tail} >= {head}");
        assert_eq!(rep.log.last().unwrap().iteration, 3999);
    }

    #[test]
    fn rejects_bad_inputs() {
        let partial = dataset(3, &[&[0, 1], &[1, 0]]);
        assert!(matches!(
            train_graph_drawing(&partial, quick(2, 0)),
            Err(Error::GraphDisconnected { components: 2 })
        ));
        let empty = dataset(2, &[&[0]]);
        assert!(matches!(train_graph_drawing(&empty, quick(2, 0)), Err(Error::EmptyDataset)));
        let k2 = dataset(2, &[&[0, 1]]);
        assert!(matches!(
            train_graph_drawing(&k2, quick(3, 0)),
            Err(Error::DimensionOutOfRange { d: 3, max: 2 })
        ));
        assert!(train_graph_drawing(&k2, quick(1, 0)).is_err());
        assert!(train_graph_drawing(&k2, TrainConfig { discount: 1.0, ..quick(2, 0) }).is_err());
    }
}
