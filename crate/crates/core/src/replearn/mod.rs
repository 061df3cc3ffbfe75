//! Learning the representation from sampled trajectories.
//!
//! 1. [`collect_dataset`]: uniform-random-policy episodes, start states
//!    skewed toward bias cells by the coverage temperature.
//! 2. [`train_graph_drawing`]: tabular eigenvector approximations `f_i`.
//! 3. [`estimate_eigenvalues`]: `lambda_i ~ mean (f_i(s) - f_i(s'))^2` over
//!    observed transitions.
//! 4. [`learned_ra_laprep`]: `(f_2/sqrt(lambda_2), ..., f_d/sqrt(lambda_d))`.
//!
//! The orthonormality penalty weights every ordered pair `(i, j)` by `min(c_i, c_j)`,
//! which makes the objective a sum of nested graph-drawing objectives over
//! the first `k` dimensions for every `k`.

mod dataset;
mod train;

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::Serialize;

pub use dataset::{collect_dataset, CollectConfig, TransitionDataset};
pub use train::{sample_offset, train_graph_drawing, LearnedRep, TrainConfig, TrainLogEntry};

use crate::envgrid::MazeSpec;
use crate::error::{Error, Result};
use crate::graph::StateGraph;
use crate::spectral::{distances_to, Embedding, EmbeddingKind};
use crate::stats::spearman;

/// Estimates below this are refused when building the learned RA-LapRep.
pub const EIGENVALUE_FLOOR: f64 = 1e-8;

/// Estimated `lambda_2..lambda_d`, in the column order of the learned table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LearnedEigenvalues {
    pub values: Vec<f64>,
}

/// Per-column Rayleigh quotients over the observed transitions.
///
/// Each column is normalized to unit Euclidean norm first. Every transition
/// `(s, s')` with `s != s'` contributes `(f(s) - f(s'))^2 / count({s, s'})`,
/// so each observed edge counts once however often it was sampled; with
/// every edge observed this is exactly `f^T L f`. Self-transitions
/// contribute nothing.
pub fn estimate_eigenvalues(rep: &LearnedRep, data: &TransitionDataset) -> Result<LearnedEigenvalues> {
    if rep.f.nrows() != data.n_states {
        return Err(Error::DimensionMismatch(format!(
            "table has {} states, dataset {}",
            rep.f.nrows(),
            data.n_states
        )));
    }
    let values = estimate_from_table(&rep.unit_columns(), data)?;
    Ok(LearnedEigenvalues {
        values: values[1..].to_vec(),
    })
}

/// Eigenvalue estimates for every column of `f` (including the first).
pub fn estimate_from_table(f: &DMatrix<f64>, data: &TransitionDataset) -> Result<Vec<f64>> {
    let mut counts: HashMap<(usize, usize), u64> = HashMap::new();
    for (a, b) in data.transitions() {
        if a != b {
            *counts.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    if counts.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut out = vec![0.0; f.ncols()];
    for (a, b) in data.transitions() {
        if a == b {
            continue;
        }
        let w = 1.0 / counts[&(a.min(b), a.max(b))] as f64;
        for (i, o) in out.iter_mut().enumerate() {
            *o += w * (f[(a, i)] - f[(b, i)]).powi(2);
        }
    }
    Ok(out)
}

/// Learned RA-LapRep: unit-normalized columns `2..=d` of the table, each
/// divided by the square root of its estimated eigenvalue.
pub fn learned_ra_laprep(rep: &LearnedRep, eig: &LearnedEigenvalues) -> Result<Embedding> {
    let d = rep.d();
    if eig.values.len() != d - 1 {
        return Err(Error::DimensionMismatch(format!(
            "{} eigenvalues for a d={d} table",
            eig.values.len()
        )));
    }
    if let Some((k, &v)) = eig.values.iter().enumerate().find(|(_, &v)| !(v > EIGENVALUE_FLOOR)) {
        return Err(Error::DegenerateEigenvalue { index: k + 2, value: v });
    }
    let unit = rep.unit_columns();
    let mut coords = unit.columns(1, d - 1).into_owned();
    for (c, mut col) in coords.column_iter_mut().enumerate() {
        col /= eig.values[c].sqrt();
    }
    Embedding::new(EmbeddingKind::Learned, coords, format!("learned ra-laprep d={d}"))
}

/// Learned LapRep: unit-normalized columns `2..=d` of the table.
pub fn learned_laprep(rep: &LearnedRep) -> Result<Embedding> {
    let d = rep.d();
    let coords = rep.unit_columns().columns(1, d - 1).into_owned();
    Embedding::new(EmbeddingKind::Learned, coords, format!("learned laprep d={d}"))
}

/// All-pairs hop distances; `f64::INFINITY` where unreachable.
pub fn geodesic_matrix(g: &StateGraph) -> DMatrix<f64> {
    let n = g.n_states();
    let mut m = DMatrix::from_element(n, n, f64::INFINITY);
    for s in 0..n {
        for (t, d) in g.geodesic_from(s).into_iter().enumerate() {
            if let Some(d) = d {
                m[(s, t)] = d as f64;
            }
        }
    }
    m
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoalQuality {
    pub goal: usize,
    /// Spearman between learned distance-to-goal and geodesic distance.
    pub spearman_geodesic: f64,
    /// Spearman between learned and reference distance-to-goal profiles.
    pub spearman_truth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepQuality {
    /// `|cosine|` per embedding column; `None` where the reference
    /// eigenvalue is degenerate (shared eigenspace, no unique direction).
    pub cosines: Vec<Option<f64>>,
    /// `|est - true| / true` per eigen-index `2..=d`, when both are given.
    pub eigenvalue_rel_errors: Vec<f64>,
    pub goals: Vec<GoalQuality>,
}

/// Relative spacing under which two reference eigenvalues are treated as
/// one eigenspace.
pub const DEGENERACY_TOL: f64 = 1e-6;

/// Compares a learned embedding against a reference of the same dimension.
/// `truth_eigenvalues` lists the reference spectrum from `lambda_1` upward
/// (at least `d + 1` values when available, so the last column's upper
/// neighbor can be checked).
pub fn rep_quality(
    learned: &Embedding,
    truth: &Embedding,
    geodesics: &DMatrix<f64>,
    goals: &[usize],
    truth_eigenvalues: &[f64],
    learned_eigenvalues: Option<&LearnedEigenvalues>,
) -> Result<RepQuality> {
    let n = truth.n_states();
    if learned.n_states() != n || learned.coords.ncols() != truth.coords.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "learned {}x{} vs truth {}x{}",
            learned.n_states(),
            learned.coords.ncols(),
            n,
            truth.coords.ncols()
        )));
    }
    if geodesics.nrows() != n || geodesics.ncols() != n {
        return Err(Error::DimensionMismatch("geodesic matrix size".into()));
    }
    let cols = truth.coords.ncols();
    if truth_eigenvalues.len() < cols + 1 {
        return Err(Error::DimensionMismatch("need lambda_1..lambda_d".into()));
    }
    let degenerate = |k: usize| {
        // column k holds eigen-index k + 2 (position k + 1)
        let pos = k + 1;
        let v = truth_eigenvalues[pos];
        let close = |w: f64| (v - w).abs() <= DEGENERACY_TOL * v.abs().max(w.abs()).max(1e-12);
        close(truth_eigenvalues[pos - 1])
            || truth_eigenvalues.get(pos + 1).is_some_and(|&w| close(w))
    };
    let cosines = (0..cols)
        .map(|k| {
            if degenerate(k) {
                return None;
            }
            let a = learned.coords.column(k);
            let b = truth.coords.column(k);
            Some((a.dot(&b) / (a.norm() * b.norm())).abs())
        })
        .collect();
    let eigenvalue_rel_errors = match learned_eigenvalues {
        Some(est) => est
            .values
            .iter()
            .zip(&truth_eigenvalues[1..])
            .map(|(e, t)| (e - t).abs() / t)
            .collect(),
        None => Vec::new(),
    };
    let goals = goals
        .iter()
        .map(|&goal| {
            let l = distances_to(learned, goal);
            let t = distances_to(truth, goal);
            let geo: Vec<f64> = geodesics.row(goal).iter().copied().collect();
            GoalQuality {
                goal,
                spearman_geodesic: spearman(&l, &geo),
                spearman_truth: spearman(&l, &t),
            }
        })
        .collect();
    Ok(RepQuality {
        cosines,
        eigenvalue_rel_errors,
        goals,
    })
}

/// Output of [`learn_embedding`].
#[derive(Debug, Clone)]
pub struct LearnedRun {
    pub data: TransitionDataset,
    pub rep: LearnedRep,
    pub eigenvalues: LearnedEigenvalues,
    pub embedding: Embedding,
}

/// Collects a dataset on `maze`, trains the table and builds the learned
/// RA-LapRep. The training seed is `train.seed`; the dataset seed is
/// `collect.seed`.
pub fn learn_embedding(maze: &MazeSpec, collect: CollectConfig, train: TrainConfig) -> Result<LearnedRun> {
    let data = collect_dataset(maze, collect)?;
    let rep = train_graph_drawing(&data, train)?;
    let eigenvalues = estimate_eigenvalues(&rep, &data)?;
    let embedding = learned_ra_laprep(&rep, &eigenvalues)?;
    Ok(LearnedRun {
        data,
        rep,
        eigenvalues,
        embedding,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envgrid::parse_maze;
    use crate::graph::build_graph;
    use crate::spectral::{eig_sym, ra_laprep};

    const K2: &str = "####\n#..#\n####";
    const P3: &str = "#####\n#...#\n#####";

    fn exact_rep(text: &str) -> (LearnedRep, crate::spectral::SpectralBasis) {
        let g = build_graph(&parse_maze(text).unwrap());
        let b = eig_sym(&g.laplacian()).unwrap();
        let rep = LearnedRep {
            f: b.vectors().clone(),
            config: TrainConfig {
                d: g.n_states(),
                ..TrainConfig::default()
            },
            final_objective: 0.0,
            log: vec![],
        };
        (rep, b)
    }

    fn edge_dataset(n: usize, edges: &[(usize, usize)]) -> TransitionDataset {
        let eps = edges.iter().map(|&(a, b)| vec![a, b]).collect();
        TransitionDataset::from_episodes(n, eps, CollectConfig::default()).unwrap()
    }

    #[test]
    fn k2_eigenvalue_exact() {
        let (rep, _) = exact_rep(K2);
        let data = edge_dataset(2, &[(0, 1), (1, 0)]);
        let est = estimate_eigenvalues(&rep, &data).unwrap();
        assert!((est.values[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn constant_column_has_zero_eigenvalue() {
        let rep = LearnedRep {
            f: DMatrix::from_element(3, 2, 1.0),
            config: TrainConfig {
                d: 2,
                ..TrainConfig::default()
            },
            final_objective: 0.0,
            log: vec![],
        };
        let data = edge_dataset(3, &[(0, 1), (1, 2)]);
        assert_eq!(estimate_eigenvalues(&rep, &data).unwrap().values, vec![0.0]);
        let eig = estimate_eigenvalues(&rep, &data).unwrap();
        assert!(matches!(
            learned_ra_laprep(&rep, &eig),
            Err(Error::DegenerateEigenvalue { index: 2, .. })
        ));
    }

    #[test]
    fn p3_exhaustive_edges_recover_spectrum() {
        let (rep, _) = exact_rep(P3);
        // repeated and self transitions must not matter
        let data = edge_dataset(3, &[(0, 1), (1, 2), (2, 1), (1, 1), (1, 0), (0, 1)]);
        let est = estimate_eigenvalues(&rep, &data).unwrap();
        assert!((est.values[0] - 1.0).abs() < 1e-9);
        assert!((est.values[1] - 3.0).abs() < 1e-9);
        assert!(matches!(
            estimate_eigenvalues(&rep, &edge_dataset(3, &[(1, 1)])),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn k2_learned_matches_truth() {
        let (rep, basis) = exact_rep(K2);
        let data = edge_dataset(2, &[(0, 1), (1, 0)]);
        let est = estimate_eigenvalues(&rep, &data).unwrap();
        let learned = learned_ra_laprep(&rep, &est).unwrap();
        let truth = ra_laprep(&basis, 2).unwrap();
        assert!((learned.coords.clone() - truth.coords.clone()).amax() < 1e-12
            || (learned.coords + truth.coords).amax() < 1e-12);
    }

    #[test]
    fn quality_of_truth_against_itself() {
        let text = "#######\n#..#..#\n#.....#\n#######";
        let g = build_graph(&parse_maze(text).unwrap());
        let b = eig_sym(&g.laplacian()).unwrap();
        let truth = ra_laprep(&b, 5).unwrap();
        let geo = geodesic_matrix(&g);
        let q = rep_quality(&truth, &truth, &geo, &[0, 8], b.values(), None).unwrap();
        for c in q.cosines.iter().flatten() {
            assert!((c - 1.0).abs() < 1e-12);
        }
        for gq in &q.goals {
            assert!((gq.spearman_truth - 1.0).abs() < 1e-12);
        }
        let flipped = truth.scaled(-1.0);
        let q = rep_quality(&flipped, &truth, &geo, &[0], b.values(), None).unwrap();
        for c in q.cosines.iter().flatten() {
            assert!((c - 1.0).abs() < 1e-12);
        }
        let short = ra_laprep(&b, 4).unwrap();
        assert!(matches!(
            rep_quality(&short, &truth, &geo, &[0], b.values(), None),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
