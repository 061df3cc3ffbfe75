//! Average first-passage and commute times of the simple random walk
//! `P = D^-1 A`, computed three ways: per-target linear solves, the
//! Laplacian pseudo-inverse, and Monte Carlo simulation.

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{PseudoInverse, StateGraph};
use crate::rng;

/// Relative pivot threshold below which a first-passage system is singular.
const PIVOT_TOL: f64 = 1e-10;

/// `m[(i, j)]` is the expected number of steps from `i` to first reach `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstPassageMatrix {
    pub m: DMatrix<f64>,
}

impl FirstPassageMatrix {
    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.m[(from, to)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommuteMethod {
    Solve,
    PseudoInverse,
}

impl std::str::FromStr for CommuteMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "solve" => Ok(CommuteMethod::Solve),
            "pseudo-inverse" | "pinv" => Ok(CommuteMethod::PseudoInverse),
            other => Err(Error::InvalidConfig(format!("unknown commute method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommuteMatrix {
    pub n: DMatrix<f64>,
    pub method: CommuteMethod,
}

impl CommuteMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.n[(i, j)]
    }

    /// Largest relative disagreement with another commute matrix.
    pub fn max_relative_diff(&self, other: &CommuteMatrix) -> f64 {
        self.n
            .iter()
            .zip(other.n.iter())
            .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(1e-300))
            .fold(0.0, f64::max)
    }
}

/// Solves `(I - P_{-j}) m = 1` over the states other than `j`, for every
/// target `j`.
pub fn first_passage(g: &StateGraph) -> Result<FirstPassageMatrix> {
    g.require_connected()?;
    let n = g.n_states();
    let columns: Result<Vec<DVector<f64>>> = (0..n)
        .into_par_iter()
        .map(|target| hitting_times_to(g, target))
        .collect();
    let mut m = DMatrix::zeros(n, n);
    for (j, col) in columns?.into_iter().enumerate() {
        m.set_column(j, &col);
    }
    Ok(FirstPassageMatrix { m })
}

fn hitting_times_to(g: &StateGraph, target: usize) -> Result<DVector<f64>> {
    let n = g.n_states();
    let mut out = DVector::zeros(n);
    if n == 1 {
        return Ok(out);
    }
    // reduced index: states other than target, in order
    let reduced = |s: usize| if s < target { s } else { s - 1 };
    let size = n - 1;
    let mut a = DMatrix::<f64>::identity(size, size);
    for s in (0..n).filter(|&s| s != target) {
        let deg = g.degree(s) as f64;
        for &t in g.neighbors(s) {
            if t != target {
                a[(reduced(s), reduced(t))] -= 1.0 / deg;
            }
        }
    }
    let lu = a.lu();
    let u = lu.u();
    let max_pivot = u.diagonal().amax();
    if u.diagonal().iter().any(|p| p.abs() <= PIVOT_TOL * max_pivot.max(1.0)) {
        return Err(Error::SingularSystem { target });
    }
    let x = lu
        .solve(&DVector::from_element(size, 1.0))
        .ok_or(Error::SingularSystem { target })?;
    for s in (0..n).filter(|&s| s != target) {
        out[s] = x[reduced(s)];
    }
    Ok(out)
}

/// Average commute times by the chosen exact route. `pinv` is required for
/// the pseudo-inverse route and ignored otherwise.
pub fn commute(g: &StateGraph, method: CommuteMethod, pinv: Option<&PseudoInverse>) -> Result<CommuteMatrix> {
    g.require_connected()?;
    let n = g.n_states();
    let matrix = match method {
        CommuteMethod::Solve => {
            let fp = first_passage(g)?;
            &fp.m + fp.m.transpose()
        }
        CommuteMethod::PseudoInverse => {
            let lp = pinv.ok_or_else(|| {
                Error::InvalidConfig("pseudo-inverse route needs L+".into())
            })?;
            let vol = g.volume();
            DMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    0.0
                } else {
                    vol * (lp.get(i, i) + lp.get(j, j) - 2.0 * lp.get(i, j))
                }
            })
        }
    };
    Ok(CommuteMatrix {
        n: matrix,
        method,
    })
}

/// `(e_s - e_t)^T L+ (e_s - e_t)`.
pub fn effective_resistance(g: &StateGraph, pinv: &PseudoInverse, s: usize, t: usize) -> Result<f64> {
    g.require_connected()?;
    check_state(g, s)?;
    check_state(g, t)?;
    Ok(pinv.get(s, s) + pinv.get(t, t) - 2.0 * pinv.get(s, t))
}

/// Effective resistance from the grounded Laplacian: pin `t` to potential
/// zero, inject a unit current at `s`, and read the potential at `s`.
/// Independent of the spectrum.
pub fn effective_resistance_grounded(g: &StateGraph, s: usize, t: usize) -> Result<f64> {
    g.require_connected()?;
    check_state(g, s)?;
    check_state(g, t)?;
    if s == t {
        return Ok(0.0);
    }
    let keep: Vec<usize> = (0..g.n_states()).filter(|&v| v != t).collect();
    let l = g.laplacian();
    let reduced = l.select_rows(&keep).select_columns(&keep);
    let mut rhs = DVector::zeros(keep.len());
    let pos = keep.iter().position(|&v| v == s).unwrap();
    rhs[pos] = 1.0;
    let x = reduced
        .cholesky()
        .ok_or(Error::SingularSystem { target: t })?
        .solve(&rhs);
    Ok(x[pos])
}

fn check_state(g: &StateGraph, s: usize) -> Result<()> {
    if s >= g.n_states() {
        Err(Error::StateOutOfRange(s))
    } else {
        Ok(())
    }
}

pub const DEFAULT_WALK_CAP: u64 = 1_000_000;

/// Fraction of capped walks above which the estimate is flagged as biased.
pub const CAPPED_BIAS_FRACTION: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub estimate: f64,
    pub stderr: f64,
    pub walks: u64,
    pub capped: u64,
    pub seed: u64,
    pub cap: u64,
    pub rng: String,
    pub biased: bool,
}

/// Round trips `s -> t -> s` of the simple random walk. Walk `k` uses
/// stream `k` of the seed, so the estimate is identical for any thread
/// count. Walks that exceed `cap` steps are excluded and counted.
pub fn commute_mc(g: &StateGraph, s: usize, t: usize, walks: u64, cap: u64, seed: u64) -> Result<MonteCarloReport> {
    g.require_connected()?;
    check_state(g, s)?;
    check_state(g, t)?;
    if walks == 0 || cap == 0 {
        return Err(Error::InvalidConfig("walks and cap must be >= 1".into()));
    }
    let lengths: Vec<Option<u64>> = (0..walks)
        .into_par_iter()
        .map(|k| round_trip(g, s, t, cap, &mut rng::stream(seed, k)))
        .collect();
    let done: Vec<f64> = lengths.iter().flatten().map(|&x| x as f64).collect();
    let capped = walks - done.len() as u64;
    let (estimate, stderr) = crate::stats::mean_stderr(&done);
    Ok(MonteCarloReport {
        estimate,
        stderr,
        walks,
        capped,
        seed,
        cap,
        rng: rng::ALGORITHM.to_string(),
        biased: capped as f64 > CAPPED_BIAS_FRACTION * walks as f64,
    })
}

fn round_trip(g: &StateGraph, s: usize, t: usize, cap: u64, rng: &mut rng::Rng) -> Option<u64> {
    let mut steps = 0u64;
    let mut at = s;
    for target in [t, s] {
        while at != target {
            if steps == cap {
                return None;
            }
            let nbrs = g.neighbors(at);
            at = nbrs[rng.random_range(0..nbrs.len())];
            steps += 1;
        }
    }
    Some(steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envgrid::parse_maze;
    use crate::graph::{build_graph, pseudo_inverse};
    use crate::spectral::eig_sym;

    fn graph(text: &str) -> StateGraph {
        build_graph(&parse_maze(text).unwrap())
    }

    fn pinv(g: &StateGraph) -> PseudoInverse {
        pseudo_inverse(g, &eig_sym(&g.laplacian()).unwrap()).unwrap()
    }

    #[test]
    fn first_passage_examples() {
        let k2 = first_passage(&graph("####\n#..#\n####")).unwrap();
        assert!((k2.get(0, 1) - 1.0).abs() < 1e-12);
        // P3 from the middle to an end: m = 1 + (1/2) m  with the other end
        // contributing 1 + m, giving m(1|2) = 3
        let p3 = first_passage(&graph("#####\n#...#\n#####")).unwrap();
        assert!((p3.get(1, 0) - 3.0).abs() < 1e-10);
        assert!((p3.get(0, 1) - 1.0).abs() < 1e-10);
        let c4 = first_passage(&graph("####\n#..#\n#..#\n####")).unwrap();
        assert!((c4.get(0, 3) - 4.0).abs() < 1e-10);
        assert_eq!(c4.get(2, 2), 0.0);
    }

    #[test]
    fn commute_examples_both_routes() {
        for (text, pairs) in [
            ("####\n#..#\n####", vec![(0, 1, 2.0)]),
            ("#####\n#...#\n#####", vec![(0, 1, 4.0), (1, 2, 4.0), (0, 2, 8.0)]),
            ("####\n#..#\n#..#\n####", vec![(0, 3, 8.0), (1, 2, 8.0), (0, 1, 6.0)]),
        ] {
            let g = graph(text);
            let lp = pinv(&g);
            let a = commute(&g, CommuteMethod::Solve, None).unwrap();
            let b = commute(&g, CommuteMethod::PseudoInverse, Some(&lp)).unwrap();
            for (i, j, want) in pairs {
                assert!((a.get(i, j) - want).abs() < 1e-9, "{text} {i} {j}");
                assert!((b.get(i, j) - want).abs() < 1e-9, "{text} {i} {j}");
            }
            assert!(a.max_relative_diff(&b) < 1e-7);
        }
    }

    #[test]
    fn resistance_examples() {
        let k2 = graph("####\n#..#\n####");
        assert!((effective_resistance(&k2, &pinv(&k2), 0, 1).unwrap() - 1.0).abs() < 1e-12);
        let p3 = graph("#####\n#...#\n#####");
        assert!((effective_resistance(&p3, &pinv(&p3), 0, 2).unwrap() - 2.0).abs() < 1e-12);
        let c4 = graph("####\n#..#\n#..#\n####");
        assert!((effective_resistance(&c4, &pinv(&c4), 0, 1).unwrap() - 0.75).abs() < 1e-12);
        assert!((effective_resistance_grounded(&c4, 0, 1).unwrap() - 0.75).abs() < 1e-12);
        assert!((effective_resistance_grounded(&p3, 2, 0).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn disconnected_is_rejected() {
        let g = graph("#####\n#.#.#\n#####");
        assert!(matches!(first_passage(&g), Err(Error::GraphDisconnected { .. })));
        assert!(matches!(
            commute_mc(&g, 0, 1, 10, 10, 1),
            Err(Error::GraphDisconnected { .. })
        ));
    }

    #[test]
    fn monte_carlo_k2_is_exact() {
        let g = graph("####\n#..#\n####");
        let r = commute_mc(&g, 0, 1, 1000, DEFAULT_WALK_CAP, 7).unwrap();
        assert_eq!(r.estimate, 2.0);
        assert_eq!(r.stderr, 0.0);
        assert_eq!(r.capped, 0);
    }

    #[test]
    fn monte_carlo_p3_and_determinism() {
        let g = graph("#####\n#...#\n#####");
        let a = commute_mc(&g, 0, 2, 100_000, DEFAULT_WALK_CAP, 11).unwrap();
        assert!((a.estimate - 8.0).abs() <= 3.0 * a.stderr, "{a:?}");
        let b = commute_mc(&g, 0, 2, 100_000, DEFAULT_WALK_CAP, 11).unwrap();
        assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
    }

    #[test]
    fn capped_walks_are_reported() {
        let g = graph("#####\n#...#\n#####");
        let r = commute_mc(&g, 0, 2, 1000, 4, 3).unwrap();
        assert!(r.capped > 0);
        assert!(r.biased);
    }
}
