//! Self-checks over the bundled graph zoo: graph construction, the
//! eigensolver, the commute-time identity (three exact routes plus Monte
//! Carlo), MDS equivalence, truncation behavior and bottleneck discovery.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::bottleneck::bottleneck_report;
use crate::commute::{commute, commute_mc, effective_resistance_grounded, CommuteMethod, DEFAULT_WALK_CAP};
use crate::envgrid::{Action, MazeSpec};
use crate::error::{Error, Result};
use crate::graph::{build_graph, pseudo_inverse, StateGraph};
use crate::mds::{classic_mds, double_center, equivalence_residual, DEFAULT_CUTOFF};
use crate::spectral::{eig_sym, embed_dist, ra_laprep, SpectralBasis, ZERO_EIGENVALUE_TOL};
use crate::zoo;

pub const MC_WALKS: u64 = 100_000;
pub const MC_SEED: u64 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Graph,
    Spectral,
    Commute,
    Mds,
    Truncation,
    Bottleneck,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 7] = ["graph", "spectral", "commute", "mds", "truncation", "bottleneck", "all"];

    fn members(self) -> Vec<Suite> {
        match self {
            Suite::All => vec![
                Suite::Graph,
                Suite::Spectral,
                Suite::Commute,
                Suite::Mds,
                Suite::Truncation,
                Suite::Bottleneck,
            ],
            s => vec![s],
        }
    }

    fn name(self) -> &'static str {
        match self {
            Suite::Graph => "graph",
            Suite::Spectral => "spectral",
            Suite::Commute => "commute",
            Suite::Mds => "mds",
            Suite::Truncation => "truncation",
            Suite::Bottleneck => "bottleneck",
            Suite::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let all = [
            Suite::Graph,
            Suite::Spectral,
            Suite::Commute,
            Suite::Mds,
            Suite::Truncation,
            Suite::Bottleneck,
            Suite::All,
        ];
        all.into_iter().find(|x| x.name() == s).ok_or_else(|| {
            Error::InvalidConfig(format!("unknown suite {s:?} (expected one of {})", Suite::NAMES.join(", ")))
        })
    }
}

/// One measured quantity against its tolerance; passes when
/// `value <= tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub suite: String,
    pub graph: String,
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<10} {:<10} {:<28} value={:.3e} tol={:.1e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.suite,
            self.graph,
            self.name,
            self.value,
            self.tolerance
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    fn push(&mut self, suite: Suite, graph: &str, name: &str, value: f64, tolerance: f64) {
        self.checks.push(Check {
            suite: suite.name().to_string(),
            graph: graph.to_string(),
            name: name.to_string(),
            value,
            tolerance,
            passed: value <= tolerance,
        });
    }
}

/// Zoo graph with its spectrum, built once per suite run.
pub struct Fixture {
    pub name: &'static str,
    pub maze: MazeSpec,
    pub graph: StateGraph,
    pub basis: SpectralBasis,
}

pub fn fixture(name: &'static str) -> Result<Fixture> {
    let maze = zoo::load(name);
    let graph = build_graph(&maze);
    let basis = eig_sym(&graph.laplacian())?;
    Ok(Fixture {
        name,
        maze,
        graph,
        basis,
    })
}

pub fn run(suite: Suite) -> Result<Report> {
    let fixtures: Vec<Fixture> = zoo::GRAPH_ZOO.iter().map(|n| fixture(n)).collect::<Result<_>>()?;
    let mut report = Report::default();
    for s in suite.members() {
        match s {
            Suite::Graph => fixtures.iter().for_each(|f| graph_checks(f, &mut report)),
            Suite::Spectral => fixtures.iter().for_each(|f| spectral_checks(f, &mut report)),
            Suite::Commute => {
                for f in &fixtures {
                    commute_checks(f, &mut report)?;
                }
            }
            Suite::Mds => {
                for f in &fixtures {
                    mds_checks(f, &mut report)?;
                }
            }
            Suite::Truncation => {
                for f in &fixtures {
                    truncation_checks(f, &mut report)?;
                }
            }
            Suite::Bottleneck => {
                for f in fixtures.iter().filter(|f| !zoo::doorways(f.name).is_empty()) {
                    bottleneck_checks(f, &mut report)?;
                }
            }
            Suite::All => unreachable!(),
        }
    }
    Ok(report)
}

/// Edges counted straight from the grid: floor cells adjacent right or down.
pub fn grid_edge_count(maze: &MazeSpec) -> usize {
    let mut count = 0;
    for y in 0..maze.height() {
        for x in 0..maze.width() {
            if !maze.is_floor((x, y)) {
                continue;
            }
            if x + 1 < maze.width() && maze.is_floor((x + 1, y)) {
                count += 1;
            }
            if y + 1 < maze.height() && maze.is_floor((x, y + 1)) {
                count += 1;
            }
        }
    }
    count
}

fn graph_checks(f: &Fixture, r: &mut Report) {
    let s = Suite::Graph;
    let expected = grid_edge_count(&f.maze);
    r.push(s, f.name, "edge_count_vs_grid", f.graph.edge_count().abs_diff(expected) as f64, 0.0);
    r.push(
        s,
        f.name,
        "volume_is_twice_edges",
        (f.graph.volume() - 2.0 * expected as f64).abs(),
        0.0,
    );
    let l = f.graph.laplacian();
    let row_sum = l.row_iter().map(|row| row.sum().abs()).fold(0.0, f64::max);
    r.push(s, f.name, "laplacian_row_sums", row_sum, 0.0);
    r.push(s, f.name, "laplacian_symmetry", (&l - l.transpose()).amax(), 0.0);
    let mut irreversible = 0;
    for st in 0..f.maze.n_states() {
        for a in Action::ALL {
            let t = f.maze.step_state(st, a);
            if t != st && !Action::ALL.iter().any(|&b| f.maze.step_state(t, b) == st) {
                irreversible += 1;
            }
        }
    }
    r.push(s, f.name, "step_reversibility", irreversible as f64, 0.0);
    let round_trip = crate::envgrid::parse_maze(&f.maze.render_text()).map(|m| m == f.maze).unwrap_or(false);
    r.push(s, f.name, "render_parse_round_trip", if round_trip { 0.0 } else { 1.0 }, 0.0);
}

fn spectral_checks(f: &Fixture, r: &mut Report) {
    let s = Suite::Spectral;
    let l = f.graph.laplacian();
    let scale = f.basis.values().last().copied().unwrap_or(1.0).max(1.0);
    r.push(s, f.name, "eigen_residual", f.basis.max_residual(&l) / scale, 1e-9);
    r.push(s, f.name, "orthonormality", f.basis.orthonormality_error(), 1e-10);
    r.push(s, f.name, "lambda_1_is_zero", f.basis.value(0).abs(), ZERO_EIGENVALUE_TOL);
    let unsorted = f.basis.values().windows(2).filter(|w| w[0] > w[1]).count();
    r.push(s, f.name, "ascending_order", unsorted as f64, 0.0);
    let trace_gap = (l.trace() - f.basis.values().iter().sum::<f64>()).abs() / l.trace().max(1.0);
    r.push(s, f.name, "trace_matches_degree_sum", trace_gap, 1e-12);
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn commute_checks(f: &Fixture, r: &mut Report) -> Result<()> {
    let s = Suite::Commute;
    let n = f.graph.n_states();
    let volume = f.graph.volume();
    let pinv = pseudo_inverse(&f.graph, &f.basis)?;
    let solve = commute(&f.graph, CommuteMethod::Solve, None)?;
    let via_pinv = commute(&f.graph, CommuteMethod::PseudoInverse, Some(&pinv))?;
    let phi = ra_laprep(&f.basis, n)?;
    let (mut identity, mut solve_pinv, mut solve_grounded, mut pinv_grounded) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..n {
        for j in (i + 1)..n {
            let exact = solve.get(i, j);
            identity = identity.max(rel(volume * embed_dist(&phi, i, j).powi(2), exact));
            let grounded = volume * effective_resistance_grounded(&f.graph, i, j)?;
            solve_pinv = solve_pinv.max(rel(exact, via_pinv.get(i, j)));
            solve_grounded = solve_grounded.max(rel(exact, grounded));
            pinv_grounded = pinv_grounded.max(rel(via_pinv.get(i, j), grounded));
        }
    }
    r.push(s, f.name, "volume_times_dist_sq", identity, 1e-8);
    r.push(s, f.name, "solve_vs_pinv", solve_pinv, 1e-7);
    r.push(s, f.name, "solve_vs_grounded", solve_grounded, 1e-7);
    r.push(s, f.name, "pinv_vs_grounded", pinv_grounded, 1e-7);
    let (a, b) = (0, n - 1);
    let mc = commute_mc(&f.graph, a, b, MC_WALKS, DEFAULT_WALK_CAP, MC_SEED)?;
    let z = if mc.stderr > 0.0 {
        (mc.estimate - solve.get(a, b)).abs() / mc.stderr
    } else {
        // a deterministic round trip (K2) has zero spread
        (mc.estimate - solve.get(a, b)).abs()
    };
    r.push(s, f.name, "monte_carlo_z", z, 3.0);
    r.push(s, f.name, "monte_carlo_capped", mc.capped as f64, 0.0);
    Ok(())
}

fn mds_checks(f: &Fixture, r: &mut Report) -> Result<()> {
    let s = Suite::Mds;
    let n = f.graph.n_states();
    let volume = f.graph.volume();
    let d2 = commute(&f.graph, CommuteMethod::Solve, None)?.n;
    let mds = classic_mds(&d2, DEFAULT_CUTOFF)?;
    let phi = ra_laprep(&f.basis, n)?;
    r.push(s, f.name, "equivalence_residual", equivalence_residual(&mds, &phi, volume)?, 1e-6);
    let b = double_center(&d2)?;
    let pinv = pseudo_inverse(&f.graph, &f.basis)?;
    r.push(s, f.name, "b_equals_volume_pinv", (&b - pinv.matrix * volume).amax(), 1e-9);
    r.push(s, f.name, "embedding_rank", mds.x.ncols().abs_diff(n - 1) as f64, 0.0);
    r.push(
        s,
        f.name,
        "indefinite_eigenvalue",
        mds.indefinite.map_or(0.0, f64::abs),
        0.0,
    );
    Ok(())
}

/// Exact tails `n - n_d` for every pair and every `d` in `2..=|S|`, checked
/// for sign, monotonicity, the endpoint and the `4 V_G sum 1/lambda` bound.
fn truncation_checks(f: &Fixture, r: &mut Report) -> Result<()> {
    let s = Suite::Truncation;
    let n = f.graph.n_states();
    if n < 3 {
        return Ok(());
    }
    let volume = f.graph.volume();
    let exact = commute(&f.graph, CommuteMethod::Solve, None)?;
    let bounds: Vec<f64> = (2..=n)
        .map(|d| crate::spectral::tail_bound(&f.basis, volume, d))
        .collect::<Result<_>>()?;
    let v = f.basis.vectors();
    let (mut negative, mut increase, mut endpoint, mut over_bound, mut mismatch) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..n {
        for j in (i + 1)..n {
            // suffix[k] = V_G * sum_{m >= k} (v_m[i] - v_m[j])^2 / lambda_m
            let mut suffix = vec![0.0; n + 1];
            for k in (1..n).rev() {
                suffix[k] = suffix[k + 1] + volume * (v[(i, k)] - v[(j, k)]).powi(2) / f.basis.value(k);
            }
            let total = exact.get(i, j);
            mismatch = mismatch.max(rel(suffix[1], total));
            let mut prev = f64::INFINITY;
            for d in 2..=n {
                // keeping eigenpairs 2..=d leaves indices d.. (0-based) in the tail
                let tail = total - (suffix[1] - suffix[d]);
                negative = negative.max(-tail / total);
                increase = increase.max((tail - prev) / total);
                over_bound = over_bound.max((tail - bounds[d - 2]) / total);
                prev = tail;
            }
            endpoint = endpoint.max(prev.abs() / total);
        }
    }
    let tol = 1e-9;
    r.push(s, f.name, "spectral_sum_matches_exact", mismatch, 1e-8);
    r.push(s, f.name, "tail_nonnegative", negative, tol);
    r.push(s, f.name, "tail_nonincreasing", increase, tol);
    r.push(s, f.name, "tail_zero_at_full_dim", endpoint, tol);
    r.push(s, f.name, "tail_within_bound", over_bound, tol);
    Ok(())
}

fn bottleneck_checks(f: &Fixture, r: &mut Report) -> Result<()> {
    let s = Suite::Bottleneck;
    let phi = ra_laprep(&f.basis, f.graph.n_states())?;
    let report = bottleneck_report(&phi, crate::bottleneck::DEFAULT_FRACTION, false)?;
    let missed = zoo::doorways(f.name)
        .iter()
        .filter(|&&c| {
            f.maze
                .index()
                .state(c)
                .is_none_or(|st| report.selected.binary_search(&st).is_err())
        })
        .count();
    r.push(s, f.name, "doorways_missed_top_20pct", missed as f64, 0.0);
    Ok(())
}
