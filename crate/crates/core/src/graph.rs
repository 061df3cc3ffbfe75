//! Undirected state-transition graphs and their Laplacian machinery.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::envgrid::{Action, Coord, MazeSpec};
use crate::error::{Error, Result};
use crate::spectral::SpectralBasis;

/// Simple undirected graph over dense state indices. Self-transitions are
/// never stored, so `L = D - A` is unaffected by wall bumps.
#[derive(Debug, Clone, PartialEq)]
pub struct StateGraph {
    n: usize,
    neighbors: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
    coords: Vec<Coord>,
}

impl StateGraph {
    /// Graph from an arbitrary transition log. Self-transitions and repeats
    /// are dropped; `(a, b)` and `(b, a)` are the same edge.
    pub fn from_transitions<I>(n: usize, transitions: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut neighbors = vec![Vec::new(); n];
        for (a, b) in transitions {
            if a >= n {
                return Err(Error::StateOutOfRange(a));
            }
            if b >= n {
                return Err(Error::StateOutOfRange(b));
            }
            if a == b {
                continue;
            }
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
        }
        let edges = neighbors
            .iter()
            .enumerate()
            .flat_map(|(a, list)| list.iter().filter(move |&&b| b > a).map(move |&b| (a, b)))
            .collect();
        Ok(StateGraph {
            n,
            neighbors,
            edges,
            coords: Vec::new(),
        })
    }

    pub fn with_coords(mut self, coords: Vec<Coord>) -> Result<Self> {
        if coords.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "{} coordinates for {} states",
                coords.len(),
                self.n
            )));
        }
        self.coords = coords;
        Ok(self)
    }

    pub fn n_states(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, s: usize) -> &[usize] {
        &self.neighbors[s]
    }

    pub fn degree(&self, s: usize) -> usize {
        self.neighbors[s].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.neighbors.iter().map(Vec::len).collect()
    }

    /// Sum of degrees, `2 * |E|`.
    pub fn volume(&self) -> f64 {
        (2 * self.edges.len()) as f64
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.neighbors[a].binary_search(&b).is_ok()
    }

    pub fn coords(&self) -> &[Coord] {
        &self.coords
    }

    pub fn adjacency(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for &(i, j) in &self.edges {
            a[(i, j)] = 1.0;
            a[(j, i)] = 1.0;
        }
        a
    }

    pub fn laplacian(&self) -> DMatrix<f64> {
        let mut l = DMatrix::zeros(self.n, self.n);
        for &(i, j) in &self.edges {
            l[(i, j)] -= 1.0;
            l[(j, i)] -= 1.0;
            l[(i, i)] += 1.0;
            l[(j, j)] += 1.0;
        }
        l
    }

    /// `x^T L x` evaluated edge by edge.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.edges
            .iter()
            .map(|&(i, j)| (x[i] - x[j]).powi(2))
            .sum()
    }

    /// Connected components ordered by smallest member; members ascending.
    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let mut label = vec![usize::MAX; self.n];
        let mut components = Vec::new();
        for root in 0..self.n {
            if label[root] != usize::MAX {
                continue;
            }
            let id = components.len();
            let mut members = vec![root];
            label[root] = id;
            let mut stack = vec![root];
            while let Some(u) = stack.pop() {
                for &v in &self.neighbors[u] {
                    if label[v] == usize::MAX {
                        label[v] = id;
                        members.push(v);
                        stack.push(v);
                    }
                }
            }
            members.sort_unstable();
            components.push(members);
        }
        components
    }

    pub fn is_connected(&self) -> bool {
        self.n > 0 && self.connected_components().len() == 1
    }

    pub fn require_connected(&self) -> Result<()> {
        let components = self.connected_components().len();
        if components == 1 {
            Ok(())
        } else {
            Err(Error::GraphDisconnected { components })
        }
    }

    /// Breadth-first hop counts from `source`; `None` where unreachable.
    pub fn geodesic_from(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n];
        dist[source] = Some(0);
        let mut queue = std::collections::VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap();
            for &v in &self.neighbors[u] {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    pub fn to_export(&self) -> GraphExport {
        GraphExport {
            n: self.n,
            edges: self.edges.iter().map(|&(a, b)| [a, b]).collect(),
            coords: self.coords.iter().map(|&(x, y)| [x, y]).collect(),
        }
    }
}

/// JSON graph export `{n, edges, coords}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphExport {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
    pub coords: Vec<[usize; 2]>,
}

/// Nodes are floor cells; `{s, s'}` is an edge when some action moves
/// `s` to a different cell `s'`.
pub fn build_graph(maze: &MazeSpec) -> StateGraph {
    let n = maze.n_states();
    let transitions = (0..n).flat_map(|s| Action::ALL.iter().map(move |&a| (s, a)));
    let pairs: Vec<(usize, usize)> = transitions.map(|(s, a)| (s, maze.step_state(s, a))).collect();
    StateGraph::from_transitions(n, pairs)
        .expect("maze transitions stay in range")
        .with_coords(maze.index().coords().to_vec())
        .expect("one coordinate per state")
}

/// Moore-Penrose pseudo-inverse of a connected graph's Laplacian, assembled
/// from its spectrum: `L+ = sum_{i>=2} v_i v_i^T / lambda_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoInverse {
    pub matrix: DMatrix<f64>,
    /// Number of eigenpairs folded in (always `n - 1`).
    pub rank: usize,
}

impl PseudoInverse {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    /// Largest absolute row sum; zero for a doubly-centered matrix.
    pub fn centering_residual(&self) -> f64 {
        self.matrix
            .row_iter()
            .map(|r| r.sum().abs())
            .fold(0.0, f64::max)
    }
}

pub fn pseudo_inverse(g: &StateGraph, basis: &SpectralBasis) -> Result<PseudoInverse> {
    let n = g.n_states();
    if basis.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "basis of size {} for graph of size {n}",
            basis.len()
        )));
    }
    basis.require_connected()?;
    let mut m = DMatrix::zeros(n, n);
    for k in 1..n {
        let v = basis.vector(k);
        m.ger(1.0 / basis.value(k), &v, &v, 1.0);
    }
    Ok(PseudoInverse {
        matrix: m,
        rank: n - 1,
    })
}
