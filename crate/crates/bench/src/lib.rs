//! Benchmarks for the numerical kernels; run with `cargo bench -p spectral-reach-bench`.

use spectral_reach::{build_graph, zoo, MazeSpec, StateGraph};

/// Bundled map and its graph.
pub fn fixture(name: &str) -> (MazeSpec, StateGraph) {
    let maze = zoo::load(name);
    let graph = build_graph(&maze);
    (maze, graph)
}
