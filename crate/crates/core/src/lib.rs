//! Reachability-aware spectral state representations for gridworld mazes.
//!
//! The crate builds state-transition graphs from ASCII mazes, computes the
//! Laplacian eigenmap representation (LapRep) and its reachability-aware
//! rescaling (RA-LapRep), checks the commute-time and MDS identities behind
//! RA-LapRep exactly, learns approximate representations from sampled
//! trajectories, and evaluates them by reward shaping and bottleneck
//! discovery.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`envgrid`] | map parsing, four-action dynamics, continuous-maze discretization |
//! | [`graph`] | state graph, Laplacian, components, pseudo-inverse |
//! | [`spectral`] | eigensolver, LapRep / RA-LapRep, truncation tail |
//! | [`commute`] | first-passage and commute times (solve, pseudo-inverse, Monte Carlo) |
//! | [`mds`] | double centering, classic MDS, equivalence residual |
//! | [`replearn`] | dataset collection, graph-drawing training, eigenvalue estimation |
//! | [`shaping`] | tabular Q-learning with shaped rewards |
//! | [`bottleneck`] | inverse distance-sum centrality |
//! | [`export`] | CSV, JSON and PPM writers, atomic file output |
//! | [`verify`] | invariant suites over the bundled graphs |
//! | [`zoo`] | bundled maps and their doorway cells |
//! | [`stats`] | mean and standard error, Spearman, paired t-test |
//! | [`rng`] | seeded ChaCha8 streams |

// NaN-rejecting `!(x > 0.0)` checks and index loops in the numeric kernels
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bottleneck;
pub mod commute;
pub mod envgrid;
pub mod error;
pub mod export;
pub mod graph;
pub mod mds;
pub mod replearn;
pub mod rng;
pub mod shaping;
pub mod spectral;
pub mod stats;
pub mod verify;
pub mod zoo;

pub use envgrid::{parse_maze, Action, Cell, ContinuousMazeSpec, MazeSpec, StateIndex};
pub use error::{Error, Result};
pub use graph::{build_graph, PseudoInverse, StateGraph};
pub use spectral::{eig_sym, Embedding, EmbeddingKind, SpectralBasis};
