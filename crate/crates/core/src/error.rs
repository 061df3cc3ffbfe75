use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("row {row} has {found} cells, expected {expected}")]
    RaggedRows {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("unknown map character {ch:?} at line {line}, column {column}")]
    UnknownCharacter { ch: char, line: usize, column: usize },

    #[error("border cell ({x}, {y}) is not a wall")]
    OpenBorder { x: usize, y: usize },

    #[error("map has no floor cells")]
    NoFloor,

    #[error("map is empty")]
    EmptyMap,

    #[error("({x}, {y}) is not a floor cell")]
    InvalidState { x: i64, y: i64 },

    #[error("state index {0} out of range")]
    StateOutOfRange(usize),

    #[error("goal ({x}, {y}) is a wall")]
    GoalIsWall { x: usize, y: usize },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix has a negative entry at ({0}, {1})")]
    NegativeEntry(usize, usize),

    #[error("eigensolver hit its iteration cap (residual {residual:e})")]
    ConvergenceFailure { residual: f64 },

    #[error("dimension {d} outside [2, {max}]")]
    DimensionOutOfRange { d: usize, max: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("graph is disconnected ({components} components)")]
    GraphDisconnected { components: usize },

    #[error("singular first-passage system for target {target}")]
    SingularSystem { target: usize },

    #[error("temperature > 0 but the map has no bias cells")]
    NoBiasCells,

    #[error("objective diverged at iteration {iteration}: {value:e} > 10x initial {initial:e}")]
    DivergedObjective {
        iteration: usize,
        value: f64,
        initial: f64,
    },

    #[error("dataset has no transitions")]
    EmptyDataset,

    #[error("eigenvalue estimate {value:e} at eigen-index {index} is too small to invert")]
    DegenerateEigenvalue { index: usize, value: f64 },

    #[error("reward kind {0} needs an embedding")]
    MissingEmbedding(&'static str),

    #[error("goal state {0} is unreachable from some floor cell")]
    UnreachableGoal(usize),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("io error on {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed input: {0}")]
    Parse(String),
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit code for the command-line front end: 1 usage/IO,
    /// 2 domain precondition, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::GraphDisconnected { .. }
            | Error::UnreachableGoal(_)
            | Error::GoalIsWall { .. }
            | Error::NoBiasCells
            | Error::InvalidState { .. }
            | Error::StateOutOfRange(_)
            | Error::MissingEmbedding(_)
            | Error::DimensionOutOfRange { .. }
            | Error::DimensionMismatch(_) => 2,
            Error::ConvergenceFailure { .. }
            | Error::SingularSystem { .. }
            | Error::DivergedObjective { .. }
            | Error::DegenerateEigenvalue { .. }
            | Error::NotSymmetric(_)
            | Error::NegativeEntry(..) => 3,
            _ => 1,
        }
    }
}
