use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use spectral_reach::envgrid::{discretize_continuous, Coord};
use spectral_reach::export::read_embedding_csv;
use spectral_reach::{parse_maze, zoo, ContinuousMazeSpec, Embedding, EmbeddingKind, Error, MazeSpec};

/// A map loaded from disk or from the bundled set. `source` holds the path
/// and bytes when it came from a file.
pub struct LoadedMap {
    pub maze: MazeSpec,
    pub source: Option<(PathBuf, Vec<u8>)>,
}

/// Resolves `--map`: an existing file (`.json` for continuous maps, text
/// otherwise) or the name of a bundled map.
pub fn load_map(arg: &str, resolution: f64) -> Result<LoadedMap> {
    let path = Path::new(arg);
    if path.exists() {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let text = String::from_utf8(bytes.clone())
            .map_err(|_| Error::Parse(format!("{} is not UTF-8", path.display())))?;
        let maze = if path.extension().is_some_and(|e| e == "json") {
            discretize_continuous(&ContinuousMazeSpec::from_json(&text)?, resolution)?
        } else {
            parse_maze(&text).with_context(|| format!("parsing {}", path.display()))?
        };
        return Ok(LoadedMap {
            maze,
            source: Some((path.to_path_buf(), bytes)),
        });
    }
    if let Some(text) = zoo::map_text(arg) {
        return Ok(LoadedMap {
            maze: parse_maze(text)?,
            source: None,
        });
    }
    if let Some(cm) = zoo::load_continuous(arg) {
        return Ok(LoadedMap {
            maze: discretize_continuous(&cm, resolution)?,
            source: None,
        });
    }
    Err(Error::io(path, std::io::Error::from(std::io::ErrorKind::NotFound)).into())
}

/// Parses `x,y`.
pub fn parse_coord(s: &str) -> Result<Coord, String> {
    let (x, y) = s.split_once(',').ok_or_else(|| format!("expected x,y, got {s:?}"))?;
    let x = x.trim().parse().map_err(|_| format!("bad x in {s:?}"))?;
    let y = y.trim().parse().map_err(|_| format!("bad y in {s:?}"))?;
    Ok((x, y))
}

/// State index of a goal cell.
pub fn goal_state(maze: &MazeSpec, (x, y): Coord) -> Result<usize> {
    if x >= maze.width() || y >= maze.height() {
        return Err(Error::InvalidState {
            x: x as i64,
            y: y as i64,
        }
        .into());
    }
    match maze.index().state((x, y)) {
        Some(s) => Ok(s),
        None if !maze.cell(x, y).is_floor() => Err(Error::GoalIsWall { x, y }.into()),
        None => Err(Error::InvalidState {
            x: x as i64,
            y: y as i64,
        }
        .into()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Seeds(pub Vec<u64>);

/// `--seeds`: a count `k` (seeds `0..k`) or a comma-separated list.
pub fn parse_seeds(s: &str) -> Result<Seeds, String> {
    if s.contains(',') {
        return s
            .split(',')
            .map(|t| t.trim().parse().map_err(|_| format!("bad seed {t:?}")))
            .collect::<Result<_, _>>()
            .map(Seeds);
    }
    match s.trim().parse::<u64>() {
        Ok(0) => Err("seed count must be >= 1".into()),
        Ok(k) => Ok(Seeds((0..k).collect())),
        Err(_) => Err(format!("bad seed count {s:?}")),
    }
}

/// A dimension: a number or `full` for every eigenvector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Dim {
    Fixed(usize),
    Full,
}

impl Dim {
    pub fn resolve(self, n_states: usize) -> usize {
        match self {
            Dim::Fixed(d) => d,
            Dim::Full => n_states,
        }
    }
}

pub fn parse_dim(s: &str) -> Result<Dim, String> {
    if s == "full" {
        return Ok(Dim::Full);
    }
    s.parse().map(Dim::Fixed).map_err(|_| format!("expected a dimension or \"full\", got {s:?}"))
}

/// Reads an embedding CSV and checks it belongs to `maze`.
pub fn load_embedding(path: &Path, maze: &MazeSpec) -> Result<(Embedding, Vec<u8>)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = std::str::from_utf8(&bytes).map_err(|_| Error::Parse(format!("{} is not UTF-8", path.display())))?;
    let (embedding, coords) = read_embedding_csv(text, EmbeddingKind::Learned)?;
    if coords.as_slice() != maze.index().coords() {
        bail!(Error::DimensionMismatch(format!(
            "{} does not match the map's {} states",
            path.display(),
            maze.n_states()
        )));
    }
    Ok((embedding, bytes))
}

/// `out` with its extension replaced by `suffix` (`run.csv` -> `run.log.csv`).
pub fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().unwrap_or_default().to_string_lossy();
    out.with_file_name(format!("{stem}.{suffix}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_accept_count_or_list() {
        assert_eq!(parse_seeds("3").unwrap().0, vec![0, 1, 2]);
        assert_eq!(parse_seeds("4,9").unwrap().0, vec![4, 9]);
        assert!(parse_seeds("0").is_err());
        assert!(parse_seeds("x").is_err());
    }

    #[test]
    fn coords_and_dims() {
        assert_eq!(parse_coord("3, 2").unwrap(), (3, 2));
        assert!(parse_coord("3").is_err());
        assert_eq!(parse_dim("full").unwrap(), Dim::Full);
        assert_eq!(parse_dim("7").unwrap().resolve(100), 7);
    }

    #[test]
    fn sibling_replaces_extension() {
        assert_eq!(sibling(Path::new("a/run.csv"), "log.csv"), PathBuf::from("a/run.log.csv"));
    }

    #[test]
    fn goal_on_wall_is_rejected() {
        let maze = zoo::load("k2");
        let err = goal_state(&maze, (0, 0)).unwrap_err();
        assert!(matches!(err.downcast_ref::<Error>(), Some(Error::GoalIsWall { .. })));
        assert_eq!(goal_state(&maze, (2, 1)).unwrap(), 1);
    }
}
