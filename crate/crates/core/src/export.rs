//! Text and image exports: embedding, commute, centrality, curve and
//! training-log CSVs, JSON summaries, and binary PPM heatmaps.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! value read back from a CSV is bit-identical to the one written.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bottleneck::CentralityReport;
use crate::envgrid::{Coord, MazeSpec};
use crate::error::{Error, Result};
use crate::replearn::TrainLogEntry;
use crate::shaping::ShapingRun;
use crate::spectral::{Embedding, EmbeddingKind};

/// Writes `bytes` to a temporary sibling of `path` and renames it into
/// place, so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidConfig(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(|e| Error::io(path, e))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

/// `state_index,x,y,e2,...,ed`.
pub fn embedding_csv(e: &Embedding, coords: &[Coord]) -> Result<String> {
    if coords.len() != e.n_states() {
        return Err(Error::DimensionMismatch("one coordinate per state required".into()));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["state_index".to_string(), "x".into(), "y".into()];
    header.extend((2..=e.d).map(|i| format!("e{i}")));
    w.write_record(&header).map_err(csv_err)?;
    for (s, &(x, y)) in coords.iter().enumerate() {
        let mut rec = vec![s.to_string(), x.to_string(), y.to_string()];
        rec.extend(e.coords.row(s).iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(csv_err)?;
    }
    finish(w)
}

/// Inverse of [`embedding_csv`]. Rows must list states `0..n` in order.
pub fn read_embedding_csv(text: &str, kind: EmbeddingKind) -> Result<(Embedding, Vec<Coord>)> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers().map_err(csv_err)?.clone();
    if headers.len() < 4 || &headers[0] != "state_index" || &headers[1] != "x" || &headers[2] != "y" {
        return Err(Error::Parse("expected header state_index,x,y,e2,...".into()));
    }
    let cols = headers.len() - 3;
    let mut values = Vec::new();
    let mut coords = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let parse_usize = |i: usize| {
            rec[i]
                .parse::<usize>()
                .map_err(|e| Error::Parse(format!("row {}: {e}", row + 2)))
        };
        if parse_usize(0)? != row {
            return Err(Error::Parse(format!("row {} is out of order", row + 2)));
        }
        coords.push((parse_usize(1)?, parse_usize(2)?));
        for i in 3..rec.len() {
            values.push(
                rec[i]
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {}: {e}", row + 2)))?,
            );
        }
    }
    let m = DMatrix::from_row_slice(coords.len(), cols, &values);
    Ok((Embedding::new(kind, m, "csv")?, coords))
}

/// Dense matrix, one row per line, no header.
pub fn matrix_csv(m: &DMatrix<f64>) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for row in m.row_iter() {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(csv_err)?;
    }
    finish(w)
}

/// Per-cell values laid out on the maze grid; wall cells are empty fields.
pub fn grid_csv(maze: &MazeSpec, per_state: &[f64]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for y in 0..maze.height() {
        let rec: Vec<String> = (0..maze.width())
            .map(|x| match maze.index().state((x, y)) {
                Some(s) => per_state[s].to_string(),
                None => String::new(),
            })
            .collect();
        w.write_record(&rec).map_err(csv_err)?;
    }
    finish(w)
}

/// Linear interpolation through five anchor colors of the viridis map
/// (dark purple at 0, yellow at 1). Walls are drawn mid-gray.
pub const COLORMAP: [[u8; 3]; 5] = [
    [68, 1, 84],
    [59, 82, 139],
    [33, 145, 140],
    [94, 201, 98],
    [253, 231, 37],
];

pub const WALL_COLOR: [u8; 3] = [128, 128, 128];

pub fn colormap(t: f64) -> [u8; 3] {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let pos = t * (COLORMAP.len() - 1) as f64;
    let i = (pos.floor() as usize).min(COLORMAP.len() - 2);
    let frac = pos - i as f64;
    let mut out = [0u8; 3];
    for c in 0..3 {
        let a = COLORMAP[i][c] as f64;
        let b = COLORMAP[i + 1][c] as f64;
        out[c] = (a + frac * (b - a)).round() as u8;
    }
    out
}

/// Values rescaled to [0, 1] by their min and max (all zero when flat).
pub fn normalize_unit(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    values
        .iter()
        .map(|v| if span > 0.0 { (v - lo) / span } else { 0.0 })
        .collect()
}

/// Binary PPM (P6), `scale x scale` pixels per cell. `per_state` is
/// normalized to [0, 1] before coloring.
pub fn heatmap_ppm(maze: &MazeSpec, per_state: &[f64], scale: usize) -> Vec<u8> {
    let scale = scale.max(1);
    let unit = normalize_unit(per_state);
    let (w, h) = (maze.width() * scale, maze.height() * scale);
    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    out.reserve(w * h * 3);
    for py in 0..h {
        for px in 0..w {
            let color = match maze.index().state((px / scale, py / scale)) {
                Some(s) => colormap(unit[s]),
                None => WALL_COLOR,
            };
            out.extend_from_slice(&color);
        }
    }
    out
}

/// `state_index,x,y,cent,selected`.
pub fn centrality_csv(report: &CentralityReport, coords: &[Coord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["state_index", "x", "y", "cent", "selected"]).map_err(csv_err)?;
    for (s, &(x, y)) in coords.iter().enumerate() {
        let selected = report.selected.binary_search(&s).is_ok();
        w.write_record([
            s.to_string(),
            x.to_string(),
            y.to_string(),
            report.cent[s].to_string(),
            (selected as u8).to_string(),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

/// `episode,kind,goal,seed,success,steps` for every run.
pub fn curves_csv(run: &ShapingRun) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["episode", "kind", "goal", "seed", "success", "steps"]).map_err(csv_err)?;
    for r in &run.runs {
        for (e, (&ok, &steps)) in r.success.iter().zip(&r.steps).enumerate() {
            w.write_record([
                e.to_string(),
                r.kind.to_string(),
                r.goal.to_string(),
                r.seed.to_string(),
                (ok as u8).to_string(),
                steps.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    finish(w)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindStats {
    pub auc: f64,
    pub episodes_to_90pct: Option<usize>,
    pub stderr: f64,
}

pub fn shaping_summary(run: &ShapingRun) -> BTreeMap<String, KindStats> {
    run.summaries
        .iter()
        .map(|(k, s)| {
            (
                k.to_string(),
                KindStats {
                    auc: s.auc,
                    episodes_to_90pct: s.episodes_to_90pct,
                    stderr: s.stderr,
                },
            )
        })
        .collect()
}

/// `kind,auc,stderr,episodes_to_90pct` (empty when never reached).
pub fn aggregate_csv(run: &ShapingRun) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["kind", "auc", "stderr", "episodes_to_90pct"]).map_err(csv_err)?;
    for (k, s) in shaping_summary(run) {
        w.write_record([
            k,
            s.auc.to_string(),
            s.stderr.to_string(),
            s.episodes_to_90pct.map(|e| e.to_string()).unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

/// `iteration,objective,penalty`.
pub fn training_log_csv(log: &[TrainLogEntry]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["iteration", "objective", "penalty"]).map_err(csv_err)?;
    for e in log {
        w.write_record([e.iteration.to_string(), e.objective.to_string(), e.penalty.to_string()])
            .map_err(csv_err)?;
    }
    finish(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envgrid::parse_maze;

    #[test]
    fn embedding_csv_round_trip() {
        let coords = DMatrix::from_row_slice(2, 2, &[0.1, -1.0 / 3.0, 2.5e-17, 7.0]);
        let e = Embedding::new(EmbeddingKind::RaLapRep, coords, "t").unwrap();
        let text = embedding_csv(&e, &[(1, 1), (2, 1)]).unwrap();
        assert!(text.starts_with("state_index,x,y,e2,e3\n"));
        let (back, xy) = read_embedding_csv(&text, EmbeddingKind::RaLapRep).unwrap();
        assert_eq!(back.coords, e.coords);
        assert_eq!(xy, vec![(1, 1), (2, 1)]);
    }

    #[test]
    fn grid_leaves_walls_empty() {
        let maze = parse_maze("####\n#..#\n####").unwrap();
        let text = grid_csv(&maze, &[1.0, 0.0]).unwrap();
        assert_eq!(text, ",,,\n,1,0,\n,,,\n");
    }

    #[test]
    fn ppm_layout() {
        let maze = parse_maze("####\n#..#\n####").unwrap();
        let img = heatmap_ppm(&maze, &[1.0, 0.0], 2);
        let header = b"P6\n8 6\n255\n";
        assert_eq!(&img[..header.len()], header);
        assert_eq!(img.len(), header.len() + 8 * 6 * 3);
        // pixel (2, 2) is state 0 at value 1 -> top of the colormap
        let at = header.len() + (2 * 8 + 2) * 3;
        assert_eq!(&img[at..at + 3], &COLORMAP[4]);
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = std::env::temp_dir().join(format!("sr-export-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let p = dir.join("a.csv");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        assert_eq!(fs::read_dir(&dir).unwrap().count(), 1);
        assert!(write_atomic(&dir.join("missing/x.csv"), b"").is_err());
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn colormap_endpoints() {
        assert_eq!(colormap(0.0), COLORMAP[0]);
        assert_eq!(colormap(1.0), COLORMAP[4]);
        assert_eq!(colormap(f64::NAN), COLORMAP[0]);
    }
}
