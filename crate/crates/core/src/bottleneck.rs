//! Bottleneck discovery by inverse distance-sum centrality,
//! `cent(s) = 1 / sum_{s'} dist(s, s')`.
//!
//! States with the highest centrality (smallest total distance to the rest
//! of the maze) are reported as bottlenecks. `invert` selects the lowest
//! centrality instead.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::{embed_dist, Embedding, EmbeddingKind};

pub const DEFAULT_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CentralityReport {
    pub cent: Vec<f64>,
    pub selected: Vec<usize>,
    pub fraction: f64,
    pub inverted: bool,
    pub source: EmbeddingKind,
    /// Pairs of distinct states sharing identical coordinates.
    pub coincident_pairs: Vec<(usize, usize)>,
}

pub struct Centrality {
    pub cent: Vec<f64>,
    pub coincident_pairs: Vec<(usize, usize)>,
}

pub fn centrality(e: &Embedding) -> Result<Centrality> {
    let n = e.n_states();
    if n < 2 {
        return Err(Error::DimensionMismatch("centrality needs at least two states".into()));
    }
    let rows: Vec<(f64, Vec<(usize, usize)>)> = (0..n)
        .into_par_iter()
        .map(|s| {
            let mut sum = 0.0;
            let mut same = Vec::new();
            for t in 0..n {
                if t == s {
                    continue;
                }
                let d = embed_dist(e, s, t);
                if d == 0.0 && s < t {
                    same.push((s, t));
                }
                sum += d;
            }
            (sum, same)
        })
        .collect();
    let mut cent = Vec::with_capacity(n);
    let mut coincident_pairs = Vec::new();
    for (sum, same) in rows {
        cent.push(1.0 / sum);
        coincident_pairs.extend(same);
    }
    Ok(Centrality {
        cent,
        coincident_pairs,
    })
}

/// The `ceil(fraction * |S|)` states with the largest centrality (smallest
/// with `invert`), ties broken by lower state index. Returned ascending.
pub fn top_bottlenecks(cent: &[f64], fraction: f64, invert: bool) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidConfig(format!("fraction {fraction} outside (0, 1]")));
    }
    let k = ((fraction * cent.len() as f64) - 1e-9).ceil().max(1.0) as usize;
    let k = k.min(cent.len());
    let mut order: Vec<usize> = (0..cent.len()).collect();
    order.sort_by(|&a, &b| {
        let by_value = if invert {
            cent[a].total_cmp(&cent[b])
        } else {
            cent[b].total_cmp(&cent[a])
        };
        by_value.then(a.cmp(&b))
    });
    let mut picked = order[..k].to_vec();
    picked.sort_unstable();
    Ok(picked)
}

pub fn bottleneck_report(e: &Embedding, fraction: f64, invert: bool) -> Result<CentralityReport> {
    let c = centrality(e)?;
    let selected = top_bottlenecks(&c.cent, fraction, invert)?;
    Ok(CentralityReport {
        cent: c.cent,
        selected,
        fraction,
        inverted: invert,
        source: e.kind,
        coincident_pairs: c.coincident_pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envgrid::parse_maze;
    use crate::graph::build_graph;
    use crate::spectral::{eig_sym, ra_laprep};

    fn ra_full(text: &str) -> Embedding {
        let g = build_graph(&parse_maze(text).unwrap());
        let b = eig_sym(&g.laplacian()).unwrap();
        ra_laprep(&b, g.n_states()).unwrap()
    }

    #[test]
    fn k2_and_p3_values() {
        let k2 = centrality(&ra_full("####\n#..#\n####")).unwrap();
        assert!((k2.cent[0] - 1.0).abs() < 1e-12 && (k2.cent[1] - 1.0).abs() < 1e-12);
        let p3 = centrality(&ra_full("#####\n#...#\n#####")).unwrap();
        assert!((p3.cent[1] - 0.5).abs() < 1e-12);
        let end = 1.0 / (1.0 + 2f64.sqrt());
        assert!((p3.cent[0] - end).abs() < 1e-12 && (p3.cent[2] - end).abs() < 1e-12);
        assert!(p3.coincident_pairs.is_empty());
    }

    #[test]
    fn scaling_is_homogeneous() {
        let e = ra_full("#######\n#..#..#\n#.....#\n#######");
        let base = centrality(&e).unwrap().cent;
        let scaled = centrality(&e.scaled(3.0)).unwrap().cent;
        for (a, b) in base.iter().zip(&scaled) {
            assert!((a / 3.0 - b).abs() < 1e-12);
        }
        assert_eq!(
            top_bottlenecks(&base, 0.2, false).unwrap(),
            top_bottlenecks(&scaled, 0.2, false).unwrap()
        );
    }

    #[test]
    fn selection() {
        let p3 = centrality(&ra_full("#####\n#...#\n#####")).unwrap().cent;
        assert_eq!(top_bottlenecks(&p3, 0.33, false).unwrap(), vec![1]);
        assert_eq!(top_bottlenecks(&p3, 0.33, true).unwrap(), vec![0]);
        // ceil(0.34 * 3) = 2: the middle plus the lower-indexed end
        assert_eq!(top_bottlenecks(&p3, 0.34, false).unwrap(), vec![0, 1]);
        assert_eq!(top_bottlenecks(&p3, 1.0, false).unwrap(), vec![0, 1, 2]);
        assert!(top_bottlenecks(&p3, 0.0, false).is_err());
        assert!(top_bottlenecks(&p3, 1.5, false).is_err());
    }

    #[test]
    fn two_room_doorway() {
        let e = ra_full("#######\n#..#..#\n#.....#\n#######");
        // doorway is (3, 2): states 0-3 are row 1, row 2 starts at 4
        let door = 4 + 2;
        let report = bottleneck_report(&e, 0.2, false).unwrap();
        assert!(report.selected.contains(&door));
        for corner in [0, 3, 4, 8] {
            assert!(report.cent[door] > report.cent[corner]);
        }
    }

    #[test]
    fn coincident_states_are_reported() {
        let coords = nalgebra::DMatrix::from_row_slice(3, 1, &[0.0, 0.0, 1.0]);
        let e = Embedding::new(EmbeddingKind::Learned, coords, "test").unwrap();
        assert_eq!(centrality(&e).unwrap().coincident_pairs, vec![(0, 1)]);
    }
}
