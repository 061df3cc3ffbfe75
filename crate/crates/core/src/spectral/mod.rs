//! Laplacian spectra and the two spectral state embeddings.
//!
//! Both embeddings take a dimension parameter `d` and store `d - 1`
//! coordinates: eigen-indices `2..=d`, skipping the constant eigenvector.
//!
//! * LapRep: row `s` is `(v_2[s], ..., v_d[s])`.
//! * RA-LapRep: row `s` is `(v_2[s]/sqrt(l_2), ..., v_d[s]/sqrt(l_d))`. At
//!   `d = |S|` the squared Euclidean distance times the graph volume equals
//!   the average commute time between the two states.

mod eig;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use eig::MAX_ITERATIONS;

/// Eigenvalues below this are treated as zero when checking connectivity.
pub const ZERO_EIGENVALUE_TOL: f64 = 1e-9;

/// Largest accepted asymmetry `|a_ij - a_ji|`.
pub const SYMMETRY_TOL: f64 = 1e-12;

pub const SIGN_CONVENTION: &str = "max-abs-positive";

/// Ascending eigenvalues and unit eigenvectors (columns) of a symmetric
/// matrix. Each eigenvector is signed so its largest-magnitude entry is
/// positive; among entries tied in magnitude (within 1e-9 relative) the one
/// with the lowest state index decides.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBasis {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl SpectralBasis {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Eigenvalue at zero-based position `k` (so `value(1)` is lambda_2).
    pub fn value(&self, k: usize) -> f64 {
        self.values[k]
    }

    pub fn vector(&self, k: usize) -> DVector<f64> {
        self.vectors.column(k).into_owned()
    }

    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    /// Fails with `GraphDisconnected` when more than one eigenvalue is zero.
    pub fn require_connected(&self) -> Result<()> {
        let zeros = self
            .values
            .iter()
            .filter(|&&v| v <= ZERO_EIGENVALUE_TOL)
            .count();
        if zeros > 1 {
            Err(Error::GraphDisconnected { components: zeros })
        } else {
            Ok(())
        }
    }

    /// `max_i ||A v_i - lambda_i v_i||`.
    pub fn max_residual(&self, a: &DMatrix<f64>) -> f64 {
        let av = a * &self.vectors;
        (0..self.len())
            .map(|k| (av.column(k) - self.vectors.column(k) * self.values[k]).norm())
            .fold(0.0, f64::max)
    }

    /// `max_ij |v_i^T v_j - delta_ij|`.
    pub fn orthonormality_error(&self) -> f64 {
        let gram = self.vectors.transpose() * &self.vectors;
        (gram - DMatrix::identity(self.len(), self.len())).amax()
    }

    pub fn to_export(&self) -> BasisExport {
        BasisExport {
            eigenvalues: self.values.clone(),
            sign_convention: SIGN_CONVENTION.to_string(),
        }
    }
}

/// JSON basis export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisExport {
    pub eigenvalues: Vec<f64>,
    pub sign_convention: String,
}

/// Full ascending eigendecomposition of a symmetric matrix.
pub fn eig_sym(a: &DMatrix<f64>) -> Result<SpectralBasis> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} matrix is not square",
            n,
            a.ncols()
        )));
    }
    let asym = (a - a.transpose()).amax();
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(asym));
    }
    let raw = eig::symmetric_eigen(a)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| raw.values[i].total_cmp(&raw.values[j]).then(i.cmp(&j)));

    let values: Vec<f64> = order.iter().map(|&k| raw.values[k]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let mut v: Vec<f64> = (0..n).map(|i| raw.vectors[i * n + k]).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let sign = sign_of_dominant(&v) / norm;
        for x in &mut v {
            *x *= sign;
        }
        vectors.set_column(col, &DVector::from_vec(v));
    }
    Ok(SpectralBasis { values, vectors })
}

fn sign_of_dominant(v: &[f64]) -> f64 {
    let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let first = v
        .iter()
        .find(|x| x.abs() >= max * (1.0 - 1e-9))
        .copied()
        .unwrap_or(1.0);
    if first < 0.0 {
        -1.0
    } else {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbeddingKind {
    LapRep,
    RaLapRep,
    Learned,
}

impl std::fmt::Display for EmbeddingKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EmbeddingKind::LapRep => "laprep",
            EmbeddingKind::RaLapRep => "ra-laprep",
            EmbeddingKind::Learned => "learned",
        })
    }
}

/// Per-state vectors; `coords` is `|S| x (d - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub kind: EmbeddingKind,
    pub d: usize,
    pub coords: DMatrix<f64>,
    pub source: String,
}

impl Embedding {
    pub fn new(kind: EmbeddingKind, coords: DMatrix<f64>, source: impl Into<String>) -> Result<Self> {
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(Error::Parse("embedding has non-finite coordinates".into()));
        }
        Ok(Embedding {
            kind,
            d: coords.ncols() + 1,
            coords,
            source: source.into(),
        })
    }

    pub fn n_states(&self) -> usize {
        self.coords.nrows()
    }

    pub fn row(&self, s: usize) -> Vec<f64> {
        self.coords.row(s).iter().copied().collect()
    }

    /// Copy with every coordinate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Embedding {
        Embedding {
            coords: &self.coords * factor,
            ..self.clone()
        }
    }
}

fn check_dimension(basis: &SpectralBasis, d: usize) -> Result<()> {
    if d < 2 || d > basis.len() {
        return Err(Error::DimensionOutOfRange {
            d,
            max: basis.len(),
        });
    }
    Ok(())
}

pub fn laprep(basis: &SpectralBasis, d: usize) -> Result<Embedding> {
    check_dimension(basis, d)?;
    let coords = basis.vectors.columns(1, d - 1).into_owned();
    Embedding::new(EmbeddingKind::LapRep, coords, format!("laprep d={d}"))
}

pub fn ra_laprep(basis: &SpectralBasis, d: usize) -> Result<Embedding> {
    check_dimension(basis, d)?;
    basis.require_connected()?;
    let mut coords = basis.vectors.columns(1, d - 1).into_owned();
    for (c, mut col) in coords.column_iter_mut().enumerate() {
        col /= basis.values[c + 1].sqrt();
    }
    Embedding::new(EmbeddingKind::RaLapRep, coords, format!("ra-laprep d={d}"))
}

pub fn embed_dist(e: &Embedding, s: usize, t: usize) -> f64 {
    e.coords
        .row(s)
        .iter()
        .zip(e.coords.row(t).iter())
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Distances from every state to `goal`.
pub fn distances_to(e: &Embedding, goal: usize) -> Vec<f64> {
    (0..e.n_states()).map(|s| embed_dist(e, s, goal)).collect()
}

/// Commute time predicted by the first `d` eigenpairs,
/// `V_G * sum_{i=2..d} (v_i[s] - v_i[t])^2 / l_i`.
pub fn truncated_commute(basis: &SpectralBasis, volume: f64, d: usize, s: usize, t: usize) -> Result<f64> {
    check_dimension(basis, d)?;
    basis.require_connected()?;
    Ok(volume * spectral_sum(basis, 1..d, s, t))
}

/// Exact truncation error `n(s,t) - n_d(s,t)`: the omitted eigenpairs'
/// contribution `V_G * sum_{i>d} (v_i[s] - v_i[t])^2 / l_i`. Nonnegative,
/// nonincreasing in `d`, zero at `d = |S|`.
pub fn truncation_tail(basis: &SpectralBasis, volume: f64, d: usize, s: usize, t: usize) -> Result<f64> {
    check_dimension(basis, d)?;
    basis.require_connected()?;
    Ok(volume * spectral_sum(basis, d..basis.len(), s, t))
}

/// `4 V_G sum_{i>d} 1/l_i`, an upper bound on `truncation_tail` for every
/// pair (each `(v_i[s]-v_i[t])^2 <= 2 (v_i[s]^2 + v_i[t]^2) <= 4`).
pub fn tail_bound(basis: &SpectralBasis, volume: f64, d: usize) -> Result<f64> {
    check_dimension(basis, d)?;
    basis.require_connected()?;
    Ok(4.0 * volume * basis.values[d..].iter().map(|l| 1.0 / l).sum::<f64>())
}

fn spectral_sum(basis: &SpectralBasis, range: std::ops::Range<usize>, s: usize, t: usize) -> f64 {
    range
        .map(|k| (basis.vectors[(s, k)] - basis.vectors[(t, k)]).powi(2) / basis.values[k])
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envgrid::parse_maze;
    use crate::graph::build_graph;

    const K2: &str = "####\n#..#\n####";
    const P3: &str = "#####\n#...#\n#####";
    const C4: &str = "####\n#..#\n#..#\n####";

    fn basis(text: &str) -> SpectralBasis {
        eig_sym(&build_graph(&parse_maze(text).unwrap()).laplacian()).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn k2_spectrum_and_sign() {
        let b = basis(K2);
        assert!(close(b.value(0), 0.0, 1e-12) && close(b.value(1), 2.0, 1e-12));
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(b.vectors[(0, 1)], h, 1e-12) && close(b.vectors[(1, 1)], -h, 1e-12));
    }

    #[test]
    fn p3_matches_characteristic_polynomial() {
        // det(L - xI) = -x (x - 1)(x - 3) for the 3-path
        let b = basis(P3);
        for (got, want) in b.values().iter().zip([0.0, 1.0, 3.0]) {
            assert!(close(*got, want, 1e-12));
        }
    }

    #[test]
    fn c4_cycle_spectrum() {
        let b = basis(C4);
        let want: Vec<f64> = {
            let mut w: Vec<f64> = (0..4)
                .map(|k| 2.0 - 2.0 * (2.0 * std::f64::consts::PI * k as f64 / 4.0).cos())
                .collect();
            w.sort_by(f64::total_cmp);
            w
        };
        for (got, want) in b.values().iter().zip(want) {
            assert!(close(*got, want, 1e-12));
        }
        let l = build_graph(&parse_maze(C4).unwrap()).laplacian();
        assert!(b.max_residual(&l) < 1e-8);
        assert!(b.orthonormality_error() < 1e-9);
    }

    #[test]
    fn rejects_asymmetric() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(eig_sym(&a), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn laprep_rows() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let e = laprep(&basis(K2), 2).unwrap();
        assert!(close(e.coords[(0, 0)], h, 1e-12) && close(e.coords[(1, 0)], -h, 1e-12));
        let e = laprep(&basis(P3), 2).unwrap();
        for (s, want) in [h, 0.0, -h].into_iter().enumerate() {
            assert!(close(e.coords[(s, 0)], want, 1e-12));
        }
        assert!(matches!(
            laprep(&basis(P3), 4),
            Err(Error::DimensionOutOfRange { d: 4, max: 3 })
        ));
        assert!(laprep(&basis(P3), 1).is_err());
    }

    #[test]
    fn full_laprep_is_zero_mean() {
        let e = laprep(&basis("#######\n#..#..#\n#.....#\n#######"), 9).unwrap();
        for col in e.coords.column_iter() {
            assert!(col.sum().abs() < 1e-12);
        }
    }

    #[test]
    fn ra_laprep_distances() {
        let k2 = ra_laprep(&basis(K2), 2).unwrap();
        assert!(close(k2.coords[(0, 0)], 0.5, 1e-12) && close(k2.coords[(1, 0)], -0.5, 1e-12));
        assert!(close(embed_dist(&k2, 0, 1), 1.0, 1e-12));

        let p3 = ra_laprep(&basis(P3), 3).unwrap();
        assert!(close(embed_dist(&p3, 0, 1), 1.0, 1e-12));
        assert!(close(embed_dist(&p3, 1, 2), 1.0, 1e-12));
        assert!(close(embed_dist(&p3, 0, 2), 2f64.sqrt(), 1e-12));
        assert_eq!(embed_dist(&p3, 1, 1), 0.0);

        let c4 = ra_laprep(&basis(C4), 4).unwrap();
        // C4 states row-major: 0 1 / 2 3, so 0-1 and 0-2 are adjacent
        assert!(close(embed_dist(&c4, 0, 1), (6.0f64 / 8.0).sqrt(), 1e-12));
        assert!(close(embed_dist(&c4, 0, 2), (6.0f64 / 8.0).sqrt(), 1e-12));
    }

    #[test]
    fn ra_laprep_requires_connected() {
        assert!(matches!(
            ra_laprep(&basis("#####\n#.#.#\n#####"), 2),
            Err(Error::GraphDisconnected { .. })
        ));
    }

    #[test]
    fn p3_truncation_tail() {
        let b = basis(P3);
        assert!(close(truncation_tail(&b, 4.0, 2, 0, 1).unwrap(), 2.0, 1e-12));
        assert!(close(truncated_commute(&b, 4.0, 2, 0, 1).unwrap(), 2.0, 1e-12));
        assert!(close(truncation_tail(&b, 4.0, 2, 0, 2).unwrap(), 0.0, 1e-12));
        assert_eq!(truncation_tail(&b, 4.0, 3, 0, 2).unwrap(), 0.0);
    }
}
