//! Classic multidimensional scaling, used to check that RA-LapRep is the MDS
//! embedding of the commute-time matrix up to a factor `sqrt(V_G)`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::spectral::{eig_sym, embed_dist, Embedding, SYMMETRY_TOL};

/// Relative eigenvalue cutoff: eigenpairs of `B` at or below
/// `DEFAULT_CUTOFF * max_eigenvalue` are dropped.
pub const DEFAULT_CUTOFF: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct MdsResult {
    /// `|S| x r` embedding `Q+ Lambda+^(1/2)`.
    pub x: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
    /// Most negative eigenvalue of `B` when it falls below `-cutoff`.
    pub indefinite: Option<f64>,
    /// Largest absolute row sum of `B`.
    pub centering_residual: f64,
}

impl MdsResult {
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        (self.x.row(i) - self.x.row(j)).norm()
    }
}

/// `B = -1/2 J D2 J` with `J = I - 11^T/n`.
pub fn double_center(d2: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = d2.nrows();
    if d2.ncols() != n {
        return Err(Error::DimensionMismatch("squared-dissimilarity matrix must be square".into()));
    }
    let asym = (d2 - d2.transpose()).amax();
    if asym > SYMMETRY_TOL * d2.amax().max(1.0) {
        return Err(Error::NotSymmetric(asym));
    }
    for i in 0..n {
        for j in 0..n {
            if d2[(i, j)] < 0.0 {
                return Err(Error::NegativeEntry(i, j));
            }
        }
        if d2[(i, i)] != 0.0 {
            return Err(Error::Parse(format!("nonzero diagonal at {i}")));
        }
    }
    let nf = n as f64;
    let row_means: Vec<f64> = (0..n).map(|i| d2.row(i).sum() / nf).collect();
    let col_means: Vec<f64> = (0..n).map(|j| d2.column(j).sum() / nf).collect();
    let grand = row_means.iter().sum::<f64>() / nf;
    let mut b = DMatrix::from_fn(n, n, |i, j| {
        -0.5 * (d2[(i, j)] - row_means[i] - col_means[j] + grand)
    });
    // exact symmetry for the eigensolver
    let bt = b.transpose();
    b = (b + bt) * 0.5;
    Ok(b)
}

pub fn classic_mds(d2: &DMatrix<f64>, cutoff: f64) -> Result<MdsResult> {
    let b = double_center(d2)?;
    let centering_residual = b.row_iter().map(|r| r.sum().abs()).fold(0.0, f64::max);
    let basis = eig_sym(&b)?;
    let top = basis.values().last().copied().unwrap_or(0.0).max(0.0);
    let threshold = cutoff * top;
    let keep: Vec<usize> = (0..basis.len()).rev().filter(|&k| basis.value(k) > threshold).collect();
    let lowest = basis.values().first().copied().unwrap_or(0.0);
    let indefinite = (lowest < -threshold.max(f64::MIN_POSITIVE)).then_some(lowest);
    let n = d2.nrows();
    let mut x = DMatrix::zeros(n, keep.len());
    for (c, &k) in keep.iter().enumerate() {
        x.set_column(c, &(basis.vector(k) * basis.value(k).sqrt()));
    }
    Ok(MdsResult {
        x,
        eigenvalues: keep.iter().map(|&k| basis.value(k)).collect(),
        indefinite,
        centering_residual,
    })
}

/// `max_{i<j} | ||X_i - X_j|| - sqrt(V_G) * dist_phi(i, j) |`.
pub fn equivalence_residual(mds: &MdsResult, phi: &Embedding, volume: f64) -> Result<f64> {
    let n = mds.x.nrows();
    if phi.n_states() != n {
        return Err(Error::DimensionMismatch(format!(
            "MDS has {n} items, embedding has {} states",
            phi.n_states()
        )));
    }
    let scale = volume.sqrt();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((mds.dist(i, j) - scale * embed_dist(phi, i, j)).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_centering() {
        let b = double_center(&DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[0.25, -0.25, -0.25, 0.25]);
        assert!((b - want).amax() < 1e-15);
        assert_eq!(double_center(&DMatrix::zeros(3, 3)).unwrap(), DMatrix::zeros(3, 3));
    }

    #[test]
    fn centering_rejects_bad_input() {
        let asym = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 0.0]);
        assert!(matches!(double_center(&asym), Err(Error::NotSymmetric(_))));
        let neg = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, -1.0, 0.0]);
        assert!(matches!(double_center(&neg), Err(Error::NegativeEntry(0, 1))));
    }

    #[test]
    fn two_points_at_distance_two() {
        let r = classic_mds(&DMatrix::from_row_slice(2, 2, &[0.0, 4.0, 4.0, 0.0]), DEFAULT_CUTOFF).unwrap();
        assert_eq!(r.x.ncols(), 1);
        assert!((r.dist(0, 1) - 2.0).abs() < 1e-12);
        assert!(r.indefinite.is_none());
    }

    #[test]
    fn indefinite_input_is_flagged() {
        // three points violating the triangle inequality in squared form
        let d2 = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 16.0, 1.0, 0.0, 1.0, 16.0, 1.0, 0.0]);
        let r = classic_mds(&d2, DEFAULT_CUTOFF).unwrap();
        assert!(r.indefinite.is_some());
        assert!(r.x.ncols() >= 1);
    }
}
