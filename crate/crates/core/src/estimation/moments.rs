//! Conditional moments of a Gaussian split into a reliable block that is
//! taken at face value and an unreliable block to be predicted.

use nalgebra::{DMatrix, DVector};

use crate::data::{ClusterParams, DataSet};
use crate::error::{Error, Result};
use crate::gaussian::{reliable_cells, ClusterDensity};

/// Conditional mean and covariance of the unreliable block.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalMoments {
    /// One entry per unreliable cell, in the order they were requested.
    pub mean: DVector<f64>,
    /// Conditional covariance of the unreliable block, symmetrized.
    pub covariance: DMatrix<f64>,
}

/// Moments of `x[unreliable]` given `x[reliable]` under a Gaussian with
/// the given mean and covariance.
///
/// With no unreliable cells the result is empty; with no reliable cells it
/// is the marginal over the unreliable block. The two index sets must be
/// disjoint and in range; values of `x` outside the reliable set are never
/// read.
pub fn conditional_moments(
    x: &DVector<f64>,
    reliable: &[usize],
    unreliable: &[usize],
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
) -> Result<ConditionalMoments> {
    let dim = mean.len();
    if cov.nrows() != dim || cov.ncols() != dim {
        return Err(Error::DimensionMismatch(format!(
            "mean has length {dim} but covariance is {}x{}",
            cov.nrows(),
            cov.ncols()
        )));
    }
    if x.len() != dim {
        return Err(Error::DimensionMismatch(format!(
            "point has length {} but the Gaussian has dimension {dim}",
            x.len()
        )));
    }
    let mut seen = vec![false; dim];
    for &idx in reliable.iter().chain(unreliable) {
        if idx >= dim {
            return Err(Error::InvalidData(format!(
                "cell index {idx} out of range for dimension {dim}"
            )));
        }
        if seen[idx] {
            return Err(Error::InvalidData(format!(
                "cell index {idx} appears twice across the blocks"
            )));
        }
        seen[idx] = true;
    }
    let mut density = ClusterDensity::new(mean, cov);
    let (mean, covariance) = density.vector_moments(x, reliable, unreliable)?;
    Ok(ConditionalMoments { mean, covariance })
}

/// Fill every unreliable or missing cell with its conditional expectation
/// under the cluster each unit is assigned to by `labels`.
pub(crate) fn completed_matrix(
    data: &DataSet,
    w: &DMatrix<bool>,
    labels: &[usize],
    params: &ClusterParams,
) -> Result<DMatrix<f64>> {
    let n = data.n_units();
    let j_vars = data.n_vars();
    let k = params.k();
    let mut densities: Vec<ClusterDensity> = (0..k)
        .map(|c| ClusterDensity::new(&params.means[c], &params.covariances[c]))
        .collect();
    let mut completed = data.values().clone();
    for i in 0..n {
        let x = data.unit(i);
        let reliable = reliable_cells(w, i);
        let unreliable: Vec<usize> = (0..j_vars).filter(|&j| !w[(i, j)]).collect();
        if unreliable.is_empty() {
            continue;
        }
        let c = labels[i];
        let (mean, _) = densities[c]
            .vector_moments(&x, &reliable, &unreliable)
            .map_err(|e| e.with_cluster(c))?;
        for (pos, &j) in unreliable.iter().enumerate() {
            completed[(i, j)] = mean[pos];
        }
    }
    Ok(completed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_match_hand_schur_complement() {
        let mean = DVector::from_column_slice(&[1.0, 2.0, 3.0]);
        let cov = DMatrix::from_row_slice(3, 3, &[4.0, 2.0, 1.0, 2.0, 3.0, 1.0, 1.0, 1.0, 2.0]);
        let x = DVector::from_column_slice(&[3.0, f64::NAN, f64::NAN]);
        let got = conditional_moments(&x, &[0], &[1, 2], &mean, &cov).unwrap();
        assert!((got.mean[0] - 3.0).abs() < 1e-14);
        assert!((got.mean[1] - 3.5).abs() < 1e-14);
        let expect = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.75]);
        assert!((got.covariance - expect).norm() < 1e-14);
    }

    #[test]
    fn moments_under_independence_ignore_conditioning() {
        let mean = DVector::from_column_slice(&[1.0, -1.0]);
        let cov = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]);
        let x = DVector::from_column_slice(&[10.0, f64::NAN]);
        let got = conditional_moments(&x, &[0], &[1], &mean, &cov).unwrap();
        assert!((got.mean[0] - (-1.0)).abs() < 1e-14);
        assert!((got.covariance[(0, 0)] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn moments_validate_indices() {
        let mean = DVector::from_column_slice(&[0.0, 0.0]);
        let cov = DMatrix::identity(2, 2);
        let x = DVector::from_column_slice(&[0.0, 0.0]);
        assert!(matches!(
            conditional_moments(&x, &[0], &[2], &mean, &cov),
            Err(Error::InvalidData(_))
        ));
        assert!(matches!(
            conditional_moments(&x, &[0], &[0], &mean, &cov),
            Err(Error::InvalidData(_))
        ));
        let short = DVector::from_column_slice(&[0.0]);
        assert!(matches!(
            conditional_moments(&short, &[0], &[1], &mean, &cov),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn completed_matrix_fills_unreliable_cells() {
        let values = DMatrix::from_row_slice(2, 2, &[1.0, 50.0, -1.0, -0.9]);
        let data = DataSet::from_complete(values, None).unwrap();
        let params = ClusterParams {
            weights: DVector::from_column_slice(&[1.0]),
            means: vec![DVector::from_column_slice(&[0.0, 0.0])],
            covariances: vec![DMatrix::from_row_slice(2, 2, &[1.0, 0.9, 0.9, 1.0])],
        };
        let mut w = DMatrix::from_element(2, 2, true);
        w[(0, 1)] = false; // the wild 50 is unreliable
        let completed = completed_matrix(&data, &w, &[0, 0], &params).unwrap();
        // Unreliable cell imputed from the reliable one: 0.9 * 1.0.
        assert!((completed[(0, 1)] - 0.9).abs() < 1e-14);
        // Reliable cells pass through untouched.
        assert_eq!(completed[(0, 0)], 1.0);
        assert_eq!(completed[(1, 0)], -1.0);
        assert_eq!(completed[(1, 1)], -0.9);
    }
}
