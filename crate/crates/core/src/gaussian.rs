//! Gaussian log-densities and conditional moments on arbitrary cell subsets,
//! with per-cluster caching of Cholesky factors keyed by the subset pattern.

use std::collections::HashMap;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::stats::ceil_count;

/// ln(2*pi).
pub(crate) const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Relative floor applied to sub-covariance diagonals before factorization.
const DIAG_FLOOR_REL: f64 = 1e-12;

/// Relative floor applied to conditional and marginal scalar variances.
const VAR_FLOOR_REL: f64 = 1e-10;

/// Number of cells per variable treated as reliable: the smallest integer
/// no less than `(1 - alpha) * n_observed`, computed with a guard against
/// floating-point noise in the product.
pub fn compute_h(alpha: f64, n_observed: usize) -> usize {
    ceil_count((1.0 - alpha) * n_observed as f64)
}

/// Indices of the cells of unit `i` marked reliable in `w`.
pub(crate) fn reliable_cells(w: &DMatrix<bool>, i: usize) -> Vec<usize> {
    (0..w.ncols()).filter(|&j| w[(i, j)]).collect()
}

/// A cached Cholesky factorization of one sub-covariance.
struct Factor {
    chol: Cholesky<f64, Dyn>,
    log_det: f64,
}

/// One cluster's Gaussian, with factors of its sub-covariances cached by
/// cell pattern so units sharing a missingness/reliability pattern reuse
/// the same factorization.
pub(crate) struct ClusterDensity<'a> {
    mean: &'a DVector<f64>,
    cov: &'a DMatrix<f64>,
    diag_floor: f64,
    var_floor: f64,
    cache: HashMap<Vec<usize>, Factor>,
}

impl<'a> ClusterDensity<'a> {
    pub(crate) fn new(mean: &'a DVector<f64>, cov: &'a DMatrix<f64>) -> Self {
        let max_diag = (0..cov.nrows()).fold(0.0_f64, |acc, j| acc.max(cov[(j, j)]));
        ClusterDensity {
            mean,
            cov,
            diag_floor: DIAG_FLOOR_REL * max_diag,
            var_floor: VAR_FLOOR_REL * max_diag,
            cache: HashMap::new(),
        }
    }

    fn build_factor(&self, cells: &[usize]) -> Result<Factor> {
        let d = cells.len();
        let mut sub = DMatrix::from_fn(d, d, |r, c| self.cov[(cells[r], cells[c])]);
        for r in 0..d {
            sub[(r, r)] = sub[(r, r)].max(self.diag_floor);
        }
        let chol = Cholesky::new(sub).ok_or_else(|| Error::NonPositiveDefinite {
            cluster: None,
            cells: cells.to_vec(),
        })?;
        let l = chol.l_dirty();
        let log_det = 2.0 * (0..d).map(|r| l[(r, r)].ln()).sum::<f64>();
        Ok(Factor { chol, log_det })
    }

    fn factor(&mut self, cells: &[usize]) -> Result<&Factor> {
        if !self.cache.contains_key(cells) {
            let factor = self.build_factor(cells)?;
            self.cache.insert(cells.to_vec(), factor);
        }
        Ok(self.cache.get(cells).expect("factor was just inserted"))
    }

    /// Log-density of the marginal over `cells`, evaluated at the matching
    /// coordinates of `x`. An empty subset contributes nothing: 0.
    pub(crate) fn log_density(&mut self, x: &DVector<f64>, cells: &[usize]) -> Result<f64> {
        if cells.is_empty() {
            return Ok(0.0);
        }
        let d = cells.len();
        let residual = DVector::from_fn(d, |r, _| x[cells[r]] - self.mean[cells[r]]);
        let factor = self.factor(cells)?;
        let solved = factor.chol.solve(&residual);
        let quad = residual.dot(&solved);
        Ok(-0.5 * (d as f64 * LN_2PI + factor.log_det + quad))
    }

    /// Conditional mean and variance of variable `target` given the values
    /// of `x` at `cond`, under this cluster's Gaussian. With an empty
    /// conditioning set the marginal moments are returned. The variance is
    /// floored at a small fraction of the largest covariance diagonal.
    pub(crate) fn scalar_moments(
        &mut self,
        target: usize,
        x: &DVector<f64>,
        cond: &[usize],
    ) -> Result<(f64, f64)> {
        if cond.is_empty() {
            let var = self.cov[(target, target)].max(self.var_floor);
            return Ok((self.mean[target], var));
        }
        let d = cond.len();
        let cross = DVector::from_fn(d, |r, _| self.cov[(cond[r], target)]);
        let residual = DVector::from_fn(d, |r, _| x[cond[r]] - self.mean[cond[r]]);
        let factor = self.factor(cond)?;
        let solved = factor.chol.solve(&cross);
        let mean = self.mean[target] + solved.dot(&residual);
        let var = (self.cov[(target, target)] - solved.dot(&cross)).max(self.var_floor);
        Ok((mean, var))
    }

    /// Conditional mean vector and covariance of the `unreliable` block
    /// given the values of `x` on the `reliable` block. With no unreliable
    /// cells both outputs are empty; with no reliable cells the marginal
    /// moments of the unreliable block are returned.
    pub(crate) fn vector_moments(
        &mut self,
        x: &DVector<f64>,
        reliable: &[usize],
        unreliable: &[usize],
    ) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let b = unreliable.len();
        if b == 0 {
            return Ok((DVector::zeros(0), DMatrix::zeros(0, 0)));
        }
        let marginal_mean = DVector::from_fn(b, |r, _| self.mean[unreliable[r]]);
        let marginal_cov =
            DMatrix::from_fn(b, b, |r, c| self.cov[(unreliable[r], unreliable[c])]);
        if reliable.is_empty() {
            return Ok((marginal_mean, marginal_cov));
        }
        let a = reliable.len();
        let cross = DMatrix::from_fn(a, b, |r, c| self.cov[(reliable[r], unreliable[c])]);
        let residual = DVector::from_fn(a, |r, _| x[reliable[r]] - self.mean[reliable[r]]);
        let factor = self.factor(reliable)?;
        let solved = factor.chol.solve(&cross);
        let mean = marginal_mean + solved.transpose() * &residual;
        let mut cov = marginal_cov - cross.transpose() * solved;
        // Restore exact symmetry lost to rounding.
        for r in 0..b {
            for c in (r + 1)..b {
                let avg = 0.5 * (cov[(r, c)] + cov[(c, r)]);
                cov[(r, c)] = avg;
                cov[(c, r)] = avg;
            }
        }
        Ok((mean, cov))
    }
}

/// The fitting objective: the membership-weighted sum over units and
/// clusters of `ln(weight) + ` the cluster log-density of the unit's
/// reliable cells, with membership weights raised to the fuzziness
/// exponent. Terms with zero membership are skipped, so a vanishing
/// weight cannot poison the sum.
pub(crate) fn objective(
    data: &crate::data::DataSet,
    w: &DMatrix<bool>,
    u: &DMatrix<f64>,
    params: &crate::data::ClusterParams,
    m: f64,
) -> Result<f64> {
    let n = data.n_units();
    let k = params.k();
    let mut densities: Vec<ClusterDensity> = (0..k)
        .map(|c| ClusterDensity::new(&params.means[c], &params.covariances[c]))
        .collect();
    let log_weights: Vec<f64> = (0..k).map(|c| params.weights[c].ln()).collect();
    let mut total = 0.0;
    for i in 0..n {
        let cells = reliable_cells(w, i);
        let x = data.unit(i);
        for (c, density) in densities.iter_mut().enumerate() {
            let u_ic = u[(i, c)];
            if u_ic == 0.0 {
                continue;
            }
            let weight = if m == 1.0 { u_ic } else { u_ic.powf(m) };
            let term = log_weights[c] + density.log_density(&x, &cells).map_err(|e| e.with_cluster(c))?;
            total += weight * term;
        }
    }
    if !total.is_finite() {
        return Err(Error::Numerical("objective is not finite".into()));
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{ClusterParams, DataSet};

    fn density_2d_correlated() -> (DVector<f64>, DMatrix<f64>) {
        let mean = DVector::from_column_slice(&[0.0, 0.0]);
        let cov = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        (mean, cov)
    }

    #[test]
    fn compute_h_matches_hand_counts() {
        assert_eq!(compute_h(0.05, 250), 238); // ceil(237.5)
        assert_eq!(compute_h(0.0, 200), 200);
        assert_eq!(compute_h(0.12, 100), 88); // 88.00000000000001 must not round up
        assert_eq!(compute_h(0.1, 200), 180); // 180.00000000000003 must not round up
        assert_eq!(compute_h(0.5, 7), 4); // ceil(3.5)
        assert_eq!(compute_h(0.1, 0), 0);
    }

    #[test]
    fn log_density_standard_normal_at_origin() {
        let mean = DVector::from_column_slice(&[0.0]);
        let cov = DMatrix::from_row_slice(1, 1, &[1.0]);
        let mut d = ClusterDensity::new(&mean, &cov);
        let x = DVector::from_column_slice(&[0.0]);
        let got = d.log_density(&x, &[0]).unwrap();
        assert!((got - (-0.918_938_533_204_672_7)).abs() < 1e-14);
    }

    #[test]
    fn log_density_diagonal_case() {
        // mean (1, -1), variances (4, 0.25), x = (3, 0):
        // quad = 4/4 + 1/0.25 = 5, log_det = ln(1) = 0
        // => -0.5 * (2 ln(2pi) + 0 + 5) = -ln(2pi) - 2.5
        let mean = DVector::from_column_slice(&[1.0, -1.0]);
        let cov = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 0.25]);
        let mut d = ClusterDensity::new(&mean, &cov);
        let x = DVector::from_column_slice(&[3.0, 0.0]);
        let got = d.log_density(&x, &[0, 1]).unwrap();
        assert!((got - (-4.337_877_066_409_345)).abs() < 1e-12);
    }

    #[test]
    fn log_density_correlated_case() {
        // cov [[2,1],[1,2]], x = (1,1): quad = 2/3, log_det = ln 3
        // => -0.5 * (2 ln(2pi) + ln 3 + 2/3)
        let (mean, cov) = density_2d_correlated();
        let mut d = ClusterDensity::new(&mean, &cov);
        let x = DVector::from_column_slice(&[1.0, 1.0]);
        let got = d.log_density(&x, &[0, 1]).unwrap();
        assert!((got - (-2.720_516_544_076_734)).abs() < 1e-12);
    }

    #[test]
    fn log_density_marginal_subset() {
        // Marginal of variable 1 is N(0, 2); at x1 = 1:
        // -0.5 * (ln(2pi) + ln 2 + 0.5)
        let (mean, cov) = density_2d_correlated();
        let mut d = ClusterDensity::new(&mean, &cov);
        let x = DVector::from_column_slice(&[f64::NAN, 1.0]);
        let got = d.log_density(&x, &[1]).unwrap();
        assert!((got - (-1.515_512_123_484_645_3)).abs() < 1e-12);
    }

    #[test]
    fn log_density_empty_subset_is_zero() {
        let (mean, cov) = density_2d_correlated();
        let mut d = ClusterDensity::new(&mean, &cov);
        let x = DVector::from_column_slice(&[f64::NAN, f64::NAN]);
        assert_eq!(d.log_density(&x, &[]).unwrap(), 0.0);
    }

    #[test]
    fn log_density_rejects_indefinite() {
        let mean = DVector::from_column_slice(&[0.0, 0.0]);
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let mut d = ClusterDensity::new(&mean, &cov);
        let x = DVector::from_column_slice(&[0.0, 0.0]);
        match d.log_density(&x, &[0, 1]) {
            Err(Error::NonPositiveDefinite { cluster: None, cells }) => {
                assert_eq!(cells, vec![0, 1]);
            }
            other => panic!("expected NonPositiveDefinite, got {other:?}"),
        }
    }

    #[test]
    fn scalar_moments_match_regression_line() {
        // Unit variances, correlation 0.9, conditioning on x0 = 1:
        // predictive mean 0.9, predictive variance 1 - 0.81 = 0.19.
        let mean = DVector::from_column_slice(&[0.0, 0.0]);
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.9, 0.9, 1.0]);
        let mut d = ClusterDensity::new(&mean, &cov);
        let x = DVector::from_column_slice(&[1.0, f64::NAN]);
        let (mu, var) = d.scalar_moments(1, &x, &[0]).unwrap();
        assert!((mu - 0.9).abs() < 1e-14);
        assert!((var - 0.19).abs() < 1e-14);
    }

    #[test]
    fn scalar_moments_empty_conditioning_is_marginal() {
        let mean = DVector::from_column_slice(&[3.0, -2.0]);
        let cov = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 9.0]);
        let mut d = ClusterDensity::new(&mean, &cov);
        let x = DVector::from_column_slice(&[f64::NAN, f64::NAN]);
        let (mu, var) = d.scalar_moments(1, &x, &[]).unwrap();
        assert_eq!(mu, -2.0);
        assert_eq!(var, 9.0);
    }

    #[test]
    fn vector_moments_match_hand_schur_complement() {
        // cov = [[4,2,1],[2,3,1],[1,1,2]], mean (1,2,3), observe x0 = 3:
        // gain = (0.5, 0.25), cond mean = (3, 3.5),
        // cond cov = [[2, 0.5], [0.5, 1.75]].
        let mean = DVector::from_column_slice(&[1.0, 2.0, 3.0]);
        let cov = DMatrix::from_row_slice(3, 3, &[4.0, 2.0, 1.0, 2.0, 3.0, 1.0, 1.0, 1.0, 2.0]);
        let mut d = ClusterDensity::new(&mean, &cov);
        let x = DVector::from_column_slice(&[3.0, f64::NAN, f64::NAN]);
        let (mu, sigma) = d.vector_moments(&x, &[0], &[1, 2]).unwrap();
        assert!((mu[0] - 3.0).abs() < 1e-14);
        assert!((mu[1] - 3.5).abs() < 1e-14);
        let expected = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.75]);
        assert!((sigma - expected).norm() < 1e-14);
    }

    #[test]
    fn vector_moments_degenerate_blocks() {
        let (mean, cov) = density_2d_correlated();
        let mut d = ClusterDensity::new(&mean, &cov);
        let x = DVector::from_column_slice(&[1.0, 1.0]);

        // Nothing unreliable: empty outputs.
        let (mu, sigma) = d.vector_moments(&x, &[0, 1], &[]).unwrap();
        assert_eq!(mu.len(), 0);
        assert_eq!(sigma.shape(), (0, 0));

        // Nothing reliable: marginal moments.
        let (mu, sigma) = d.vector_moments(&x, &[], &[0, 1]).unwrap();
        assert_eq!(mu, DVector::from_column_slice(&[0.0, 0.0]));
        assert_eq!(sigma, cov);
    }

    #[test]
    fn factor_cache_reuses_patterns() {
        let (mean, cov) = density_2d_correlated();
        let mut d = ClusterDensity::new(&mean, &cov);
        let x = DVector::from_column_slice(&[1.0, 1.0]);
        let a = d.log_density(&x, &[0, 1]).unwrap();
        let b = d.log_density(&x, &[0, 1]).unwrap();
        assert_eq!(a, b);
        assert_eq!(d.cache.len(), 1);
    }

    #[test]
    fn objective_single_cluster_is_sum_of_log_densities() {
        let values = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 0.0, 0.0, -1.0, 2.0]);
        let data = DataSet::from_complete(values, None).unwrap();
        let (mean, cov) = density_2d_correlated();
        let params = ClusterParams {
            weights: DVector::from_column_slice(&[1.0]),
            means: vec![mean.clone()],
            covariances: vec![cov.clone()],
        };
        let w = DMatrix::from_element(3, 2, true);
        let u = DMatrix::from_element(3, 1, 1.0);
        let got = objective(&data, &w, &u, &params, 1.0).unwrap();
        let mut d = ClusterDensity::new(&mean, &cov);
        let expect: f64 = (0..3)
            .map(|i| d.log_density(&data.unit(i), &[0, 1]).unwrap())
            .sum();
        assert!((got - expect).abs() < 1e-12);
    }

    #[test]
    fn objective_skips_zero_membership() {
        // Second cluster has zero weight everywhere; ln(0) terms must not
        // reach the sum because the matching memberships are zero.
        let values = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let data = DataSet::from_complete(values, None).unwrap();
        let params = ClusterParams {
            weights: DVector::from_column_slice(&[1.0, 0.0]),
            means: vec![
                DVector::from_column_slice(&[0.0]),
                DVector::from_column_slice(&[5.0]),
            ],
            covariances: vec![
                DMatrix::from_row_slice(1, 1, &[1.0]),
                DMatrix::from_row_slice(1, 1, &[1.0]),
            ],
        };
        let w = DMatrix::from_element(2, 1, true);
        let u = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]);
        let got = objective(&data, &w, &u, &params, 2.0).unwrap();
        assert!(got.is_finite());
        // Equals the single-cluster sum since cluster 2 contributes nothing.
        let expect = -0.918_938_533_204_672_7 * 2.0 - 0.5;
        assert!((got - expect).abs() < 1e-12);
    }

    #[test]
    fn objective_weights_memberships_by_exponent() {
        let values = DMatrix::from_row_slice(1, 1, &[0.0]);
        let data = DataSet::from_complete(values, None).unwrap();
        let params = ClusterParams {
            weights: DVector::from_column_slice(&[0.5, 0.5]),
            means: vec![
                DVector::from_column_slice(&[0.0]),
                DVector::from_column_slice(&[0.0]),
            ],
            covariances: vec![
                DMatrix::from_row_slice(1, 1, &[1.0]),
                DMatrix::from_row_slice(1, 1, &[1.0]),
            ],
        };
        let w = DMatrix::from_element(1, 1, true);
        let u = DMatrix::from_row_slice(1, 2, &[0.5, 0.5]);
        // Both clusters give the same term t = ln(0.5) + logphi(0).
        let t = 0.5_f64.ln() - 0.918_938_533_204_672_7;
        let got = objective(&data, &w, &u, &params, 2.0).unwrap();
        assert!((got - 2.0 * 0.25 * t).abs() < 1e-14);
    }
}
