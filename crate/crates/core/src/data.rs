//! Data containers, fit configuration, and result types.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A rectangular data set with an explicit missingness pattern.
///
/// `values` is `n x j`; a cell is treated as missing exactly when the
/// corresponding entry of `observed` is `false`. Missing cells are stored
/// as NaN so accidental use poisons downstream arithmetic instead of
/// silently biasing it.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSet {
    values: DMatrix<f64>,
    observed: DMatrix<bool>,
    variable_names: Vec<String>,
}

impl DataSet {
    /// Build a data set from a value matrix and a missingness mask.
    ///
    /// Observed cells must be finite. Missing cells may hold anything;
    /// they are overwritten with NaN.
    pub fn new(
        mut values: DMatrix<f64>,
        observed: DMatrix<bool>,
        variable_names: Option<Vec<String>>,
    ) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::InvalidData("data matrix is empty".into()));
        }
        if values.shape() != observed.shape() {
            return Err(Error::DimensionMismatch(format!(
                "values are {}x{} but observation mask is {}x{}",
                values.nrows(),
                values.ncols(),
                observed.nrows(),
                observed.ncols()
            )));
        }
        for i in 0..values.nrows() {
            for j in 0..values.ncols() {
                if observed[(i, j)] {
                    if !values[(i, j)].is_finite() {
                        return Err(Error::InvalidData(format!(
                            "observed cell ({i}, {j}) is not finite"
                        )));
                    }
                } else {
                    values[(i, j)] = f64::NAN;
                }
            }
        }
        let names = match variable_names {
            Some(names) => {
                if names.len() != values.ncols() {
                    return Err(Error::DimensionMismatch(format!(
                        "{} variable names for {} columns",
                        names.len(),
                        values.ncols()
                    )));
                }
                names
            }
            None => (0..values.ncols()).map(|j| format!("V{}", j + 1)).collect(),
        };
        Ok(DataSet { values, observed, variable_names: names })
    }

    /// Build a fully observed data set.
    pub fn from_complete(values: DMatrix<f64>, variable_names: Option<Vec<String>>) -> Result<Self> {
        let observed = DMatrix::from_element(values.nrows(), values.ncols(), true);
        DataSet::new(values, observed, variable_names)
    }

    /// Number of units (rows).
    pub fn n_units(&self) -> usize {
        self.values.nrows()
    }

    /// Number of variables (columns).
    pub fn n_vars(&self) -> usize {
        self.values.ncols()
    }

    /// The value matrix; missing cells are NaN.
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// The observation mask; `true` means the cell was recorded.
    pub fn observed(&self) -> &DMatrix<bool> {
        &self.observed
    }

    /// Variable names, one per column.
    pub fn variable_names(&self) -> &[String] {
        &self.variable_names
    }

    /// Row `i` as an owned column vector.
    pub fn unit(&self, i: usize) -> DVector<f64> {
        self.values.row(i).transpose()
    }

    /// Number of observed cells in column `j`.
    pub fn n_observed(&self, j: usize) -> usize {
        (0..self.n_units()).filter(|&i| self.observed[(i, j)]).count()
    }

    /// Observed values of column `j`, in row order.
    pub fn observed_column(&self, j: usize) -> Vec<f64> {
        (0..self.n_units())
            .filter(|&i| self.observed[(i, j)])
            .map(|i| self.values[(i, j)])
            .collect()
    }
}

/// Configuration of a single model fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Number of clusters.
    pub k: usize,
    /// Expected fraction of unreliable cells per variable, in [0, 0.5].
    pub alpha: f64,
    /// Upper bound on the ratio of largest to smallest covariance
    /// eigenvalue across all clusters. Must be >= 1.
    pub c: f64,
    /// Fuzziness exponent; 1 gives crisp assignments, larger values
    /// spread membership across clusters. Must be >= 1.
    pub m: f64,
    /// Force equal cluster weights instead of estimating them.
    pub equal_weights: bool,
    /// Stop when the objective improves by less than this amount.
    pub tol: f64,
    /// Hard cap on the number of passes of the fitting loop.
    pub max_iter: usize,
    /// Number of random initializations tried by [`crate::fit`].
    pub n_starts: usize,
    /// Seed for the random initializations.
    pub seed: u64,
}

impl FitConfig {
    /// A configuration with the default settings for `k` clusters:
    /// `alpha = 0`, essentially unconstrained eigenvalue ratio,
    /// crisp memberships, estimated weights, `tol = 1e-6`,
    /// `max_iter = 500`, 20 starts, seed 0.
    pub fn new(k: usize) -> Self {
        FitConfig {
            k,
            alpha: 0.0,
            c: 1e12,
            m: 1.0,
            equal_weights: false,
            tol: 1e-6,
            max_iter: 500,
            n_starts: 20,
            seed: 0,
        }
    }

    /// Set the expected fraction of unreliable cells per variable.
    pub fn alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    /// Set the eigenvalue-ratio bound.
    pub fn eigenvalue_ratio(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    /// Set the fuzziness exponent.
    pub fn fuzzifier(mut self, m: f64) -> Self {
        self.m = m;
        self
    }

    /// Estimate cluster weights (`false`) or pin them to 1/k (`true`).
    pub fn equal_weights(mut self, equal: bool) -> Self {
        self.equal_weights = equal;
        self
    }

    /// Set the convergence tolerance on the objective.
    pub fn tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    /// Set the iteration cap.
    pub fn max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    /// Set the number of random starts.
    pub fn n_starts(mut self, n_starts: usize) -> Self {
        self.n_starts = n_starts;
        self
    }

    /// Set the seed for the random starts.
    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Check every field against its allowed range.
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if !(0.0..=0.5).contains(&self.alpha) {
            return Err(Error::InvalidConfig(format!(
                "alpha must lie in [0, 0.5], got {}",
                self.alpha
            )));
        }
        if !self.c.is_finite() || self.c < 1.0 {
            return Err(Error::InvalidConfig(format!(
                "eigenvalue ratio bound must be finite and >= 1, got {}",
                self.c
            )));
        }
        if !self.m.is_finite() || self.m < 1.0 {
            return Err(Error::InvalidConfig(format!(
                "fuzzifier must be finite and >= 1, got {}",
                self.m
            )));
        }
        if !self.tol.is_finite() || self.tol <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be at least 1".into()));
        }
        if self.n_starts == 0 {
            return Err(Error::InvalidConfig("n_starts must be at least 1".into()));
        }
        Ok(())
    }
}

/// Mixture parameters: weights, one mean per cluster, one covariance per cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterParams {
    /// Cluster weights; nonnegative, summing to 1.
    pub weights: DVector<f64>,
    /// Cluster means, each of length `j`.
    pub means: Vec<DVector<f64>>,
    /// Cluster covariances, each `j x j`.
    pub covariances: Vec<DMatrix<f64>>,
}

impl ClusterParams {
    /// Number of clusters.
    pub fn k(&self) -> usize {
        self.means.len()
    }
}

/// Everything a finished fit reports.
#[derive(Debug, Clone)]
pub struct FitResult {
    /// The configuration the fit ran with.
    pub config: FitConfig,
    /// Final mixture parameters.
    pub params: ClusterParams,
    /// Final fuzzy membership matrix, `n x k`; rows sum to 1.
    pub membership: DMatrix<f64>,
    /// Final reliability indicator, `n x j`; `false` marks cells that are
    /// missing or flagged as unreliable.
    pub indicator: DMatrix<bool>,
    /// Data with unreliable and missing cells replaced by their fitted
    /// conditional expectations under each unit's best cluster.
    pub completed: DMatrix<f64>,
    /// Final objective value.
    pub objective: f64,
    /// Objective value after every pass, in order.
    pub objective_trace: Vec<f64>,
    /// Number of passes performed.
    pub iterations: usize,
    /// Whether the stop came from the tolerance rather than the iteration cap.
    pub converged: bool,
    /// Index of the random start that produced this result.
    pub start_index: usize,
}

impl FitResult {
    /// Hard cluster labels: the argmax of each membership row, with ties
    /// broken toward the smaller cluster index.
    pub fn argmax_labels(&self) -> Vec<usize> {
        (0..self.membership.nrows())
            .map(|i| argmax_slice(self.membership.row(i).iter().copied()))
            .collect()
    }
}

/// Index of the largest value, first occurrence winning ties.
pub(crate) fn argmax_slice(values: impl Iterator<Item = f64>) -> usize {
    let mut best_idx = 0;
    let mut best = f64::NEG_INFINITY;
    for (idx, v) in values.enumerate() {
        if v > best {
            best = v;
            best_idx = idx;
        }
    }
    best_idx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_poisons_missing_cells() {
        let values = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let observed = DMatrix::from_row_slice(2, 2, &[true, false, true, true]);
        let ds = DataSet::new(values, observed, None).unwrap();
        assert!(ds.values()[(0, 1)].is_nan());
        assert_eq!(ds.values()[(1, 1)], 4.0);
        assert_eq!(ds.n_observed(1), 1);
        assert_eq!(ds.observed_column(1), vec![4.0]);
    }

    #[test]
    fn dataset_rejects_nonfinite_observed() {
        let values = DMatrix::from_row_slice(1, 2, &[1.0, f64::NAN]);
        let observed = DMatrix::from_element(1, 2, true);
        assert!(matches!(
            DataSet::new(values, observed, None),
            Err(Error::InvalidData(_))
        ));
    }

    #[test]
    fn dataset_rejects_empty_and_mismatched() {
        let empty = DMatrix::<f64>::zeros(0, 0);
        let mask = DMatrix::<bool>::from_element(0, 0, true);
        assert!(matches!(DataSet::new(empty, mask, None), Err(Error::InvalidData(_))));

        let values = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        let observed = DMatrix::from_element(2, 1, true);
        assert!(matches!(
            DataSet::new(values, observed, None),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn dataset_default_names() {
        let values = DMatrix::from_row_slice(1, 3, &[1.0, 2.0, 3.0]);
        let ds = DataSet::from_complete(values, None).unwrap();
        assert_eq!(ds.variable_names(), ["V1", "V2", "V3"]);
    }

    #[test]
    fn config_defaults_and_setters() {
        let c = FitConfig::new(3)
            .alpha(0.05)
            .eigenvalue_ratio(50.0)
            .fuzzifier(1.5)
            .equal_weights(true)
            .tol(1e-8)
            .max_iter(100)
            .n_starts(5)
            .seed(42);
        assert_eq!(c.k, 3);
        assert_eq!(c.alpha, 0.05);
        assert_eq!(c.c, 50.0);
        assert_eq!(c.m, 1.5);
        assert!(c.equal_weights);
        assert_eq!(c.tol, 1e-8);
        assert_eq!(c.max_iter, 100);
        assert_eq!(c.n_starts, 5);
        assert_eq!(c.seed, 42);
        c.validate().unwrap();

        let d = FitConfig::new(2);
        assert_eq!(d.alpha, 0.0);
        assert_eq!(d.m, 1.0);
        assert!(!d.equal_weights);
        d.validate().unwrap();
    }

    #[test]
    fn config_validation_rejects_bad_fields() {
        assert!(FitConfig::new(0).validate().is_err());
        assert!(FitConfig::new(2).alpha(0.6).validate().is_err());
        assert!(FitConfig::new(2).alpha(-0.1).validate().is_err());
        assert!(FitConfig::new(2).eigenvalue_ratio(0.5).validate().is_err());
        assert!(FitConfig::new(2).fuzzifier(0.99).validate().is_err());
        assert!(FitConfig::new(2).tol(0.0).validate().is_err());
        assert!(FitConfig::new(2).max_iter(0).validate().is_err());
        assert!(FitConfig::new(2).n_starts(0).validate().is_err());
        // Boundary values are allowed.
        assert!(FitConfig::new(1).alpha(0.5).eigenvalue_ratio(1.0).fuzzifier(1.0).validate().is_ok());
    }

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax_slice([1.0, 3.0, 3.0].into_iter()), 1);
        assert_eq!(argmax_slice([5.0, 5.0].into_iter()), 0);
        assert_eq!(argmax_slice([f64::NEG_INFINITY, -1.0].into_iter()), 1);
    }
}
