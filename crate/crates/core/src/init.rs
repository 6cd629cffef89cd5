//! Seeded initialization: a marginal robust screen for the starting
//! reliability pattern, and small random groups for starting parameters.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::constraints::{truncate_eigenvalues, EigenSystem};
use crate::data::{ClusterParams, DataSet, FitConfig};
use crate::error::{Error, Result};
use crate::estimation::{log_fit_matrix, update_membership};
use crate::gaussian::compute_h;
use crate::stats::{mad, median};

/// Ridge added to group covariances, relative to the average observed
/// column variance, so tiny groups still factorize.
const RIDGE_REL: f64 = 1e-6;

/// Floor for the robust column scale, guarding columns where more than
/// half the values coincide.
const MAD_FLOOR: f64 = 1e-12;

/// A starting point for the fitting loop.
#[derive(Debug, Clone)]
pub struct InitialState {
    /// Starting reliability pattern from the marginal robust screen.
    pub indicator: DMatrix<bool>,
    /// Starting fuzzy memberships.
    pub membership: DMatrix<f64>,
    /// Starting mixture parameters.
    pub params: ClusterParams,
}

/// Build a starting state for `config` on `data`, seeded by `config.seed`.
///
/// Reliability starts from a per-column robust screen: the cells with the
/// smallest standardized distances `|x - median| / mad` are kept, as many
/// per column as the reliability budget allows. Parameters start from
/// random disjoint groups of units (group size `n_vars + 1` when there are
/// enough units, else 2), with screened-out cells replaced by column
/// medians, a small ridge added to each group covariance, and the
/// eigenvalue-ratio constraint enforced. Memberships are the optimal
/// update for these starting parameters.
pub fn initialize(data: &DataSet, config: &FitConfig) -> Result<InitialState> {
    config.validate()?;
    let n = data.n_units();
    let j_vars = data.n_vars();
    let k = config.k;
    if n < 2 * k {
        return Err(Error::TooFewUnits { n, required: 2 * k });
    }

    // Marginal robust screen.
    let mut indicator = DMatrix::from_element(n, j_vars, false);
    let mut col_medians = vec![0.0_f64; j_vars];
    let mut var_sum = 0.0;
    for j in 0..j_vars {
        let observed: Vec<(usize, f64)> = (0..n)
            .filter(|&i| data.observed()[(i, j)])
            .map(|i| (i, data.values()[(i, j)]))
            .collect();
        let values: Vec<f64> = observed.iter().map(|&(_, v)| v).collect();
        let h = compute_h(config.alpha, values.len());
        if h == 0 {
            return Err(Error::EmptyReliableBudget { variable: j });
        }
        let center = median(&values);
        let scale = mad(&values).max(MAD_FLOOR);
        col_medians[j] = center;
        let col_mean = values.iter().sum::<f64>() / values.len() as f64;
        var_sum += values.iter().map(|v| (v - col_mean).powi(2)).sum::<f64>()
            / values.len() as f64;

        let mut scored: Vec<(f64, usize)> = observed
            .iter()
            .map(|&(i, v)| ((v - center).abs() / scale, i))
            .collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, i) in scored.iter().take(h) {
            indicator[(i, j)] = true;
        }
    }
    let ridge = RIDGE_REL * var_sum / j_vars as f64;

    // Random disjoint groups seed the parameters.
    let group_size = if n >= k * (j_vars + 1) { j_vars + 1 } else { 2 };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let picks = rand::seq::index::sample(&mut rng, n, k * group_size).into_vec();

    let mut means = Vec::with_capacity(k);
    let mut systems = Vec::with_capacity(k);
    for c in 0..k {
        let group = &picks[c * group_size..(c + 1) * group_size];
        let rows: Vec<DVector<f64>> = group
            .iter()
            .map(|&i| {
                DVector::from_fn(j_vars, |j, _| {
                    if indicator[(i, j)] {
                        data.values()[(i, j)]
                    } else {
                        col_medians[j]
                    }
                })
            })
            .collect();
        let mut mean = DVector::zeros(j_vars);
        for row in &rows {
            mean += row;
        }
        mean /= group_size as f64;
        let mut cov = DMatrix::from_diagonal_element(j_vars, j_vars, ridge);
        for row in &rows {
            let centered = row - &mean;
            cov.ger(1.0 / group_size as f64, &centered, &centered, 1.0);
        }
        systems.push(EigenSystem::from_covariance(&cov, 1.0).map_err(|e| e.with_cluster(c))?);
        means.push(mean);
    }
    let covariances = truncate_eigenvalues(&systems, config.c)?;
    let params = ClusterParams {
        weights: DVector::from_element(k, 1.0 / k as f64),
        means,
        covariances,
    };

    let log_fit = log_fit_matrix(data, &indicator, &params)?;
    let membership = update_membership(&log_fit, config.m);

    Ok(InitialState { indicator, membership, params })
}
