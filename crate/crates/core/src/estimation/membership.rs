//! Per-cluster fit scores for whole units, and the membership update that
//! maximizes the fitting objective row by row.

use nalgebra::DMatrix;

use crate::data::{argmax_slice, ClusterParams, DataSet};
use crate::error::Result;
use crate::gaussian::{reliable_cells, ClusterDensity};

/// The `n x k` matrix of unit-level fit scores: entry `(i, c)` is
/// `ln(weight_c)` plus the log-density of unit `i`'s reliable cells under
/// cluster `c`.
pub fn log_fit_matrix(
    data: &DataSet,
    w: &DMatrix<bool>,
    params: &ClusterParams,
) -> Result<DMatrix<f64>> {
    let n = data.n_units();
    let k = params.k();
    let mut densities: Vec<ClusterDensity> = (0..k)
        .map(|c| ClusterDensity::new(&params.means[c], &params.covariances[c]))
        .collect();
    let log_weights: Vec<f64> = (0..k).map(|c| params.weights[c].ln()).collect();
    let mut log_fit = DMatrix::zeros(n, k);
    for i in 0..n {
        let x = data.unit(i);
        let cells = reliable_cells(w, i);
        for (c, density) in densities.iter_mut().enumerate() {
            log_fit[(i, c)] = log_weights[c]
                + density.log_density(&x, &cells).map_err(|e| e.with_cluster(c))?;
        }
    }
    Ok(log_fit)
}

/// Membership matrix maximizing the fitting objective for fixed scores:
/// the row-wise maximizer of `sum_c u_c^m * L_c` over the probability
/// simplex.
///
/// With `m = 1`, or whenever a row's best score is nonnegative, the
/// maximizer is crisp: all mass on the best cluster (ties toward the
/// smaller index). Otherwise all scores are negative and the interior
/// stationary point `u_c = 1 / sum_c' (L_c / L_c')^(1/(m-1))` is the
/// maximum; rows are renormalized to undo rounding.
pub fn update_membership(log_fit: &DMatrix<f64>, m: f64) -> DMatrix<f64> {
    let n = log_fit.nrows();
    let k = log_fit.ncols();
    let mut u = DMatrix::zeros(n, k);
    for i in 0..n {
        let row: Vec<f64> = log_fit.row(i).iter().copied().collect();
        let best = argmax_slice(row.iter().copied());
        if m == 1.0 || row[best] >= 0.0 {
            u[(i, best)] = 1.0;
            continue;
        }
        let exponent = 1.0 / (m - 1.0);
        let mut total = 0.0;
        for c in 0..k {
            let denom: f64 = row.iter().map(|&other| (row[c] / other).powf(exponent)).sum();
            // The self-ratio contributes 1, so denom >= 1 and the division
            // is safe; an overflowing denom correctly underflows to 0.
            u[(i, c)] = 1.0 / denom;
            total += u[(i, c)];
        }
        if total.is_finite() && total > 0.0 {
            for c in 0..k {
                u[(i, c)] /= total;
            }
        } else {
            for c in 0..k {
                u[(i, c)] = 0.0;
            }
            u[(i, best)] = 1.0;
        }
    }
    u
}
