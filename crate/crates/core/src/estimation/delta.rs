//! Cellwise fit scores and the concentration step that keeps, per
//! variable, the cells agreeing best with the current model.

use nalgebra::DMatrix;

use crate::data::{ClusterParams, DataSet};
use crate::error::{Error, Result};
use crate::gaussian::{compute_h, reliable_cells, ClusterDensity, LN_2PI};

/// Score every observed cell by how well it agrees with its
/// cluster-weighted conditional prediction.
///
/// The score of cell `(i, j)` is the membership-weighted sum over clusters
/// of the conditional Gaussian log-density of `x_ij`, conditioning on the
/// unit's currently reliable cells other than `j` itself (variable `j` is
/// excluded from the conditioning set whether or not it is currently
/// reliable, so a cell's own value never vouches for itself). Higher means
/// a better fit. Missing cells get NaN.
///
/// Membership weights are raised to the fuzziness exponent `m`, matching
/// their weight in the fitting objective.
pub fn compute_delta(
    data: &DataSet,
    w: &DMatrix<bool>,
    u: &DMatrix<f64>,
    params: &ClusterParams,
    m: f64,
) -> Result<DMatrix<f64>> {
    let n = data.n_units();
    let j_vars = data.n_vars();
    let k = params.k();
    let mut densities: Vec<ClusterDensity> = (0..k)
        .map(|c| ClusterDensity::new(&params.means[c], &params.covariances[c]))
        .collect();
    let mut delta = DMatrix::from_element(n, j_vars, f64::NAN);
    for i in 0..n {
        let x = data.unit(i);
        let reliable = reliable_cells(w, i);
        for j in 0..j_vars {
            if !data.observed()[(i, j)] {
                continue;
            }
            let cond: Vec<usize> = reliable.iter().copied().filter(|&r| r != j).collect();
            let mut score = 0.0;
            for (c, density) in densities.iter_mut().enumerate() {
                let u_ic = u[(i, c)];
                if u_ic == 0.0 {
                    continue;
                }
                let weight = if m == 1.0 { u_ic } else { u_ic.powf(m) };
                let (mean, var) = density
                    .scalar_moments(j, &x, &cond)
                    .map_err(|e| e.with_cluster(c))?;
                let resid = x[j] - mean;
                score -= 0.5 * weight * (LN_2PI + var.ln() + resid * resid / var);
            }
            delta[(i, j)] = score;
        }
    }
    Ok(delta)
}

/// Keep, per variable, the cells with the highest scores.
///
/// For variable `j` with `n_j` observed cells, the `ceil((1 - alpha) * n_j)`
/// best-scoring cells are marked reliable; the rest, and all missing cells,
/// are marked unreliable. Score ties are broken toward the smaller row
/// index. A variable with no observed cells at all has no budget to
/// allocate and is an error.
pub fn concentration_step(
    delta: &DMatrix<f64>,
    observed: &DMatrix<bool>,
    alpha: f64,
) -> Result<DMatrix<bool>> {
    if delta.shape() != observed.shape() {
        return Err(Error::DimensionMismatch(format!(
            "scores are {}x{} but observation mask is {}x{}",
            delta.nrows(),
            delta.ncols(),
            observed.nrows(),
            observed.ncols()
        )));
    }
    let n = delta.nrows();
    let j_vars = delta.ncols();
    let mut w = DMatrix::from_element(n, j_vars, false);
    for j in 0..j_vars {
        let mut scored: Vec<(f64, usize)> = (0..n)
            .filter(|&i| observed[(i, j)])
            .map(|i| (delta[(i, j)], i))
            .collect();
        let h = compute_h(alpha, scored.len());
        if h == 0 {
            return Err(Error::EmptyReliableBudget { variable: j });
        }
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for &(_, i) in scored.iter().take(h) {
            w[(i, j)] = true;
        }
    }
    Ok(w)
}
