//! The fitting loop for one initialization and the multi-start driver.

use rayon::prelude::*;

use crate::data::{DataSet, FitConfig, FitResult};
use crate::error::{Error, Result};
use crate::estimation::{
    completed_matrix, compute_delta, concentration_step, log_fit_matrix, m_step,
    update_membership,
};
use crate::gaussian::objective;
use crate::init::initialize;

/// Run the fitting loop from one seeded initialization.
///
/// Each pass re-selects the reliable cells, updates the memberships, and
/// re-estimates the parameters; the loop stops when the objective improves
/// by less than `config.tol` or after `config.max_iter` passes. A pass
/// that would lower the objective is discarded — the previous state is
/// kept — so the reported trace is nondecreasing and the returned state is
/// the best one visited.
pub fn fit_single(data: &DataSet, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    let init = initialize(data, config)?;
    let mut w = init.indicator;
    let mut u = init.membership;
    let mut params = init.params;

    let mut trace: Vec<f64> = Vec::new();
    let mut prev_obj = f64::NEG_INFINITY;
    let mut converged = false;

    for _ in 0..config.max_iter {
        let previous = (w.clone(), u.clone(), params.clone());

        let delta = compute_delta(data, &w, &u, &params, config.m)?;
        w = concentration_step(&delta, data.observed(), config.alpha)?;
        let log_fit = log_fit_matrix(data, &w, &params)?;
        u = update_membership(&log_fit, config.m);
        params = m_step(data, &w, &u, &params, config)?;
        let obj = objective(data, &w, &u, &params, config.m)?;

        if obj - prev_obj < config.tol {
            converged = true;
            if obj < prev_obj {
                // The pass went downhill (the reliability reselection is a
                // heuristic and may overshoot near the optimum): keep the
                // previous state instead.
                (w, u, params) = previous;
            } else {
                trace.push(obj);
                prev_obj = obj;
            }
            break;
        }
        trace.push(obj);
        prev_obj = obj;
    }

    let labels: Vec<usize> = (0..u.nrows())
        .map(|i| crate::data::argmax_slice(u.row(i).iter().copied()))
        .collect();
    let completed = completed_matrix(data, &w, &labels, &params)?;

    Ok(FitResult {
        config: config.clone(),
        params,
        membership: u,
        indicator: w,
        completed,
        objective: prev_obj,
        iterations: trace.len(),
        objective_trace: trace,
        converged,
        start_index: 0,
    })
}

/// Whether an error reflects a problem with the inputs rather than an
/// unlucky initialization, so retrying with another seed cannot help.
fn is_fatal(error: &Error) -> bool {
    matches!(
        error,
        Error::InvalidConfig(_)
            | Error::InvalidData(_)
            | Error::DimensionMismatch(_)
            | Error::TooFewUnits { .. }
            | Error::EmptyReliableBudget { .. }
            | Error::InvalidSpec(_)
    )
}

/// Fit with `config.n_starts` random initializations (seeds
/// `config.seed + s` for start `s`) and keep the run with the highest
/// objective, breaking ties toward the lower start index.
///
/// Starts that degenerate (a collapsed cluster, a failed factorization)
/// are dropped; input errors abort immediately. If every start fails the
/// error is [`Error::AllStartsDegenerate`].
pub fn fit(data: &DataSet, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    let runs: Vec<(usize, Result<FitResult>)> = (0..config.n_starts)
        .into_par_iter()
        .map(|s| {
            let cfg = config.clone().seed(config.seed.wrapping_add(s as u64));
            (s, fit_single(data, &cfg))
        })
        .collect();

    let mut best: Option<FitResult> = None;
    for (s, run) in runs {
        match run {
            Ok(mut result) => {
                result.start_index = s;
                result.config = config.clone();
                if best.as_ref().map_or(true, |b| result.objective > b.objective) {
                    best = Some(result);
                }
            }
            Err(e) if is_fatal(&e) => return Err(e),
            Err(_) => {}
        }
    }
    best.ok_or(Error::AllStartsDegenerate { starts: config.n_starts })
}
