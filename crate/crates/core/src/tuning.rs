//! Diagnostics for choosing the settings of a fit: objective curves over a
//! grid, sorted per-variable score plots with knee detection, assignment
//! sharpness summaries, and a flagged-cell report.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::data::{argmax_slice, DataSet, FitConfig, FitResult};
use crate::error::Result;
use crate::estimation::{compute_delta, fit};
use crate::stats::{mad, median};

/// Default membership level under which a unit counts as weakly assigned.
pub const DEFAULT_WA_THRESHOLD: f64 = 0.9;

/// One fitted grid point of the tuning surface.
#[derive(Debug, Clone, PartialEq)]
pub struct TuningCell {
    pub k: usize,
    pub alpha: f64,
    pub objective: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Fit every combination of the given cluster counts and trimming levels
/// and report the attained objectives. Grid points whose fit fails are
/// omitted rather than failing the whole scan.
pub fn objective_curves(
    data: &DataSet,
    base: &FitConfig,
    ks: &[usize],
    alphas: &[f64],
) -> Vec<TuningCell> {
    let grid: Vec<(usize, f64)> = ks
        .iter()
        .flat_map(|&k| alphas.iter().map(move |&alpha| (k, alpha)))
        .collect();
    grid.par_iter()
        .map(|&(k, alpha)| {
            let mut cfg = base.clone();
            cfg.k = k;
            cfg.alpha = alpha;
            fit(data, &cfg).ok().map(|r| TuningCell {
                k,
                alpha,
                objective: r.objective,
                converged: r.converged,
                iterations: r.iterations,
            })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// Per-variable sorted score curves at a converged fit.
///
/// For each variable, the cell scores are recomputed at the fitted state,
/// restricted to observed cells, and sorted ascending; point `t` gets
/// x-coordinate `(t + 1) / n_observed`. Scanning a curve left to right
/// thus walks from the worst-fitting cells to the best, and a contaminated
/// variable shows a steep early segment that flattens once the clean cells
/// begin.
pub fn delta_plot_data(data: &DataSet, result: &FitResult) -> Result<Vec<Vec<(f64, f64)>>> {
    let delta = compute_delta(
        data,
        &result.indicator,
        &result.membership,
        &result.params,
        result.config.m,
    )?;
    let mut curves = Vec::with_capacity(data.n_vars());
    for j in 0..data.n_vars() {
        let mut scores: Vec<f64> = (0..data.n_units())
            .filter(|&i| data.observed()[(i, j)])
            .map(|i| delta[(i, j)])
            .collect();
        scores.sort_by(f64::total_cmp);
        let n_obs = scores.len() as f64;
        curves.push(
            scores
                .into_iter()
                .enumerate()
                .map(|(t, s)| ((t as f64 + 1.0) / n_obs, s))
                .collect(),
        );
    }
    Ok(curves)
}

/// Index of the knee of an increasing curve: the point farthest above the
/// chord between its endpoints after both axes are rescaled to [0, 1].
///
/// Needs at least three points and nonzero spread on both axes; returns
/// `None` otherwise. Ties go to the earliest point.
pub fn knee_index(points: &[(f64, f64)]) -> Option<usize> {
    if points.len() < 3 {
        return None;
    }
    let (x0, y0) = points[0];
    let (x1, y1) = *points.last().unwrap();
    if x1 == x0 || y1 == y0 {
        return None;
    }
    let mut best = 0;
    let mut best_dist = f64::NEG_INFINITY;
    for (t, &(x, y)) in points.iter().enumerate() {
        let xs = (x - x0) / (x1 - x0);
        let ys = (y - y0) / (y1 - y0);
        let dist = ys - xs;
        if dist > best_dist {
            best_dist = dist;
            best = t;
        }
    }
    Some(best)
}

/// The knee location of one variable's sorted score curve, as the
/// proportion of observed cells at or below the knee.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableKnee {
    pub variable: usize,
    pub proportion: f64,
}

/// Knee diagnostics for one trimming level.
#[derive(Debug, Clone, PartialEq)]
pub struct KneeSummary {
    pub alpha: f64,
    /// Knees of the variables whose curves had one.
    pub knees: Vec<VariableKnee>,
    /// Median of (knee proportion - alpha) across those variables; a value
    /// near zero means the trimming level matches the contamination the
    /// fitted model actually sees. NaN when no variable had a knee.
    pub median_diff: f64,
    /// Robust spread of the same differences.
    pub mad_diff: f64,
}

/// Fit once per trimming level and report where each variable's sorted
/// score curve bends. The level whose knees sit closest to it (smallest
/// `|median_diff|`) is the one matching the data's contamination.
pub fn knee_points(data: &DataSet, base: &FitConfig, alphas: &[f64]) -> Result<Vec<KneeSummary>> {
    let mut summaries = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let mut cfg = base.clone();
        cfg.alpha = alpha;
        let result = fit(data, &cfg)?;
        let curves = delta_plot_data(data, &result)?;
        let mut knees = Vec::new();
        let mut diffs = Vec::new();
        for (j, curve) in curves.iter().enumerate() {
            if let Some(idx) = knee_index(curve) {
                let proportion = curve[idx].0;
                knees.push(VariableKnee { variable: j, proportion });
                diffs.push(proportion - alpha);
            }
        }
        summaries.push(KneeSummary {
            alpha,
            knees,
            median_diff: median(&diffs),
            mad_diff: mad(&diffs),
        });
    }
    Ok(summaries)
}

/// A unit whose best membership stays under the weak-assignment threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakAssignment {
    pub unit: usize,
    pub max_membership: f64,
}

/// How sharp the fitted assignments are.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentStats {
    /// Fraction of units whose best membership is exactly 1.
    pub hard_fraction: f64,
    /// Fraction of units whose best membership is below the threshold.
    pub weak_fraction: f64,
    /// The threshold the weak fraction was computed against.
    pub threshold: f64,
    /// The weakly assigned units, weakest first.
    pub weak: Vec<WeakAssignment>,
}

/// Summarize a membership matrix: how many units are assigned crisply,
/// how many only weakly (best membership below `threshold`), and which.
pub fn assignment_stats(membership: &DMatrix<f64>, threshold: f64) -> AssignmentStats {
    let n = membership.nrows();
    let mut hard = 0usize;
    let mut weak = Vec::new();
    for i in 0..n {
        let max = membership.row(i).iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == 1.0 {
            hard += 1;
        }
        if max < threshold {
            weak.push(WeakAssignment { unit: i, max_membership: max });
        }
    }
    weak.sort_by(|a, b| {
        a.max_membership
            .total_cmp(&b.max_membership)
            .then(a.unit.cmp(&b.unit))
    });
    AssignmentStats {
        hard_fraction: hard as f64 / n as f64,
        weak_fraction: weak.len() as f64 / n as f64,
        threshold,
        weak,
    }
}

/// One observed cell that the fit flagged as unreliable.
#[derive(Debug, Clone, PartialEq)]
pub struct FlaggedCell {
    pub unit: usize,
    pub variable: usize,
    /// The unit's best cluster.
    pub cluster: usize,
    pub original: f64,
    pub imputed: f64,
    /// 1 when the original sits above its imputation, -1 below, 0 equal.
    pub direction: i8,
}

/// One missing cell and the value imputed for it.
#[derive(Debug, Clone, PartialEq)]
pub struct MissingCell {
    pub unit: usize,
    pub variable: usize,
    pub cluster: usize,
    pub imputed: f64,
}

/// Flagged-cell report of a fit.
#[derive(Debug, Clone, PartialEq)]
pub struct OutlierSummary {
    /// Entry `(j, c)`: fraction of all units whose cell in variable `j`
    /// was observed but flagged while the unit sat in cluster `c`.
    pub flagged_proportions: DMatrix<f64>,
    /// Every flagged observed cell, in row-major order.
    pub flagged: Vec<FlaggedCell>,
    /// Every missing cell with its imputation, in row-major order.
    pub missing: Vec<MissingCell>,
}

/// Cross the fitted reliability pattern with the data's missingness:
/// observed-but-unreliable cells become flagged outliers (with their
/// imputations and directions), missing cells are listed with their
/// imputations, and flag rates are tabulated by variable and cluster.
pub fn outlier_summary(data: &DataSet, result: &FitResult) -> OutlierSummary {
    let n = data.n_units();
    let j_vars = data.n_vars();
    let k = result.params.k();
    let labels: Vec<usize> = (0..n)
        .map(|i| argmax_slice(result.membership.row(i).iter().copied()))
        .collect();
    let mut flagged_counts = DMatrix::zeros(j_vars, k);
    let mut flagged = Vec::new();
    let mut missing = Vec::new();
    for i in 0..n {
        for j in 0..j_vars {
            if result.indicator[(i, j)] {
                continue;
            }
            let cluster = labels[i];
            let imputed = result.completed[(i, j)];
            if data.observed()[(i, j)] {
                let original = data.values()[(i, j)];
                let direction = if original > imputed {
                    1
                } else if original < imputed {
                    -1
                } else {
                    0
                };
                flagged.push(FlaggedCell { unit: i, variable: j, cluster, original, imputed, direction });
                flagged_counts[(j, cluster)] += 1.0;
            } else {
                missing.push(MissingCell { unit: i, variable: j, cluster, imputed });
            }
        }
    }
    OutlierSummary {
        flagged_proportions: flagged_counts / n as f64,
        flagged,
        missing,
    }
}
