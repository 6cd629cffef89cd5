//! Eigenvalue-ratio constraint on cluster covariances: checking it and
//! enforcing it by optimally clipping eigenvalues against a common bound.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative slack used when testing feasibility, so ratios equal to the
/// bound up to rounding count as feasible.
const RATIO_SLACK: f64 = 1e-8;

/// Eigendecomposition of one cluster's covariance together with the
/// membership mass the cluster carries.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    /// Eigenvalues in descending order.
    pub values: DVector<f64>,
    /// Matching eigenvectors as columns.
    pub vectors: DMatrix<f64>,
    /// Membership mass of the cluster; weights the cluster's terms in the
    /// clipping objective.
    pub mass: f64,
}

impl EigenSystem {
    /// Build from explicit eigenvalues, eigenvectors, and mass. The pairs
    /// are sorted so eigenvalues come out descending.
    pub fn new(values: DVector<f64>, vectors: DMatrix<f64>, mass: f64) -> Result<Self> {
        if vectors.nrows() != vectors.ncols() || vectors.nrows() != values.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} eigenvalues with {}x{} eigenvector matrix",
                values.len(),
                vectors.nrows(),
                vectors.ncols()
            )));
        }
        if !mass.is_finite() || mass < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "cluster mass must be finite and nonnegative, got {mass}"
            )));
        }
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
        let sorted_values = DVector::from_fn(values.len(), |r, _| values[order[r]]);
        let sorted_vectors =
            DMatrix::from_fn(vectors.nrows(), vectors.ncols(), |r, c| vectors[(r, order[c])]);
        Ok(EigenSystem { values: sorted_values, vectors: sorted_vectors, mass })
    }

    /// Eigendecompose a symmetric covariance matrix.
    pub fn from_covariance(cov: &DMatrix<f64>, mass: f64) -> Result<Self> {
        if cov.nrows() != cov.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "covariance is {}x{}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        if cov.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("covariance has non-finite entries".into()));
        }
        let sym = 0.5 * (cov + cov.transpose());
        let eigen = sym.symmetric_eigen();
        EigenSystem::new(eigen.eigenvalues, eigen.eigenvectors, mass)
    }

    /// Reassemble the covariance from the stored eigenvectors and the given
    /// eigenvalues, symmetrizing to undo rounding.
    pub fn reconstruct_with(&self, values: &DVector<f64>) -> DMatrix<f64> {
        let d = DMatrix::from_diagonal(values);
        let m = &self.vectors * d * self.vectors.transpose();
        0.5 * (&m + m.transpose())
    }

    /// Reassemble the covariance from the stored eigenpairs.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.reconstruct_with(&self.values)
    }
}

fn cleaned_values(systems: &[EigenSystem]) -> Vec<Vec<f64>> {
    systems
        .iter()
        .map(|s| s.values.iter().map(|&v| v.max(0.0)).collect())
        .collect()
}

/// Whether the pooled eigenvalues already satisfy the ratio bound `c`
/// (largest over smallest, across all clusters), with a small relative
/// slack. Negative eigenvalues are treated as zero. An all-zero set is
/// feasible; a zero eigenvalue next to a positive one is not, since no
/// finite ratio covers it.
pub fn check_ratio(systems: &[EigenSystem], c: f64) -> bool {
    let mut min = f64::INFINITY;
    let mut max = 0.0_f64;
    for values in cleaned_values(systems) {
        for v in values {
            min = min.min(v);
            max = max.max(v);
        }
    }
    if max == 0.0 {
        return true;
    }
    if min == 0.0 {
        return false;
    }
    max <= c * min * (1.0 + RATIO_SLACK)
}

/// Clip all eigenvalues into a band `[t, c * t]`, choosing the level `t`
/// that minimizes the mass-weighted Gaussian fitting loss
/// `sum_k mass_k * sum_j (ln(clip(d_kj)) + d_kj / clip(d_kj))`,
/// and return the covariances rebuilt from the clipped values.
///
/// The loss is piecewise smooth in `t` with breakpoints where some
/// eigenvalue enters or leaves the band, i.e. at the values `d_kj` and
/// `d_kj / c`. On each interval between adjacent breakpoints it is
/// unimodal with an explicit stationary point, so scanning the intervals
/// and comparing exact losses finds the global minimum.
///
/// Inputs already satisfying the bound are rebuilt from their eigenvalues
/// with negatives zeroed and nothing else changed.
///
/// Fails with [`Error::CollapsedEigenvalues`] when every eigenvalue is
/// zero, or when clipping is needed but every positive eigenvalue sits in
/// a cluster of zero mass — in both cases no positive level is defined.
pub fn truncate_eigenvalues(systems: &[EigenSystem], c: f64) -> Result<Vec<DMatrix<f64>>> {
    if systems.is_empty() {
        return Ok(Vec::new());
    }
    if !c.is_finite() || c < 1.0 {
        return Err(Error::InvalidConfig(format!(
            "eigenvalue ratio bound must be finite and >= 1, got {c}"
        )));
    }
    let cleaned = cleaned_values(systems);
    if cleaned.iter().flatten().all(|&v| v == 0.0) {
        return Err(Error::CollapsedEigenvalues);
    }

    if check_ratio(systems, c) {
        return Ok(systems
            .iter()
            .zip(&cleaned)
            .map(|(s, vals)| s.reconstruct_with(&DVector::from_column_slice(vals)))
            .collect());
    }

    // Flatten to (eigenvalue, mass) pairs.
    let pairs: Vec<(f64, f64)> = systems
        .iter()
        .zip(&cleaned)
        .flat_map(|(s, vals)| vals.iter().map(move |&v| (v, s.mass)))
        .collect();
    let weighted_sum: f64 = pairs.iter().map(|&(d, m)| m * d).sum();
    if weighted_sum <= 0.0 {
        return Err(Error::CollapsedEigenvalues);
    }

    // Breakpoints of the clipping configuration.
    let mut edges: Vec<f64> = pairs
        .iter()
        .filter(|&&(d, _)| d > 0.0)
        .flat_map(|&(d, _)| [d, d / c])
        .collect();
    edges.sort_by(f64::total_cmp);
    edges.dedup();

    let mut intervals: Vec<(f64, f64)> = Vec::with_capacity(edges.len() + 1);
    intervals.push((0.0, edges[0]));
    for pair in edges.windows(2) {
        intervals.push((pair[0], pair[1]));
    }
    intervals.push((*edges.last().unwrap(), f64::INFINITY));

    let exact_loss = |t: f64| -> f64 {
        pairs
            .iter()
            .map(|&(d, m)| {
                let clip = d.max(t).min(c * t);
                m * (clip.ln() + d / clip)
            })
            .sum()
    };

    let mut best: Option<(f64, f64)> = None; // (loss, t)
    for &(lo, hi) in &intervals {
        // Inside (lo, hi): d is below the band iff d <= lo, and above it
        // iff d / c >= hi (both d and d / c are breakpoints, so comparing
        // against the interval ends is exact).
        let mut num = 0.0;
        let mut den = 0.0;
        for &(d, m) in &pairs {
            if d <= lo {
                num += m * d;
                den += m;
            } else if d / c >= hi {
                num += m * d / c;
                den += m;
            }
        }
        let candidate = if den > 0.0 {
            (num / den).clamp(lo, hi)
        } else if hi.is_finite() {
            0.5 * (lo + hi)
        } else {
            lo
        };
        if candidate <= 0.0 || !candidate.is_finite() {
            continue;
        }
        let loss = exact_loss(candidate);
        if best.map_or(true, |(best_loss, _)| loss < best_loss) {
            best = Some((loss, candidate));
        }
    }
    let (_, t) = best.ok_or_else(|| Error::Numerical("no feasible clipping level".into()))?;

    Ok(systems
        .iter()
        .zip(&cleaned)
        .map(|(s, vals)| {
            let clipped =
                DVector::from_fn(vals.len(), |r, _| vals[r].max(t).min(c * t));
            s.reconstruct_with(&clipped)
        })
        .collect())
}
