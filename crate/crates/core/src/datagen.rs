//! Synthetic mixture data with cellwise contamination, plus the presets
//! used by the simulation benchmarks.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::ceil_count;

/// Parametric covariance families for synthetic clusters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceKind {
    /// Entry `(r, c)` is `rho^|r - c|`; requires `|rho| < 1`.
    ArPower(f64),
}

impl CovarianceKind {
    /// Build the covariance matrix of the given dimension.
    pub fn materialize(&self, dim: usize) -> Result<DMatrix<f64>> {
        match *self {
            CovarianceKind::ArPower(rho) => {
                if !rho.is_finite() || rho.abs() >= 1.0 {
                    return Err(Error::InvalidSpec(format!(
                        "ar_power coefficient must satisfy |rho| < 1, got {rho}"
                    )));
                }
                Ok(DMatrix::from_fn(dim, dim, |r, c| {
                    rho.powi((r as i32 - c as i32).abs())
                }))
            }
        }
    }
}

/// A specific cell forced to be contaminated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CellOverride {
    pub unit: usize,
    pub variable: usize,
}

/// Full description of a synthetic data set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_units: usize,
    pub n_vars: usize,
    pub n_clusters: usize,
    /// Mixing proportions; positive, summing to 1.
    pub proportions: Vec<f64>,
    /// One mean per cluster, each of length `n_vars`.
    pub means: Vec<Vec<f64>>,
    /// One covariance family per cluster.
    pub covariances: Vec<CovarianceKind>,
    /// Per-variable fraction of cells replaced by contamination.
    pub contamination_rates: Vec<f64>,
    /// Contaminated values are drawn uniformly from `[low, high)`.
    pub contamination_low: f64,
    pub contamination_high: f64,
    /// Extra cells contaminated no matter what the rates say.
    #[serde(default)]
    pub overrides: Vec<CellOverride>,
    pub seed: u64,
}

/// A generated data set with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    /// The contaminated observations handed to a fitting run.
    pub data: DMatrix<f64>,
    /// The same matrix before contamination.
    pub clean: DMatrix<f64>,
    /// True cluster of each unit.
    pub labels: Vec<usize>,
    /// True when a cell was contaminated.
    pub outlier_mask: DMatrix<bool>,
}

fn validate(spec: &SyntheticSpec) -> Result<()> {
    if spec.n_units == 0 || spec.n_vars == 0 || spec.n_clusters == 0 {
        return Err(Error::InvalidSpec(
            "units, variables, and clusters must all be positive".into(),
        ));
    }
    if spec.proportions.len() != spec.n_clusters {
        return Err(Error::InvalidSpec(format!(
            "{} proportions for {} clusters",
            spec.proportions.len(),
            spec.n_clusters
        )));
    }
    if spec.proportions.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
        return Err(Error::InvalidSpec("proportions must be positive".into()));
    }
    let sum: f64 = spec.proportions.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidSpec(format!("proportions sum to {sum}, not 1")));
    }
    if spec.means.len() != spec.n_clusters {
        return Err(Error::InvalidSpec(format!(
            "{} means for {} clusters",
            spec.means.len(),
            spec.n_clusters
        )));
    }
    for (k, mean) in spec.means.iter().enumerate() {
        if mean.len() != spec.n_vars {
            return Err(Error::InvalidSpec(format!(
                "mean of cluster {k} has length {}, expected {}",
                mean.len(),
                spec.n_vars
            )));
        }
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "mean of cluster {k} has non-finite entries"
            )));
        }
    }
    if spec.covariances.len() != spec.n_clusters {
        return Err(Error::InvalidSpec(format!(
            "{} covariances for {} clusters",
            spec.covariances.len(),
            spec.n_clusters
        )));
    }
    if spec.contamination_rates.len() != spec.n_vars {
        return Err(Error::InvalidSpec(format!(
            "{} contamination rates for {} variables",
            spec.contamination_rates.len(),
            spec.n_vars
        )));
    }
    if spec
        .contamination_rates
        .iter()
        .any(|&r| !r.is_finite() || !(0.0..=1.0).contains(&r))
    {
        return Err(Error::InvalidSpec(
            "contamination rates must lie in [0, 1]".into(),
        ));
    }
    if !spec.contamination_low.is_finite()
        || !spec.contamination_high.is_finite()
        || spec.contamination_low >= spec.contamination_high
    {
        return Err(Error::InvalidSpec(format!(
            "contamination range [{}, {}) is empty or non-finite",
            spec.contamination_low, spec.contamination_high
        )));
    }
    let mut seen = HashSet::new();
    for o in &spec.overrides {
        if o.unit >= spec.n_units || o.variable >= spec.n_vars {
            return Err(Error::InvalidSpec(format!(
                "override ({}, {}) is out of range",
                o.unit, o.variable
            )));
        }
        if !seen.insert(*o) {
            return Err(Error::InvalidSpec(format!(
                "override ({}, {}) appears twice",
                o.unit, o.variable
            )));
        }
    }
    Ok(())
}

/// Draw a data set from the spec.
///
/// The generator is fully determined by `spec.seed`: cluster labels are
/// drawn first, then the clean rows in unit order, then for each variable
/// in order the randomly contaminated cells and their values, and finally
/// the override values in list order. Per variable, the number of randomly
/// contaminated cells is `ceil(rate * n_units)` drawn from the cells not
/// already forced by an override, so a variable's total contamination
/// count is that plus its override count.
pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticData> {
    validate(spec)?;
    let n = spec.n_units;
    let j_vars = spec.n_vars;
    let k = spec.n_clusters;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut cumulative = Vec::with_capacity(k);
    let mut acc = 0.0;
    for &p in &spec.proportions {
        acc += p;
        cumulative.push(acc);
    }
    let labels: Vec<usize> = (0..n)
        .map(|_| {
            let v: f64 = rng.random();
            cumulative.iter().position(|&edge| v < edge).unwrap_or(k - 1)
        })
        .collect();

    let factors: Vec<(DVector<f64>, DMatrix<f64>)> = (0..k)
        .map(|c| {
            let cov = spec.covariances[c].materialize(j_vars)?;
            let chol = Cholesky::new(cov).ok_or_else(|| {
                Error::InvalidSpec(format!("covariance of cluster {c} is not positive definite"))
            })?;
            Ok((DVector::from_column_slice(&spec.means[c]), chol.l()))
        })
        .collect::<Result<_>>()?;

    let mut clean = DMatrix::zeros(n, j_vars);
    for i in 0..n {
        let (mean, l) = &factors[labels[i]];
        let z = DVector::from_fn(j_vars, |_, _| rng.sample::<f64, _>(StandardNormal));
        let row = mean + l * z;
        for j in 0..j_vars {
            clean[(i, j)] = row[j];
        }
    }

    let mut data = clean.clone();
    let mut mask = DMatrix::from_element(n, j_vars, false);
    let forced: HashSet<CellOverride> = spec.overrides.iter().copied().collect();
    for j in 0..j_vars {
        let count = ceil_count(spec.contamination_rates[j] * n as f64);
        let eligible: Vec<usize> = (0..n)
            .filter(|&i| !forced.contains(&CellOverride { unit: i, variable: j }))
            .collect();
        if count > eligible.len() {
            return Err(Error::InvalidSpec(format!(
                "variable {j} needs {count} contaminated cells but only {} are free",
                eligible.len()
            )));
        }
        for pick in rand::seq::index::sample(&mut rng, eligible.len(), count) {
            let i = eligible[pick];
            data[(i, j)] = rng.random_range(spec.contamination_low..spec.contamination_high);
            mask[(i, j)] = true;
        }
    }
    for o in &spec.overrides {
        data[(o.unit, o.variable)] =
            rng.random_range(spec.contamination_low..spec.contamination_high);
        mask[(o.unit, o.variable)] = true;
    }

    Ok(SyntheticData { data, clean, labels, outlier_mask: mask })
}

/// The built-in simulation designs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Two correlated 5-variable clusters (70/30) with 5% cellwise
    /// contamination in every variable; the first two variables use a
    /// fixed contaminated-cell layout, including four units hit in both.
    Design1,
    /// Two overlapping 3-variable clusters (50/50) with 5% contamination
    /// in the first variable only.
    Design2,
    /// A lopsided pair of 3-variable clusters (80/20), clean, for
    /// demonstrating the effect of the equal-weights option when asking
    /// for one cluster more than the data has.
    WeightsDemo,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Design1, Preset::Design2, Preset::WeightsDemo];

    /// The name accepted on the command line.
    pub fn name(&self) -> &'static str {
        match self {
            Preset::Design1 => "paper_design_1",
            Preset::Design2 => "paper_design_2",
            Preset::WeightsDemo => "weights_demo",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .iter()
            .copied()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Preset::ALL.iter().map(|p| p.name()).collect();
                Error::InvalidSpec(format!(
                    "unknown preset '{s}'; expected one of: {}",
                    names.join(", ")
                ))
            })
    }
}

/// The spec behind a preset, with seed 0; set `seed` before generating to
/// draw different replicates.
pub fn preset(p: Preset) -> SyntheticSpec {
    match p {
        Preset::Design1 => {
            let mut overrides = Vec::new();
            for unit in [8, 9, 14, 59] {
                overrides.push(CellOverride { unit, variable: 0 });
                overrides.push(CellOverride { unit, variable: 1 });
            }
            for unit in [27, 60, 70, 76, 102, 126] {
                overrides.push(CellOverride { unit, variable: 0 });
            }
            for unit in [143, 153, 155, 175, 189, 195] {
                overrides.push(CellOverride { unit, variable: 1 });
            }
            SyntheticSpec {
                n_units: 200,
                n_vars: 5,
                n_clusters: 2,
                proportions: vec![0.7, 0.3],
                means: vec![vec![0.0; 5], vec![6.0; 5]],
                covariances: vec![CovarianceKind::ArPower(0.9), CovarianceKind::ArPower(-0.8)],
                contamination_rates: vec![0.0, 0.0, 0.05, 0.05, 0.05],
                contamination_low: -50.0,
                contamination_high: 50.0,
                overrides,
                seed: 0,
            }
        }
        Preset::Design2 => SyntheticSpec {
            n_units: 200,
            n_vars: 3,
            n_clusters: 2,
            proportions: vec![0.5, 0.5],
            means: vec![vec![0.0; 3], vec![2.5; 3]],
            covariances: vec![CovarianceKind::ArPower(0.0), CovarianceKind::ArPower(0.0)],
            contamination_rates: vec![0.05, 0.0, 0.0],
            contamination_low: -50.0,
            contamination_high: 50.0,
            overrides: Vec::new(),
            seed: 0,
        },
        Preset::WeightsDemo => SyntheticSpec {
            n_units: 200,
            n_vars: 3,
            n_clusters: 2,
            proportions: vec![0.8, 0.2],
            means: vec![vec![0.0; 3], vec![4.0; 3]],
            covariances: vec![CovarianceKind::ArPower(0.0), CovarianceKind::ArPower(0.0)],
            contamination_rates: vec![0.0, 0.0, 0.0],
            contamination_low: -50.0,
            contamination_high: 50.0,
            overrides: Vec::new(),
            seed: 0,
        },
    }
}
