//! Error type shared by every module of the crate.

use std::error;
use std::fmt;

/// Errors produced by model fitting, constraint enforcement,
/// initialization, tuning, and data generation.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A configuration field is outside its allowed range.
    InvalidConfig(String),
    /// A data matrix failed validation (empty, or a non-finite observed cell).
    InvalidData(String),
    /// Input dimensions do not line up.
    DimensionMismatch(String),
    /// A sub-covariance failed to factorize as positive definite.
    NonPositiveDefinite {
        /// Cluster the covariance belongs to, when known.
        cluster: Option<usize>,
        /// Variable indices selecting the offending sub-matrix.
        cells: Vec<usize>,
    },
    /// A variable has no reliable-cell budget, i.e. no observed cells at all.
    EmptyReliableBudget { variable: usize },
    /// A cluster's membership mass collapsed below the restart threshold.
    DegenerateCluster { cluster: usize },
    /// Every eigenvalue carrying mass is zero, so no spread is left to fit.
    CollapsedEigenvalues,
    /// Not enough units to seed the requested number of clusters.
    TooFewUnits { n: usize, required: usize },
    /// Every start of the multi-start driver failed.
    AllStartsDegenerate { starts: usize },
    /// A synthetic-data spec is internally inconsistent.
    InvalidSpec(String),
    /// A numerical guard tripped (non-finite intermediate value).
    Numerical(String),
}

impl Error {
    /// Attach a cluster index to a positive-definiteness failure that was
    /// raised below the level where the cluster is known.
    pub(crate) fn with_cluster(self, cluster: usize) -> Self {
        match self {
            Error::NonPositiveDefinite { cluster: None, cells } => {
                Error::NonPositiveDefinite { cluster: Some(cluster), cells }
            }
            other => other,
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::InvalidData(msg) => write!(f, "invalid data: {msg}"),
            Error::DimensionMismatch(msg) => write!(f, "dimension mismatch: {msg}"),
            Error::NonPositiveDefinite { cluster, cells } => {
                match cluster {
                    Some(k) => write!(
                        f,
                        "covariance of cluster {k} is not positive definite on cells {cells:?}"
                    ),
                    None => write!(f, "covariance is not positive definite on cells {cells:?}"),
                }
            }
            Error::EmptyReliableBudget { variable } => {
                write!(f, "variable {variable} has no observed cells to keep")
            }
            Error::DegenerateCluster { cluster } => {
                write!(f, "cluster {cluster} collapsed: membership mass below 1e-10")
            }
            Error::CollapsedEigenvalues => {
                write!(f, "all covariance eigenvalues carrying mass are zero")
            }
            Error::TooFewUnits { n, required } => {
                write!(f, "{n} units cannot seed the requested clustering (need at least {required})")
            }
            Error::AllStartsDegenerate { starts } => {
                write!(f, "all {starts} starts failed or degenerated")
            }
            Error::InvalidSpec(msg) => write!(f, "invalid synthetic-data spec: {msg}"),
            Error::Numerical(msg) => write!(f, "numerical failure: {msg}"),
        }
    }
}

impl error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
