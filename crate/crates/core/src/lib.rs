//! Model-based fuzzy clustering that is robust to cellwise outliers.
//!
//! Units are clustered with a Gaussian mixture whose memberships may be
//! fuzzy, while individual cells (single entries of the data matrix, not
//! whole rows) can be flagged as unreliable. Flagged and missing cells are
//! excluded from all likelihood terms and filled in with their conditional
//! expectations given the unit's trustworthy cells. Each pass of the
//! fitting loop rescores every cell against its cluster-weighted
//! prediction, keeps the best cells per variable, updates the memberships,
//! and re-estimates the parameters under an eigenvalue-ratio constraint
//! that keeps every covariance well conditioned.
//!
//! The crate also ships tuning diagnostics (objective curves over a
//! parameter grid, sorted score curves with knee detection, assignment
//! sharpness, and a flagged-cell report) in [`tuning`], and a seeded
//! synthetic-data generator with benchmark presets in [`datagen`].
//!
//! ```
//! use cellfclust::{fit, DataSet, FitConfig};
//! use cellfclust::nalgebra::DMatrix;
//!
//! // Two tight groups on the real line.
//! let values = DMatrix::from_column_slice(
//!     8,
//!     1,
//!     &[0.0, 0.2, -0.1, 0.1, 5.0, 5.2, 4.9, 5.1],
//! );
//! let data = DataSet::from_complete(values, None).unwrap();
//! let result = fit(&data, &FitConfig::new(2).n_starts(4)).unwrap();
//! assert!(result.converged);
//! let labels = result.argmax_labels();
//! assert_eq!(labels[0], labels[3]);
//! assert_ne!(labels[0], labels[7]);
//! ```

mod constraints;
mod data;
mod error;
mod estimation;
mod gaussian;
mod init;
mod stats;

pub mod datagen;
pub mod tuning;

pub use constraints::{check_ratio, truncate_eigenvalues, EigenSystem};
pub use data::{ClusterParams, DataSet, FitConfig, FitResult};
pub use error::{Error, Result};
pub use estimation::{
    compute_delta, concentration_step, conditional_moments, fit, fit_single, log_fit_matrix,
    m_step, update_membership, ConditionalMoments,
};
pub use gaussian::compute_h;
pub use init::{initialize, InitialState};
pub use stats::{mad, median};

// Callers build inputs from nalgebra types; re-export the crate so they
// can use the exact version this library was compiled against.
pub use nalgebra;
