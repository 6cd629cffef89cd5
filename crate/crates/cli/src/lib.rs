//! Command-line front end for the fuzzy cellwise clustering library:
//! delimited-file ingestion, robust preprocessing, model fitting, tuning
//! scans, and synthetic-data generation, all emitting plot-ready CSV/JSON
//! bundles with a reproducibility manifest.

pub mod args;
pub mod error;
pub mod ingest;
pub mod manifest;
pub mod output;
pub mod runner;
