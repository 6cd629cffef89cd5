//! Writers for the CSV/JSON output bundles.

use std::fs::File;
use std::io::{BufWriter, Write as _};
use std::path::Path;

use cellfclust::nalgebra::DMatrix;
use cellfclust::tuning::{AssignmentStats, KneeSummary, OutlierSummary, TuningCell};
use cellfclust::{DataSet, FitConfig, FitResult};
use serde::Serialize;

use crate::error::CliError;

/// Formats a float with 17 significant digits in scientific notation, so
/// the printed value parses back to the identical bit pattern.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Serializes a value as pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut file = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut file, value)?;
    file.write_all(b"\n")?;
    file.flush()?;
    Ok(())
}

fn csv_writer(path: &Path, delimiter: u8) -> Result<csv::Writer<File>, CliError> {
    csv::WriterBuilder::new()
        .delimiter(delimiter)
        .from_path(path)
        .map_err(CliError::from)
}

/// Writes a data matrix as delimited text with a header row. Cells where
/// `observed` is false are written as `na_token`; with no mask every cell
/// is written numerically.
pub fn write_matrix_csv(
    path: &Path,
    names: &[String],
    values: &DMatrix<f64>,
    observed: Option<&DMatrix<bool>>,
    na_token: &str,
    delimiter: u8,
) -> Result<(), CliError> {
    let mut writer = csv_writer(path, delimiter)?;
    writer.write_record(names)?;
    for i in 0..values.nrows() {
        let row: Vec<String> = (0..values.ncols())
            .map(|j| match observed {
                Some(mask) if !mask[(i, j)] => na_token.to_string(),
                _ => fmt17(values[(i, j)]),
            })
            .collect();
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes a boolean matrix as 0/1 with a leading 1-based `unit` column.
pub fn write_flag_matrix_csv(
    path: &Path,
    names: &[String],
    flags: &DMatrix<bool>,
    delimiter: u8,
) -> Result<(), CliError> {
    let mut writer = csv_writer(path, delimiter)?;
    let mut header = vec!["unit".to_string()];
    header.extend(names.iter().cloned());
    writer.write_record(&header)?;
    for i in 0..flags.nrows() {
        let mut row = vec![(i + 1).to_string()];
        row.extend((0..flags.ncols()).map(|j| if flags[(i, j)] { "1" } else { "0" }.to_string()));
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes the membership matrix with a 1-based `unit` column and one
/// column per cluster.
pub fn write_membership_csv(
    path: &Path,
    membership: &DMatrix<f64>,
    delimiter: u8,
) -> Result<(), CliError> {
    let mut writer = csv_writer(path, delimiter)?;
    let mut header = vec!["unit".to_string()];
    header.extend((1..=membership.ncols()).map(|k| format!("cluster_{k}")));
    writer.write_record(&header)?;
    for i in 0..membership.nrows() {
        let mut row = vec![(i + 1).to_string()];
        row.extend((0..membership.ncols()).map(|k| fmt17(membership[(i, k)])));
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes the weakly assigned units, weakest first.
pub fn write_weak_csv(
    path: &Path,
    stats: &AssignmentStats,
    delimiter: u8,
) -> Result<(), CliError> {
    let mut writer = csv_writer(path, delimiter)?;
    writer.write_record(["unit", "max_membership"])?;
    for w in &stats.weak {
        writer.write_record([(w.unit + 1).to_string(), fmt17(w.max_membership)])?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes the flagged-cell report in long form. Each row carries a `kind`:
/// `proportion` rows tabulate the flag rate per (variable, cluster) over
/// all units; `flagged` rows list each observed cell the fit rejected,
/// with its imputation and the direction of the original relative to it;
/// `missing` rows list imputed missing cells. Fields that do not apply to
/// a kind are left empty.
pub fn write_outlier_summary_csv(
    path: &Path,
    names: &[String],
    summary: &OutlierSummary,
    delimiter: u8,
) -> Result<(), CliError> {
    let mut writer = csv_writer(path, delimiter)?;
    writer.write_record([
        "kind",
        "unit",
        "variable",
        "variable_name",
        "cluster",
        "original",
        "imputed",
        "direction",
        "proportion",
    ])?;
    let props = &summary.flagged_proportions;
    for j in 0..props.nrows() {
        for c in 0..props.ncols() {
            writer.write_record([
                "proportion".to_string(),
                String::new(),
                (j + 1).to_string(),
                names[j].clone(),
                (c + 1).to_string(),
                String::new(),
                String::new(),
                String::new(),
                fmt17(props[(j, c)]),
            ])?;
        }
    }
    for cell in &summary.flagged {
        writer.write_record([
            "flagged".to_string(),
            (cell.unit + 1).to_string(),
            (cell.variable + 1).to_string(),
            names[cell.variable].clone(),
            (cell.cluster + 1).to_string(),
            fmt17(cell.original),
            fmt17(cell.imputed),
            cell.direction.to_string(),
            String::new(),
        ])?;
    }
    for cell in &summary.missing {
        writer.write_record([
            "missing".to_string(),
            (cell.unit + 1).to_string(),
            (cell.variable + 1).to_string(),
            names[cell.variable].clone(),
            (cell.cluster + 1).to_string(),
            String::new(),
            fmt17(cell.imputed),
            String::new(),
            String::new(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes one row per fitted tuning-grid point.
pub fn write_curves_csv(
    path: &Path,
    cells: &[TuningCell],
    delimiter: u8,
) -> Result<(), CliError> {
    let mut writer = csv_writer(path, delimiter)?;
    writer.write_record(["k", "alpha", "objective", "converged", "iterations"])?;
    for cell in cells {
        writer.write_record([
            cell.k.to_string(),
            fmt17(cell.alpha),
            fmt17(cell.objective),
            cell.converged.to_string(),
            cell.iterations.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes knee diagnostics: one row per (trimming level, variable with a
/// knee), with the level's median/MAD difference repeated on each of its
/// rows. A level where no variable shows a knee still gets one row, with
/// the variable fields empty.
pub fn write_knee_csv(
    path: &Path,
    summaries: &[KneeSummary],
    names: &[String],
    delimiter: u8,
) -> Result<(), CliError> {
    let mut writer = csv_writer(path, delimiter)?;
    writer.write_record([
        "alpha",
        "median_diff",
        "mad_diff",
        "variable",
        "variable_name",
        "knee",
    ])?;
    for summary in summaries {
        if summary.knees.is_empty() {
            writer.write_record([
                fmt17(summary.alpha),
                fmt17(summary.median_diff),
                fmt17(summary.mad_diff),
                String::new(),
                String::new(),
                String::new(),
            ])?;
            continue;
        }
        for knee in &summary.knees {
            writer.write_record([
                fmt17(summary.alpha),
                fmt17(summary.median_diff),
                fmt17(summary.mad_diff),
                (knee.variable + 1).to_string(),
                names[knee.variable].clone(),
                fmt17(knee.proportion),
            ])?;
        }
    }
    writer.flush()?;
    Ok(())
}

/// Writes hard/weak assignment percentages for each fitted grid point.
pub fn write_stats_csv(
    path: &Path,
    rows: &[(usize, f64, AssignmentStats)],
    delimiter: u8,
) -> Result<(), CliError> {
    let mut writer = csv_writer(path, delimiter)?;
    writer.write_record(["k", "alpha", "pct_hard", "pct_weak"])?;
    for (k, alpha, stats) in rows {
        writer.write_record([
            k.to_string(),
            fmt17(*alpha),
            fmt17(100.0 * stats.hard_fraction),
            fmt17(100.0 * stats.weak_fraction),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes the sorted per-variable score curves, one row per observed cell:
/// `proportion` is the cell's rank divided by the variable's observed
/// count, `score` its fitted cell score. Rows are grouped by variable and
/// sorted by score within each group.
pub fn write_delta_csv(
    path: &Path,
    curves: &[Vec<(f64, f64)>],
    names: &[String],
    delimiter: u8,
) -> Result<(), CliError> {
    let mut writer = csv_writer(path, delimiter)?;
    writer.write_record(["variable", "variable_name", "proportion", "score"])?;
    for (j, curve) in curves.iter().enumerate() {
        for &(proportion, score) in curve {
            writer.write_record([
                (j + 1).to_string(),
                names[j].clone(),
                fmt17(proportion),
                fmt17(score),
            ])?;
        }
    }
    writer.flush()?;
    Ok(())
}

/// Writes ground-truth cluster labels, both columns 1-based.
pub fn write_labels_csv(path: &Path, labels: &[usize]) -> Result<(), CliError> {
    let mut writer = csv_writer(path, b',')?;
    writer.write_record(["unit", "label"])?;
    for (i, &label) in labels.iter().enumerate() {
        writer.write_record([(i + 1).to_string(), (label + 1).to_string()])?;
    }
    writer.flush()?;
    Ok(())
}

/// The JSON summary written as result.json.
#[derive(Debug, Serialize)]
pub struct FitReport {
    pub n_units: usize,
    pub n_vars: usize,
    pub variable_names: Vec<String>,
    pub config: FitConfig,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub start_index: usize,
    pub objective_trace: Vec<f64>,
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub covariances: Vec<Vec<Vec<f64>>>,
    pub hard_fraction: f64,
    pub weak_fraction: f64,
    pub weak_threshold: f64,
    pub n_flagged_cells: usize,
    pub n_missing_cells: usize,
}

impl FitReport {
    pub fn new(
        data: &DataSet,
        result: &FitResult,
        stats: &AssignmentStats,
        outliers: &OutlierSummary,
    ) -> Self {
        FitReport {
            n_units: data.n_units(),
            n_vars: data.n_vars(),
            variable_names: data.variable_names().to_vec(),
            config: result.config.clone(),
            objective: result.objective,
            iterations: result.iterations,
            converged: result.converged,
            start_index: result.start_index,
            objective_trace: result.objective_trace.clone(),
            weights: result.params.weights.iter().copied().collect(),
            means: result
                .params
                .means
                .iter()
                .map(|m| m.iter().copied().collect())
                .collect(),
            covariances: result
                .params
                .covariances
                .iter()
                .map(|s| {
                    (0..s.nrows())
                        .map(|r| (0..s.ncols()).map(|c| s[(r, c)]).collect())
                        .collect()
                })
                .collect(),
            hard_fraction: stats.hard_fraction,
            weak_fraction: stats.weak_fraction,
            weak_threshold: stats.threshold,
            n_flagged_cells: outliers.flagged.len(),
            n_missing_cells: outliers.missing.len(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::ingest;
    use cellfclust::tuning::{FlaggedCell, MissingCell, VariableKnee, WeakAssignment};

    #[test]
    fn fmt17_round_trips_values_of_all_magnitudes() {
        // A simple multiplicative congruential stream covering wide ranges.
        let mut state: u64 = 0x9E37_79B9_7F4A_7C15;
        for _ in 0..2000 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let mantissa = (state >> 11) as f64 / (1u64 << 53) as f64;
            let exponent = ((state % 61) as i32) - 30;
            for v in [
                mantissa * 10f64.powi(exponent),
                -mantissa * 10f64.powi(exponent),
            ] {
                let back: f64 = fmt17(v).parse().unwrap();
                assert_eq!(back.to_bits(), v.to_bits(), "{v} -> {}", fmt17(v));
            }
        }
        assert_eq!(fmt17(0.0).parse::<f64>().unwrap(), 0.0);
        assert!(fmt17(f64::NAN).parse::<f64>().unwrap().is_nan());
    }

    #[test]
    fn matrix_csv_round_trips_values_and_mask() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        let names = vec!["x".to_string(), "y".to_string()];
        let values = DMatrix::from_row_slice(
            3,
            2,
            &[0.1 + 0.2, -1.0 / 3.0, 1e-300, 6.02214076e23, f64::NAN, 42.0],
        );
        let observed =
            DMatrix::from_row_slice(3, 2, &[true, true, true, true, false, true]);
        write_matrix_csv(&path, &names, &values, Some(&observed), "NA", b',').unwrap();

        let back = ingest(&path, "NA", b',').unwrap();
        assert_eq!(back.observed(), &observed);
        for i in 0..3 {
            for j in 0..2 {
                if observed[(i, j)] {
                    assert_eq!(
                        back.values()[(i, j)].to_bits(),
                        values[(i, j)].to_bits()
                    );
                }
            }
        }

        // Writing the round-tripped data again reproduces the bytes.
        let path2 = dir.path().join("data2.csv");
        write_matrix_csv(&path2, &names, back.values(), Some(back.observed()), "NA", b',')
            .unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&path2).unwrap()
        );
    }

    #[test]
    fn flag_matrix_csv_is_zero_one_with_unit_column() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("flags.csv");
        let flags = DMatrix::from_row_slice(2, 2, &[true, false, false, true]);
        write_flag_matrix_csv(&path, &["a".into(), "b".into()], &flags, b',').unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "unit,a,b\n1,1,0\n2,0,1\n");
    }

    #[test]
    fn outlier_summary_csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("summary.csv");
        let summary = OutlierSummary {
            flagged_proportions: DMatrix::from_row_slice(1, 2, &[0.05, 0.0]),
            flagged: vec![FlaggedCell {
                unit: 0,
                variable: 0,
                cluster: 1,
                original: 9.0,
                imputed: 1.0,
                direction: 1,
            }],
            missing: vec![MissingCell {
                unit: 1,
                variable: 0,
                cluster: 0,
                imputed: 2.5,
            }],
        };
        write_outlier_summary_csv(&path, &["v".into()], &summary, b',').unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        assert!(lines[0].starts_with("kind,unit,variable"));
        assert!(lines[1].starts_with("proportion,,1,v,1,,,,"));
        assert!(lines[2].starts_with("proportion,,1,v,2,,,,"));
        assert!(lines[3].starts_with("flagged,1,1,v,2,"));
        assert!(lines[3].split(',').nth(7) == Some("1"));
        assert!(lines[4].starts_with("missing,2,1,v,1,,"));
    }

    #[test]
    fn knee_csv_writes_a_row_even_without_knees() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("knee.csv");
        let summaries = vec![
            KneeSummary {
                alpha: 0.05,
                knees: vec![VariableKnee { variable: 1, proportion: 0.06 }],
                median_diff: 0.01,
                mad_diff: 0.0,
            },
            KneeSummary {
                alpha: 0.1,
                knees: vec![],
                median_diff: f64::NAN,
                mad_diff: f64::NAN,
            },
        ];
        write_knee_csv(&path, &summaries, &["a".into(), "b".into()], b',').unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].contains(",2,b,"));
        assert!(lines[2].contains("NaN"));
        assert!(lines[2].ends_with(",,,"));
    }

    #[test]
    fn stats_csv_reports_percentages() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stats.csv");
        let stats = AssignmentStats {
            hard_fraction: 0.25,
            weak_fraction: 0.5,
            threshold: 0.9,
            weak: vec![WeakAssignment { unit: 0, max_membership: 0.6 }],
        };
        write_stats_csv(&path, &[(2, 0.05, stats)], b',').unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let row = text.lines().nth(1).unwrap();
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields[0], "2");
        assert_eq!(fields[2].parse::<f64>().unwrap(), 25.0);
        assert_eq!(fields[3].parse::<f64>().unwrap(), 50.0);
    }

    #[test]
    fn labels_csv_is_one_based() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.csv");
        write_labels_csv(&path, &[0, 1, 0]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "unit,label\n1,1\n2,2\n3,1\n");
    }
}
