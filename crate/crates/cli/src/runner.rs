//! Orchestration of the fit, tune, and datagen commands.

use std::fs;
use std::num::NonZeroUsize;

use cellfclust::tuning::{
    assignment_stats, delta_plot_data, knee_points, objective_curves, outlier_summary,
};
use cellfclust::{datagen, fit, FitConfig};

use crate::args::{Command, DatagenArgs, FitArgs, ModelArgs, TuneArgs, TuneMode};
use crate::error::CliError;
use crate::ingest::{ascii_delimiter, ingest, preprocess};
use crate::manifest::RunManifest;
use crate::output::{self, FitReport};

/// Runs the selected subcommand.
pub fn dispatch(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Fit(args) => run_fit(args),
        Command::Tune(args) => run_tune(args),
        Command::Datagen(args) => run_datagen(args),
    }
}

fn build_config(k: usize, model: &ModelArgs) -> FitConfig {
    FitConfig::new(k)
        .alpha(model.alpha)
        .eigenvalue_ratio(model.c)
        .fuzzifier(model.m)
        .equal_weights(model.equal_weights)
        .tol(model.tol)
        .max_iter(model.max_iter)
        .n_starts(model.starts)
        .seed(model.seed)
}

fn check_threshold(threshold: f64) -> Result<(), CliError> {
    if threshold.is_finite() && (0.0..=1.0).contains(&threshold) {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "--wa-threshold must lie in [0, 1], got {threshold}"
        )))
    }
}

/// Fits the model once and writes the full result bundle.
pub fn run_fit(args: &FitArgs) -> Result<(), CliError> {
    let delimiter = ascii_delimiter(args.io.delimiter)?;
    check_threshold(args.wa_threshold)?;
    let config = build_config(args.k, &args.model);
    config.validate()?;

    let raw = ingest(&args.io.input, &args.io.na_token, delimiter)?;
    let data = preprocess(&raw, args.preprocess.robust_standardize, args.preprocess.scale)?;
    fs::create_dir_all(&args.io.out)?;

    let result = fit(&data, &config)?;
    let stats = assignment_stats(&result.membership, args.wa_threshold);
    let outliers = outlier_summary(&data, &result);

    let out = &args.io.out;
    output::write_json(
        &out.join("result.json"),
        &FitReport::new(&data, &result, &stats, &outliers),
    )?;
    output::write_membership_csv(&out.join("membership.csv"), &result.membership, delimiter)?;
    output::write_flag_matrix_csv(
        &out.join("indicator.csv"),
        data.variable_names(),
        &result.indicator,
        delimiter,
    )?;
    output::write_matrix_csv(
        &out.join("completed.csv"),
        data.variable_names(),
        &result.completed,
        None,
        &args.io.na_token,
        delimiter,
    )?;
    output::write_outlier_summary_csv(
        &out.join("outlier_summary.csv"),
        data.variable_names(),
        &outliers,
        delimiter,
    )?;
    output::write_weak_csv(&out.join("weak_assignments.csv"), &stats, delimiter)?;

    let mut manifest = RunManifest::new("fit", out);
    manifest.record_input(
        &args.io.input,
        &args.io.na_token,
        args.io.delimiter,
        args.preprocess.robust_standardize,
        args.preprocess.scale,
    );
    manifest.config = Some(config);
    manifest.wa_threshold = Some(args.wa_threshold);
    manifest.threads = args.io.threads.map(NonZeroUsize::get);
    manifest.write(out)?;

    println!(
        "fit: objective {:.6} after {} iterations (converged: {}) -> {}",
        result.objective,
        result.iterations,
        result.converged,
        out.display()
    );
    Ok(())
}

fn require_k(args: &TuneArgs) -> Result<usize, CliError> {
    args.k.ok_or_else(|| {
        CliError::Usage(format!("--k is required for {} mode", args.mode.name()))
    })
}

fn require_list<T: Copy>(list: &[T], flag: &str, mode: &str) -> Result<Vec<T>, CliError> {
    if list.is_empty() {
        Err(CliError::Usage(format!(
            "{flag} must list at least one value for {mode} mode"
        )))
    } else {
        Ok(list.to_vec())
    }
}

fn validate_grid(ks: &[usize], alphas: &[f64], model: &ModelArgs) -> Result<(), CliError> {
    for &k in ks {
        for &alpha in alphas {
            build_config(k, model).alpha(alpha).validate()?;
        }
    }
    Ok(())
}

/// Runs one tuning scan and writes its plot-ready CSV plus the manifest.
pub fn run_tune(args: &TuneArgs) -> Result<(), CliError> {
    let delimiter = ascii_delimiter(args.io.delimiter)?;
    check_threshold(args.wa_threshold)?;
    let raw = ingest(&args.io.input, &args.io.na_token, delimiter)?;
    let data = preprocess(&raw, args.preprocess.robust_standardize, args.preprocess.scale)?;
    fs::create_dir_all(&args.io.out)?;
    let out = &args.io.out;

    let mut manifest = RunManifest::new("tune", out);
    manifest.record_input(
        &args.io.input,
        &args.io.na_token,
        args.io.delimiter,
        args.preprocess.robust_standardize,
        args.preprocess.scale,
    );
    manifest.mode = Some(args.mode.name().to_string());
    manifest.wa_threshold = Some(args.wa_threshold);
    manifest.threads = args.io.threads.map(NonZeroUsize::get);

    let written = match args.mode {
        TuneMode::Curves => {
            let ks = require_list(&args.k_list, "--k-list", "curves")?;
            let alphas = require_list(&args.alpha_list, "--alpha-list", "curves")?;
            validate_grid(&ks, &alphas, &args.model)?;
            let base = build_config(ks[0], &args.model);
            let cells = objective_curves(&data, &base, &ks, &alphas);
            output::write_curves_csv(&out.join("curves.csv"), &cells, delimiter)?;
            manifest.k_list = Some(ks);
            manifest.alpha_list = Some(alphas);
            manifest.config = Some(base);
            "curves.csv"
        }
        TuneMode::Knee => {
            let k = require_k(args)?;
            let alphas = require_list(&args.alpha_list, "--alpha-list", "knee")?;
            validate_grid(&[k], &alphas, &args.model)?;
            let base = build_config(k, &args.model);
            let summaries = knee_points(&data, &base, &alphas)?;
            output::write_knee_csv(
                &out.join("knee.csv"),
                &summaries,
                data.variable_names(),
                delimiter,
            )?;
            manifest.alpha_list = Some(alphas);
            manifest.config = Some(base);
            "knee.csv"
        }
        TuneMode::HaWa => {
            let ks = require_list(&args.k_list, "--k-list", "ha_wa")?;
            let alphas = require_list(&args.alpha_list, "--alpha-list", "ha_wa")?;
            validate_grid(&ks, &alphas, &args.model)?;
            let mut rows = Vec::new();
            for &k in &ks {
                for &alpha in &alphas {
                    let cfg = build_config(k, &args.model).alpha(alpha);
                    match fit(&data, &cfg) {
                        Ok(result) => rows.push((
                            k,
                            alpha,
                            assignment_stats(&result.membership, args.wa_threshold),
                        )),
                        Err(e) => {
                            eprintln!("tune ha_wa: skipping K={k}, alpha={alpha}: {e}");
                        }
                    }
                }
            }
            output::write_stats_csv(&out.join("stats.csv"), &rows, delimiter)?;
            manifest.k_list = Some(ks.clone());
            manifest.alpha_list = Some(alphas);
            manifest.config = Some(build_config(ks[0], &args.model));
            "stats.csv"
        }
        TuneMode::Delta => {
            let k = require_k(args)?;
            let base = build_config(k, &args.model);
            base.validate()?;
            let result = fit(&data, &base)?;
            let curves = delta_plot_data(&data, &result)?;
            output::write_delta_csv(
                &out.join("delta.csv"),
                &curves,
                data.variable_names(),
                delimiter,
            )?;
            manifest.config = Some(base);
            "delta.csv"
        }
    };

    manifest.write(out)?;
    println!("tune {}: wrote {} -> {}", args.mode.name(), written, out.display());
    Ok(())
}

/// Generates a synthetic data set and writes it with its ground truth.
pub fn run_datagen(args: &DatagenArgs) -> Result<(), CliError> {
    let (mut spec, preset_name) = match (&args.preset, &args.spec) {
        (Some(preset), None) => (datagen::preset(*preset), Some(preset.name().to_string())),
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            let spec = serde_json::from_str(&text)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            (spec, None)
        }
        _ => unreachable!("argument parsing enforces exactly one of --preset/--spec"),
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }

    let generated = datagen::generate(&spec)?;
    fs::create_dir_all(&args.out)?;
    let out = &args.out;
    let names: Vec<String> = (1..=spec.n_vars).map(|j| format!("V{j}")).collect();

    output::write_matrix_csv(&out.join("data.csv"), &names, &generated.data, None, "NA", b',')?;
    output::write_matrix_csv(&out.join("clean.csv"), &names, &generated.clean, None, "NA", b',')?;
    output::write_labels_csv(&out.join("labels.csv"), &generated.labels)?;
    output::write_flag_matrix_csv(
        &out.join("outlier_mask.csv"),
        &names,
        &generated.outlier_mask,
        b',',
    )?;
    output::write_json(&out.join("spec.json"), &spec)?;

    let mut manifest = RunManifest::new("datagen", out);
    manifest.preset = preset_name;
    manifest.synthetic_spec = Some(spec.clone());
    manifest.write(out)?;

    println!(
        "datagen: {} units x {} variables -> {}",
        spec.n_units,
        spec.n_vars,
        out.display()
    );
    Ok(())
}
