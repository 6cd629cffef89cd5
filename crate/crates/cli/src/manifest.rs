//! The reproducibility record written into every output bundle.

use std::path::Path;

use cellfclust::datagen::SyntheticSpec;
use cellfclust::FitConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::output::write_json;

/// Everything needed to rerun a bundle: input location, preprocessing
/// choices, the full model configuration, and tool provenance. Only the
/// fields relevant to the command that produced the bundle are present.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub timestamp: String,
    pub command: String,
    pub output_dir: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub input: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub na_token: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub delimiter: Option<char>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub robust_standardize: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub config: Option<FitConfig>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wa_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mode: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub k_list: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alpha_list: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub synthetic_spec: Option<SyntheticSpec>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub threads: Option<usize>,
}

impl RunManifest {
    pub fn new(command: &str, output_dir: &Path) -> Self {
        RunManifest {
            tool: "cellfclust".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339(),
            command: command.to_string(),
            output_dir: output_dir.display().to_string(),
            input: None,
            na_token: None,
            delimiter: None,
            robust_standardize: None,
            scale: None,
            config: None,
            wa_threshold: None,
            mode: None,
            k_list: None,
            alpha_list: None,
            preset: None,
            synthetic_spec: None,
            threads: None,
        }
    }

    /// Records the ingestion and preprocessing settings of a run.
    pub fn record_input(
        &mut self,
        input: &Path,
        na_token: &str,
        delimiter: char,
        robust_standardize: bool,
        scale: f64,
    ) {
        self.input = Some(input.display().to_string());
        self.na_token = Some(na_token.to_string());
        self.delimiter = Some(delimiter);
        self.robust_standardize = Some(robust_standardize);
        self.scale = Some(scale);
    }

    /// Writes the manifest as manifest.json in the bundle directory.
    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        write_json(&dir.join("manifest.json"), self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn absent_fields_are_omitted_from_the_json() {
        let man = RunManifest::new("datagen", Path::new("out"));
        let json = serde_json::to_string(&man).unwrap();
        assert!(json.contains("\"command\":\"datagen\""));
        assert!(!json.contains("na_token"));
        assert!(!json.contains("config"));
        assert!(!json.contains("null"));
    }

    #[test]
    fn manifest_round_trips_through_json() {
        let mut man = RunManifest::new("fit", Path::new("bundle"));
        man.record_input(Path::new("data.csv"), "NA", ';', true, 2.0);
        man.config = Some(FitConfig::new(3).alpha(0.05).seed(7));
        man.wa_threshold = Some(0.9);
        let json = serde_json::to_string_pretty(&man).unwrap();
        let back: RunManifest = serde_json::from_str(&json).unwrap();
        assert_eq!(back.command, "fit");
        assert_eq!(back.delimiter, Some(';'));
        assert_eq!(back.scale, Some(2.0));
        assert_eq!(back.config.unwrap(), FitConfig::new(3).alpha(0.05).seed(7));
        assert_eq!(back.preset, None);
    }

    #[test]
    fn write_creates_manifest_json() {
        let dir = tempfile::tempdir().unwrap();
        let man = RunManifest::new("tune", dir.path());
        man.write(dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
        assert!(text.contains("\"tool\": \"cellfclust\""));
        assert!(text.ends_with('\n'));
    }
}
