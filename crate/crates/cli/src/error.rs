//! Error type for the command-line tool, bucketed by exit status.

use std::fmt;

/// What went wrong, grouped by the exit code the process should return.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, flag combinations, or flag values (exit 1).
    Usage(String),
    /// Unreadable input, unparsable content, or unwritable output (exit 2).
    Data(String),
    /// The model could not be fitted to the data (exit 3).
    Fit(String),
}

impl CliError {
    /// The process exit code this error maps to.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Fit(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Data(msg) => write!(f, "data error: {msg}"),
            CliError::Fit(msg) => write!(f, "fit error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<cellfclust::Error> for CliError {
    fn from(e: cellfclust::Error) -> Self {
        use cellfclust::Error;
        match &e {
            // Bad knob settings are the caller's to fix.
            Error::InvalidConfig(_) => CliError::Usage(e.to_string()),
            // Problems with the supplied input.
            Error::InvalidData(_) | Error::DimensionMismatch(_) | Error::InvalidSpec(_) => {
                CliError::Data(e.to_string())
            }
            // Everything else arises while fitting.
            _ => CliError::Fit(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_bucket() {
        assert_eq!(CliError::Usage("x".into()).exit_code(), 1);
        assert_eq!(CliError::Data("x".into()).exit_code(), 2);
        assert_eq!(CliError::Fit("x".into()).exit_code(), 3);
    }

    #[test]
    fn library_errors_map_to_the_right_bucket() {
        let usage: CliError = cellfclust::Error::InvalidConfig("bad alpha".into()).into();
        assert_eq!(usage.exit_code(), 1);

        let data: CliError = cellfclust::Error::InvalidData("empty".into()).into();
        assert_eq!(data.exit_code(), 2);

        let fit: CliError = cellfclust::Error::AllStartsDegenerate { starts: 3 }.into();
        assert_eq!(fit.exit_code(), 3);

        let fit2: CliError = cellfclust::Error::TooFewUnits { n: 3, required: 4 }.into();
        assert_eq!(fit2.exit_code(), 3);
    }
}
