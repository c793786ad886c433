use serde_json::json;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_ACCURACY: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] chi2norm::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{failed} of {total} checks failed")]
    Verification { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => EXIT_USAGE,
            CliError::Core(e) if e.is_accuracy() => EXIT_ACCURACY,
            CliError::Core(chi2norm::Error::Parse(_)) => EXIT_USAGE,
            _ => EXIT_FAILURE,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config(_) => "config",
            CliError::Core(chi2norm::Error::Capacity(_)) => "capacity",
            CliError::Core(chi2norm::Error::Precondition(_)) => "precondition",
            CliError::Core(chi2norm::Error::Accuracy { .. }) => "accuracy",
            CliError::Core(chi2norm::Error::Parse(_)) => "parse",
            CliError::Io(_) => "io",
            CliError::Verification { .. } => "verification",
        }
    }

    /// Single-line JSON error record.
    pub fn record(&self) -> String {
        let mut body = json!({
            "kind": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        });
        match self {
            CliError::Core(chi2norm::Error::Accuracy { best, error_estimate, .. }) => {
                body["partial"] = json!(true);
                body["best"] = json_number(*best);
                body["error_estimate"] = json_number(*error_estimate);
            }
            CliError::Verification { failed, total } => {
                body["failed"] = json!(failed);
                body["total"] = json!(total);
            }
            _ => {}
        }
        json!({ "error": body }).to_string()
    }
}

fn json_number(x: f64) -> serde_json::Value {
    serde_json::Number::from_f64(x)
        .map(serde_json::Value::Number)
        .unwrap_or_else(|| json!(crate::output::format_number(x)))
}
