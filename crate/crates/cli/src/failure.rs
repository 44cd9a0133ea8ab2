//! Error kinds that decide the process exit code.

use std::fmt;

use serde::Serialize;

pub const EXIT_FAILED_CHECKS: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_ABORT: i32 = 3;

/// A configuration that could not be parsed or validated.
#[derive(Debug, Clone, Serialize)]
pub struct ConfigError {
    pub path: Option<String>,
    #[serde(skip)]
    pub message: String,
    pub file: Option<String>,
}

impl ConfigError {
    pub fn new(message: impl Into<String>) -> Self {
        ConfigError {
            path: None,
            message: message.into(),
            file: None,
        }
    }

    pub fn in_file(mut self, file: impl Into<String>) -> Self {
        self.file = Some(file.into());
        self
    }
}

impl From<promot::Error> for ConfigError {
    fn from(e: promot::Error) -> Self {
        match e {
            promot::Error::Field { path, message } => ConfigError {
                path: Some(path),
                message,
                file: None,
            },
            promot::Error::Parameter { name, .. } => ConfigError {
                path: Some(name.to_string()),
                message: e.to_string(),
                file: None,
            },
            other => ConfigError::new(other.to_string()),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(file) = &self.file {
            write!(f, "{file}: ")?;
        }
        match &self.path {
            Some(p) => write!(f, "invalid configuration at `{p}`: {}", self.message),
            None => write!(f, "invalid configuration: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// One or more runs stopped early; artifacts were still written.
#[derive(Debug, Clone, Serialize)]
pub struct RuntimeAbort {
    #[serde(skip)]
    pub message: String,
    pub aborted: Vec<AbortedRun>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AbortedRun {
    pub id: String,
    pub reason: String,
}

impl fmt::Display for RuntimeAbort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.message)?;
        for a in &self.aborted {
            write!(f, "\n  {}: {}", a.id, a.reason)?;
        }
        Ok(())
    }
}

impl std::error::Error for RuntimeAbort {}

/// Verification finished and some checks failed.
#[derive(Debug, Clone, Serialize)]
pub struct ChecksFailed {
    pub failed: Vec<String>,
}

impl fmt::Display for ChecksFailed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} check(s) failed", self.failed.len())
    }
}

impl std::error::Error for ChecksFailed {}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    error: &'a str,
    message: String,
    #[serde(flatten)]
    detail: &'a T,
}

#[derive(Serialize)]
struct NoDetail {}

fn report<T: Serialize>(kind: &str, message: String, detail: &T) -> String {
    let r = Report {
        error: kind,
        message,
        detail,
    };
    serde_json::to_string(&r).unwrap_or_else(|_| format!("{{\"error\":\"{kind}\"}}"))
}

/// Exit code and machine-readable JSON for an error.
pub fn classify(err: &anyhow::Error) -> (i32, String) {
    let message = format!("{err:#}");
    if let Some(c) = err.downcast_ref::<ConfigError>() {
        (EXIT_CONFIG, report("config", message, c))
    } else if let Some(r) = err.downcast_ref::<RuntimeAbort>() {
        (EXIT_ABORT, report("runtime_abort", message, r))
    } else if let Some(v) = err.downcast_ref::<ChecksFailed>() {
        (EXIT_FAILED_CHECKS, report("checks_failed", message, v))
    } else {
        (EXIT_FAILED_CHECKS, report("error", message, &NoDetail {}))
    }
}
