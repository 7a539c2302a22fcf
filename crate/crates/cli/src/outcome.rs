//! Verdicts, run outcomes and the exit-code classes.

use parex_core::report::RatioReport;
use parex_core::Error;
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
    Report,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Report => "REPORT",
        })
    }
}

/// One named check with its measured value and tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub verdict: Verdict,
    /// Headline measurement (worst error, slope, ...).
    pub value: f64,
    /// Bound the value was compared against, when there is one.
    pub tolerance: Option<f64>,
    pub detail: String,
    /// Wall time; excluded from the written report so reruns compare equal.
    #[serde(skip)]
    pub seconds: f64,
}

impl Check {
    pub fn new(name: &str, pass: bool, value: f64, tolerance: Option<f64>, detail: String) -> Self {
        let verdict = if pass { Verdict::Pass } else { Verdict::Fail };
        Self { name: name.into(), verdict, value, tolerance, detail, seconds: 0.0 }
    }

    pub fn report(name: &str, value: f64, detail: String) -> Self {
        Self { name: name.into(), verdict: Verdict::Report, value, tolerance: None, detail, seconds: 0.0 }
    }

    pub fn line(&self) -> String {
        if self.seconds > 0.0 {
            format!("{} {}: {} ({:.2}s)", self.verdict, self.name, self.detail, self.seconds)
        } else {
            format!("{} {}: {}", self.verdict, self.name, self.detail)
        }
    }
}

/// Everything a subcommand produces before it is written out.
#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub checks: Vec<Check>,
    pub reports: Vec<RatioReport>,
    /// Subcommand-specific payload stored under `data` in `report.json`.
    pub data: Value,
    pub field_csv: Option<String>,
    pub density_csv: Option<String>,
}

impl RunOutput {
    pub fn failed(&self) -> bool {
        self.checks.iter().any(|c| c.verdict == Verdict::Fail)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    /// At least one check failed.
    pub const FAIL: i32 = 1;
    /// Malformed config or arguments.
    pub const SCHEMA: i32 = 2;
    /// Invalid input or a violated precondition.
    pub const INPUT: i32 = 3;
    /// Evaluation budget exceeded.
    pub const CAPACITY: i32 = 4;
    /// Construction, conditioning or non-finite numerical failures.
    pub const NUMERICAL: i32 = 5;
    pub const IO: i32 = 6;
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) => exit::SCHEMA,
            CliError::Io(_) => exit::IO,
            CliError::Core(e) => match e {
                Error::InvalidInput(_) | Error::Precondition(_) | Error::DegenerateFiber { .. } => exit::INPUT,
                Error::Capacity(_) => exit::CAPACITY,
                Error::Construction(_) | Error::IllConditioned(_) | Error::NonFinite { .. } => exit::NUMERICAL,
            },
        }
    }
}
