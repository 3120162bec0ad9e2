//! Exit codes and the machine-readable error file.

use std::path::Path;

use ldesmarket::accreditation::AccreditationError;
use ldesmarket::analysis::AnalysisError;
use ldesmarket::calibration::CalibrationError;
use ldesmarket::planner::PlannerError;
use serde::Serialize;

/// Written to the output directory when a subcommand fails.
pub const ERROR_FILE: &str = "error.toml";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Config,
    Solver,
    Invariant,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Config => 2,
            ErrorKind::Solver => 3,
            ErrorKind::Invariant => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub location: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, thiserror::Error)]
#[error("{message}")]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
    pub diagnostics: Vec<Diagnostic>,
}

impl CliError {
    pub fn new(kind: ErrorKind, message: impl Into<String>) -> Self {
        CliError { kind, message: message.into(), diagnostics: Vec::new() }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Config, message)
    }

    pub fn invariant(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Invariant, message)
    }

    pub fn with(mut self, d: Diagnostic) -> Self {
        self.diagnostics.push(d);
        self
    }

    pub fn exit_code(&self) -> i32 {
        self.kind.exit_code()
    }

    /// Writes `error.toml` into `dir`, creating it if needed.
    pub fn write_to(&self, dir: &Path) -> std::io::Result<()> {
        #[derive(Serialize)]
        struct File<'a> {
            exit_code: i32,
            #[serde(flatten)]
            error: &'a CliError,
        }
        std::fs::create_dir_all(dir)?;
        let text = toml::to_string(&File { exit_code: self.exit_code(), error: self }).map_err(std::io::Error::other)?;
        std::fs::write(dir.join(ERROR_FILE), text)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::config(format!("cannot write output: {e}"))
    }
}

fn planner_kind(e: &PlannerError) -> ErrorKind {
    match e {
        PlannerError::Invalid(_) | PlannerError::UnknownTechnology(_) => ErrorKind::Config,
        PlannerError::PinnedInfeasible(_)
        | PlannerError::Infeasible(_)
        | PlannerError::Unbounded(_)
        | PlannerError::NotConverged { .. }
        | PlannerError::Solver(_) => ErrorKind::Solver,
    }
}

impl From<PlannerError> for CliError {
    fn from(e: PlannerError) -> Self {
        CliError::new(planner_kind(&e), e.to_string())
    }
}

fn accreditation_kind(e: &AccreditationError) -> ErrorKind {
    match e {
        AccreditationError::Solve { source, .. } => planner_kind(source),
        AccreditationError::Epsilon(_) | AccreditationError::NameClash(_) | AccreditationError::FitInput { .. } => ErrorKind::Config,
        AccreditationError::NoScarcity { .. } | AccreditationError::UncappedSolution(_) => ErrorKind::Invariant,
    }
}

impl From<AccreditationError> for CliError {
    fn from(e: AccreditationError) -> Self {
        CliError::new(accreditation_kind(&e), e.to_string())
    }
}

fn calibration_kind(e: &CalibrationError) -> ErrorKind {
    match e {
        CalibrationError::UnknownReference(_) | CalibrationError::MissingCredit(_) => ErrorKind::Config,
        CalibrationError::Target(_) | CalibrationError::NetCone(_) => ErrorKind::Invariant,
    }
}

impl From<CalibrationError> for CliError {
    fn from(e: CalibrationError) -> Self {
        CliError::new(calibration_kind(&e), e.to_string())
    }
}

fn analysis_kind(e: &AnalysisError) -> ErrorKind {
    match e {
        AnalysisError::Run { source, .. } => planner_kind(source),
        AnalysisError::Accreditation(a) => accreditation_kind(a),
        AnalysisError::Calibration(c) => calibration_kind(c),
        AnalysisError::Sweep { source, .. } => analysis_kind(source),
        AnalysisError::NotCapped(_) | AnalysisError::UnknownStorage(_) | AnalysisError::Unconverged { .. } => ErrorKind::Invariant,
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        CliError::new(analysis_kind(&e), e.to_string())
    }
}
