//! Library surface behind the `shearlab` binary: configuration, preset
//! pipelines, artifact formats (CSV, checkpoint, SVG), and the mapping from
//! module errors to process exit codes. The binary in `main.rs` is a thin
//! argument-parsing wrapper; integration tests drive these modules directly.

use thiserror::Error;

pub mod checkpoint;
pub mod config;
pub mod csvio;
pub mod presets;
pub mod svg;
pub mod verdict;

use shearlab_core::confined::ConfinedError;
use shearlab_core::diagnostics::DiagnosticsError;
use shearlab_core::mixer::MixerError;
use shearlab_core::pulsed::PulsedError;
use shearlab_core::spectral::FieldError;
use shearlab_core::viscous::ViscousError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("checkpoint schema mismatch: file says {found}, this build reads {expected}")]
    SchemaMismatch { found: String, expected: String },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("numerical guard: {0}")]
    Guard(String),
    #[error("{failed} of {total} checks failed")]
    ChecksFailed { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::ChecksFailed { .. } => 1,
            CliError::Config(_) | CliError::SchemaMismatch { .. } | CliError::Parse { .. } => 2,
            CliError::Guard(_) => 3,
        }
    }
}

impl From<ViscousError> for CliError {
    fn from(e: ViscousError) -> Self {
        match e {
            ViscousError::TailOverflow { .. } => CliError::Guard(e.to_string()),
            ViscousError::InvalidConfig(_) => CliError::Config(e.to_string()),
        }
    }
}

impl From<MixerError> for CliError {
    fn from(e: MixerError) -> Self {
        match e {
            MixerError::ZeroState => CliError::Config(e.to_string()),
            MixerError::BracketFailure { .. }
            | MixerError::BandOverflow { .. }
            | MixerError::BisectionStalled { .. } => CliError::Guard(e.to_string()),
        }
    }
}

impl From<ConfinedError> for CliError {
    fn from(e: ConfinedError) -> Self {
        match e {
            ConfinedError::WeightOverflow { .. }
            | ConfinedError::ConvergenceFailure(_)
            | ConfinedError::CurvatureGate { .. } => CliError::Guard(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<PulsedError> for CliError {
    fn from(e: PulsedError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<FieldError> for CliError {
    fn from(e: FieldError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<DiagnosticsError> for CliError {
    fn from(e: DiagnosticsError) -> Self {
        CliError::Config(e.to_string())
    }
}
