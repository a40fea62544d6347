use std::fmt;

use occlupose::augment::AugmentError;
use occlupose::bop::BopError;
use occlupose::metrics::MetricsError;
use occlupose::pipeline::PipelineError;
use occlupose::synth::SynthError;

/// Process exit status of a failed command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Validation = 1,
    Io = 2,
    Internal = 3,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ExitKind,
    pub error: anyhow::Error,
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn validation(e: impl Into<anyhow::Error>) -> Self {
        Self { kind: ExitKind::Validation, error: e.into() }
    }

    pub fn io(e: impl Into<anyhow::Error>) -> Self {
        Self { kind: ExitKind::Io, error: e.into() }
    }

    pub fn internal(e: impl Into<anyhow::Error>) -> Self {
        Self { kind: ExitKind::Internal, error: e.into() }
    }

    pub fn msg(kind: ExitKind, message: impl fmt::Display) -> Self {
        Self { kind, error: anyhow::anyhow!("{message}") }
    }

    pub fn context(self, context: impl fmt::Display + Send + Sync + 'static) -> Self {
        Self { kind: self.kind, error: self.error.context(context) }
    }

    pub fn code(&self) -> i32 {
        self.kind as i32
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

fn synth_kind(e: &SynthError) -> ExitKind {
    match e {
        SynthError::InvalidPrimitive(_) | SynthError::InvalidConfig(_) => ExitKind::Validation,
        SynthError::BehindCamera(_) | SynthError::Geometry(_) => ExitKind::Internal,
    }
}

fn bop_kind(e: &BopError) -> ExitKind {
    match e {
        BopError::Io { .. } => ExitKind::Io,
        BopError::Format { .. } | BopError::DepthOutOfRange { .. } => ExitKind::Validation,
        BopError::Synth(s) => synth_kind(s),
        BopError::Geometry(_) => ExitKind::Internal,
    }
}

impl From<BopError> for CliError {
    fn from(e: BopError) -> Self {
        Self { kind: bop_kind(&e), error: e.into() }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        Self { kind: synth_kind(&e), error: e.into() }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        let kind = match &e {
            MetricsError::InvalidInput(_) | MetricsError::Parse { .. } | MetricsError::UnknownGt(_) | MetricsError::MixedRegions => {
                ExitKind::Validation
            }
            MetricsError::EmptyRender(_) | MetricsError::BehindCamera(_) => ExitKind::Internal,
            MetricsError::Bop(b) => bop_kind(b),
            MetricsError::Synth(s) => synth_kind(s),
        };
        Self { kind, error: e.into() }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        let kind = match &e {
            PipelineError::InvalidConfig(_) | PipelineError::Provider(_) => ExitKind::Validation,
            _ => ExitKind::Internal,
        };
        Self { kind, error: e.into() }
    }
}

impl From<AugmentError> for CliError {
    fn from(e: AugmentError) -> Self {
        let kind = match &e {
            AugmentError::InvalidParams { .. } => ExitKind::Validation,
            AugmentError::EmptyMask | AugmentError::NoViewPairs => ExitKind::Internal,
        };
        Self { kind, error: e.into() }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::internal(e)
    }
}
