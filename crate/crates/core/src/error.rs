use thiserror::Error;

/// Errors raised while building or checking a construction.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("operands belong to different groups: {0}")]
    SpecMismatch(String),

    #[error("integer overflow while computing {0}")]
    Overflow(&'static str),

    /// A configured cap was exceeded. `what` names the quantity.
    #[error("resource cap exceeded at {what}: needed more than {limit}")]
    Resource { what: String, limit: u64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("stage {stage}: {reason}")]
    Stage { stage: usize, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unsupported certificate format version {found} (expected {expected})")]
    Version { found: u64, expected: u64 },

    #[error("checksum mismatch: recorded {recorded}, computed {computed}")]
    Checksum { recorded: String, computed: String },

    #[error("malformed rational in certificate: {0}")]
    MalformedRational(String),

    #[error("corrupt certificate: {0}")]
    Corrupt(String),
}

impl Error {
    pub fn resource(what: impl Into<String>, limit: u64) -> Self {
        Error::Resource { what: what.into(), limit }
    }

    /// Errors caused by the contents of a certificate file.
    pub fn is_corrupt(&self) -> bool {
        matches!(self, Error::Version { .. } | Error::Checksum { .. } | Error::MalformedRational(_) | Error::Corrupt(_))
    }

    pub fn is_resource(&self) -> bool {
        matches!(self, Error::Resource { .. } | Error::Overflow(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
