use std::fmt;

/// Failure classes, each with a stable code and process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    InvalidInput,
    FamilyMismatch,
    SizeGuard,
    InsufficientSamples,
    Precondition,
    Estimation,
    Io,
}

impl Kind {
    pub fn code(self) -> &'static str {
        match self {
            Kind::InvalidInput => "invalid-input",
            Kind::FamilyMismatch => "family-mismatch",
            Kind::SizeGuard => "size-guard",
            Kind::InsufficientSamples => "insufficient-samples",
            Kind::Precondition => "precondition",
            Kind::Estimation => "estimation",
            Kind::Io => "io",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Kind::InvalidInput => 1,
            Kind::FamilyMismatch => 2,
            Kind::SizeGuard => 3,
            Kind::InsufficientSamples => 4,
            Kind::Precondition => 5,
            Kind::Estimation => 6,
            Kind::Io => 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
}

impl CliError {
    pub fn new(kind: Kind, message: impl Into<String>) -> Self {
        Self { kind, message: message.into() }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Self::new(Kind::InvalidInput, message)
    }
}

impl fmt::Display for CliError {
    /// One line: `error[<code>]: <message>`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error[{}]: {}", self.kind.code(), self.message.replace('\n', " "))
    }
}

impl From<tvdist::Error> for CliError {
    fn from(e: tvdist::Error) -> Self {
        use tvdist::Error as E;
        let kind = match &e {
            E::Parameter(_) | E::Model(_) => Kind::InvalidInput,
            E::Size { .. } => Kind::SizeGuard,
            E::InsufficientSamples { .. } => Kind::InsufficientSamples,
            E::Precondition(_) => Kind::Precondition,
            E::Estimation(_) => Kind::Estimation,
        };
        let message = match &e {
            E::Size { what, bits, limit } => format!("guard={limit} bits={bits}: {what} exceeds the enumeration guard"),
            other => other.to_string(),
        };
        Self { kind, message }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::new(Kind::Io, e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
