use thiserror::Error;

/// A single violated constraint of a decoy protocol.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub enum Violation {
    /// `v2 >= 0` does not hold.
    NegativeDecoy,
    /// `v2 < v1` does not hold.
    DecoyOrder,
    /// `v1 + v2 < mu` does not hold.
    DecoySum,
    /// `0 < p_mu <= 1` does not hold.
    SignalFraction,
    /// `0 < eps/S < 1` does not hold.
    SecurityRate,
    /// A parameter was NaN or infinite.
    NotFinite,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let msg = match self {
            Violation::NegativeDecoy => "v2 must be non-negative",
            Violation::DecoyOrder => "v2 < v1 required",
            Violation::DecoySum => "v1 + v2 < mu required",
            Violation::SignalFraction => "0 < p_mu <= 1 required",
            Violation::SecurityRate => "0 < eps/S < 1 required",
            Violation::NotFinite => "intensities must be finite",
        };
        f.write_str(msg)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("operation requires a {expected} source")]
    Variant { expected: &'static str },

    #[error("undefined rate: {0} is zero")]
    UndefinedRate(&'static str),

    #[error("degenerate decoy protocol: {0}")]
    DegenerateProtocol(&'static str),

    #[error("invalid protocol: {}", join_violations(.0))]
    InvalidProtocol(Vec<Violation>),

    #[error("no feasible grid point")]
    EmptyGrid,

    #[error("measurement branch s={0} has zero probability")]
    ZeroProbabilityBranch(u8),

    #[error("length mismatch: expected {expected} outcomes, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

impl Error {
    /// Whether the error comes from bad inputs (as opposed to a numerical
    /// breakdown such as a vanishing gain).
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::Variant { .. }
                | Error::InvalidProtocol(_)
                | Error::EmptyGrid
                | Error::LengthMismatch { .. }
        )
    }
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
