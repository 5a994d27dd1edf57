use helicity_core::Error;

/// Failure classes that map onto process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad, missing or unreadable configuration. Exit code 2.
    Config(String),
    /// A numerical acceptance gate refused the input. Exit code 3.
    Gate(Error),
    /// Writing the result failed. Exit code 1.
    Io(String),
}

impl CliError {
    pub fn config(e: Error) -> Self {
        CliError::Config(e.to_string())
    }

    pub fn missing(key: &str) -> Self {
        CliError::Config(format!("this command needs a \"{key}\" entry"))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Gate(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

/// Errors raised during the numerical phase. Gate failures keep their own
/// class; anything else traces back to the inputs.
impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NotCurlFree { .. }
            | Error::CurlMismatch { .. }
            | Error::SingularFlow { .. }
            | Error::DegenerateStencil
            | Error::OutsideImage
            | Error::NonPreservingFlow => CliError::Gate(e),
            other => CliError::config(other),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Gate(e) => write!(f, "numerical gate failed: {e}"),
            CliError::Io(m) => write!(f, "output error: {m}"),
        }
    }
}
