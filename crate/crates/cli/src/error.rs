use std::fmt;
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_CONTRACT: i32 = 4;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(parstirap::Error),
    /// The run finished but broke a numerical guarantee.
    Contract(String),
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use parstirap::Error as E;
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Contract(_) => EXIT_CONTRACT,
            CliError::Io { .. } => EXIT_IO,
            CliError::Core(e) => match e {
                E::InfeasibleDesign { .. } => EXIT_INFEASIBLE,
                E::InvalidStep { .. } | E::InvalidState { .. } | E::WindowingViolation { .. } => EXIT_CONTRACT,
                E::InvalidParameter { .. } | E::UnsupportedVariant(_) | E::UnreachableTarget { .. } => EXIT_CONFIG,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Contract(m) => write!(f, "numerical contract violated: {m}"),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
        }
    }
}

impl std::error::Error for CliError {}

impl From<parstirap::Error> for CliError {
    fn from(e: parstirap::Error) -> Self {
        CliError::Core(e)
    }
}
