//! Harness-level error type mapping every failure onto the documented exit
//! codes: 0 success, 2 config error, 3 numerical failure, 4 I/O.

use std::fmt;
use std::path::PathBuf;

#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration or command-line usage.
    Config(String),
    /// A numerical failure propagated from the core algorithms.
    Core(wesnet_core::Error),
    /// Filesystem failure, with the offending path.
    Io { path: PathBuf, source: std::io::Error },
    /// Refusal to clobber an existing artifact without `--overwrite`.
    Exists(PathBuf),
    /// A checkpoint that fails validation (checksum, truncation, magic).
    Corrupt(String),
    /// A checkpoint written by an unknown format version.
    Version { found: u32, supported: u32 },
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use wesnet_core::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) => match e {
                E::Config(_) | E::InputDomain(_) | E::Contract(_) => 2,
                _ => 3,
            },
            CliError::Io { .. } | CliError::Exists(_) | CliError::Corrupt(_) | CliError::Version { .. } => 4,
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io { path, source } => write!(f, "I/O error on {}: {source}", path.display()),
            CliError::Exists(path) => {
                write!(f, "{} already exists; pass --overwrite to replace it", path.display())
            }
            CliError::Corrupt(msg) => write!(f, "corrupt checkpoint: {msg}"),
            CliError::Version { found, supported } => {
                write!(f, "unsupported checkpoint format version {found} (supported: {supported})")
            }
        }
    }
}

impl std::error::Error for CliError {}

impl From<wesnet_core::Error> for CliError {
    fn from(e: wesnet_core::Error) -> Self {
        CliError::Core(e)
    }
}
