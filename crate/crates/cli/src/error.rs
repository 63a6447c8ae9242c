use std::process::ExitCode;

pub const EXIT_OK: u8 = 0;
pub const EXIT_VIOLATION: u8 = 2;
pub const EXIT_INCONCLUSIVE: u8 = 3;
pub const EXIT_USAGE: u8 = 64;
pub const EXIT_DATAERR: u8 = 65;
pub const EXIT_NOINPUT: u8 = 66;
pub const EXIT_SOFTWARE: u8 = 70;
pub const EXIT_IOERR: u8 = 74;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("malformed config: {0}")]
    Config(String),
    #[error("{0}")]
    NoInput(String),
    #[error("{0}")]
    Internal(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Config(_) => EXIT_DATAERR,
            CliError::NoInput(_) => EXIT_NOINPUT,
            CliError::Internal(_) => EXIT_SOFTWARE,
            CliError::Io(_) => EXIT_IOERR,
        }
    }

    pub fn exit(&self) -> ExitCode {
        eprintln!("rmrlab: {self}");
        ExitCode::from(self.code())
    }
}
