use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}")]
    Core(#[from] affine_sphere::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed criteria: {}", .0.join(", "))]
    Criteria(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}
