use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("magnetic null at ({x}, {y}): |B| = {bmag:e}")]
    NullPoint { x: f64, y: f64, bmag: f64 },

    #[error("field line left the domain at ({x}, {y})")]
    Confinement { x: f64, y: f64 },

    #[error("singular manufactured source at ({x}, {y})")]
    SingularSource { x: f64, y: f64 },

    #[error("{solver} did not converge after {iterations} iterations (last residual {last:e})")]
    NoConvergence {
        solver: &'static str,
        iterations: usize,
        last: f64,
        history: Vec<f64>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            _ => 3,
        }
    }
}
