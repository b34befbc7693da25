use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("{stage} did not converge after {iterations} iterations (last residual {residual:.3e})")]
    NonConvergence {
        stage: &'static str,
        iterations: usize,
        residual: f64,
        trace: Vec<f64>,
    },

    #[error("negative vacancy density {value:.3e} m^-3 in cell {cell}")]
    Negativity { cell: usize, value: f64 },

    #[error("time step collapsed below {dt_min:.3e} s at t = {time:.6e} s: {source}")]
    StepCollapse {
        time: f64,
        dt_min: f64,
        #[source]
        source: Box<SimError>,
    },

    #[error("cycle {cycle}: {source}")]
    Cycle {
        cycle: usize,
        #[source]
        source: Box<SimError>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SimError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(SimError::InvalidInput(msg.into()))
}
