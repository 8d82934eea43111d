use alloc::string::String;

use thiserror::Error;

/// Errors raised by the simulation and control core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input lies outside the domain of an operation (negative rotor
    /// speed, non-finite control input, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Tether endpoints coincide, so the line of action is undefined.
    #[error("degenerate tether geometry: endpoints {separation:e} m apart")]
    DegenerateGeometry { separation: f64 },

    /// A force command a tether cannot render (tethers only pull).
    #[error("infeasible force command: {0}")]
    InfeasibleCommand(String),

    /// Mocap sample requested off the sampling grid or out of sequence.
    #[error("mocap scheduling error: {0}")]
    Scheduling(String),

    /// Frames handed to the velocity estimator are not consecutive.
    #[error("frame sequencing error: expected sequence {expected}, got {got}")]
    Sequencing { expected: u64, got: u64 },

    /// Invalid configuration; `field` names the offending entry.
    #[error("invalid config field `{field}`: {message}")]
    Config { field: String, message: String },

    /// The run was aborted; `message` carries the cause and the drone state.
    #[error("simulation fault at tick {tick} (t = {time} s), drone {drone}: {message}")]
    SimulationFault {
        tick: u64,
        time: f64,
        drone: usize,
        message: String,
    },
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Prefix the field of a config error with its location, e.g.
    /// `mass` becomes `drones[2].model.mass`.
    pub fn within(self, location: &str) -> Self {
        match self {
            Error::Config { field, message } => Error::Config {
                field: alloc::format!("{location}.{field}"),
                message,
            },
            other => other,
        }
    }
}
