use thiserror::Error;

/// Errors produced by the model, the solvers and the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("insufficient energy: battery {battery} cannot power the receiver for a slot")]
    InsufficientEnergy { battery: f64 },

    #[error("infeasible channel: {0}")]
    InfeasibleChannel(String),

    #[error("degenerate channel chain (λ0={from_bad}, λ1={from_good}): {reason}")]
    DegenerateChain {
        from_bad: f64,
        from_good: f64,
        reason: &'static str,
    },

    #[error("state (b={battery}, level={level}) is outside the solved table")]
    OutOfRange { battery: usize, level: usize },

    #[error("correlated channel requires the previous channel state")]
    MissingChannelState,

    #[error("initial state is already absorbing")]
    AbsorbingStart,

    #[error("episode exceeded the cap of {cap} slots")]
    EpisodeCap { cap: u64 },

    #[error("value iteration did not converge: residual {residual:e} after {sweeps} sweeps")]
    NoConvergence { residual: f64, sweeps: usize },

    #[error("linear system is singular: {0}")]
    SingularSystem(String),

    #[error("csv output failed: {0}")]
    Csv(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        Error::Csv(err.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Csv(err.to_string())
    }
}

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}
