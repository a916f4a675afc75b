use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The requested level line does not exist at this point: one of the
    /// squared Rabi frequencies came out negative beyond rounding.
    #[error("infeasible design{}: {field}^2 = {value:e}", at_time(*.t))]
    InfeasibleDesign {
        t: Option<f64>,
        field: &'static str,
        value: f64,
    },

    #[error("time step {dt} exceeds the schedule grid spacing {spacing}")]
    InvalidStep { dt: f64, spacing: f64 },

    #[error("initial state is not normalized (|psi|^2 = {norm_sq})")]
    InvalidState { norm_sq: f64 },

    #[error("unsupported variant: {0}")]
    UnsupportedVariant(String),

    #[error("target P3 = {target} never reached by strategy `{strategy}`")]
    UnreachableTarget { strategy: String, target: f64 },

    #[error("field not decayed at the window edge: |E|/max = {edge_ratio:e} > {limit:e}")]
    WindowingViolation { edge_ratio: f64, limit: f64 },
}

fn at_time(t: Option<f64>) -> String {
    match t {
        Some(t) => format!(" at t = {t}"),
        None => String::new(),
    }
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
