use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("p out of [0.25, 0.5): {0}")]
    SnowflakeParameter(f64),

    #[error("vertex count {count} exceeds cap {cap}")]
    VertexCap { count: usize, cap: usize },

    #[error("curve is not simple")]
    NotSimple,

    #[error("curve has coincident consecutive vertices at index {0}")]
    CoincidentVertices(usize),

    #[error("mesh refinement exceeded node cap {0}")]
    NodeCap(usize),

    #[error("degenerate triangle at element {0}")]
    DegenerateElement(usize),

    #[error("point outside the unit disc: |z| = {0}")]
    OutsideDisc(f64),

    #[error("map is not normalized (phi(0) = 0, phi'(0) = 1 required)")]
    NotNormalized,

    #[error("unsupported map for this operation: {0}")]
    UnsupportedMap(String),

    #[error("no admissible function: {0}")]
    NoAdmissible(String),

    #[error("solver did not converge: residual {residual:.3e} after {iterations} iterations")]
    NonConverged { residual: f64, iterations: usize },

    #[error("mesh is disconnected (second eigenvalue {0:.3e})")]
    DisconnectedMesh(f64),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("empty alpha window: {0}")]
    EmptyWindow(String),

    #[error("log-space overflow: {0}")]
    Overflow(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for outcomes that are mathematical dead ends rather than
    /// operational failures.
    pub fn is_infeasible(&self) -> bool {
        matches!(self, Error::Infeasible(_) | Error::EmptyWindow(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
