use thiserror::Error;

/// Failures of pointwise physics evaluations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PhysicsError {
    #[error("inadmissible state: density {rho}, pressure {pressure}")]
    Inadmissible { rho: f64, pressure: f64 },
    #[error("degenerate signal speeds a_l = {a_l}, a_r = {a_r}")]
    DegenerateSpeeds { a_l: f64, a_r: f64 },
}

/// Failures while building reference-element or filter operators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SetupError {
    #[error("polynomial degree must be at least {min}, got {degree}")]
    InvalidDegree { degree: usize, min: usize },
    #[error("target degree {target} outside 0..={degree}")]
    InvalidTargetDegree { target: usize, degree: usize },
    #[error("Newton iteration for quadrature nodes did not converge (residual {residual:e})")]
    NodesNotConverged { residual: f64 },
    #[error("no positive filter time in bracket [0, {upper:e}] (min entry {min_entry:e})")]
    BracketFailure { upper: f64, min_entry: f64 },
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
}

/// Failures during a solver run. Carries enough location to reproduce the problem.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("cell {cell}, node {node}: {source}")]
    Node {
        cell: usize,
        node: usize,
        #[source]
        source: PhysicsError,
    },
    #[error("interface {interface}: {source}")]
    Interface {
        interface: usize,
        #[source]
        source: PhysicsError,
    },
    #[error("Runge-Kutta stage {stage} failed: {source}")]
    Stage {
        stage: usize,
        #[source]
        source: Box<SolverError>,
    },
    #[error("blow-up at t = {time}: {reason}")]
    BlowUp {
        time: f64,
        cell: Option<usize>,
        reason: String,
    },
    #[error(transparent)]
    Setup(#[from] SetupError),
}

impl SolverError {
    /// Cell index of the offending node, if the error carries one.
    pub fn cell(&self) -> Option<usize> {
        match self {
            SolverError::Node { cell, .. } => Some(*cell),
            SolverError::Stage { source, .. } => source.cell(),
            SolverError::BlowUp { cell, .. } => *cell,
            _ => None,
        }
    }
}
