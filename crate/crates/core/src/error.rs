use std::path::PathBuf;

/// Errors raised while building or importing a mesh.
#[derive(Debug, thiserror::Error)]
pub enum MeshError {
    #[error("invalid mesh specification: {0}")]
    InvalidSpec(String),
    #[error("mesh has no triangles")]
    Empty,
    #[error("triangle {index} is degenerate (signed area {area:e})")]
    Degenerate { index: usize, area: f64 },
    #[error("edge ({0}, {1}) is shared by more than two triangles")]
    NonManifold(usize, usize),
    #[error("boundary edge ({0}, {1}) does not belong to exactly one triangle")]
    BadBoundaryEdge(usize, usize),
    #[error("hole carving left an inconsistent boundary: {0}")]
    HoleCarving(String),
    #[error("periodic matching failed: {0}")]
    Periodic(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("msh parse error at line {line}: {msg}")]
    Msh { line: usize, msg: String },
}

/// Errors raised by finite-element routines.
#[derive(Debug, thiserror::Error)]
pub enum FemError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Errors raised by the time integrator and the saddle-point solver.
#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("saddle-point factorization failed: {0}")]
    Factorization(String),
    #[error("linear solve did not reach tolerance (relative residual {0:e})")]
    Breakdown(f64),
    #[error("state contains non-finite values at t = {0}")]
    NonFinite(f64),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Errors raised by statistics routines.
#[derive(Debug, thiserror::Error)]
pub enum StatsError {
    #[error("empty averaging window [{t0}, {t_end}]")]
    EmptyWindow { t0: f64, t_end: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Fem(#[from] FemError),
}

/// Errors raised by the closed-form bound evaluators.
#[derive(Debug, thiserror::Error)]
pub enum BoundsError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("the under-resolved bound is undefined for C_s*delta = 0; use the fully-resolved bound")]
    ZeroModelLength,
    #[error("minimizer bracket failure: {0}")]
    Bracket(String),
}

/// Errors raised by the experiment driver.
#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("comparison error: {0}")]
    Compare(String),
}

impl ExperimentError {
    /// Process exit code associated with this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) | ExperimentError::Bounds(BoundsError::InvalidInput(_)) => 2,
            _ => 3,
        }
    }
}

pub(crate) fn io_err<E: From<IoCtx>>(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> E {
    let path = path.into();
    move |source| E::from(IoCtx { path, source })
}

pub(crate) struct IoCtx {
    path: PathBuf,
    source: std::io::Error,
}

impl From<IoCtx> for MeshError {
    fn from(c: IoCtx) -> Self {
        MeshError::Io { path: c.path, source: c.source }
    }
}

impl From<IoCtx> for SolverError {
    fn from(c: IoCtx) -> Self {
        SolverError::Io { path: c.path, source: c.source }
    }
}

impl From<IoCtx> for ExperimentError {
    fn from(c: IoCtx) -> Self {
        ExperimentError::Io { path: c.path, source: c.source }
    }
}
