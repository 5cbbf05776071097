//! Error type shared by all solver and pipeline stages.

use thiserror::Error;

/// Errors produced by geometry validation, forward solvers and the recovery
/// pipeline.  Variants are grouped by how a caller should react: `Invalid*`
/// means the input description is unusable, `Numerical*` means a solver ran
/// but could not reach its accuracy contract, and the pipeline variants
/// signal data that is structurally inconsistent with the requested stage.
#[derive(Debug, Error)]
pub enum Error {
    /// Geometry or scene description violates a hard admissibility rule
    /// (overlapping components, ball intersecting the enclosing disk, ...).
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    /// A parameter is outside the supported domain (non-positive wavenumber,
    /// odd quadrature size, non-finite input, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Evaluation requested at (or numerically on top of) a kernel
    /// singularity, e.g. the fundamental solution at coincident points.
    #[error("singular evaluation: {0}")]
    Singularity(String),

    /// Two data objects that must share grids/wavenumber do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A direct or iterative linear solve failed (singular factorisation or
    /// no convergence within the iteration budget).
    #[error("linear solver failure: {0}")]
    SolverFailure(String),

    /// The far-field operator is numerically rank deficient, so regularised
    /// inversion is meaningless.
    #[error("degenerate operator: {0}")]
    DegenerateOperator(String),

    /// The reliable-entry mask of a phaseless dataset splits into several
    /// connected components, so sign resolution cannot propagate globally.
    #[error("fragmented phase mask: {0} connected components")]
    FragmentedMask(usize),

    /// Branch disambiguation could not separate the two conjugation
    /// candidates (probe ratios too close, or candidates coincide).
    #[error("unresolved conjugation branch: {0}")]
    UnresolvedBranch(String),

    /// Global-phase fixing requested on a geometry where the expansion of the
    /// scattered field near the reference ball is not trustworthy.
    #[error("expansion geometry not admissible: {0}")]
    ExpansionGeometry(String),

    /// Recovered data failed an internal consistency bound.
    #[error("inconsistent data: {0}")]
    Inconsistent(String),

    /// File import/export failure (formats, not OS errors).
    #[error("format error: {0}")]
    Format(String),

    /// Underlying I/O failure during import/export.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of numerical accuracy/convergence rather than of
    /// input data; the CLI maps these to a distinct exit code.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SolverFailure(_)
                | Error::DegenerateOperator(_)
                | Error::Inconsistent(_)
                | Error::Singularity(_)
        )
    }
}
