use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not symmetric (relative asymmetry {0:.3e})")]
    NotSymmetric(f64),

    #[error("matrix is not Hermitian (relative asymmetry {0:.3e})")]
    NotHermitian(f64),

    #[error("eigensolver did not converge within {0} sweeps")]
    EigenNoConvergence(usize),

    #[error("matrix is not positive definite (min eigenvalue {min:.3e}, max {max:.3e})")]
    NotPositiveDefinite { min: f64, max: f64 },

    #[error("singular or degenerate covariance matrix")]
    SingularCovariance,

    #[error("ambient mean is focal: nearest-point projection is not unique (gap {gap:.3e})")]
    FocalMean { gap: f64 },

    #[error("log map undefined: input is at or numerically near the cut locus")]
    CutLocus,

    #[error("iteration did not converge within {0} steps")]
    NoConvergence(usize),

    #[error("degenerate tetrad: {0}")]
    DegenerateTetrad(String),

    #[error("{degenerate} of {total} bootstrap replicates were degenerate (limit 20%)")]
    DegenerateBootstrap { degenerate: usize, total: usize },

    #[error("all bootstrap replicates were degenerate")]
    AllReplicatesDegenerate,

    #[error("paired samples have unequal lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}
