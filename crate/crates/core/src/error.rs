use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid subset: {0}")]
    InvalidSubset(String),

    #[error("polynomial references variable x{var} outside the subset")]
    OutsideSubset { var: usize },

    #[error("matrix is singular to working precision")]
    Singular,

    #[error("matrix is not symmetric (asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is not Hurwitz (spectral abscissa {0})")]
    NotHurwitz(f64),

    #[error("Lyapunov solution is not positive definite (min eigenvalue {0:e})")]
    IndefiniteLyapunov(f64),

    #[error("eigenvalue iteration did not converge within {0} sweeps")]
    NoConvergence(usize),

    #[error("van der Pol parameters: no stable equilibrium after {0} resampling attempts")]
    ResamplingExhausted(usize),

    #[error("invalid phase pattern: {0}")]
    InvalidPhasePattern(String),

    #[error("SOS compile error: monomial {monomial} in constraint `{constraint}` cannot be represented")]
    Unrepresentable { constraint: String, monomial: String },

    #[error("SOS program is not affine in its unknowns: {0}")]
    NotAffine(String),

    #[error("SOS extraction failed: {0}")]
    Extraction(String),

    #[error("subset count C({n},{k}) = {count} exceeds the cap {cap}; use a smaller k or an explicit subset list")]
    TooManySubsets {
        n: usize,
        k: usize,
        count: usize,
        cap: usize,
    },

    #[error("partial synthesis failed for subset {subset}: {reason}")]
    SynthesisFailed { subset: String, reason: String },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("no partial certificate could be synthesized")]
    NoCertificates,

    #[error("metric undefined: {0}")]
    Undefined(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("certificate was produced for a different system (digest {expected}, system has {found})")]
    DigestMismatch { expected: String, found: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}
