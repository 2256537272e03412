use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("variable count mismatch: {0} vs {1}")]
    VarMismatch(usize, usize),
    #[error("variable index {index} out of range for {nvars} variables")]
    VarOutOfRange { index: usize, nvars: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("substituted series has a nonzero constant term")]
    ConstantTerm,
    #[error("singular: {0}")]
    Singular(String),
    #[error("series has zero constant term and cannot be inverted")]
    NotUnit,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("connection is not flat (defect {pair:?} nonzero at degree {degree})")]
    NotFlat { pair: (usize, usize), degree: u32 },
    #[error("initial data depends on leaf variables")]
    LeafDependence,
    #[error("non-coordinate frame: {0}")]
    NonCoordinate(String),
    #[error("frames are linearly dependent at the origin")]
    DependentFrames,
    #[error("tangent frame is not involutive: {0}")]
    NonInvolutive(String),
    #[error("critical germ: first derivative vanishes at the origin")]
    CriticalGerm,
    #[error("initial 1-jets are linearly dependent")]
    DependentJets,
    #[error("equation is not monic: {0}")]
    NotMonic(String),
    #[error("point leaves the affine chart")]
    ChartEscape,
    #[error("eigenvalue condition violated: {0}")]
    Eigenvalues(String),
    #[error("point is not on the incidence variety")]
    NotOnIncidence,
    #[error("pole locus: {0}")]
    PoleLocus(String),
    #[error("charts are incompatible: residual {0:e}")]
    IncompatibleCharts(f64),
}
