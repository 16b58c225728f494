use thiserror::Error;

/// Errors raised by the spectral routines.
#[derive(Debug, Clone, Error)]
pub enum SpectraError {
    #[error("expected {expected}x{expected} matrix for {name}, got {rows}x{cols}")]
    DimensionMismatch {
        name: &'static str,
        expected: usize,
        rows: usize,
        cols: usize,
    },

    /// Hypothesis A violated: an off-diagonal coefficient is numerically singular.
    #[error("coefficient {name} is numerically singular (rcond = {rcond:.3e})")]
    SingularCoefficient { name: &'static str, rcond: f64 },

    #[error("extreme band coefficients t(-L) and t(L) must be nonzero")]
    ZeroExtremeDiagonal,

    #[error("scaling parameter must be positive, got {0}")]
    NonPositiveScale(f64),

    #[error("symbol argument z must be nonzero")]
    ZeroArgument,

    #[error("no chiral grading declared on this symbol")]
    NoGrading,

    #[error("chiral grading requires an even block size, got L = {0}")]
    OddBlockSize(usize),

    #[error("symbol is not chiral: diagonal-block defect {defect:.3e} exceeds tolerance {tolerance:.3e} in {name}")]
    NotChiral {
        name: &'static str,
        defect: f64,
        tolerance: f64,
    },

    #[error("eigensolver failed: {0}")]
    EigensolverFailure(String),

    /// A transfer eigenvalue sits on the requested contour, so the quadrature
    /// and the Fredholm condition are both ill-posed.
    #[error("transfer eigenvalue of modulus {modulus:.6e} lies on the contour of radius {radius:.6e}")]
    EigenvalueOnContour { radius: f64, modulus: f64 },

    /// Same condition for the scaled unit circle used by winding numbers.
    #[error("transfer eigenvalue of modulus {modulus:.6e} lies on the circle of radius {radius:.6e}")]
    EigenvalueOnCircle { radius: f64, modulus: f64 },

    /// The energy belongs to the degeneracy set F, index-set labels are ambiguous.
    #[error("transfer matrix has a (near-)degenerate eigenvalue at E = {re}+{im}i (min pair gap {gap:.3e})")]
    DegenerateEnergy { re: f64, im: f64, gap: f64 },

    #[error("contour quadrature did not converge with {nodes} nodes (last change {change:.3e})")]
    QuadratureNotConverged { nodes: usize, change: f64 },

    /// Hypothesis B fails: every energy carries a degenerate transfer eigenvalue.
    #[error("discriminant polynomial vanishes identically; the degeneracy set is all of C")]
    IdenticallyZeroDiscriminant,

    #[error("requested section size N*L = {requested} exceeds the cap {cap}")]
    SizeCapExceeded { requested: usize, cap: usize },

    #[error("|G|^(N+1) = exp({log_magnitude:.3e}) exceeds the floating-point range; use the log-scaled variant")]
    OverflowRisk { log_magnitude: f64 },

    /// E is on the set Lambda, there is no separating radius between the middle eigenvalues.
    #[error("middle transfer eigenvalues have equal modulus (gap {gap:.3e}); no separating radius exists")]
    MiddleModuliEqual { gap: f64 },

    #[error("no usable vector in the intersection of the non-expanding subspaces (best alignment {alignment:.3e})")]
    EmptyIntersection { alignment: f64 },

    /// The scaling parameter coincides with a root modulus of det(z H_pm(z)).
    #[error("scaling parameter {scale:.6e} coincides with a root modulus {modulus:.6e}")]
    BreakpointHit { scale: f64, modulus: f64 },

    /// The chiral zero-mode criterion does not apply when 0 is on Lambda.
    #[error("0 lies on Lambda (middle gap {gap:.3e}); the zero-outlier criterion is inapplicable")]
    ZeroOnLambda { gap: f64 },

    /// A contour Riesz projection was requested for an index set that is not a
    /// modulus-separated prefix of the sorted eigenvalue list.
    #[error("index set is not separated from its complement by a circle; use the eigen method")]
    IndexSetNotRadial,
}

impl SpectraError {
    /// Stable machine-readable code used in CLI reports.
    pub fn code(&self) -> &'static str {
        match self {
            SpectraError::DimensionMismatch { .. } => "dimension_mismatch",
            SpectraError::SingularCoefficient { .. } => "singular_coefficient",
            SpectraError::ZeroExtremeDiagonal => "zero_extreme_diagonal",
            SpectraError::NonPositiveScale(_) => "non_positive_scale",
            SpectraError::ZeroArgument => "zero_argument",
            SpectraError::NoGrading => "no_grading",
            SpectraError::OddBlockSize(_) => "odd_block_size",
            SpectraError::NotChiral { .. } => "not_chiral",
            SpectraError::EigensolverFailure(_) => "eigensolver_failure",
            SpectraError::EigenvalueOnContour { .. } => "eigenvalue_on_contour",
            SpectraError::EigenvalueOnCircle { .. } => "eigenvalue_on_circle",
            SpectraError::DegenerateEnergy { .. } => "degenerate_energy",
            SpectraError::QuadratureNotConverged { .. } => "quadrature_not_converged",
            SpectraError::IdenticallyZeroDiscriminant => "identically_zero_discriminant",
            SpectraError::SizeCapExceeded { .. } => "size_cap_exceeded",
            SpectraError::OverflowRisk { .. } => "overflow_risk",
            SpectraError::MiddleModuliEqual { .. } => "middle_moduli_equal",
            SpectraError::EmptyIntersection { .. } => "empty_intersection",
            SpectraError::BreakpointHit { .. } => "breakpoint_hit",
            SpectraError::ZeroOnLambda { .. } => "zero_on_lambda",
            SpectraError::IndexSetNotRadial => "index_set_not_radial",
        }
    }

    /// Whether the error reflects bad input rather than a numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            SpectraError::DimensionMismatch { .. }
                | SpectraError::SingularCoefficient { .. }
                | SpectraError::ZeroExtremeDiagonal
                | SpectraError::NonPositiveScale(_)
                | SpectraError::ZeroArgument
                | SpectraError::NoGrading
                | SpectraError::OddBlockSize(_)
                | SpectraError::NotChiral { .. }
                | SpectraError::SizeCapExceeded { .. }
                | SpectraError::IndexSetNotRadial
        )
    }
}

pub type Result<T> = std::result::Result<T, SpectraError>;
