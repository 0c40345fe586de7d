use crate::numerics::Cx;

/// Every failure the laboratory can report.
///
/// Numerical failures carry the offending location so that callers (and the
/// command-line front end) can say *where* a path or stencil went wrong.
#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("leading coefficient of quadratic is zero")]
    DegenerateQuadratic,

    #[error("step size underflow approaching a singularity near {location:?}")]
    SingularityApproach { location: Vec<Cx> },

    #[error("step budget of {max_steps} exhausted near {location:?}")]
    StepBudgetExhausted { max_steps: usize, location: Vec<Cx> },

    #[error("function evaluation failed at stencil point {at}: {source}")]
    StencilFailure {
        at: Cx,
        #[source]
        source: Box<LabError>,
    },

    #[error("coincident times: {0}")]
    TimeCollision(String),

    #[error("evaluation at a pole: {0}")]
    PoleEvaluation(String),

    #[error("path segment {segment} passes within {distance:e} of singular locus `{locus}` (exclusion radius {radius:e})")]
    PathViolation {
        segment: usize,
        locus: String,
        distance: f64,
        radius: f64,
    },

    #[error("path has coincident consecutive waypoints at index {0}")]
    DegeneratePath(usize),

    #[error("normalization mismatch: expected {expected}, found {found}")]
    NormalizationMismatch { expected: &'static str, found: &'static str },

    #[error("state invariant violated: {0}")]
    InvariantViolated(String),

    #[error("condition (iii) violated: leading coefficient X(t) = {x} vanishes (scale {scale:e})")]
    ConditionIIIViolated { x: Cx, scale: f64 },

    #[error("condition (iv) violated: zeros of q12 coincide (separation {separation:e})")]
    ConditionIVViolated { separation: f64 },

    #[error("resonant infinity: theta_inf1 - theta_inf2 = {0}")]
    ResonantInfinity(Cx),

    #[error("gauge function u vanishes")]
    ZeroGauge,

    #[error("state lies on the reduction locus q1 + q2 = 1 (|1 - q1 - q2| = {0:e})")]
    ReductionLocus(f64),

    #[error("not on the Painleve VI reduction: {0}")]
    NotOnReduction(String),

    #[error("Fuchs relation violated: sum of exponents = {0}")]
    FuchsViolation(Cx),

    #[error("fundamental matrix nearly singular at x = {x} (|det| = {det:e})")]
    NearSingularPhi { x: Cx, det: f64 },

    #[error("x and y too close: |x - y| = {0:e}")]
    DiagonalCollision(f64),

    #[error("inverse map branch is ambiguous at zeta = {zeta}, eta = {eta}")]
    BranchAmbiguity { zeta: Cx, eta: Cx },

    #[error("degenerate Jacobian of the (zeta, eta) map: {0}")]
    DegenerateJacobian(String),

    #[error("no root found: {0}")]
    RootSearchFailed(String),

    #[error("infeasible exponents: {0}")]
    InfeasibleTheta(String),

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<LabError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl LabError {
    /// Wraps the error with the name of the pipeline stage that produced it.
    pub fn in_stage(self, stage: impl Into<String>) -> Self {
        LabError::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, looking through stage and stencil wrappers.
    pub fn root(&self) -> &LabError {
        match self {
            LabError::Stage { source, .. } | LabError::StencilFailure { source, .. } => {
                source.root()
            }
            other => other,
        }
    }

    /// True for failures caused by approaching a singular point of the equations.
    pub fn is_singularity(&self) -> bool {
        matches!(
            self.root(),
            LabError::SingularityApproach { .. }
                | LabError::StepBudgetExhausted { .. }
                | LabError::TimeCollision(_)
                | LabError::PoleEvaluation(_)
                | LabError::PathViolation { .. }
                | LabError::NearSingularPhi { .. }
                | LabError::DiagonalCollision(_)
                | LabError::ConditionIIIViolated { .. }
                | LabError::ConditionIVViolated { .. }
                | LabError::ResonantInfinity(_)
                | LabError::ZeroGauge
                | LabError::ReductionLocus(_)
                | LabError::BranchAmbiguity { .. }
                | LabError::DegenerateJacobian(_)
                | LabError::DegenerateQuadratic
        )
    }

    /// True for configuration and precondition failures detected before any numerics run.
    pub fn is_config(&self) -> bool {
        matches!(
            self.root(),
            LabError::ConfigInvalid(_)
                | LabError::FuchsViolation(_)
                | LabError::NotOnReduction(_)
                | LabError::InfeasibleTheta(_)
                | LabError::NormalizationMismatch { .. }
                | LabError::InvariantViolated(_)
                | LabError::DegeneratePath(_)
                | LabError::Json(_)
                | LabError::Io(_)
        )
    }
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;
