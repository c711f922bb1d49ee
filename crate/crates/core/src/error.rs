use thiserror::Error;

/// Errors raised by the geometric constructions and checks.
#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("unknown manifold kind: {0}")]
    UnknownManifoldKind(String),

    #[error("non-invertible normalization in retraction (min singular value {0:e})")]
    SingularNormalization(f64),

    #[error("singular level point: dμ has rank {rank}, expected {expected}")]
    SingularLevelPoint { rank: usize, expected: usize },

    #[error("non-free point: generators are linearly dependent (min Gram eigenvalue {0:e})")]
    NonFreePoint(f64),

    #[error("ill-conditioned generator Gram matrix (condition number {0:e})")]
    IllConditionedGram(f64),

    #[error("horizontal space is not invariant under multiplication by i (residual {0:e})")]
    NotComplexInvariant(f64),

    #[error("vector is not tangent to the level set (residual {0:e})")]
    NotTangent(f64),

    #[error("point is off the level set (residual {0:e})")]
    OffManifold(f64),

    #[error("group element is not unitary (residual {0:e})")]
    NonUnitary(f64),

    #[error("mixed group kinds: {0}")]
    MixedGroupKinds(String),

    #[error("level is not fixed by the coadjoint action")]
    LevelNotFixed,

    #[error("degenerate mixing: det A = 0")]
    DegenerateMixing,

    #[error("not on orbit (best residual {0:e})")]
    NotOnOrbit(f64),

    #[error("phase unobservable: all coordinates of a needed weight class vanish")]
    PhaseUnobservable,

    #[error("coordinates out of chart radius ({norm} > {radius})")]
    OutOfRadius { norm: f64, radius: f64 },

    #[error("solver did not converge: {0}")]
    NoConvergence(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{module}: {source}")]
    InModule {
        module: &'static str,
        #[source]
        source: Box<GeometryError>,
    },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl GeometryError {
    pub fn shape(expected: impl ToString, got: impl ToString) -> Self {
        GeometryError::ShapeMismatch {
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }

    /// Tag the error with the module that raised it.
    pub fn in_module(self, module: &'static str) -> Self {
        match self {
            e @ GeometryError::InModule { .. } => e,
            e => GeometryError::InModule {
                module,
                source: Box::new(e),
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, GeometryError>;
