use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("direction undefined for the zero vector")]
    ZeroVector,
}

/// A configuration value that violates a model invariant.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid `{field}`: {reason}")]
pub struct InvalidConfig {
    pub field: String,
    pub reason: String,
}

impl InvalidConfig {
    pub fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] InvalidConfig),
    #[error("no free position found for {what} after {attempts} attempts")]
    PlacementExhausted { what: &'static str, attempts: usize },
    #[error("a target is already active")]
    TargetAlreadyActive,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("connectivity fraction needs at least one sample")]
    EmptySeries,
    #[error("ground agent count must be positive")]
    NoGroundAgents,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvolveError {
    #[error(transparent)]
    Config(#[from] InvalidConfig),
    #[error("generation {generation}, individual {individual}: {source}")]
    Evaluation {
        generation: usize,
        individual: usize,
        #[source]
        source: SimError,
    },
    #[error("metrics for generation {generation}: {source}")]
    Metrics {
        generation: usize,
        #[source]
        source: MetricsError,
    },
    #[error("failed to build worker pool: {0}")]
    ThreadPool(String),
}
