use thiserror::Error;

/// Errors shared across the crate.
///
/// `Precondition` covers caller mistakes (bad arguments, inputs outside a
/// documented domain). `Invariant` covers checked structural properties that
/// should hold for every valid input; one of these firing means a bug, and
/// the message carries enough of the instance to replay it.
#[derive(Error, Debug)]
pub enum Error {
    #[error("torus dimension must be at least 1")]
    DimensionZero,
    #[error("torus side parameter M must be at least 2, got {0}")]
    SideTooSmall(usize),
    #[error("torus would have {vertices} vertices, over the budget of {budget}")]
    TorusBudget { vertices: usize, budget: usize },
    #[error("enumeration over {vertices} vertices exceeds the budget of {budget}")]
    EnumerationBudget { vertices: usize, budget: usize },
    #[error("activity must be a nonnegative rational, got {0}")]
    BadActivity(String),
    #[error("coordinates {0} are outside the torus")]
    BadCoordinates(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("no admissible shift direction: {0}")]
    NoAdmissibleDirection(String),
    #[error("cover instance has {vertices} vertices, over the search budget of {budget}")]
    CoverBudget { vertices: usize, budget: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
