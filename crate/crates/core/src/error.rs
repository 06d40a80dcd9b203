use thiserror::Error;

/// Errors raised by the engine.
///
/// Law violations found by the checkers are usually reported as data (see
/// [`crate::engine::LawReport`]); the `LawViolation` variant is used only where
/// an operation cannot produce a meaningful result without the law holding.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("maps are not parallel: {0}")]
    NotParallel(String),

    #[error("codomains of the cospan differ: {0}")]
    CodMismatch(String),

    #[error("map is not an isomorphism: {0}")]
    NotIso(String),

    #[error("object with {size} elements exceeds the element budget of {budget}")]
    BudgetExceeded { size: usize, budget: usize },

    #[error("typing mismatch: {0}")]
    TypingMismatch(String),

    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("functor does not carry the `{0}` flag")]
    FlagMissing(&'static str),

    #[error("{law} violated at {witness}")]
    LawViolation { law: String, witness: String },

    #[error("lax morphism is not strong: {0}")]
    NotStrong(String),

    #[error("oplax morphism law violated: {0}")]
    OplaxLawViolation(String),

    #[error("not a coalgebra morphism: {0}")]
    NotCoalgMorphism(String),

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("initial chain did not stabilize within {steps} steps (stages {stages:?})")]
    Exceeded { steps: usize, stages: Vec<usize> },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("validation failed: {law} ({witness})")]
    Validation { law: String, witness: String },
}

impl Error {
    pub(crate) fn law(law: impl Into<String>, witness: impl std::fmt::Display) -> Self {
        Error::LawViolation {
            law: law.into(),
            witness: witness.to_string(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
