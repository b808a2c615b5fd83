use std::fmt;

use thiserror::Error;

use crate::model::ComponentId;

/// Errors raised by planners, evaluators and oracles.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("unknown component `{0}`")]
    UnknownComponent(ComponentId),

    #[error("sequence is not a permutation of the model's components: {0}")]
    NotAPermutation(String),

    #[error("the system cannot fail, so the cost given a fault is undefined")]
    CannotFail,

    #[error("{what}: size {size} exceeds the limit of {limit}{}", hint.map(|h| format!(" ({h})")).unwrap_or_default())]
    LimitExceeded {
        what: &'static str,
        size: usize,
        limit: usize,
        hint: Option<&'static str>,
    },

    #[error("pair position {position} is out of range for a sequence of length {len}")]
    PositionOutOfRange { position: usize, len: usize },

    #[error("joint distribution is not single-fault: a world with positive probability has {0} broken components")]
    NotSingleFault(usize),

    #[error("component `{0}` is inspected but has no inspection cost")]
    MissingInspectionCost(ComponentId),

    #[error("component `{0}` is inspected but has no repair cost")]
    MissingRepairCost(ComponentId),

    #[error("operation requires independent failures but the model carries a joint table")]
    RequiresIndependence,

    #[error("cost vector has {got} entries, expected {expected}")]
    CostLength { got: usize, expected: usize },

    #[error("plan does not match the model: {0}")]
    PlanMismatch(String),

    #[error("execution got stuck: {0}")]
    Stuck(String),

    #[error("invalid model: {0}")]
    Invalid(ValidationErrors),
}

/// One problem found while validating a model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationError {
    /// Location inside the model, e.g. `components[2].p` or `root.children[0]`.
    pub path: String,
    pub message: String,
}

impl ValidationError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationErrors(pub Vec<ValidationError>);

impl ValidationErrors {
    pub fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.0.push(ValidationError::new(path, message));
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_result(self) -> Result<(), ValidationErrors> {
        if self.0.is_empty() {
            Ok(())
        } else {
            Err(self)
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &ValidationError> {
        self.0.iter()
    }

    /// True when some error message contains `needle`.
    pub fn mentions(&self, needle: &str) -> bool {
        self.0.iter().any(|e| e.message.contains(needle))
    }
}

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationErrors {}

impl From<ValidationErrors> for PlanError {
    fn from(e: ValidationErrors) -> Self {
        PlanError::Invalid(e)
    }
}

/// Non-fatal observation raised during validation or planning.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Warning {
    pub path: String,
    pub message: String,
}

impl Warning {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

pub type Result<T, E = PlanError> = std::result::Result<T, E>;
