use std::fmt;

use serde::Serialize;

/// Position inside an input text, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Location {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("syntax error at {location}: {message}")]
    Syntax { location: Location, message: String },
    #[error("duplicate character id `{0}`")]
    DuplicateCharacter(String),
    #[error("unknown member `{member}` in scene `{scene}`")]
    UnknownMember { scene: String, member: String },
    #[error("character `{0}` appears in no scene")]
    CharacterInNoScene(String),
    #[error("unknown leaf {0}")]
    UnknownLeaf(usize),
    #[error("permutation does not match the node set of layer {layer}")]
    PermutationMismatch { layer: usize },
    #[error("solution has {found} layers, instance has {expected}")]
    LayerCountMismatch { expected: usize, found: usize },
    #[error("assignment not transitive on layer {layer}: witness ({h}, {i}, {j})")]
    NotTransitive {
        layer: usize,
        h: usize,
        i: usize,
        j: usize,
    },
    #[error("assignment has {found} values, model has {expected} variables")]
    AssignmentLength { expected: usize, found: usize },
    #[error("permutation on layer {layer} is not tree-consistent")]
    NotTreeConsistent { layer: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("enumeration limit exceeded: {0}")]
    LimitExceeded(String),
}

impl Error {
    /// Stable machine-readable code for error records.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Syntax { .. } => "syntax",
            Error::DuplicateCharacter(_) => "duplicate_character",
            Error::UnknownMember { .. } => "unknown_member",
            Error::CharacterInNoScene(_) => "character_in_no_scene",
            Error::UnknownLeaf(_) => "unknown_leaf",
            Error::PermutationMismatch { .. } => "permutation_mismatch",
            Error::LayerCountMismatch { .. } => "layer_count_mismatch",
            Error::NotTransitive { .. } => "not_transitive",
            Error::AssignmentLength { .. } => "assignment_length",
            Error::NotTreeConsistent { .. } => "not_tree_consistent",
            Error::InvalidInput(_) => "invalid_input",
            Error::LimitExceeded(_) => "limit_exceeded",
        }
    }

    pub fn location(&self) -> Option<Location> {
        match self {
            Error::Syntax { location, .. } => Some(*location),
            _ => None,
        }
    }

    pub fn record(&self) -> ErrorRecord {
        ErrorRecord {
            code: self.code().to_string(),
            message: self.to_string(),
            location: self.location(),
        }
    }
}

/// Machine-readable form of an [`Error`].
#[derive(Debug, Clone, Serialize)]
pub struct ErrorRecord {
    pub code: String,
    pub message: String,
    pub location: Option<Location>,
}

pub type Result<T> = std::result::Result<T, Error>;

/// One violated invariant found by a validation pass.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub code: String,
    pub message: String,
}

impl Violation {
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        Violation {
            code: code.to_string(),
            message: message.into(),
        }
    }
}

/// Violations collected by `validate_*`; empty means valid.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn push(&mut self, code: &str, message: impl Into<String>) {
        self.violations.push(Violation::new(code, message));
    }

    pub fn has(&self, code: &str) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return writeln!(f, "ok");
        }
        for v in &self.violations {
            writeln!(f, "{}: {}", v.code, v.message)?;
        }
        Ok(())
    }
}
