use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Domain errors. Each carries a stable machine-readable code (see
/// [`Error::code`]) and, for document errors, a path into the document.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("schema violation at {path}: {message}")]
    Schema { path: String, message: String },

    #[error("duplicate id `{id}` at {path}")]
    DuplicateId { path: String, id: String },

    #[error("unknown {kind} `{id}` at {path}")]
    UnknownId { path: String, kind: &'static str, id: String },

    #[error("atom producible: `{atom}` is a product at {path}")]
    AtomProducible { path: String, atom: String },

    #[error("negative cost at {path}")]
    NegativeCost { path: String },

    #[error("base-measure containment: operator `{op}` of the base measure is missing from measure `{measure}` at {path}")]
    BaseContainment { path: String, measure: String, op: String },

    #[error("invalid reaction at {path}: {message}")]
    InvalidReaction { path: String, message: String },

    #[error("unknown entity `{0}`")]
    UnknownEntity(String),

    #[error("unknown measure `{0}`")]
    UnknownMeasure(String),

    #[error("unknown operator `{0}`")]
    UnknownOperator(String),

    #[error("expression parse error at offset {offset}: {message}")]
    ExpressionParse { offset: usize, message: String },

    #[error("no reaction backs node `{node}`")]
    MissingReaction { node: String },

    #[error("undefined intensity: base simplicity of `{entity}` is {value}")]
    UndefinedIntensity { entity: String, value: String },

    #[error("no such decomposition: `{target}` is not a product of {op}({left},{right})")]
    NoSuchDecomposition { target: String, op: String, left: String, right: String },

    #[error("{what} cap exceeded: {actual} > {cap}")]
    CapExceeded { what: &'static str, cap: usize, actual: usize },

    #[error("parameter out of range: {0}")]
    Parameter(String),

    #[error("associativity violation on triple ({x},{y},{z}): {detail}")]
    AssociativityViolation { x: String, y: String, z: String, detail: String },

    #[error("gamma machinery missing: {0}")]
    GammaMissing(String),

    #[error("mixed vector lengths: {0} vs {1}")]
    MixedLengths(usize, usize),

    #[error("io error at {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Schema { .. } => "schema",
            Error::DuplicateId { .. } => "duplicate-id",
            Error::UnknownId { .. } => "unknown-id",
            Error::AtomProducible { .. } => "atom-producible",
            Error::NegativeCost { .. } => "negative-cost",
            Error::BaseContainment { .. } => "base-measure-containment",
            Error::InvalidReaction { .. } => "invalid-reaction",
            Error::UnknownEntity(_) => "unknown-entity",
            Error::UnknownMeasure(_) => "unknown-measure",
            Error::UnknownOperator(_) => "unknown-operator",
            Error::ExpressionParse { .. } => "expression-parse",
            Error::MissingReaction { .. } => "missing-reaction",
            Error::UndefinedIntensity { .. } => "undefined-intensity",
            Error::NoSuchDecomposition { .. } => "no-such-decomposition",
            Error::CapExceeded { .. } => "cap-exceeded",
            Error::Parameter(_) => "parameter",
            Error::AssociativityViolation { .. } => "associativity-violation",
            Error::GammaMissing(_) => "gamma-missing",
            Error::MixedLengths(..) => "mixed-lengths",
            Error::Io { .. } => "io",
        }
    }

    /// Document path for errors raised while loading, empty otherwise.
    pub fn path(&self) -> &str {
        match self {
            Error::Schema { path, .. }
            | Error::DuplicateId { path, .. }
            | Error::UnknownId { path, .. }
            | Error::AtomProducible { path, .. }
            | Error::NegativeCost { path }
            | Error::BaseContainment { path, .. }
            | Error::InvalidReaction { path, .. }
            | Error::Io { path, .. } => path,
            _ => "",
        }
    }

    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema { path: path.into(), message: message.into() }
    }
}
