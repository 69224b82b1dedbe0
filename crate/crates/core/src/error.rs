use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("key `{0}` not found")]
    KeyNotFound(String),

    #[error("triggered access nested deeper than {limit} levels (key `{key}`)")]
    RecursionLimitExceeded { key: String, limit: usize },

    #[error("backend failed conformance check: {0}")]
    BackendContractViolation(String),

    #[error("invalid key `{0}`")]
    InvalidKey(String),

    #[error("no macro handler accepts `{0}`")]
    UnknownMacro(String),

    #[error("malformed macro `{macro_text}`: {reason}")]
    MacroParse { macro_text: String, reason: String },

    #[error("no synonym defined for `{0}`")]
    NoSynonym(String),

    #[error("`{configurator}` has no value for `{key}`")]
    MissingValue { configurator: String, key: String },

    #[error("no construct function registered for key `{0}`")]
    NoConstructRegistered(String),

    #[error("`{requester}` requires `{requirement}`, which is not attached")]
    UnsatisfiedDependency {
        requester: String,
        requirement: String,
    },

    #[error("a configurator named `{0}` is already attached")]
    DuplicateIdentifier(String),

    #[error("unknown configurator type `{0}`")]
    UnknownType(String),

    #[error("no attached configurator `{0}`")]
    UnknownConfigurator(String),

    #[error("`{requester}` has no declared dependency on `{target}` and cannot read `{key}`")]
    VisibilityViolation {
        requester: String,
        target: String,
        key: String,
    },

    #[error("circular reference: {}", .0.join(" -> "))]
    CircularReference(Vec<String>),

    #[error("`{0}` does not implement the ScriptGen interface")]
    NotAScriptGen(String),

    #[error("`{scriptgen}` cannot generate scripts for `{delegator}`")]
    UnsupportedDelegator {
        scriptgen: String,
        delegator: String,
    },

    #[error("workflow requirement graph has a cycle through {}", .0.join(", "))]
    CyclicWorkflow(Vec<String>),

    #[error("line {line}: continuation `\\` on the last line")]
    DanglingContinuation { line: usize },

    #[error("line {line}: {message} (at `{token}`)")]
    Parse {
        line: usize,
        token: String,
        message: String,
    },

    #[error("source cycle at `{}` (include chain: {})", .path.display(), .chain.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(" -> "))]
    SourceCycle { path: PathBuf, chain: Vec<PathBuf> },

    #[error("{file}:{line}: {source}")]
    At {
        file: String,
        line: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("framework `{message}` failed in `{configurator}`: {source}")]
    Dispatch {
        message: String,
        configurator: String,
        #[source]
        source: Box<Error>,
    },

    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),

    #[error("{}:{line}: expected `key=value`", .path.display())]
    MalformedLine { path: PathBuf, line: usize },

    #[error("failed to spawn: {}", .0.join("; "))]
    SpawnFailure(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Strips location and dispatch wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::At { source, .. } | Error::Dispatch { source, .. } => source.root(),
            other => other,
        }
    }

    /// Line number of the innermost located wrapper or parse error, if any.
    pub fn line(&self) -> Option<usize> {
        match self {
            Error::At { source, line, .. } => source.line().or(Some(*line)),
            Error::Parse { line, .. } | Error::DanglingContinuation { line } => Some(*line),
            Error::Dispatch { source, .. } => source.line(),
            _ => None,
        }
    }
}
