use thiserror::Error;

/// Errors shared across the crate.
///
/// Structural problems with inputs (non-graded covers, overlapping matchings,
/// malformed files) and analysis outcomes that abort a pipeline (multirays,
/// exhausted budgets) all surface through this enum so that the CLI can map
/// them onto exit codes uniformly.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cover relation contains a cycle: {0}")]
    CycleInCovers(String),
    #[error("poset is not graded: {0}")]
    NotGraded(String),
    #[error("glue references unknown cell: {0}")]
    DanglingGlue(String),
    #[error("unknown element: {0}")]
    UnknownElement(String),
    #[error("duplicate id: {0}")]
    DuplicateId(String),
    #[error("no consistent incidence signs exist: {0}")]
    NoConsistentSigns(String),
    #[error("matched pair is not a cover pair: {0}")]
    NotACover(String),
    #[error("element matched twice: {0}")]
    Overlap(String),
    #[error("step budget exceeded ({0} steps); matching is probably not rayless")]
    BudgetExceeded(usize),
    #[error("digraph is not acyclic: {0}")]
    NotAcyclic(String),
    #[error("invalid ray: {0}")]
    InvalidRay(String),
    #[error("ray has a bypass starting at index {0}")]
    HasBypass(usize),
    #[error("ray is not normalized: {0}")]
    NotNormalized(String),
    #[error("acyclicity lost after reversal; a bypass escaped the certified horizon: {0}")]
    AcyclicityLost(String),
    #[error("matching has a multiray; the ray class set is uncountable (2^aleph_0): {0}")]
    MultirayPresent(String),
    #[error("infinitely many ray classes")]
    InfinitelyManyClasses,
    #[error("matching has infinitely many critical cells: {0}")]
    InfiniteCriticalCells(String),
    #[error("matching is not rayless: {0}")]
    NotRayless(String),
    #[error("boundary matrices do not compose to zero: {0}")]
    NotAComplex(String),
    #[error("side condition violated: {0}")]
    SideConditionViolated(String),
    #[error("unknown example: {0}")]
    UnknownExample(String),
    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse {
        line: usize,
        col: usize,
        msg: String,
    },
}

impl Error {
    pub fn parse(line: usize, col: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            col,
            msg: msg.into(),
        }
    }

    /// Exit code the CLI reports for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } => 4,
            Error::MultirayPresent(_) | Error::InfinitelyManyClasses => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
