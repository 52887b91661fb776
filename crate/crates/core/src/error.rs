use thiserror::Error;

/// Errors produced by mesh construction, smoothing and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("quad {quad} references node {node}, but the mesh has {count} nodes")]
    NodeOutOfRange {
        quad: usize,
        node: usize,
        count: usize,
    },

    #[error("quad {quad} repeats node {node}")]
    RepeatedCorner { quad: usize, node: usize },

    #[error("edge ({0}, {1}) is shared by {2} quads")]
    NonManifoldEdge(usize, usize, usize),

    #[error("quad connectivity is not orientable (conflict at quad {0})")]
    NonOrientable(usize),

    #[error("mesh has no quads")]
    EmptyMesh,

    #[error("node {0} has no incident quads")]
    IsolatedNode(usize),

    #[error("node {0}: every incident virtual triangle is degenerate")]
    DegenerateFan(usize),

    #[error("degenerate local frame: points are collinear")]
    DegenerateFrame,

    #[error("weights need at least one length")]
    NoLengths,

    #[error(
        "projection along normal failed{}: {reason}",
        .node.map(|n| format!(" at node {n}")).unwrap_or_default()
    )]
    ProjectionFailed { node: Option<usize>, reason: String },

    #[error("kriging: {0}")]
    Kriging(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
