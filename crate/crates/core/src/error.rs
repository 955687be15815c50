use std::path::PathBuf;

use thiserror::Error;

/// Every failure the library reports.
#[derive(Debug, Error)]
pub enum Error {
    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("triangle area below the degeneracy floor")]
    DegenerateInput,

    #[error("constraint segment lies outside the triangle by {distance:e}")]
    ConstraintOutsideTriangle { distance: f64 },

    #[error("{object} is not closed ({open_edges} unpaired edges{})", edge_list(edges))]
    NotClosed {
        object: String,
        open_edges: usize,
        /// The unpaired directed edges by vertex index, when indices exist.
        edges: Vec<(u32, u32)>,
    },

    #[error("intersection set references {what}")]
    InconsistentProvenance { what: String },

    #[error("normals are antiparallel along the gluing curve (fold-back)")]
    ParallelDegeneracy,

    #[error("no mate for boundary curve near {at}")]
    NoCandidate { at: String },

    #[error("two mates tie at angle {theta} near {at}")]
    AmbiguousTie { theta: f64, at: String },

    #[error("gluing stuck: {0}")]
    GluingStuck(String),

    #[error("not realizable: {0}")]
    NotRealizable(String),

    #[error("no interior witness found after {0} attempts")]
    WitnessNotFound(usize),

    #[error("ray casting gave only degenerate rays after {0} attempts")]
    RetryExhausted(usize),

    #[error("volume is infinite")]
    InfiniteVolume,

    #[error("vertex left the finite range during advection")]
    BlowUp,

    #[error("cannot regularize: {0}")]
    CannotRegularize(String),

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot serialize {0} as a mesh")]
    CannotSerialize(&'static str),
}

fn edge_list(edges: &[(u32, u32)]) -> String {
    const SHOWN: usize = 8;
    if edges.is_empty() {
        return String::new();
    }
    let mut s: Vec<String> = edges.iter().take(SHOWN).map(|(a, b)| format!("{a}-{b}")).collect();
    if edges.len() > SHOWN {
        s.push("...".into());
    }
    format!(": {}", s.join(" "))
}

impl Error {
    /// Short machine-readable name used on the CLI diagnostic stream.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidTolerance(_) => "InvalidTolerance",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::DegenerateInput => "DegenerateInput",
            Error::ConstraintOutsideTriangle { .. } => "ConstraintOutsideTriangle",
            Error::NotClosed { .. } => "NotClosed",
            Error::InconsistentProvenance { .. } => "InconsistentProvenance",
            Error::ParallelDegeneracy => "ParallelDegeneracy",
            Error::NoCandidate { .. } => "NoCandidate",
            Error::AmbiguousTie { .. } => "AmbiguousTie",
            Error::GluingStuck(_) => "GluingStuck",
            Error::NotRealizable(_) => "NotRealizable",
            Error::WitnessNotFound(_) => "WitnessNotFound",
            Error::RetryExhausted(_) => "RetryExhausted",
            Error::InfiniteVolume => "InfiniteVolume",
            Error::BlowUp => "BlowUp",
            Error::CannotRegularize(_) => "CannotRegularize",
            Error::Parse { .. } => "ParseError",
            Error::Io { .. } => "IoError",
            Error::CannotSerialize(_) => "CannotSerialize",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
