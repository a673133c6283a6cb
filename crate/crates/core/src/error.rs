use thiserror::Error;

#[derive(Debug, Error)]
pub enum PgmError {
    #[error("file not found: {0}")]
    Missing(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed PGM header ({0})")]
    Header(&'static str),
    #[error("unsupported format {0}: only binary P5 is read")]
    Unsupported(String),
    #[error("unsupported maxval {0}: only 255 is read")]
    MaxVal(usize),
    #[error("truncated raster: expected {expected} bytes, found {actual}")]
    Truncated { expected: usize, actual: usize },
}

#[derive(Debug, Error, PartialEq)]
pub enum ImageError {
    #[error("image dimensions must be positive, got {width}x{height}")]
    EmptyDimensions { width: usize, height: usize },
    #[error("pixel buffer has {actual} entries, expected {expected}")]
    DataLength { expected: usize, actual: usize },
    #[error("reduction factor {0} outside (0, 1]")]
    BadFactor(f64),
    #[error("reduction exhausted: result would be {width}x{height}")]
    ReductionExhausted { width: usize, height: usize },
}

#[derive(Debug, Error, PartialEq)]
pub enum PrimitiveError {
    #[error("image {width}x{height} is too small for gradient estimation (need 3x3)")]
    TooSmall { width: usize, height: usize },
}

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("unknown component {0:?}")]
    UnknownComponent(String),
    #[error("component {component:?} expects a {expected} but was assigned a {actual}")]
    KindMismatch {
        component: String,
        expected: &'static str,
        actual: &'static str,
    },
    #[error("required component {0:?} has no assignment")]
    MissingRequired(String),
    #[error("invalid model: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("model file: {0}")]
    Format(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum SearchError {
    #[error("uninterpretable region: no {kind} candidate for required component {component:?}")]
    Uninterpretable { component: String, kind: &'static str },
    #[error("assignment space {size} exceeds exact limit {limit}; use beam search")]
    UseBeam { size: u128, limit: u128 },
    #[error("no assignment uses distinct primitives for every component")]
    NoDistinctAssignment,
    #[error("candidate count K must be at least 1")]
    ZeroCandidates,
    #[error("beam width must be at least 1")]
    ZeroBeam,
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error, PartialEq)]
pub enum LearningError {
    #[error("no positive example has fully grounded gold")]
    NoGroundedPositives,
    #[error("relation index {index} out of range ({len} relations)")]
    RelationIndex { index: usize, len: usize },
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("nothing to evaluate: no component has non-null gold")]
    NothingToEvaluate,
    #[error("dimension mismatch: prediction frame {pred:?}, gold frame {gold:?}")]
    Dims {
        pred: (usize, usize),
        gold: (usize, usize),
    },
}

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("glyph dimensions {width}x{height} below the 24x24 minimum")]
    TooSmall { width: usize, height: usize },
    #[error("could not place glyph {index} after {attempts} attempts")]
    Placement { index: usize, attempts: usize },
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {0}: {1}")]
    Io(std::path::PathBuf, #[source] std::io::Error),
    #[error("malformed corpus: {0}")]
    Format(String),
}
