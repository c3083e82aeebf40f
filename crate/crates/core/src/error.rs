use std::path::PathBuf;

use crate::imaging::{Rect, RegionKind};
use crate::model::Expression;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Operand dimensions or lengths do not fit the operation.
    #[error("shape error: {0}")]
    Shape(String),

    /// Covariance needs at least two observations.
    #[error("degenerate sample: covariance needs at least 2 rows, got {rows}")]
    DegenerateSample { rows: usize },

    #[error("{}: covariance has {positive} positive eigenvalue(s), at least {required} required", degenerate_scope(.expression, .region))]
    DegenerateRank {
        region: RegionKind,
        expression: Option<Expression>,
        positive: usize,
        required: usize,
    },

    #[error("crop {rect} lies outside the {width}x{height} image")]
    Bounds { rect: Rect, width: usize, height: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("eigen solver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("no training images for: {}", join_names(.missing))]
    MissingExpressions { missing: Vec<Expression> },

    #[error("missing region(s): {}", join_names(.missing))]
    MissingRegions { missing: Vec<RegionKind> },

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot decode image {}: {message}", .path.display())]
    Decode { path: PathBuf, message: String },

    /// A text document (manifest, model, fixture) is malformed.
    #[error("{}: {message}", .origin)]
    Format { origin: String, message: String },

    #[error("unsupported model format {found:?}, expected {expected:?}")]
    Version { found: String, expected: &'static str },

    #[error("region {region}: {source}")]
    InRegion {
        region: RegionKind,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn format(origin: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Format {
            origin: origin.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_region(self, region: RegionKind) -> Self {
        match self {
            // already carries its own region
            Error::DegenerateRank { .. } | Error::InRegion { .. } => self,
            other => Error::InRegion {
                region,
                source: Box::new(other),
            },
        }
    }

    /// Strips region wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::InRegion { source, .. } => source.root(),
            other => other,
        }
    }
}

fn degenerate_scope(expression: &Option<Expression>, region: &RegionKind) -> String {
    match expression {
        Some(e) => format!("{e}/{region}"),
        None => region.to_string(),
    }
}

fn join_names<T: std::fmt::Display>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}
