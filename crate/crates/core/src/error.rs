use std::path::PathBuf;

use thiserror::Error;

use crate::geometry::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("WKT syntax error at byte {position}: expected {expected}, found {found}")]
    WktSyntax {
        position: usize,
        expected: String,
        found: String,
    },
    #[error("unsupported geometry type `{0}` (only 2D POLYGON is accepted)")]
    UnsupportedGeometry(String),
    #[error("ring {ring} is not closed or has too few points ({points} points)")]
    UnclosedRing { ring: usize, points: usize },
    #[error("non-finite coordinate in ring {ring}")]
    NonFiniteCoordinate { ring: usize },
    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("raster must be at least 2x2, got {width}x{height}")]
    RasterTooSmall { width: usize, height: usize },
    #[error("degenerate affine transform (zero scale)")]
    DegenerateTransform,
    #[error("no foreground")]
    NoForeground,
    #[error("degenerate mask: all pixels belong to one class")]
    DegenerateMask,
    #[error("extrapolation not supported: frame {frame} outside support range [{first}, {last}]")]
    Extrapolation { frame: u64, first: u64, last: u64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("empty point set")]
    EmptySet,
    #[error("no valid stride: every stride is >= sequence length {len}")]
    NoValidStride { len: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite activation in {network} layer {layer}")]
    NonFiniteActivation { network: &'static str, layer: usize },
    #[error("non-finite gradient for parameter {param}")]
    NonFiniteGradient { param: String },
    #[error("training diverged at epoch {epoch} (total loss not finite)")]
    Divergence {
        epoch: usize,
        trace: Vec<crate::cvae::EpochLoss>,
    },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("manifest row {row}: {message}")]
    Manifest { row: usize, message: String },
    #[error("manifest row {row}: invalid region: {violations:?}")]
    InvalidRegion { row: usize, violations: Vec<Violation> },
    #[error("frames not strictly increasing: row {previous_row} has frame {previous}, row {row} has frame {frame}")]
    FrameOrder {
        previous_row: usize,
        previous: u64,
        row: usize,
        frame: u64,
    },
    #[error("config: {0}")]
    Config(String),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
