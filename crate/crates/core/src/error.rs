use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("region size {region_w}x{region_h} does not divide grid {width}x{height}")]
    DimensionMismatch {
        width: usize,
        height: usize,
        region_w: usize,
        region_h: usize,
    },

    #[error("cell ({x}, {y}) outside {width}x{height} grid")]
    CellOutOfBounds {
        x: usize,
        y: usize,
        width: usize,
        height: usize,
    },

    #[error("region {index} out of range (grid has {count} regions)")]
    RegionOutOfRange { index: usize, count: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("noise block at ({x}, {y}) with edge {edge} leaves the {width}x{height} grid")]
    BlockOutOfBounds {
        x: usize,
        y: usize,
        edge: usize,
        width: usize,
        height: usize,
    },

    #[error("noise blocks {first} and {second} overlap")]
    BlockOverlap { first: usize, second: usize },

    #[error("invalid noise spec: {0}")]
    InvalidNoise(String),

    #[error("could not place {count} disjoint {edge}x{edge} blocks after {attempts} attempts")]
    PlacementInfeasible {
        count: usize,
        edge: usize,
        attempts: usize,
    },

    #[error("noise area is empty")]
    EmptyArea,

    #[error("invalid fractions: {0}")]
    InvalidFractions(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("per-region majority infeasible: {0}")]
    InfeasibleMargin(String),

    #[error("no overturn found within a budget of {budget} flips")]
    BudgetExhausted { budget: usize },

    #[error("original election has no strict winner to overturn")]
    NoWinner,

    #[error("gallery is degenerate (covariance rank 0)")]
    DegenerateGallery,

    #[error("image dimensions {got_w}x{got_h} do not match {want_w}x{want_h}")]
    ImageMismatch {
        got_w: usize,
        got_h: usize,
        want_w: usize,
        want_h: usize,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
