use thiserror::Error;

use crate::liealg::SeriesTag;

/// Grid location (0-based `z⁻` index, 0-based `z⁺` index) of a numerical failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridPoint {
    pub i_minus: usize,
    pub i_plus: usize,
}

impl std::fmt::Display for GridPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(i-={}, i+={})", self.i_minus, self.i_plus)
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("index out of range: {0}")]
    Index(String),

    #[error("rank {rank} is below the minimum for series {series}")]
    InvalidTag { series: char, rank: usize },

    #[error("degenerate gradation: all Dynkin labels are zero")]
    DegenerateLabels,

    #[error("invalid labels for {tag}: {reason}")]
    Labels { tag: SeriesTag, reason: String },

    #[error("invalid block structure: {0}")]
    Blocks(String),

    #[error("constraint violation: {0}")]
    Constraint(String),

    #[error("internal consistency: {0}")]
    Internal(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("blow-up at {at} in block {block}: {detail}")]
    BlowUp {
        at: GridPoint,
        block: usize,
        detail: String,
    },

    #[error("fixed-point iteration did not converge at {at} after {iterations} iterations")]
    Convergence { at: GridPoint, iterations: usize },

    #[error("convergence study needs at least 3 grids, got {0}")]
    TooFewGrids(usize),

    #[error("convergence study grids do not refine by a factor of 2: {0}")]
    NoRefinement(String),
}

pub type Result<T> = std::result::Result<T, Error>;
