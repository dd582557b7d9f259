use thiserror::Error;

use crate::linalg::Condensation;
use crate::simulate::Trajectory;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not symmetric: |a[{row}][{col}] - a[{col}][{row}]| = {gap:e}")]
    NotSymmetric { row: usize, col: usize, gap: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid coupling matrix: {0}")]
    InvalidCoupling(String),

    #[error("coupling matrix is reducible ({} strongly connected blocks)", .0.blocks.len())]
    Reducible(Condensation),

    #[error("no finite coupling strength satisfies the condition: extremal eigenvalue {0} is not negative")]
    NoFiniteCoupling(f64),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("trajectory diverged at t = {time} (state norm {norm:e})")]
    Divergence {
        time: f64,
        norm: f64,
        partial: Box<Trajectory>,
    },

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
