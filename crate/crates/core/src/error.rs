use thiserror::Error;

use crate::models::Placement;
use crate::tiers::TierId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("page must be exactly {expected} bytes, got {got}")]
    PageSize { expected: usize, got: usize },

    #[error("{codec} codec failure: {reason}")]
    Codec { codec: &'static str, reason: String },

    #[error("target compression ratio must be >= 1, got {0}")]
    TargetRatio(f64),

    #[error("page {page} is already stored in tier {tier}")]
    DuplicatePage { tier: TierId, page: u64 },

    #[error("page {page} is not present in tier {tier}")]
    MissingPage { tier: TierId, page: u64 },

    #[error("address {addr:#x} is outside the tracked address space ({limit:#x} bytes)")]
    AddressOutOfRange { addr: u64, limit: u64 },

    #[error("no calibration row for tier `{0}`")]
    MissingCalibration(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("no placement satisfies the TCO budget {budget} (cheapest admissible placement costs {cheapest})")]
    Infeasible { budget: f64, cheapest: f64 },

    #[error("region {region} has no admissible placement (excluded {excluded:?})")]
    NoAdmissiblePlacement {
        region: usize,
        excluded: Vec<Placement>,
    },

    #[error("malformed trace record at line {line}: {reason}")]
    Trace { line: u64, reason: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
