use thiserror::Error;

use crate::rankings::ItemId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("ordering is empty")]
    EmptyOrdering,
    #[error("item {item} appears more than once in an ordering")]
    DuplicateItem { item: ItemId },
    #[error("item ids start at 1")]
    ZeroItemId,
    #[error("dispersion parameter at rank {rank} must be finite and strictly positive, got {value}")]
    NonPositiveTheta { rank: usize, value: f64 },
    #[error("dispersion vector covers {available} ranks, {needed} requested")]
    ThetaTooShort { needed: usize, available: usize },
    #[error("observed item {item} is missing from the central ordering prefix")]
    SigmaMissingItem { item: ItemId },
    #[error("dataset is empty")]
    EmptyData,
    #[error("combination weights must be finite, non-negative and not all zero")]
    InvalidWeights,
    #[error("rank index {0} is out of range")]
    RankOutOfRange(usize),
    #[error("tying rank r={r} must satisfy 1 <= r <= {t_max}")]
    InvalidTying { r: usize, t_max: usize },
    #[error("orderings must share one length, found {expected} and {found}")]
    UnequalLengths { expected: usize, found: usize },
    #[error("scale equation needs t >= 2, got t={0}")]
    ScaleUndefined(usize),
    #[error("number of clusters must be at least 1")]
    NoClusters,
    #[error("clusterings cover different numbers of points ({0} vs {1})")]
    ClusteringSizeMismatch(usize, usize),
    #[error("invalid prior: {0}")]
    InvalidPrior(String),
    #[error("{0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, Error>;
