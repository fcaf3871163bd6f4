//! Infinite generalized Mallows models over top-t orderings: sufficient
//! statistics, likelihood and sampling, consensus search, maximum likelihood
//! and conjugate Bayesian estimation, and clustering.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below fix the common double-precision instantiation.

// `!(x > 0)` style checks deliberately reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bayes;
pub mod clustering;
pub mod consensus;
pub mod error;
pub mod estimation;
pub mod model;
pub mod rankings;
pub mod scalar;
pub mod suff_stats;

pub use error::{Error, Result};
pub use model::{IgmParams, ThetaVector};
pub use rankings::{CentralOrdering, CodeVector, Dictionary, ItemId, TopTOrdering};
pub use scalar::Real;
pub use suff_stats::{PrecedenceCounts, RankSelector, SuffStats};

pub type SuffStats64 = SuffStats<f64>;
pub type SuffStats32 = SuffStats<f32>;
pub type ThetaVector64 = ThetaVector<f64>;
pub type ThetaVector32 = ThetaVector<f32>;
pub type IgmParams64 = IgmParams<f64>;
pub type IgmParams32 = IgmParams<f32>;
