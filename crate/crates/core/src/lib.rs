//! Signatures of statistical criticality in sets of binary time series.
//!
//! The crate follows the data-based route: sign-binarize returns, estimate the
//! configuration distribution, check that it is properly sampled, then look
//! for a peak of the response function, Zipf's law for configuration ranks,
//! linearity of entropy in the log-likelihood, and compare against a pairwise
//! maximum-entropy model fitted to the same data.

pub mod analysis;
pub mod configdist;
pub mod error;
pub mod ingest;
pub mod ising;
pub mod maxent;
pub mod powerlaw;
pub mod rng;
pub mod significance;

pub use configdist::{ConfigDistribution, Peak, ResponseCurve, ResponseEstimator};
pub use error::{CritError, Result};
pub use ingest::{BinaryMatrix, ConfigCode, PriceSeries, ReturnMatrix, Spin, ZeroPolicy};
pub use maxent::PairwiseModel;
pub use powerlaw::{BoundedPowerLaw, FitReport};
pub use significance::{SamplingProfile, SignificanceCurve};
