//! Analytic and simulated performance of cache-enabled mmWave heterogeneous
//! networks with integrated access and backhaul.

pub mod compare;
pub mod config;
pub mod coverage;
pub mod error;
pub mod geometry;
pub mod interference;
pub mod metrics;
pub mod model;
pub mod montecarlo;
pub mod network;
pub mod output;
pub mod quadrature;
pub mod sweep;

pub use compare::{CompareReport, CompareRow, CompareSpec, Quantity};
pub use config::NetworkConfig;
pub use coverage::CoverageResult;
pub use error::{ConfigError, Error, QuadError, Result};
pub use geometry::{ExclusionKind, Tier, TierLink};
pub use interference::LaplaceQuery;
pub use metrics::{AptResult, AseModel, AseResult, Objective, OptimalPartition, PartitionPoint, StatePairs};
pub use model::LinkState;
pub use montecarlo::{DropOutcome, Estimate, SimReport, SimSpec};
pub use network::{BsTier, Network, Precision};
pub use quadrature::{Integral, QuadSpec};
pub use sweep::{SweepAxes, SweepCell, SweepObjective, SweepOptimum, SweepTable};
