//! Confidence-calibration toolkit: estimate continuous calibration curves
//! from (confidence, hit) data, score calibration with several metrics,
//! recalibrate, and benchmark estimators on known synthetic distributions.

pub mod bench;
pub mod binning;
pub mod calibrators;
pub mod data;
pub mod error;
pub mod estimator;
pub mod metrics;
pub mod numeric;
pub mod optim;
pub mod prior;
pub mod quad;
pub mod rng;
pub mod simulator;

/// The concrete scalar used across sampling, estimation and the CLI. The
/// math kernels stay generic over [`numeric::Scalar`]; everything that must
/// be bit-reproducible is pinned to f64 here.
pub type Real = f64;

pub use data::{CalibrationSample, Dataset};
pub use error::{Error, Result};
pub use estimator::{estimate_curve, CurveEstimate, EstimatorConfig};
pub use metrics::{ece_bin, ece_debiased, ece_sweep, ks_error, tce_bpm, tce_exact, MetricConfig};
pub use prior::{BetaParams, PriorCurveParams, TrueDistributionSpec};
pub use simulator::{simulate, SimulationRequest};
