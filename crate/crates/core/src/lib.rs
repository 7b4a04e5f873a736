//! Digital twin of a four-cantilever piezoresistive airflow sensor.
//!
//! * [`sensor_model`]: device, material and environment parameters, the
//!   config file format and angle conventions.
//! * [`transduction`]: the forward chain from flow to per-beam resistance
//!   change.
//! * [`estimation`]: direction, speed and lobe-coefficient inversion.
//! * [`windtunnel`]: synthetic rotary-table sweeps with meter noise, and the
//!   sweep CSV format.
//! * [`selftest`]: the runtime invariant suite.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod csvio;
pub mod estimation;
pub mod selftest;
pub mod sensor_model;
pub mod transduction;
pub mod windtunnel;

pub use estimation::{CalibrationTable, EstimateResult, EstimationError};
pub use sensor_model::{default_config, FlowCondition, SensorConfig};
pub use transduction::{forward_response, ResponseVector};
pub use windtunnel::{NoiseModel, SweepRecord};
