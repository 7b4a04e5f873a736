//! Inverse problem: flow direction from opposite-beam differences, flow
//! speed from a monotone calibration curve, lobe coefficients from sweep
//! data, and a Gauss–Newton refinement of (speed, direction) jointly.

mod calibration;
mod direction;
mod fit;
mod joint;

pub use calibration::{
    build_calibration, build_calibration_at, estimate_speed, uniform_grid, CalibrationTable,
    Interpolation, SpeedEstimate,
};
pub use direction::{
    direction_threshold, estimate_direction, estimate_direction_with_threshold,
    quadrature_components, DEFAULT_DIRECTION_THRESHOLD,
};
pub use fit::{fit_lobe, LobeFit, SpeedGain, MIN_DISTINCT_ANGLES};
pub use joint::{joint_estimate, EstimateFlags, EstimateResult, JointEstimator, MAX_ITERATIONS};

use crate::csvio::SchemaError;
use crate::transduction::TransductionError;

#[derive(Debug, thiserror::Error)]
pub enum EstimationError {
    #[error("direction is indeterminate: |D| = {magnitude:e} below threshold {threshold:e}")]
    IndeterminateDirection { magnitude: f64, threshold: f64 },
    #[error("lobe coefficient a1 must be positive for direction decoding, got {0}")]
    NonPositiveA1(f64),
    #[error("calibration table: {0}")]
    Table(String),
    #[error("{0} is not a valid response value")]
    NotANumber(&'static str),
    #[error("lobe fit: {0}")]
    Fit(String),
    #[error(transparent)]
    Model(#[from] TransductionError),
    #[error(transparent)]
    Schema(#[from] SchemaError),
}
