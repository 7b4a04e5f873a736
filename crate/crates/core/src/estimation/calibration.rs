//! Speed → Σ|dR| calibration curve and its inversion.

use std::fmt::Write as _;

use super::EstimationError;
use crate::csvio::{fmt_f64, SchemaError, Table};
use crate::sensor_model::{FlowCondition, SensorConfig};
use crate::transduction::{forward_response, ResponseVector};

/// Relative slack above the last knot still treated as in range; absorbs
/// rounding differences between directions.
const LAST_KNOT_TOLERANCE: f64 = 1e-12;

pub const CALIBRATION_COLUMNS: [&str; 2] = ["v_m_per_s", "sum_dR_ohm"];

/// Interpolant between knots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    /// Piecewise-linear in (v, Σ|dR|).
    Linear,
    /// Piecewise-linear in (v, √Σ|dR|). Exact between knots for a v² law
    /// and still monotone for any strictly increasing table.
    #[default]
    SqrtLinear,
}

/// Monotone mapping from flow speed to summed four-beam response.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationTable {
    knots: Vec<(f64, f64)>,
    interpolation: Interpolation,
}

impl CalibrationTable {
    /// Requires ≥ 2 knots, strictly increasing in both columns, starting at
    /// (0, 0).
    pub fn new(
        knots: Vec<(f64, f64)>,
        interpolation: Interpolation,
    ) -> Result<Self, EstimationError> {
        if knots.len() < 2 {
            return Err(EstimationError::Table(format!(
                "need at least 2 knots, got {}",
                knots.len()
            )));
        }
        if knots[0] != (0.0, 0.0) {
            return Err(EstimationError::Table(format!(
                "first knot must be (0, 0), got {:?}",
                knots[0]
            )));
        }
        for (i, w) in knots.windows(2).enumerate() {
            let ((v0, s0), (v1, s1)) = (w[0], w[1]);
            if !(v1 > v0 && v1.is_finite()) {
                return Err(EstimationError::Table(format!(
                    "speed not strictly increasing at knot {}: {v0} -> {v1}",
                    i + 1
                )));
            }
            if !(s1 > s0 && s1.is_finite()) {
                return Err(EstimationError::Table(format!(
                    "response not strictly increasing at knot {}: {s0} -> {s1}",
                    i + 1
                )));
            }
        }
        Ok(Self {
            knots,
            interpolation,
        })
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    pub fn with_interpolation(mut self, interpolation: Interpolation) -> Self {
        self.interpolation = interpolation;
        self
    }

    pub fn max_speed(&self) -> f64 {
        self.knots.last().expect("non-empty").0
    }

    pub fn max_sum(&self) -> f64 {
        self.knots.last().expect("non-empty").1
    }

    fn ordinate(&self, sum: f64) -> f64 {
        match self.interpolation {
            Interpolation::Linear => sum,
            Interpolation::SqrtLinear => sum.sqrt(),
        }
    }

    /// Σ|dR| predicted at `speed` (clamped to the table range).
    pub fn sum_at(&self, speed: f64) -> f64 {
        let speed = speed.clamp(0.0, self.max_speed());
        let i = self
            .knots
            .partition_point(|&(v, _)| v <= speed)
            .clamp(1, self.knots.len() - 1);
        let (v0, s0) = self.knots[i - 1];
        let (v1, s1) = self.knots[i];
        let (y0, y1) = (self.ordinate(s0), self.ordinate(s1));
        let y = y0 + (y1 - y0) * (speed - v0) / (v1 - v0);
        match self.interpolation {
            Interpolation::Linear => y,
            Interpolation::SqrtLinear => y * y,
        }
    }

    /// Speed whose predicted sum equals `sum`, by locating the bracketing
    /// knot pair. Returns the clamped speed and whether `sum` exceeded the
    /// table.
    pub fn invert(&self, sum: f64) -> (f64, bool) {
        if sum <= 0.0 {
            return (0.0, false);
        }
        if sum > self.max_sum() * (1.0 + LAST_KNOT_TOLERANCE) {
            return (self.max_speed(), true);
        }
        if sum >= self.max_sum() {
            return (self.max_speed(), false);
        }
        let i = self
            .knots
            .partition_point(|&(_, s)| s < sum)
            .clamp(1, self.knots.len() - 1);
        let (v0, s0) = self.knots[i - 1];
        let (v1, s1) = self.knots[i];
        let (y0, y1, y) = (self.ordinate(s0), self.ordinate(s1), self.ordinate(sum));
        (v0 + (v1 - v0) * (y - y0) / (y1 - y0), false)
    }

    /// Same inversion by bisection on [`sum_at`](Self::sum_at); kept as an
    /// independent route for cross-checking [`invert`](Self::invert).
    pub fn invert_bisection(&self, sum: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, self.max_speed());
        if sum <= 0.0 {
            return 0.0;
        }
        if sum >= self.max_sum() {
            return hi;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.sum_at(mid) < sum {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-13 {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn to_csv(&self) -> String {
        let mut out = CALIBRATION_COLUMNS.join(",");
        out.push('\n');
        for &(v, s) in &self.knots {
            let _ = writeln!(out, "{},{}", fmt_f64(v), fmt_f64(s));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, EstimationError> {
        let table = Table::parse(text, &CALIBRATION_COLUMNS)?;
        let mut knots = Vec::with_capacity(table.len());
        for row in 0..table.len() {
            knots.push((table.f64(row, "v_m_per_s")?, table.f64(row, "sum_dR_ohm")?));
        }
        // report ordering problems against file rows
        for (i, w) in knots.windows(2).enumerate() {
            if !(w[1].0 > w[0].0 && w[1].1 > w[0].1) {
                return Err(SchemaError::Invalid {
                    row: i + 3,
                    message: "rows must be strictly increasing in both columns".into(),
                }
                .into());
            }
        }
        Self::new(knots, Interpolation::default())
    }
}

/// `[0, step, 2·step, …, max]`, always ending exactly at `max`.
pub fn uniform_grid(max: f64, step: f64) -> Vec<f64> {
    assert!(max > 0.0 && step > 0.0, "grid needs positive max and step");
    let n = (max / step).ceil() as usize;
    let mut grid: Vec<f64> = (0..n)
        .map(|k| k as f64 * step)
        .filter(|&v| v < max - 1e-9 * step)
        .collect();
    grid.push(max);
    grid
}

/// Calibration with the flow along 180°.
pub fn build_calibration(
    config: &SensorConfig,
    speed_grid: &[f64],
) -> Result<CalibrationTable, EstimationError> {
    build_calibration_at(config, speed_grid, 180.0)
}

pub fn build_calibration_at(
    config: &SensorConfig,
    speed_grid: &[f64],
    travel_azimuth_deg: f64,
) -> Result<CalibrationTable, EstimationError> {
    if speed_grid.first() != Some(&0.0) {
        return Err(EstimationError::Table("speed grid must start at 0".into()));
    }
    let mut knots = Vec::with_capacity(speed_grid.len());
    for &v in speed_grid {
        let flow = FlowCondition::new(v, travel_azimuth_deg)
            .map_err(|e| EstimationError::Table(e.to_string()))?;
        knots.push((v, forward_response(config, &flow)?.abs_sum()));
    }
    CalibrationTable::new(knots, Interpolation::default())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedEstimate {
    pub speed: f64,
    pub out_of_range: bool,
}

/// Speed from Σ|dR_i| by inverting `table`.
pub fn estimate_speed(
    response: &ResponseVector,
    table: &CalibrationTable,
) -> Result<SpeedEstimate, EstimationError> {
    if response.dr.iter().any(|d| d.is_nan()) {
        return Err(EstimationError::NotANumber("dR"));
    }
    let (speed, out_of_range) = table.invert(response.abs_sum());
    Ok(SpeedEstimate {
        speed,
        out_of_range,
    })
}
