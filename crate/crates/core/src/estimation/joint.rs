//! Joint (speed, direction) estimate: decoder initial guess refined by
//! Gauss–Newton on `Σ (dR_i − G_i·v²·g(θ − θ_i))²`.

use super::calibration::{build_calibration, estimate_speed, uniform_grid, CalibrationTable};
use super::direction::{estimate_direction_with_threshold, DEFAULT_DIRECTION_THRESHOLD};
use super::EstimationError;
use crate::sensor_model::{normalize_degrees, SensorConfig, BEAM_COUNT, MAX_SPEED};
use crate::transduction::{beam_gains, ResponseVector};

pub const MAX_ITERATIONS: usize = 50;

/// Convergence threshold on the scaled step `(δv / max(v, 1), δθ [rad])`.
const STEP_TOLERANCE: f64 = 1e-10;

/// Knot spacing of the calibration built when none is supplied, m/s.
const DEFAULT_CALIBRATION_STEP: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EstimateFlags {
    pub indeterminate_direction: bool,
    pub out_of_range_speed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateResult {
    pub v_hat: f64,
    /// Travel azimuth, `[0, 360)`.
    pub theta_hat: f64,
    /// RMS model misfit over the four beams, ohm.
    pub residual: f64,
    pub flags: EstimateFlags,
    pub iterations: usize,
    pub converged: bool,
}

/// Reusable estimator holding the model gains and a calibration table.
#[derive(Debug, Clone)]
pub struct JointEstimator {
    config: SensorConfig,
    gains: [f64; BEAM_COUNT],
    azimuths: [f64; BEAM_COUNT],
    table: CalibrationTable,
    direction_threshold: f64,
}

impl JointEstimator {
    /// Builds a 0–45 m/s calibration at 0.5 m/s knots from `config`.
    pub fn new(config: &SensorConfig) -> Result<Self, EstimationError> {
        let table = build_calibration(config, &uniform_grid(MAX_SPEED, DEFAULT_CALIBRATION_STEP))?;
        Self::with_table(config, table)
    }

    pub fn with_table(
        config: &SensorConfig,
        table: CalibrationTable,
    ) -> Result<Self, EstimationError> {
        Ok(Self {
            config: config.clone(),
            gains: beam_gains(config)?,
            azimuths: config.beams.map(|b| b.effective_azimuth_deg()),
            table,
            direction_threshold: DEFAULT_DIRECTION_THRESHOLD,
        })
    }

    pub fn with_direction_threshold(mut self, threshold: f64) -> Self {
        self.direction_threshold = threshold;
        self
    }

    pub fn table(&self) -> &CalibrationTable {
        &self.table
    }

    /// Model responses at (v, θ°).
    fn model(&self, speed: f64, theta_deg: f64) -> [f64; BEAM_COUNT] {
        let lobe = &self.config.lobe;
        std::array::from_fn(|i| {
            self.gains[i] * speed * speed * lobe.eval(theta_deg - self.azimuths[i])
        })
    }

    fn cost(&self, observed: &[f64; BEAM_COUNT], speed: f64, theta_deg: f64) -> f64 {
        let model = self.model(speed, theta_deg);
        (0..BEAM_COUNT)
            .map(|i| (model[i] - observed[i]).powi(2))
            .sum()
    }

    #[allow(clippy::needless_range_loop)]
    pub fn estimate(&self, response: &ResponseVector) -> Result<EstimateResult, EstimationError> {
        let speed0 = estimate_speed(response, &self.table)?;
        let mut flags = EstimateFlags {
            out_of_range_speed: speed0.out_of_range,
            ..Default::default()
        };
        let theta0 = match estimate_direction_with_threshold(
            response,
            &self.config.lobe,
            self.direction_threshold,
        ) {
            Ok(theta) => theta,
            Err(EstimationError::IndeterminateDirection { .. }) => {
                flags.indeterminate_direction = true;
                0.0
            }
            Err(e) => return Err(e),
        };

        let observed = &response.dr;
        let mut speed = speed0.speed;
        let mut theta = theta0.to_radians();
        let mut cost = self.cost(observed, speed, theta0);
        let mut iterations = 0;
        let mut converged = false;
        let lobe = &self.config.lobe;

        // θ is frozen when the decoder could not fix it
        let refine_theta = !flags.indeterminate_direction;

        while iterations < MAX_ITERATIONS {
            iterations += 1;
            let theta_deg = theta.to_degrees();
            // normal equations JᵀJ·δ = −Jᵀr
            let (mut jvv, mut jvt, mut jtt, mut gv, mut gt) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for i in 0..BEAM_COUNT {
                let phi = theta_deg - self.azimuths[i];
                let g = lobe.eval(phi);
                let residual = self.gains[i] * speed * speed * g - observed[i];
                let dv = 2.0 * self.gains[i] * speed * g;
                let dt = self.gains[i] * speed * speed * lobe.derivative(phi);
                jvv += dv * dv;
                jvt += dv * dt;
                jtt += dt * dt;
                gv += dv * residual;
                gt += dt * residual;
            }
            let (step_v, step_t) = if refine_theta {
                let det = jvv * jtt - jvt * jvt;
                if !(det.abs() > 0.0) || !det.is_finite() {
                    converged = true;
                    break;
                }
                ((-gv * jtt + gt * jvt) / det, (-gt * jvv + gv * jvt) / det)
            } else if jvv > 0.0 {
                (-gv / jvv, 0.0)
            } else {
                converged = true;
                break;
            };

            // halve until the cost does not increase
            let mut factor = 1.0;
            let mut accepted = None;
            for _ in 0..40 {
                let candidate_v = (speed + factor * step_v).abs();
                let candidate_t = theta + factor * step_t;
                let candidate_cost = self.cost(observed, candidate_v, candidate_t.to_degrees());
                if candidate_cost <= cost {
                    accepted = Some((candidate_v, candidate_t, candidate_cost));
                    break;
                }
                factor *= 0.5;
            }
            let Some((new_v, new_t, new_cost)) = accepted else {
                converged = true;
                break;
            };
            let scaled_step = ((new_v - speed) / speed.max(1.0)).hypot(new_t - theta);
            speed = new_v;
            theta = new_t;
            cost = new_cost;
            if scaled_step < STEP_TOLERANCE {
                converged = true;
                break;
            }
        }

        Ok(EstimateResult {
            v_hat: speed,
            theta_hat: normalize_degrees(theta.to_degrees()),
            residual: (cost / BEAM_COUNT as f64).sqrt(),
            flags,
            iterations,
            converged,
        })
    }
}

/// One-shot joint estimate with a freshly built default calibration.
pub fn joint_estimate(
    response: &ResponseVector,
    config: &SensorConfig,
) -> Result<EstimateResult, EstimationError> {
    JointEstimator::new(config)?.estimate(response)
}
