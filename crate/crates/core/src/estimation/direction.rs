//! Direction decoding from opposite-beam differences.
//!
//! With responses indexed on the 0/90/180/270° lattice,
//! `D_x = dR_0 − dR_180` and `D_y = dR_90 − dR_270`. Under the lobe model
//! the constant and second-harmonic terms cancel in each difference,
//! leaving `2·a1·K(v)·(cos θ, sin θ)`.

use super::EstimationError;
use crate::sensor_model::{normalize_degrees, LobeCoefficients};
use crate::transduction::ResponseVector;

/// Threshold on |D| used when no noise model is attached, ohm.
pub const DEFAULT_DIRECTION_THRESHOLD: f64 = 1e-12;

/// `3σ`, or [`DEFAULT_DIRECTION_THRESHOLD`] for a noiseless reading.
pub fn direction_threshold(noise_sigma: f64) -> f64 {
    if noise_sigma > 0.0 {
        3.0 * noise_sigma
    } else {
        DEFAULT_DIRECTION_THRESHOLD
    }
}

pub fn quadrature_components(response: &ResponseVector) -> (f64, f64) {
    let [d0, d90, d180, d270] = response.dr;
    (d0 - d180, d90 - d270)
}

pub fn estimate_direction(
    response: &ResponseVector,
    lobe: &LobeCoefficients,
) -> Result<f64, EstimationError> {
    estimate_direction_with_threshold(response, lobe, DEFAULT_DIRECTION_THRESHOLD)
}

/// Travel azimuth in `[0, 360)`, or `IndeterminateDirection` when
/// `|D| < threshold`.
pub fn estimate_direction_with_threshold(
    response: &ResponseVector,
    lobe: &LobeCoefficients,
    threshold: f64,
) -> Result<f64, EstimationError> {
    if !(lobe.a1 > 0.0) {
        return Err(EstimationError::NonPositiveA1(lobe.a1));
    }
    if response.dr.iter().any(|d| d.is_nan()) {
        return Err(EstimationError::NotANumber("dR"));
    }
    let (dx, dy) = quadrature_components(response);
    let magnitude = dx.hypot(dy);
    if !(magnitude >= threshold) || magnitude == 0.0 {
        return Err(EstimationError::IndeterminateDirection {
            magnitude,
            threshold,
        });
    }
    Ok(normalize_degrees(dy.atan2(dx).to_degrees()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensor_model::{default_config, FlowCondition};
    use crate::transduction::forward_response;
    use proptest::prelude::*;

    fn angular_error(a: f64, b: f64) -> f64 {
        let d = normalize_degrees(a - b);
        d.min(360.0 - d)
    }

    #[test]
    fn symmetric_lattice_reading_decodes_to_zero() {
        let lobe = default_config().lobe;
        let k = 0.37;
        let dr = [0.0, -90.0, -180.0, -270.0].map(|phi| k * lobe.eval(phi));
        let (dx, dy) = quadrature_components(&ResponseVector::new(dr, 212.0));
        assert!(dx > 0.0);
        assert!(dy.abs() < 1e-15);
        let theta = estimate_direction(&ResponseVector::new(dr, 212.0), &lobe).unwrap();
        assert!(angular_error(theta, 0.0) < 1e-12);
    }

    #[test]
    fn thirty_degrees_round_trip() {
        let config = default_config();
        for v in [0.5, 3.0, 20.0, 45.0] {
            let r = forward_response(&config, &FlowCondition::new(v, 30.0).unwrap()).unwrap();
            let theta = estimate_direction(&r, &config.lobe).unwrap();
            assert!((theta - 30.0).abs() <= 1e-6, "v = {v}: {theta}");
        }
    }

    #[test]
    fn equal_readings_are_indeterminate() {
        let lobe = default_config().lobe;
        let r = ResponseVector::new([0.2; 4], 212.0);
        assert!(matches!(
            estimate_direction(&r, &lobe),
            Err(EstimationError::IndeterminateDirection { .. })
        ));
        let zero = ResponseVector::new([0.0; 4], 212.0);
        assert!(estimate_direction(&zero, &lobe).is_err());
    }

    #[test]
    fn noise_threshold_gates_small_differences() {
        let lobe = default_config().lobe;
        let r = ResponseVector::new([0.1 + 1e-4, 0.1, 0.1, 0.1], 212.0);
        assert!(estimate_direction(&r, &lobe).is_ok());
        assert!(estimate_direction_with_threshold(&r, &lobe, direction_threshold(5e-4)).is_err());
        assert_eq!(direction_threshold(0.0), DEFAULT_DIRECTION_THRESHOLD);
    }

    #[test]
    fn nonpositive_a1_is_rejected() {
        let lobe = LobeCoefficients::new(1.0, 0.0, 0.9);
        let r = ResponseVector::new([1.0, 0.0, 0.0, 0.0], 212.0);
        assert!(matches!(
            estimate_direction(&r, &lobe),
            Err(EstimationError::NonPositiveA1(_))
        ));
    }

    proptest! {
        #[test]
        fn decoder_is_scale_invariant(
            theta in 0.0f64..360.0,
            v in 0.5f64..45.0,
            scale in 1e-3f64..1e3,
        ) {
            let config = default_config();
            let r = forward_response(&config, &FlowCondition::new(v, theta).unwrap()).unwrap();
            let scaled = ResponseVector::new(r.dr.map(|d| d * scale), r.base_r);
            let a = estimate_direction(&r, &config.lobe).unwrap();
            let b = estimate_direction(&scaled, &config.lobe).unwrap();
            prop_assert!(angular_error(a, b) < 1e-9);
            prop_assert!(angular_error(a, theta) < 1e-6);
        }
    }
}
