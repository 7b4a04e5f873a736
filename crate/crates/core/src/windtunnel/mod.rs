//! Virtual wind tunnel: a rotary-table angle sweep at a set of reference
//! (Pitot) speeds, read through a noisy, quantized resistance meter.

mod csv_io;
mod noise;

pub use csv_io::{export_csv, import_csv, SWEEP_COLUMNS};
pub use noise::{quantize, NoiseModel, LCR_QUANTIZATION_STEP, LCR_SIGMA};

use rayon::prelude::*;

use crate::sensor_model::{validate, FlowCondition, SensorConfig, BEAM_COUNT, MAX_SPEED};
use crate::transduction::{forward_response, ResponseVector, TransductionError};

/// Speeds of the angle-sweep characterization, m/s.
pub const ANGLE_SWEEP_SPEEDS: [f64; 4] = [15.0, 20.0, 25.0, 30.0];
/// Travel azimuths of the speed-sweep characterization, degrees.
pub const SPEED_SWEEP_ANGLES: [f64; 2] = [135.0, 180.0];

/// One measurement row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub angle_travel_deg: f64,
    /// `angle_travel_deg + 180`, normalized.
    pub angle_from_deg: f64,
    /// Reference speed, m/s.
    pub v_true: f64,
    /// Meter readings, ohm.
    pub dr: [f64; BEAM_COUNT],
    /// Noise-free model responses, ohm.
    pub dr_clean: [f64; BEAM_COUNT],
    pub replicate: u32,
}

impl SweepRecord {
    pub fn response(&self, base_r: f64) -> ResponseVector {
        ResponseVector::new(self.dr, base_r)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid noise model: {0}")]
    Noise(String),
    #[error("sweep needs at least one replicate")]
    NoReplicates,
    #[error("{0} is not a valid angle or speed")]
    NonFinite(f64),
    #[error(transparent)]
    Model(#[from] TransductionError),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

fn grid_points(angles: &[f64], speeds: &[f64], replicates: u32) -> Vec<(f64, f64, u32)> {
    let mut points = Vec::with_capacity(angles.len() * speeds.len() * replicates as usize);
    for &angle in angles {
        for &speed in speeds {
            for replicate in 0..replicates {
                points.push((angle, speed, replicate));
            }
        }
    }
    points
}

/// One record per (angle, speed, replicate), in that lexicographic order.
///
/// Runs on the ambient rayon pool; output is identical for any number of
/// worker threads.
pub fn run_sweep(
    config: &SensorConfig,
    angles: &[f64],
    speeds: &[f64],
    noise: &NoiseModel,
    replicates: u32,
) -> Result<Vec<SweepRecord>, SweepError> {
    let violations = validate(config);
    if !violations.is_empty() {
        let text: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(SweepError::Config(text.join("; ")));
    }
    noise.check().map_err(SweepError::Noise)?;
    if replicates == 0 {
        return Err(SweepError::NoReplicates);
    }
    if let Some(&bad) = angles.iter().chain(speeds).find(|x| !x.is_finite()) {
        return Err(SweepError::NonFinite(bad));
    }
    if let Some(&bad) = speeds.iter().find(|&&v| v < 0.0) {
        return Err(SweepError::NonFinite(bad));
    }

    grid_points(angles, speeds, replicates)
        .into_par_iter()
        .enumerate()
        .map(|(index, (angle, speed, replicate))| {
            let flow =
                FlowCondition::new(speed, angle).map_err(|_| SweepError::NonFinite(angle))?;
            let clean = forward_response(config, &flow)?.dr;
            Ok(SweepRecord {
                angle_travel_deg: flow.travel_azimuth_deg(),
                angle_from_deg: flow.origin_azimuth_deg(),
                v_true: speed,
                dr: noise.apply(index as u64, clean),
                dr_clean: clean,
                replicate,
            })
        })
        .collect()
}

/// [`run_sweep`] on a dedicated pool of `threads` workers.
pub fn run_sweep_with_threads(
    config: &SensorConfig,
    angles: &[f64],
    speeds: &[f64],
    noise: &NoiseModel,
    replicates: u32,
    threads: usize,
) -> Result<Vec<SweepRecord>, SweepError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| SweepError::ThreadPool(e.to_string()))?;
    pool.install(|| run_sweep(config, angles, speeds, noise, replicates))
}

/// Speed sweep 0→45 m/s in 0.5 m/s steps at travel azimuths 135° and 180°.
pub fn speed_sweep_dataset(
    config: &SensorConfig,
    noise: &NoiseModel,
) -> Result<Vec<SweepRecord>, SweepError> {
    let speeds: Vec<f64> = (0..=90).map(|k| k as f64 * 0.5).collect();
    debug_assert_eq!(*speeds.last().unwrap(), MAX_SPEED);
    run_sweep(config, &SPEED_SWEEP_ANGLES, &speeds, noise, 1)
}

/// Angle sweep 0°→355° in 5° steps at 15, 20, 25 and 30 m/s.
pub fn angle_sweep_dataset(
    config: &SensorConfig,
    noise: &NoiseModel,
) -> Result<Vec<SweepRecord>, SweepError> {
    let angles: Vec<f64> = (0..72).map(|k| k as f64 * 5.0).collect();
    run_sweep(config, &angles, &ANGLE_SWEEP_SPEEDS, noise, 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensor_model::{default_config, normalize_degrees};

    #[test]
    fn grid_sizes_and_order() {
        let config = default_config();
        let angles: Vec<f64> = (0..8).map(|k| k as f64 * 45.0).collect();
        let sweep = run_sweep(
            &config,
            &angles,
            &ANGLE_SWEEP_SPEEDS,
            &NoiseModel::lcr(3),
            1,
        )
        .unwrap();
        assert_eq!(sweep.len(), 32);
        assert_eq!(sweep[0].angle_travel_deg, 0.0);
        assert_eq!(sweep[1].v_true, 20.0);
        assert_eq!(sweep[4].angle_travel_deg, 45.0);
        for r in &sweep {
            assert_eq!(
                r.angle_from_deg,
                normalize_degrees(r.angle_travel_deg + 180.0)
            );
        }
        let replicated = run_sweep(&config, &[0.0], &[10.0], &NoiseModel::lcr(3), 3).unwrap();
        assert_eq!(
            replicated.iter().map(|r| r.replicate).collect::<Vec<_>>(),
            vec![0, 1, 2]
        );
        assert_ne!(replicated[0].dr, replicated[1].dr);
    }

    #[test]
    fn zero_noise_leaves_clean_values() {
        let config = default_config();
        for r in angle_sweep_dataset(&config, &NoiseModel::none()).unwrap() {
            assert_eq!(r.dr, r.dr_clean);
        }
    }

    #[test]
    fn angle_sweep_downwind_dominates() {
        let config = default_config();
        let sweep = angle_sweep_dataset(&config, &NoiseModel::none()).unwrap();
        assert_eq!(sweep.len(), 288);
        for r in sweep.iter().filter(|r| r.angle_travel_deg == 180.0) {
            let resp = r.response(212.0);
            assert_eq!(resp.argmax(), 2);
        }
        for r in sweep.iter().filter(|r| r.angle_travel_deg % 90.0 == 0.0) {
            let down = (r.angle_travel_deg / 90.0) as usize;
            for side in [(down + 1) % 4, (down + 3) % 4] {
                assert!(r.dr[side] <= 0.15 * r.dr[down]);
            }
        }
    }

    #[test]
    fn speed_sweep_sums_coincide() {
        let config = default_config();
        let sweep = speed_sweep_dataset(&config, &NoiseModel::none()).unwrap();
        assert_eq!(sweep.len(), 182);
        let (a, b) = sweep.split_at(91);
        for (x, y) in a.iter().zip(b) {
            assert_eq!(x.v_true, y.v_true);
            let (sx, sy) = (x.response(1.0).abs_sum(), y.response(1.0).abs_sum());
            assert!((sx - sy).abs() <= 1e-12 * sx.max(f64::MIN_POSITIVE));
        }
        assert_eq!(a[0].dr, [0.0; 4]);
        assert!(a
            .windows(2)
            .all(|w| w[1].response(1.0).abs_sum() > w[0].response(1.0).abs_sum()));
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let config = default_config();
        assert!(matches!(
            run_sweep(&config, &[0.0], &[1.0], &NoiseModel::none(), 0),
            Err(SweepError::NoReplicates)
        ));
        assert!(run_sweep(&config, &[f64::NAN], &[1.0], &NoiseModel::none(), 1).is_err());
        assert!(run_sweep(&config, &[0.0], &[-1.0], &NoiseModel::none(), 1).is_err());
        let mut bad = config.clone();
        bad.lobe.a1 = 2.5;
        assert!(matches!(
            run_sweep(&bad, &[0.0], &[1.0], &NoiseModel::none(), 1),
            Err(SweepError::Config(_))
        ));
    }

    #[test]
    fn thread_count_does_not_change_output() {
        let config = default_config();
        let angles: Vec<f64> = (0..36).map(|k| k as f64 * 10.0).collect();
        let one = run_sweep_with_threads(
            &config,
            &angles,
            &ANGLE_SWEEP_SPEEDS,
            &NoiseModel::lcr(5),
            2,
            1,
        )
        .unwrap();
        let many = run_sweep_with_threads(
            &config,
            &angles,
            &ANGLE_SWEEP_SPEEDS,
            &NoiseModel::lcr(5),
            2,
            4,
        )
        .unwrap();
        assert_eq!(export_csv(&one), export_csv(&many));
    }
}
