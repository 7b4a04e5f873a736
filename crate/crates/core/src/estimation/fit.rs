//! Least-squares recovery of the angular lobe from sweep data.
//!
//! Per speed, `dR_i ≈ c0 + c1·cos φ_i + c2·cos 2φ_i` is solved linearly with
//! `c = K·(a0, a1, a2)`. The product is scale-degenerate, so the gauge
//! `a0 = 1` fixes `K = c0`; the ratios are then averaged over speeds.

use nalgebra::{DMatrix, DVector};

use super::EstimationError;
use crate::sensor_model::{normalize_degrees, LobeCoefficients, LATTICE_AZIMUTHS_DEG};
use crate::windtunnel::SweepRecord;

pub const MIN_DISTINCT_ANGLES: usize = 8;

/// Singular-value ratio below which the design is treated as rank deficient.
const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedGain {
    pub speed: f64,
    /// K(v) in ohm under the `a0 = 1` gauge.
    pub gain: f64,
    pub a1: f64,
    pub a2: f64,
    /// RMS of this speed's own fit, ohm.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LobeFit {
    pub lobe: LobeCoefficients,
    pub per_speed: Vec<SpeedGain>,
    /// RMS misfit of the averaged lobe with per-speed gains, ohm.
    pub residual: f64,
}

fn distinct_angles(records: &[&SweepRecord]) -> usize {
    let mut angles: Vec<f64> = records
        .iter()
        .map(|r| normalize_degrees(r.angle_travel_deg))
        .collect();
    angles.sort_by(f64::total_cmp);
    angles.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    angles.len()
}

fn design_rows(record: &SweepRecord) -> impl Iterator<Item = ([f64; 3], f64)> + '_ {
    LATTICE_AZIMUTHS_DEG
        .iter()
        .zip(record.dr.iter())
        .map(|(&azimuth, &dr)| {
            let phi = (record.angle_travel_deg - azimuth).to_radians();
            ([1.0, phi.cos(), (2.0 * phi).cos()], dr)
        })
}

fn fit_speed(speed: f64, group: &[&SweepRecord]) -> Result<SpeedGain, EstimationError> {
    let distinct = distinct_angles(group);
    if distinct < MIN_DISTINCT_ANGLES {
        return Err(EstimationError::Fit(format!(
            "rank deficient design at {speed} m/s: {distinct} distinct angle(s), need at least {MIN_DISTINCT_ANGLES}"
        )));
    }
    let rows: Vec<([f64; 3], f64)> = group.iter().flat_map(|r| design_rows(r)).collect();
    let design = DMatrix::from_fn(rows.len(), 3, |i, j| rows[i].0[j]);
    let observed = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.1));

    let svd = design.clone().svd(true, true);
    let largest = svd.singular_values.max();
    let smallest = svd.singular_values.min();
    if !(smallest > RANK_TOLERANCE * largest) {
        return Err(EstimationError::Fit(format!(
            "rank deficient design at {speed} m/s: singular values span {smallest:e}..{largest:e}"
        )));
    }
    let coeffs = svd
        .solve(&observed, RANK_TOLERANCE * largest)
        .map_err(|e| EstimationError::Fit(e.to_string()))?;
    let gain = coeffs[0];
    if !(gain.abs() > 0.0) {
        return Err(EstimationError::Fit(format!(
            "zero mean response at {speed} m/s; the lobe gauge a0 = 1 cannot be fixed"
        )));
    }
    let residual = ((&design * &coeffs - &observed).norm_squared() / rows.len() as f64).sqrt();
    Ok(SpeedGain {
        speed,
        gain,
        a1: coeffs[1] / gain,
        a2: coeffs[2] / gain,
        residual,
    })
}

/// Fits `(a1, a2)` with `a0 = 1` plus one gain per speed. Records at zero
/// speed carry no shape information and are skipped.
pub fn fit_lobe(sweep: &[SweepRecord]) -> Result<LobeFit, EstimationError> {
    let mut moving: Vec<&SweepRecord> = sweep.iter().filter(|r| r.v_true > 0.0).collect();
    if moving.is_empty() {
        return Err(EstimationError::Fit(
            "no records with nonzero flow speed".into(),
        ));
    }
    moving.sort_by(|a, b| a.v_true.total_cmp(&b.v_true));

    let mut per_speed = Vec::new();
    for group in moving.chunk_by(|a, b| a.v_true == b.v_true) {
        per_speed.push(fit_speed(group[0].v_true, group)?);
    }
    let n = per_speed.len() as f64;
    let lobe = LobeCoefficients::new(
        1.0,
        per_speed.iter().map(|s| s.a1).sum::<f64>() / n,
        per_speed.iter().map(|s| s.a2).sum::<f64>() / n,
    );

    let mut sq = 0.0;
    let mut count = 0usize;
    for record in &moving {
        let gain = per_speed
            .iter()
            .find(|s| s.speed == record.v_true)
            .expect("every speed was fitted")
            .gain;
        for (x, dr) in design_rows(record) {
            let model = gain * (x[0] + lobe.a1 * x[1] + lobe.a2 * x[2]);
            sq += (dr - model).powi(2);
            count += 1;
        }
    }
    Ok(LobeFit {
        lobe,
        per_speed,
        residual: (sq / count as f64).sqrt(),
    })
}
