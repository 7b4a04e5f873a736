//! Forward physics: resistor geometry to base resistance, strain to
//! resistance change, aerodynamic load to root-region strain, and the
//! composed four-beam response.

use crate::sensor_model::{
    BeamGeometry, FlowCondition, LobeCoefficients, ResistorGeometry, SensorConfig, BEAM_COUNT,
};

/// Relative changes larger than this leave the small-strain regime.
pub const SMALL_STRAIN_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TransductionError {
    #[error("{quantity} must be positive and finite, got {value}")]
    NonPositive { quantity: &'static str, value: f64 },
    #[error("{quantity} = {value} is outside {range}")]
    OutOfRange {
        quantity: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("degenerate resistor span [{start}, {end}] on a beam of length {length}")]
    DegenerateSpan { start: f64, end: f64, length: f64 },
}

fn positive(quantity: &'static str, value: f64) -> Result<f64, TransductionError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(TransductionError::NonPositive { quantity, value })
    }
}

fn small_strain(quantity: &'static str, value: f64) -> Result<f64, TransductionError> {
    if value.is_finite() && value.abs() < SMALL_STRAIN_LIMIT {
        Ok(value)
    } else {
        Err(TransductionError::OutOfRange {
            quantity,
            value,
            range: "(-0.1, 0.1)",
        })
    }
}

/// `R = ρ·l_R / (w·t)`.
pub fn base_resistance(
    resistor: &ResistorGeometry,
    resistivity: f64,
) -> Result<f64, TransductionError> {
    let length = positive("resistor length", resistor.path_length)?;
    let width = positive("resistor width", resistor.trace_width)?;
    let thickness = positive("resistor thickness", resistor.film_thickness)?;
    let rho = positive("resistivity", resistivity)?;
    Ok(rho * length / (width * thickness))
}

/// Relative changes of the four quantities that set the resistance.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RelativeChanges {
    /// dρ/ρ
    pub d_rho: f64,
    /// dl_R/l_R, the longitudinal strain.
    pub d_l: f64,
    /// dw/w
    pub d_w: f64,
    /// dt/t
    pub d_t: f64,
}

impl RelativeChanges {
    /// The uniaxial case: longitudinal strain with Poisson contraction of
    /// width and thickness and no resistivity change.
    pub fn uniaxial(strain: f64, poisson_ratio: f64) -> Self {
        Self {
            d_rho: 0.0,
            d_l: strain,
            d_w: -poisson_ratio * strain,
            d_t: -poisson_ratio * strain,
        }
    }
}

/// Full differential `dR/R = dρ/ρ + dl/l − dw/w − dt/t`.
pub fn differential_dr_over_r(changes: &RelativeChanges) -> Result<f64, TransductionError> {
    small_strain("dρ/ρ", changes.d_rho)?;
    small_strain("dl/l", changes.d_l)?;
    small_strain("dw/w", changes.d_w)?;
    small_strain("dt/t", changes.d_t)?;
    Ok(changes.d_rho + changes.d_l - changes.d_w - changes.d_t)
}

/// Gauge relation `dR/R ≈ (1 + 2ν)·ε`.
pub fn gauge_dr_over_r(strain: f64, poisson_ratio: f64) -> Result<f64, TransductionError> {
    small_strain("strain", strain)?;
    if !(0.0..0.5).contains(&poisson_ratio) {
        return Err(TransductionError::OutOfRange {
            quantity: "Poisson ratio",
            value: poisson_ratio,
            range: "[0, 0.5)",
        });
    }
    // (1 + 2ν)ε written as the sum the differential form produces, so both
    // routes round identically
    Ok(strain + poisson_ratio * strain + poisson_ratio * strain)
}

/// Angular response g(φ) of one beam, φ = flow travel azimuth − beam azimuth.
pub fn angular_lobe(phi_deg: f64, lobe: &LobeCoefficients) -> f64 {
    lobe.eval(phi_deg)
}

/// Uniform load per unit length on `beam`, N/m:
/// `q = ½·ρ_air·C_d·v²·w_b·g(φ)·S`.
pub fn distributed_load(
    speed: f64,
    phi_deg: f64,
    config: &SensorConfig,
    beam: &BeamGeometry,
) -> Result<f64, TransductionError> {
    if !(speed >= 0.0) || !speed.is_finite() {
        return Err(TransductionError::OutOfRange {
            quantity: "speed",
            value: speed,
            range: "[0, ∞)",
        });
    }
    let dynamic_pressure = 0.5 * config.env.air_density * speed * speed;
    let shape = angular_lobe(phi_deg, &config.lobe).max(0.0);
    Ok(dynamic_pressure * config.env.drag_coefficient * beam.width * shape * config.response_scale)
}

/// Surface strain averaged over the resistor footprint `[start, end]` of a
/// cantilever carrying uniform load `q`.
///
/// With `M(x) = q·(L − x)²/2` and `I = w_b·t_b³/12` the surface strain is
/// `M·(t_b/2)/(E·I)`, whose mean over the span integrates in closed form.
pub fn mean_resistor_strain(
    load: f64,
    beam: &BeamGeometry,
    span: (f64, f64),
    youngs_modulus: f64,
) -> Result<f64, TransductionError> {
    if !(load >= 0.0) || !load.is_finite() {
        return Err(TransductionError::OutOfRange {
            quantity: "distributed load",
            value: load,
            range: "[0, ∞)",
        });
    }
    let length = positive("beam length", beam.length)?;
    positive("beam width", beam.width)?;
    let thickness = positive("beam thickness", beam.thickness)?;
    let modulus = positive("Young's modulus", youngs_modulus)?;
    let (start, end) = span;
    if !(start >= 0.0 && start < end && end <= length) {
        return Err(TransductionError::DegenerateSpan { start, end, length });
    }
    let inertia = beam.second_moment_of_area();
    let near = length - start;
    let far = length - end;
    Ok(
        load * thickness * (near.powi(3) - far.powi(3))
            / (12.0 * modulus * inertia * (end - start)),
    )
}

/// Resistance variations of the four beams, ohm, in beam order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponseVector {
    pub dr: [f64; BEAM_COUNT],
    pub base_r: f64,
}

impl ResponseVector {
    pub fn new(dr: [f64; BEAM_COUNT], base_r: f64) -> Self {
        Self { dr, base_r }
    }

    /// Σ|dR_i|, the direction-independent speed signal.
    pub fn abs_sum(&self) -> f64 {
        self.dr.iter().map(|d| d.abs()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dr.iter().map(|d| d * d).sum::<f64>().sqrt()
    }

    /// Index of the largest entry.
    pub fn argmax(&self) -> usize {
        (0..BEAM_COUNT)
            .max_by(|&a, &b| self.dr[a].total_cmp(&self.dr[b]))
            .unwrap_or(0)
    }
}

/// Resistance change of one beam for a given flow.
fn beam_response(
    config: &SensorConfig,
    beam: &BeamGeometry,
    base_r: f64,
    flow: &FlowCondition,
) -> Result<f64, TransductionError> {
    let phi = flow.travel_azimuth_deg() - beam.effective_azimuth_deg();
    let load = distributed_load(flow.speed(), phi, config, beam)?;
    let span = (config.resistor.span_start, config.resistor.span_end);
    let strain = mean_resistor_strain(load, beam, span, config.materials.youngs_modulus)?;
    Ok(base_r * gauge_dr_over_r(strain, config.materials.poisson_ratio)?)
}

/// Four-beam response to `flow`.
pub fn forward_response(
    config: &SensorConfig,
    flow: &FlowCondition,
) -> Result<ResponseVector, TransductionError> {
    let base_r = base_resistance(&config.resistor, config.materials.resistivity)?;
    let mut dr = [0.0; BEAM_COUNT];
    for (slot, beam) in dr.iter_mut().zip(config.beams.iter()) {
        *slot = beam_response(config, beam, base_r, flow)?;
    }
    Ok(ResponseVector { dr, base_r })
}

/// Per-beam gain `G_i` such that `dR_i = G_i·v²·g(φ_i)`.
pub fn beam_gains(config: &SensorConfig) -> Result<[f64; BEAM_COUNT], TransductionError> {
    let base_r = base_resistance(&config.resistor, config.materials.resistivity)?;
    let peak = config.lobe.eval(0.0);
    positive("g(0°)", peak)?;
    let mut gains = [0.0; BEAM_COUNT];
    for (gain, beam) in gains.iter_mut().zip(config.beams.iter()) {
        let flow =
            FlowCondition::new(1.0, beam.effective_azimuth_deg()).expect("unit flow is valid");
        *gain = beam_response(config, beam, base_r, &flow)? / peak;
    }
    Ok(gains)
}

/// Slope d(dR)/dv of beam 0 with the flow travelling along its axis.
///
/// Under the v² load law `dR = c·v²`, so the slope is `2·dR(v)/v`.
pub fn downwind_sensitivity(config: &SensorConfig, speed: f64) -> Result<f64, TransductionError> {
    let speed = positive("sensitivity speed", speed)?;
    let flow =
        FlowCondition::new(speed, config.beams[0].effective_azimuth_deg()).expect("positive speed");
    let response = forward_response(config, &flow)?;
    Ok(2.0 * response.dr[0] / speed)
}

/// Rescales `response_scale` so [`downwind_sensitivity`] at `speed` equals
/// `target` (ohm per m/s). The response is linear in the scale, so one
/// pass is exact.
pub fn trim_sensitivity(
    config: &SensorConfig,
    target: f64,
    speed: f64,
) -> Result<SensorConfig, TransductionError> {
    let target = positive("target sensitivity", target)?;
    let current = positive(
        "untrimmed sensitivity",
        downwind_sensitivity(config, speed)?,
    )?;
    let mut trimmed = config.clone();
    trimmed.response_scale *= target / current;
    Ok(trimmed)
}
