//! Parametric description of the four-beam sensor, its materials and the
//! surrounding air, plus the angle conventions shared by every other module.
//!
//! All lengths are stored in meters and all angles in degrees. A
//! [`FlowCondition`] carries the *travel* azimuth: the direction the air moves
//! toward. The downwind beam is the one whose azimuth equals that angle.
//!
//! Material constants in [`reference_device`] are handbook values (thin-film
//! platinum resistivity, silicon modulus) and the planform dimensions are
//! declared defaults, not measured device data.

mod config_file;

pub use config_file::{load_config, parse_config, save_config, ConfigError};

use std::fmt;

use crate::transduction;

/// Number of cantilevers on the device.
pub const BEAM_COUNT: usize = 4;

/// Canonical beam azimuths, in the order responses are indexed.
pub const LATTICE_AZIMUTHS_DEG: [f64; BEAM_COUNT] = [0.0, 90.0, 180.0, 270.0];

/// Target downwind-beam slope, ohm per (m/s).
pub const SENSITIVITY_TARGET: f64 = 0.0284;

/// Speed at which [`SENSITIVITY_TARGET`] is matched.
pub const SENSITIVITY_SPEED: f64 = 20.0;

/// Upper end of the measurable speed range, m/s.
pub const MAX_SPEED: f64 = 45.0;

/// Upper bound of the perpendicular-to-downwind lobe ratio g(90°)/g(0°).
pub const PERPENDICULAR_RATIO_LIMIT: f64 = 0.15;

/// Maps any finite angle onto `[0, 360)`.
pub fn normalize_degrees(angle: f64) -> f64 {
    let wrapped = angle.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if wrapped >= 360.0 {
        0.0
    } else {
        wrapped
    }
}

/// Serpentine thin-film resistor laid along a beam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResistorGeometry {
    /// Total trace length l_R.
    pub path_length: f64,
    pub trace_width: f64,
    pub film_thickness: f64,
    /// Start of the longitudinal footprint, measured from the beam root.
    pub span_start: f64,
    /// End of the longitudinal footprint, measured from the beam root.
    pub span_end: f64,
}

impl ResistorGeometry {
    pub fn cross_section(&self) -> f64 {
        self.trace_width * self.film_thickness
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialProps {
    /// Resistor film resistivity, ohm·m.
    pub resistivity: f64,
    pub poisson_ratio: f64,
    /// Young's modulus of the beam, Pa.
    pub youngs_modulus: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamGeometry {
    pub length: f64,
    pub width: f64,
    pub thickness: f64,
    /// Nominal azimuth in degrees.
    pub azimuth_deg: f64,
    /// Mounting error added to the nominal azimuth (rotary-table alignment).
    pub misalignment_deg: f64,
    /// Residual-stress tip rise. Stored and reported only; the response
    /// trim factor absorbs its effect.
    pub pre_bend_tip_rise: f64,
}

impl BeamGeometry {
    /// Azimuth the forward model actually uses.
    pub fn effective_azimuth_deg(&self) -> f64 {
        normalize_degrees(self.azimuth_deg + self.misalignment_deg)
    }

    pub fn second_moment_of_area(&self) -> f64 {
        self.width * self.thickness.powi(3) / 12.0
    }
}

/// Fourier coefficients of the angular response
/// `g(φ) = a0 + a1·cos φ + a2·cos 2φ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LobeCoefficients {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
}

impl LobeCoefficients {
    pub fn new(a0: f64, a1: f64, a2: f64) -> Self {
        Self { a0, a1, a2 }
    }

    /// g(φ) for φ in degrees.
    pub fn eval(&self, phi_deg: f64) -> f64 {
        let phi = phi_deg.to_radians();
        self.a0 + self.a1 * phi.cos() + self.a2 * (2.0 * phi).cos()
    }

    /// dg/dφ per radian, for φ in degrees.
    pub fn derivative(&self, phi_deg: f64) -> f64 {
        let phi = phi_deg.to_radians();
        -self.a1 * phi.sin() - 2.0 * self.a2 * (2.0 * phi).sin()
    }

    /// Minimum of g over the full circle together with the `cos φ` where it
    /// is attained.
    ///
    /// With `c = cos φ`, `g = 2·a2·c² + a1·c + (a0 − a2)` on `c ∈ [−1, 1]`,
    /// so the minimum sits at an endpoint or at the parabola vertex.
    pub fn minimum(&self) -> (f64, f64) {
        let quad = |c: f64| 2.0 * self.a2 * c * c + self.a1 * c + (self.a0 - self.a2);
        let mut best = (quad(-1.0), -1.0);
        let right = quad(1.0);
        if right < best.0 {
            best = (right, 1.0);
        }
        if self.a2 > 0.0 {
            let vertex = -self.a1 / (4.0 * self.a2);
            if (-1.0..=1.0).contains(&vertex) {
                let value = quad(vertex);
                if value < best.0 {
                    best = (value, vertex);
                }
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Environment {
    /// kg/m³
    pub air_density: f64,
    pub drag_coefficient: f64,
}

impl Default for Environment {
    fn default() -> Self {
        Self {
            air_density: 1.204,
            drag_coefficient: 1.2,
        }
    }
}

/// Complete description of one sensor. Immutable once validated.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorConfig {
    pub beams: [BeamGeometry; BEAM_COUNT],
    pub resistor: ResistorGeometry,
    pub materials: MaterialProps,
    pub lobe: LobeCoefficients,
    pub env: Environment,
    /// Trim factor applied to every resistance variation.
    pub response_scale: f64,
}

impl SensorConfig {
    /// Returns `self` when [`validate`] reports nothing, otherwise every
    /// violation at once.
    pub fn validated(self) -> Result<Self, ConfigError> {
        let violations = validate(&self);
        if violations.is_empty() {
            Ok(self)
        } else {
            Err(ConfigError::Invalid(violations))
        }
    }

    /// True when all beams share length, width and thickness, which is what
    /// makes the four responses differ only through the lobe.
    pub fn has_identical_beams(&self) -> bool {
        let first = &self.beams[0];
        self.beams.iter().all(|b| {
            b.length == first.length && b.width == first.width && b.thickness == first.thickness
        })
    }
}

/// Airflow speed and travel azimuth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowCondition {
    speed: f64,
    travel_azimuth_deg: f64,
}

impl FlowCondition {
    /// Builds a flow moving toward `travel_azimuth_deg`. Any real angle is
    /// accepted and normalized; negative or non-finite speeds are rejected.
    pub fn new(speed: f64, travel_azimuth_deg: f64) -> Result<Self, FlowError> {
        if !(speed >= 0.0) || !speed.is_finite() {
            return Err(FlowError::Speed(speed));
        }
        if !travel_azimuth_deg.is_finite() {
            return Err(FlowError::Angle(travel_azimuth_deg));
        }
        Ok(Self {
            speed,
            travel_azimuth_deg: normalize_degrees(travel_azimuth_deg),
        })
    }

    /// Builds a flow coming *from* `origin_deg` (the wind-vane convention).
    pub fn from_origin(speed: f64, origin_deg: f64) -> Result<Self, FlowError> {
        Self::new(speed, origin_deg + 180.0)
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn travel_azimuth_deg(&self) -> f64 {
        self.travel_azimuth_deg
    }

    pub fn origin_azimuth_deg(&self) -> f64 {
        normalize_degrees(self.travel_azimuth_deg + 180.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum FlowError {
    #[error("flow speed must be finite and non-negative, got {0}")]
    Speed(f64),
    #[error("flow angle must be finite, got {0}")]
    Angle(f64),
}

/// One broken invariant found by [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    /// Dotted path of the offending field, e.g. `beam2.thickness`.
    pub field: String,
    /// Short name of the rule, stable across releases.
    pub rule: &'static str,
    pub detail: String,
}

impl Violation {
    fn new(field: impl Into<String>, rule: &'static str, detail: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            rule,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} ({})", self.field, self.rule, self.detail)
    }
}

fn check_positive(out: &mut Vec<Violation>, field: String, rule: &'static str, value: f64) {
    if !(value > 0.0 && value.is_finite()) {
        out.push(Violation::new(field, rule, format!("got {value}")));
    }
}

/// Checks every invariant of `config`. The list is exhaustive and always in
/// the same order; an empty list means the configuration is usable.
pub fn validate(config: &SensorConfig) -> Vec<Violation> {
    let mut out = Vec::new();

    for (i, beam) in config.beams.iter().enumerate() {
        check_positive(&mut out, format!("beam{i}.length"), "L > 0", beam.length);
        check_positive(&mut out, format!("beam{i}.width"), "w_b > 0", beam.width);
        check_positive(
            &mut out,
            format!("beam{i}.thickness"),
            "t_b > 0",
            beam.thickness,
        );
        if !(beam.pre_bend_tip_rise >= 0.0 && beam.pre_bend_tip_rise.is_finite()) {
            out.push(Violation::new(
                format!("beam{i}.pre_bend"),
                "pre-bend >= 0",
                format!("got {}", beam.pre_bend_tip_rise),
            ));
        }
        if !beam.azimuth_deg.is_finite() || !beam.misalignment_deg.is_finite() {
            out.push(Violation::new(
                format!("beam{i}.azimuth"),
                "finite azimuth",
                format!("got {} + {}", beam.azimuth_deg, beam.misalignment_deg),
            ));
        }
    }
    for i in 0..BEAM_COUNT {
        for j in (i + 1)..BEAM_COUNT {
            let a = config.beams[i].effective_azimuth_deg();
            let b = config.beams[j].effective_azimuth_deg();
            if a == b {
                out.push(Violation::new(
                    format!("beam{j}.azimuth"),
                    "duplicate azimuth",
                    format!("beam{i} and beam{j} both at {a}°"),
                ));
            }
        }
    }

    let r = &config.resistor;
    check_positive(&mut out, "resistor.length".into(), "l_R > 0", r.path_length);
    check_positive(&mut out, "resistor.width".into(), "w > 0", r.trace_width);
    check_positive(
        &mut out,
        "resistor.thickness".into(),
        "t > 0",
        r.film_thickness,
    );
    let shortest_beam = config
        .beams
        .iter()
        .map(|b| b.length)
        .fold(f64::INFINITY, f64::min);
    if !(r.span_start >= 0.0 && r.span_start < r.span_end && r.span_end <= shortest_beam) {
        out.push(Violation::new(
            "resistor.span",
            "0 <= x0 < x1 <= L",
            format!(
                "span [{}, {}] on beams of length {}",
                r.span_start, r.span_end, shortest_beam
            ),
        ));
    }

    let m = &config.materials;
    check_positive(
        &mut out,
        "materials.resistivity".into(),
        "rho_e > 0",
        m.resistivity,
    );
    if !(m.poisson_ratio >= 0.0 && m.poisson_ratio < 0.5) {
        out.push(Violation::new(
            "materials.poisson_ratio",
            "0 <= nu < 0.5",
            format!("got {}", m.poisson_ratio),
        ));
    }
    check_positive(
        &mut out,
        "materials.youngs_modulus".into(),
        "E > 0",
        m.youngs_modulus,
    );

    let lobe = &config.lobe;
    if ![lobe.a0, lobe.a1, lobe.a2].iter().all(|c| c.is_finite()) {
        out.push(Violation::new(
            "lobe",
            "finite coefficients",
            format!("got ({}, {}, {})", lobe.a0, lobe.a1, lobe.a2),
        ));
    } else {
        let (min, at) = lobe.minimum();
        if min < 0.0 {
            out.push(Violation::new(
                "lobe",
                "lobe negativity",
                format!(
                    "g reaches {min:.6} at φ = {:.2}°",
                    at.clamp(-1.0, 1.0).acos().to_degrees()
                ),
            ));
        }
        if !(lobe.a1 > 0.0) {
            out.push(Violation::new(
                "lobe.a1",
                "a1 > 0",
                format!("got {}; downwind must exceed upwind", lobe.a1),
            ));
        }
        let downwind = lobe.eval(0.0);
        let perpendicular = lobe.a0 - lobe.a2;
        if !(perpendicular <= PERPENDICULAR_RATIO_LIMIT * downwind) {
            out.push(Violation::new(
                "lobe",
                "perpendicular ratio",
                format!(
                    "g(90°) = {perpendicular} exceeds 0.15·g(0°) = {}",
                    0.15 * downwind
                ),
            ));
        }
    }

    check_positive(
        &mut out,
        "env.air_density".into(),
        "air density > 0",
        config.env.air_density,
    );
    check_positive(
        &mut out,
        "env.drag_coefficient".into(),
        "drag coefficient > 0",
        config.env.drag_coefficient,
    );
    check_positive(
        &mut out,
        "response.scale".into(),
        "S > 0",
        config.response_scale,
    );

    out
}

/// The reference device before sensitivity trimming (`response_scale = 1`).
pub fn reference_device() -> SensorConfig {
    let beam = |azimuth_deg| BeamGeometry {
        length: 1.0e-3,
        width: 200.0e-6,
        thickness: 20.0e-6,
        azimuth_deg,
        misalignment_deg: 0.0,
        pre_bend_tip_rise: 50.0e-6,
    };
    SensorConfig {
        beams: LATTICE_AZIMUTHS_DEG.map(beam),
        resistor: ResistorGeometry {
            path_length: 2.0e-3,
            trace_width: 10.0e-6,
            film_thickness: 0.1e-6,
            span_start: 0.0,
            span_end: 0.4e-3,
        },
        materials: MaterialProps {
            resistivity: 1.06e-7,
            poisson_ratio: 0.38,
            youngs_modulus: 160.0e9,
        },
        lobe: LobeCoefficients::new(1.0, 0.8, 0.9),
        env: Environment::default(),
        response_scale: 1.0,
    }
}

/// The reference device trimmed so the downwind beam slope at 20 m/s is
/// 0.0284 Ω/(m/s).
pub fn default_config() -> SensorConfig {
    transduction::trim_sensitivity(&reference_device(), SENSITIVITY_TARGET, SENSITIVITY_SPEED)
        .expect("reference device is valid")
}
