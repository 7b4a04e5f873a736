//! Line-oriented `section.key = value` configuration format.
//!
//! Lengths take a `_um` or `_m` suffix, angles `_deg`. A `beam.` section sets
//! a value for all four beams and `beamN.` overrides it for one beam. Blank
//! lines and `#` comments are ignored. Every key except
//! `misalignment_deg` is required; unknown or repeated keys are errors.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{
    validate, BeamGeometry, Environment, LobeCoefficients, MaterialProps, ResistorGeometry,
    SensorConfig, Violation, BEAM_COUNT,
};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given more than once")]
    DuplicateKey { line: usize, key: String },
    #[error("missing key `{0}`")]
    MissingKey(String),
    #[error("invalid configuration: {}", format_violations(.0))]
    Invalid(Vec<Violation>),
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Clone, Copy, PartialEq)]
enum Unit {
    Length,
    Angle,
    Plain,
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Beam,
    Resistor,
    Materials,
    Lobe,
    Env,
    Response,
}

// (section, field name without unit suffix, unit, required)
const FIELDS: &[(Section, &str, Unit, bool)] = &[
    (Section::Beam, "length", Unit::Length, true),
    (Section::Beam, "width", Unit::Length, true),
    (Section::Beam, "thickness", Unit::Length, true),
    (Section::Beam, "azimuth", Unit::Angle, true),
    (Section::Beam, "misalignment", Unit::Angle, false),
    (Section::Beam, "pre_bend", Unit::Length, true),
    (Section::Resistor, "length", Unit::Length, true),
    (Section::Resistor, "width", Unit::Length, true),
    (Section::Resistor, "thickness", Unit::Length, true),
    (Section::Resistor, "span_start", Unit::Length, true),
    (Section::Resistor, "span_end", Unit::Length, true),
    (Section::Materials, "resistivity_ohm_m", Unit::Plain, true),
    (Section::Materials, "poisson_ratio", Unit::Plain, true),
    (Section::Materials, "youngs_modulus_pa", Unit::Plain, true),
    (Section::Lobe, "a0", Unit::Plain, true),
    (Section::Lobe, "a1", Unit::Plain, true),
    (Section::Lobe, "a2", Unit::Plain, true),
    (Section::Env, "air_density_kg_per_m3", Unit::Plain, true),
    (Section::Env, "drag_coefficient", Unit::Plain, true),
    (Section::Response, "scale", Unit::Plain, true),
];

/// Beam section target: `None` for the shared `beam.` section.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Target {
    Shared,
    Beam(usize),
    Other(u8),
}

fn parse_section(name: &str) -> Option<(Section, Target)> {
    let simple = match name {
        "beam" => return Some((Section::Beam, Target::Shared)),
        "resistor" => Some((Section::Resistor, 0)),
        "materials" => Some((Section::Materials, 1)),
        "lobe" => Some((Section::Lobe, 2)),
        "env" => Some((Section::Env, 3)),
        "response" => Some((Section::Response, 4)),
        _ => None,
    };
    if let Some((section, tag)) = simple {
        return Some((section, Target::Other(tag)));
    }
    let index: usize = name.strip_prefix("beam")?.parse().ok()?;
    (index < BEAM_COUNT).then_some((Section::Beam, Target::Beam(index)))
}

fn split_unit(field: &str) -> (&str, Option<&str>) {
    for suffix in ["_um", "_m", "_deg"] {
        if let Some(base) = field.strip_suffix(suffix) {
            return (base, Some(suffix));
        }
    }
    (field, None)
}

/// Resolves `section.field_suffix` to a table index and a value in SI.
fn resolve(key: &str, raw: f64) -> Option<(Section, Target, usize, f64)> {
    let (section_name, field) = key.split_once('.')?;
    let (section, target) = parse_section(section_name)?;
    // plain names may legitimately end in a unit-like suffix (resistivity_ohm_m)
    if let Some(idx) = FIELDS
        .iter()
        .position(|&(s, n, u, _)| s == section && n == field && u == Unit::Plain)
    {
        return Some((section, target, idx, raw));
    }
    let (base, suffix) = split_unit(field);
    let idx = FIELDS
        .iter()
        .position(|&(s, n, _, _)| s == section && n == base)?;
    let value = match (FIELDS[idx].2, suffix) {
        (Unit::Length, Some("_um")) => raw / 1e6,
        (Unit::Length, Some("_m")) => raw,
        (Unit::Angle, Some("_deg")) => raw,
        _ => return None,
    };
    Some((section, target, idx, value))
}

fn documented_key(section: &str, idx: usize) -> String {
    let (_, name, unit, _) = FIELDS[idx];
    match unit {
        Unit::Length => format!("{section}.{name}_um"),
        Unit::Angle => format!("{section}.{name}_deg"),
        Unit::Plain => format!("{section}.{name}"),
    }
}

fn section_label(section: Section) -> &'static str {
    match section {
        Section::Beam => "beam",
        Section::Resistor => "resistor",
        Section::Materials => "materials",
        Section::Lobe => "lobe",
        Section::Env => "env",
        Section::Response => "response",
    }
}

/// Parses the configuration text without checking physical invariants.
pub fn parse_config(text: &str) -> Result<SensorConfig, ConfigError> {
    // (target, field index) -> value; canonical key string guards duplicates
    let mut values: BTreeMap<(Target, usize), f64> = BTreeMap::new();
    let mut seen: BTreeMap<(Target, usize), usize> = BTreeMap::new();

    for (n, raw_line) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Parse {
            line,
            message: format!("expected `key = value`, got `{content}`"),
        })?;
        let key = key.trim();
        let value = value.trim();
        let number: f64 = value.parse().map_err(|_| ConfigError::Parse {
            line,
            message: format!("`{value}` is not a number (key `{key}`)"),
        })?;
        let (_, target, idx, si) = resolve(key, number).ok_or_else(|| ConfigError::UnknownKey {
            line,
            key: key.to_string(),
        })?;
        if seen.insert((target, idx), line).is_some() {
            return Err(ConfigError::DuplicateKey {
                line,
                key: key.to_string(),
            });
        }
        values.insert((target, idx), si);
    }

    let get =
        |section: Section, target: Target, label: &str, name: &str| -> Result<f64, ConfigError> {
            let idx = FIELDS
                .iter()
                .position(|&(s, n, _, _)| s == section && n == name)
                .expect("field table entry");
            let shared = || values.get(&(Target::Shared, idx)).copied();
            match values
                .get(&(target, idx))
                .copied()
                .or_else(|| matches!(target, Target::Beam(_)).then(shared).flatten())
            {
                Some(v) => Ok(v),
                None if !FIELDS[idx].3 => Ok(0.0),
                None => Err(ConfigError::MissingKey(documented_key(label, idx))),
            }
        };

    let mut beams = Vec::with_capacity(BEAM_COUNT);
    for i in 0..BEAM_COUNT {
        let label = format!("beam{i}");
        let t = Target::Beam(i);
        let b = |name| get(Section::Beam, t, &label, name);
        beams.push(BeamGeometry {
            length: b("length")?,
            width: b("width")?,
            thickness: b("thickness")?,
            azimuth_deg: b("azimuth")?,
            misalignment_deg: b("misalignment")?,
            pre_bend_tip_rise: b("pre_bend")?,
        });
    }
    let other = |section: Section, tag: u8, name: &str| {
        get(section, Target::Other(tag), section_label(section), name)
    };
    let resistor = ResistorGeometry {
        path_length: other(Section::Resistor, 0, "length")?,
        trace_width: other(Section::Resistor, 0, "width")?,
        film_thickness: other(Section::Resistor, 0, "thickness")?,
        span_start: other(Section::Resistor, 0, "span_start")?,
        span_end: other(Section::Resistor, 0, "span_end")?,
    };
    let materials = MaterialProps {
        resistivity: other(Section::Materials, 1, "resistivity_ohm_m")?,
        poisson_ratio: other(Section::Materials, 1, "poisson_ratio")?,
        youngs_modulus: other(Section::Materials, 1, "youngs_modulus_pa")?,
    };
    let lobe = LobeCoefficients {
        a0: other(Section::Lobe, 2, "a0")?,
        a1: other(Section::Lobe, 2, "a1")?,
        a2: other(Section::Lobe, 2, "a2")?,
    };
    let env = Environment {
        air_density: other(Section::Env, 3, "air_density_kg_per_m3")?,
        drag_coefficient: other(Section::Env, 3, "drag_coefficient")?,
    };
    let response_scale = other(Section::Response, 4, "scale")?;

    Ok(SensorConfig {
        beams: beams.try_into().expect("four beams"),
        resistor,
        materials,
        lobe,
        env,
        response_scale,
    })
}

/// Parses and validates a configuration.
pub fn load_config(text: &str) -> Result<SensorConfig, ConfigError> {
    let config = parse_config(text)?;
    let violations = validate(&config);
    if violations.is_empty() {
        Ok(config)
    } else {
        Err(ConfigError::Invalid(violations))
    }
}

/// Writes a length in micrometers when that survives a parse round trip
/// bit-for-bit, otherwise in meters.
fn write_length(out: &mut String, key: &str, meters: f64) {
    let micros = format!("{:?}", meters * 1e6);
    let exact = micros
        .parse::<f64>()
        .map(|u| (u / 1e6).to_bits() == meters.to_bits())
        .unwrap_or(false);
    if exact {
        let _ = writeln!(out, "{key}_um = {micros}");
    } else {
        let _ = writeln!(out, "{key}_m = {meters:?}");
    }
}

/// Serializes `config` so that [`parse_config`] reproduces it exactly.
pub fn save_config(config: &SensorConfig) -> String {
    let mut out = String::new();
    out.push_str("# quadvane sensor configuration\n");
    for (i, beam) in config.beams.iter().enumerate() {
        let _ = writeln!(out, "\n# beam {i}");
        write_length(&mut out, &format!("beam{i}.length"), beam.length);
        write_length(&mut out, &format!("beam{i}.width"), beam.width);
        write_length(&mut out, &format!("beam{i}.thickness"), beam.thickness);
        let _ = writeln!(out, "beam{i}.azimuth_deg = {:?}", beam.azimuth_deg);
        let _ = writeln!(
            out,
            "beam{i}.misalignment_deg = {:?}",
            beam.misalignment_deg
        );
        write_length(
            &mut out,
            &format!("beam{i}.pre_bend"),
            beam.pre_bend_tip_rise,
        );
    }
    let r = &config.resistor;
    out.push_str("\n# resistor\n");
    write_length(&mut out, "resistor.length", r.path_length);
    write_length(&mut out, "resistor.width", r.trace_width);
    write_length(&mut out, "resistor.thickness", r.film_thickness);
    write_length(&mut out, "resistor.span_start", r.span_start);
    write_length(&mut out, "resistor.span_end", r.span_end);
    let m = &config.materials;
    let _ = writeln!(out, "\nmaterials.resistivity_ohm_m = {:?}", m.resistivity);
    let _ = writeln!(out, "materials.poisson_ratio = {:?}", m.poisson_ratio);
    let _ = writeln!(out, "materials.youngs_modulus_pa = {:?}", m.youngs_modulus);
    let l = &config.lobe;
    let _ = writeln!(out, "\nlobe.a0 = {:?}", l.a0);
    let _ = writeln!(out, "lobe.a1 = {:?}", l.a1);
    let _ = writeln!(out, "lobe.a2 = {:?}", l.a2);
    let _ = writeln!(
        out,
        "\nenv.air_density_kg_per_m3 = {:?}",
        config.env.air_density
    );
    let _ = writeln!(
        out,
        "env.drag_coefficient = {:?}",
        config.env.drag_coefficient
    );
    let _ = writeln!(out, "\nresponse.scale = {:?}", config.response_scale);
    out
}
