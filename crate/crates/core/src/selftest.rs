//! Runtime invariant suite behind `quadvane selftest`.
//!
//! Each check is independent and reports Pass, Fail or Skip. Direction
//! and sweep checks are skipped when the lobe has `a1 ≤ 0`, since the
//! decoder is undefined there and sweeps refuse such a configuration.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::estimation::{
    build_calibration, build_calibration_at, estimate_direction, estimate_speed, fit_lobe,
    uniform_grid, CalibrationTable, JointEstimator,
};
use crate::sensor_model::{validate, FlowCondition, SensorConfig, MAX_SPEED};
use crate::transduction::{
    base_resistance, differential_dr_over_r, forward_response, gauge_dr_over_r,
    mean_resistor_strain, RelativeChanges,
};
use crate::windtunnel::{angle_sweep_dataset, export_csv, run_sweep_with_threads, NoiseModel};

#[derive(Debug, Clone, PartialEq)]
pub enum CheckStatus {
    Pass,
    Fail(String),
    Skip(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub status: CheckStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelfTestReport {
    pub outcomes: Vec<CheckOutcome>,
}

impl SelfTestReport {
    /// All checks passed; with `strict`, skips count as failures.
    pub fn passed(&self, strict: bool) -> bool {
        self.outcomes.iter().all(|o| match o.status {
            CheckStatus::Pass => true,
            CheckStatus::Skip(_) => !strict,
            CheckStatus::Fail(_) => false,
        })
    }

    pub fn status_of(&self, name: &str) -> Option<&CheckStatus> {
        self.outcomes
            .iter()
            .find(|o| o.name == name)
            .map(|o| &o.status)
    }
}

impl fmt::Display for SelfTestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self
            .outcomes
            .iter()
            .map(|o| o.name.len())
            .max()
            .unwrap_or(0);
        for o in &self.outcomes {
            let (tag, note) = match &o.status {
                CheckStatus::Pass => ("PASS", String::new()),
                CheckStatus::Fail(m) => ("FAIL", format!("  {m}")),
                CheckStatus::Skip(m) => ("SKIP", format!("  {m}")),
            };
            writeln!(f, "{:<width$}  {tag}{note}", o.name)?;
        }
        Ok(())
    }
}

type CheckResult = Result<(), String>;

fn ensure(condition: bool, message: impl FnOnce() -> String) -> CheckResult {
    if condition {
        Ok(())
    } else {
        Err(message())
    }
}

fn err<E: fmt::Display>(e: E) -> String {
    e.to_string()
}

fn angular_error(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

fn check_lobe_grid(config: &SensorConfig) -> CheckResult {
    for k in 0..3600 {
        let phi = k as f64 * 0.1;
        let g = config.lobe.eval(phi);
        ensure(g >= 0.0, || format!("g({phi:.1}°) = {g} < 0"))?;
    }
    Ok(())
}

fn check_gauge_consistency(config: &SensorConfig) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e1f);
    for _ in 0..10_000 {
        let strain: f64 = rng.random_range(-1e-3..1e-3);
        let nu: f64 = rng.random_range(0.0..0.49);
        let a = gauge_dr_over_r(strain, nu).map_err(err)?;
        let b = differential_dr_over_r(&RelativeChanges::uniaxial(strain, nu)).map_err(err)?;
        ensure(a == b, || format!("ε = {strain}, ν = {nu}: {a} vs {b}"))?;
    }
    let r0 = base_resistance(&config.resistor, config.materials.resistivity).map_err(err)?;
    let h = 1e-6;
    let mut bumped = config.resistor;
    bumped.path_length *= 1.0 + h;
    bumped.trace_width *= 1.0 + 0.4 * h;
    let r1 =
        base_resistance(&bumped, config.materials.resistivity * (1.0 - 0.7 * h)).map_err(err)?;
    let measured = (r1 - r0) / r0;
    let predicted = differential_dr_over_r(&RelativeChanges {
        d_rho: -0.7 * h,
        d_l: h,
        d_w: 0.4 * h,
        d_t: 0.0,
    })
    .map_err(err)?;
    ensure(((measured - predicted) / predicted).abs() < 1e-4, || {
        format!("finite difference {measured:e} vs differential {predicted:e}")
    })
}

fn check_strain_quadrature(config: &SensorConfig) -> CheckResult {
    let beam = &config.beams[0];
    let span = (config.resistor.span_start, config.resistor.span_end);
    let e = config.materials.youngs_modulus;
    let closed = mean_resistor_strain(1.0, beam, span, e).map_err(err)?;
    let inertia = beam.second_moment_of_area();
    let profile = |x: f64| (beam.length - x).powi(2) / 2.0 * (beam.thickness / 2.0) / (e * inertia);
    let n = 10_000;
    let h = (span.1 - span.0) / n as f64;
    let mut acc = 0.5 * (profile(span.0) + profile(span.1));
    for k in 1..n {
        acc += profile(span.0 + k as f64 * h);
    }
    let quadrature = acc * h / (span.1 - span.0);
    ensure(((closed - quadrature) / quadrature).abs() < 1e-6, || {
        format!("closed form {closed:e} vs trapezoid {quadrature:e}")
    })
}

fn check_sum_invariance(config: &SensorConfig) -> CheckResult {
    if !config.has_identical_beams() {
        return Err("beams differ in geometry; sum is direction dependent".into());
    }
    let reference = forward_response(config, &FlowCondition::new(20.0, 0.0).map_err(err)?)
        .map_err(err)?
        .abs_sum();
    for deg in 0..360 {
        let flow = FlowCondition::new(20.0, deg as f64).map_err(err)?;
        let sum = forward_response(config, &flow).map_err(err)?.abs_sum();
        ensure((sum - reference).abs() <= 1e-12 * reference, || {
            format!("θ = {deg}°: Σ|dR| = {sum} vs {reference}")
        })?;
    }
    Ok(())
}

fn check_monotone_speed(config: &SensorConfig) -> CheckResult {
    let grid = uniform_grid(MAX_SPEED, 0.25);
    build_calibration(config, &grid).map(|_| ()).map_err(err)
}

fn check_direction_round_trip(config: &SensorConfig) -> CheckResult {
    for v in [1.0, 5.0, 20.0, 45.0] {
        for deg in 0..360 {
            let theta = deg as f64;
            let r = forward_response(config, &FlowCondition::new(v, theta).map_err(err)?)
                .map_err(err)?;
            let est = estimate_direction(&r, &config.lobe).map_err(err)?;
            ensure(angular_error(est, theta) <= 1e-6, || {
                format!("v = {v}, θ = {theta}: decoded {est}")
            })?;
        }
    }
    Ok(())
}

fn check_speed_round_trip(config: &SensorConfig) -> CheckResult {
    let table = build_calibration(config, &uniform_grid(MAX_SPEED, 1.0)).map_err(err)?;
    for k in 0..=90 {
        let v = k as f64 * 0.5;
        let r =
            forward_response(config, &FlowCondition::new(v, 77.0).map_err(err)?).map_err(err)?;
        let est = estimate_speed(&r, &table).map_err(err)?;
        ensure((est.speed - v).abs() <= 1e-6, || {
            format!("v = {v}: estimated {}", est.speed)
        })?;
    }
    let table_135 =
        build_calibration_at(config, &uniform_grid(MAX_SPEED, 1.0), 135.0).map_err(err)?;
    for (a, b) in table.knots().iter().zip(table_135.knots()) {
        ensure((a.1 - b.1).abs() <= 1e-12 * a.1, || {
            format!("knot {} differs", a.0)
        })?;
    }
    Ok(())
}

fn check_fit_round_trip(config: &SensorConfig) -> CheckResult {
    let sweep = angle_sweep_dataset(config, &NoiseModel::none()).map_err(err)?;
    let fit = fit_lobe(&sweep).map_err(err)?;
    let a1 = config.lobe.a1 / config.lobe.a0;
    let a2 = config.lobe.a2 / config.lobe.a0;
    ensure(
        (fit.lobe.a1 - a1).abs() < 1e-9 && (fit.lobe.a2 - a2).abs() < 1e-9,
        || format!("fitted ({}, {}) vs ({a1}, {a2})", fit.lobe.a1, fit.lobe.a2),
    )
}

fn check_joint_round_trip(config: &SensorConfig) -> CheckResult {
    let estimator = JointEstimator::new(config).map_err(err)?;
    for (v, theta) in [(20.0, 135.0), (7.5, 300.0), (40.0, 12.0)] {
        let r =
            forward_response(config, &FlowCondition::new(v, theta).map_err(err)?).map_err(err)?;
        let est = estimator.estimate(&r).map_err(err)?;
        ensure(est.residual <= 1e-12 * r.norm(), || {
            format!("residual {} at v = {v}, θ = {theta}", est.residual)
        })?;
    }
    Ok(())
}

fn check_determinism(config: &SensorConfig) -> CheckResult {
    let angles: Vec<f64> = (0..24).map(|k| k as f64 * 15.0).collect();
    let speeds = [10.0, 20.0, 30.0];
    let noise = NoiseModel::lcr(7);
    let one = run_sweep_with_threads(config, &angles, &speeds, &noise, 2, 1).map_err(err)?;
    let four = run_sweep_with_threads(config, &angles, &speeds, &noise, 2, 4).map_err(err)?;
    ensure(export_csv(&one) == export_csv(&four), || {
        "outputs differ between 1 and 4 threads".into()
    })
}

/// Runs the suite. `calibration_csv`, when given, is checked against the
/// calibration schema and against `config`.
pub fn run_selftest(config: &SensorConfig, calibration_csv: Option<&str>) -> SelfTestReport {
    let violations = validate(config);
    let direction_undefined = !(config.lobe.a1 > 0.0);
    let other_violations: Vec<String> = violations
        .iter()
        .filter(|v| v.rule != "a1 > 0")
        .map(|v| v.to_string())
        .collect();

    let mut outcomes = Vec::new();
    let mut push =
        |name: &'static str, status: CheckStatus| outcomes.push(CheckOutcome { name, status });
    let to_status = |r: CheckResult| match r {
        Ok(()) => CheckStatus::Pass,
        Err(m) => CheckStatus::Fail(m),
    };

    push(
        "config.validate",
        if other_violations.is_empty() {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail(other_violations.join("; "))
        },
    );
    push("lobe.nonnegative_grid", to_status(check_lobe_grid(config)));
    push(
        "transduction.gauge_vs_differential",
        to_status(check_gauge_consistency(config)),
    );
    push(
        "transduction.strain_quadrature",
        to_status(check_strain_quadrature(config)),
    );
    push(
        "forward.sum_invariance",
        to_status(check_sum_invariance(config)),
    );
    push(
        "forward.monotone_in_speed",
        to_status(check_monotone_speed(config)),
    );

    let skip = || CheckStatus::Skip("lobe a1 <= 0: direction is undefined".into());
    if direction_undefined {
        push("estimation.direction_round_trip", skip());
    } else {
        push(
            "estimation.direction_round_trip",
            to_status(check_direction_round_trip(config)),
        );
    }
    push(
        "estimation.speed_round_trip",
        to_status(check_speed_round_trip(config)),
    );
    if direction_undefined {
        push("estimation.fit_lobe_round_trip", skip());
        push("estimation.joint_round_trip", skip());
        push("windtunnel.determinism", skip());
    } else {
        push(
            "estimation.fit_lobe_round_trip",
            to_status(check_fit_round_trip(config)),
        );
        push(
            "estimation.joint_round_trip",
            to_status(check_joint_round_trip(config)),
        );
        push(
            "windtunnel.determinism",
            to_status(check_determinism(config)),
        );
    }

    if let Some(text) = calibration_csv {
        let status = match CalibrationTable::from_csv(text) {
            Err(e) => CheckStatus::Fail(format!("schema: {e}")),
            Ok(table) => {
                let mut worst = 0.0f64;
                for &(v, sum) in table.knots().iter().skip(1) {
                    let flow = FlowCondition::new(v, 180.0).expect("table speeds are valid");
                    match forward_response(config, &flow) {
                        Ok(r) => worst = worst.max((r.abs_sum() - sum).abs() / sum),
                        Err(_) => worst = f64::INFINITY,
                    }
                }
                if worst <= 1e-9 {
                    CheckStatus::Pass
                } else {
                    CheckStatus::Fail(format!(
                        "knots deviate from the model by {worst:e} (relative)"
                    ))
                }
            }
        };
        push("calibration.file", status);
    }

    SelfTestReport { outcomes }
}
