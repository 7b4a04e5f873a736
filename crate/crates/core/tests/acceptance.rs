//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use quadvane_core::estimation::{
    build_calibration, direction_threshold, estimate_direction, estimate_speed, fit_lobe,
    uniform_grid, JointEstimator,
};
use quadvane_core::sensor_model::{
    default_config, normalize_degrees, BeamGeometry, FlowCondition, ResistorGeometry, MAX_SPEED,
    SENSITIVITY_SPEED, SENSITIVITY_TARGET,
};
use quadvane_core::transduction::{
    base_resistance, differential_dr_over_r, forward_response, gauge_dr_over_r,
    mean_resistor_strain, RelativeChanges,
};
use quadvane_core::windtunnel::{
    angle_sweep_dataset, export_csv, run_sweep, run_sweep_with_threads, speed_sweep_dataset,
    NoiseModel, ANGLE_SWEEP_SPEEDS,
};

type Outcome = Result<String, String>;

fn angular_error(a: f64, b: f64) -> f64 {
    let d = normalize_degrees(a - b);
    d.min(360.0 - d)
}

fn percentile(values: &mut [f64], p: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let rank = ((p / 100.0) * values.len() as f64).ceil() as usize;
    values[rank.clamp(1, values.len()) - 1]
}

fn check(condition: bool, message: String) -> Result<(), String> {
    if condition {
        Ok(())
    } else {
        Err(message)
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10_000 {
        let strain: f64 = rng.random_range(-1e-3..1e-3);
        let nu: f64 = rng.random_range(0.0..0.49);
        let gauge = gauge_dr_over_r(strain, nu).map_err(|e| e.to_string())?;
        let full = differential_dr_over_r(&RelativeChanges::uniaxial(strain, nu))
            .map_err(|e| e.to_string())?;
        check(
            gauge == full,
            format!("ε={strain}, ν={nu}: {gauge} != {full}"),
        )?;
    }

    let resistor = default_config().resistor;
    let rho = 1.06e-7;
    let r0 = base_resistance(&resistor, rho).unwrap();
    let h = 1e-6;
    let mut worst = 0.0f64;
    // perturb one quantity at a time, then all together
    let probes: [[f64; 4]; 5] = [
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.3, -1.0, 0.5, 0.8],
    ];
    for [dl, dw, dt, drho] in probes {
        let bumped = ResistorGeometry {
            path_length: resistor.path_length * (1.0 + dl * h),
            trace_width: resistor.trace_width * (1.0 + dw * h),
            film_thickness: resistor.film_thickness * (1.0 + dt * h),
            ..resistor
        };
        let r1 = base_resistance(&bumped, rho * (1.0 + drho * h)).unwrap();
        let measured = (r1 - r0) / r0;
        let predicted = differential_dr_over_r(&RelativeChanges {
            d_rho: drho * h,
            d_l: dl * h,
            d_w: dw * h,
            d_t: dt * h,
        })
        .unwrap();
        worst = worst.max(((measured - predicted) / predicted).abs());
    }
    check(
        worst <= 1e-4,
        format!("finite-difference relative error {worst:e} > 1e-4"),
    )?;
    let elapsed = start.elapsed().as_secs_f64();
    check(elapsed < 1.0, format!("runtime {elapsed:.3} s >= 1 s"))?;
    Ok(format!(
        "10^4 exact matches; FD rel err {worst:.2e}; {elapsed:.3} s"
    ))
}

fn trapezoid_mean_strain(q: f64, beam: &BeamGeometry, span: (f64, f64), e: f64) -> f64 {
    let panels = 10_000;
    let inertia = beam.width * beam.thickness.powi(3) / 12.0;
    let f = |x: f64| q * (beam.length - x).powi(2) / 2.0 * (beam.thickness / 2.0) / (e * inertia);
    let h = (span.1 - span.0) / panels as f64;
    let mut acc = 0.5 * (f(span.0) + f(span.1));
    for k in 1..panels {
        acc += f(span.0 + k as f64 * h);
    }
    acc * h / (span.1 - span.0)
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let length = rng.random_range(2e-4..5e-3);
        let beam = BeamGeometry {
            length,
            width: rng.random_range(2e-5..1e-3),
            thickness: rng.random_range(2e-6..5e-5),
            azimuth_deg: 0.0,
            misalignment_deg: 0.0,
            pre_bend_tip_rise: 0.0,
        };
        let a = rng.random_range(0.0..0.9) * length;
        let b = a + rng.random_range(0.05..1.0) * (length - a);
        let e = rng.random_range(5e10..3e11);
        let q = rng.random_range(1e-3..50.0);
        let closed = mean_resistor_strain(q, &beam, (a, b), e).map_err(|e| e.to_string())?;
        let oracle = trapezoid_mean_strain(q, &beam, (a, b), e);
        worst = worst.max(((closed - oracle) / oracle).abs());
    }
    check(
        worst <= 1e-6,
        format!("worst relative error {worst:e} > 1e-6"),
    )?;
    let elapsed = start.elapsed().as_secs_f64();
    check(elapsed < 5.0, format!("runtime {elapsed:.3} s >= 5 s"))?;
    Ok(format!(
        "100 geometries, worst rel err {worst:.2e}; {elapsed:.3} s"
    ))
}

fn criterion_3() -> Outcome {
    let config = default_config();
    let sweep = speed_sweep_dataset(&config, &NoiseModel::none()).map_err(|e| e.to_string())?;
    let speeds = uniform_grid(MAX_SPEED, 0.5);
    let curve = |angle: f64| -> Vec<(f64, f64)> {
        sweep
            .iter()
            .filter(|r| r.angle_travel_deg == angle)
            .map(|r| (r.v_true, r.dr.iter().map(|d| d.abs()).sum()))
            .collect()
    };
    let (c135, c180) = (curve(135.0), curve(180.0));
    check(
        c135.len() == speeds.len() && c180.len() == speeds.len(),
        "curve length".into(),
    )?;
    let mut worst = 0.0f64;
    for ((v1, s1), (v2, s2)) in c135.iter().zip(&c180) {
        check(v1 == v2, format!("speed mismatch {v1} vs {v2}"))?;
        if *s1 == 0.0 && *s2 == 0.0 {
            continue;
        }
        worst = worst.max((s1 - s2).abs() / s1.abs().max(s2.abs()));
    }
    check(
        worst <= 1e-12,
        format!("curves differ by {worst:e} relative"),
    )?;
    Ok(format!(
        "{} speeds, worst rel diff {worst:.2e}",
        speeds.len()
    ))
}

fn criterion_4() -> Outcome {
    let config = default_config();
    let mut worst_ratio = 0.0f64;
    for v in ANGLE_SWEEP_SPEEDS {
        for down in 0..4 {
            let theta = 90.0 * down as f64;
            let r = forward_response(&config, &FlowCondition::new(v, theta).unwrap())
                .map_err(|e| e.to_string())?;
            let up = (down + 2) % 4;
            let sides = [(down + 1) % 4, (down + 3) % 4];
            let d = r.dr;
            for i in 0..4 {
                if i != down {
                    check(
                        d[down] > d[i],
                        format!("v={v}, θ={theta}: beam {i} >= downwind"),
                    )?;
                }
            }
            // "≈ 0" band for perpendicular beams; upwind is the smallest above it
            let band = 0.15 * d[down];
            for s in sides {
                check(
                    d[s] <= band,
                    format!(
                        "v={v}, θ={theta}: perpendicular beam {s} = {} > 0.15·downwind",
                        d[s]
                    ),
                )?;
                worst_ratio = worst_ratio.max(d[s] / d[down]);
            }
            check(
                d[up] > band,
                format!("v={v}, θ={theta}: upwind inside the zero band"),
            )?;
            let above: Vec<usize> = (0..4).filter(|&i| d[i] > band).collect();
            let smallest = above
                .iter()
                .copied()
                .min_by(|&a, &b| d[a].total_cmp(&d[b]))
                .unwrap();
            check(
                smallest == up && above.iter().all(|&i| i == up || d[i] > d[up]),
                format!("v={v}, θ={theta}: upwind not strictly smallest nonzero"),
            )?;
        }
    }
    Ok(format!(
        "4 speeds × 4 axes; perpendicular/downwind ≤ {worst_ratio:.4}"
    ))
}

fn criterion_5() -> Outcome {
    let config = default_config();
    let speeds = [1.0, 5.0, 20.0, 45.0];
    let angles: Vec<f64> = (0..360).map(|k| k as f64).collect();

    let mut worst = 0.0f64;
    for &v in &speeds {
        for &theta in &angles {
            let r = forward_response(&config, &FlowCondition::new(v, theta).unwrap()).unwrap();
            let est = estimate_direction(&r, &config.lobe).map_err(|e| e.to_string())?;
            worst = worst.max(angular_error(est, theta));
        }
    }
    check(
        worst <= 1e-6,
        format!("noiseless decode error {worst:e}° > 1e-6°"),
    )?;

    let estimator = JointEstimator::new(&config).map_err(|e| e.to_string())?;
    let mut joint_errors = Vec::new();
    let mut decoder_errors = Vec::new();
    for &v in &speeds {
        let peak = forward_response(&config, &FlowCondition::new(v, 0.0).unwrap())
            .unwrap()
            .dr
            .iter()
            .cloned()
            .fold(0.0, f64::max);
        let sigma = 0.01 * peak;
        let tuned = estimator
            .clone()
            .with_direction_threshold(direction_threshold(sigma));
        for seed in 0..100u64 {
            let noise = NoiseModel::gaussian(sigma, seed * 1000 + v as u64);
            let sweep = run_sweep(&config, &angles, &[v], &noise, 1).map_err(|e| e.to_string())?;
            for rec in &sweep {
                let r = rec.response(212.0);
                let est = tuned.estimate(&r).map_err(|e| e.to_string())?;
                joint_errors.push(angular_error(est.theta_hat, rec.angle_travel_deg));
                if let Ok(d) = estimate_direction(&r, &config.lobe) {
                    decoder_errors.push(angular_error(d, rec.angle_travel_deg));
                }
            }
        }
    }
    let p95 = percentile(&mut joint_errors, 95.0);
    let decoder_p95 = percentile(&mut decoder_errors, 95.0);
    check(p95 <= 2.0, format!("noisy 95th percentile {p95:.3}° > 2°"))?;
    Ok(format!(
        "noiseless max {worst:.2e}°; 1% noise p95 {p95:.3}° (joint, {} fits; bare decoder p95 {decoder_p95:.3}°)",
        joint_errors.len()
    ))
}

fn criterion_6() -> Outcome {
    let config = default_config();
    let dense =
        build_calibration(&config, &uniform_grid(MAX_SPEED, 0.01)).map_err(|e| e.to_string())?;
    let coarse =
        build_calibration(&config, &uniform_grid(MAX_SPEED, 1.0)).map_err(|e| e.to_string())?;
    let (mut worst_dense, mut worst_coarse) = (0.0f64, 0.0f64);
    for k in 0..=90 {
        let v = k as f64 * 0.5;
        for theta in [0.0, 77.0, 180.0, 301.5] {
            let r = forward_response(&config, &FlowCondition::new(v, theta).unwrap()).unwrap();
            let d = estimate_speed(&r, &dense).map_err(|e| e.to_string())?;
            let c = estimate_speed(&r, &coarse).map_err(|e| e.to_string())?;
            check(
                !d.out_of_range && !c.out_of_range,
                format!("v={v} flagged out of range"),
            )?;
            worst_dense = worst_dense.max((d.speed - v).abs());
            worst_coarse = worst_coarse.max((c.speed - v).abs());
        }
    }
    check(
        worst_dense <= 1e-6,
        format!("dense-grid error {worst_dense:e} > 1e-6 m/s"),
    )?;
    check(
        worst_coarse <= 0.05,
        format!("1 m/s-knot error {worst_coarse:e} > 0.05 m/s"),
    )?;
    for v in [45.5, 50.0, 80.0] {
        let r = forward_response(&config, &FlowCondition::new(v, 10.0).unwrap()).unwrap();
        let est = estimate_speed(&r, &coarse).map_err(|e| e.to_string())?;
        check(
            est.out_of_range && est.speed == MAX_SPEED,
            format!("v={v} not clamped/flagged: {est:?}"),
        )?;
    }
    Ok(format!(
        "dense {worst_dense:.2e} m/s; 1 m/s knots {worst_coarse:.2e} m/s; clamp at 45 flagged"
    ))
}

fn criterion_7() -> Outcome {
    let config = default_config();
    let downwind = |v: f64| {
        forward_response(
            &config,
            &FlowCondition::new(v, config.beams[0].azimuth_deg).unwrap(),
        )
        .unwrap()
        .dr[0]
    };
    let h = 1e-3;
    let slope = (downwind(SENSITIVITY_SPEED + h) - downwind(SENSITIVITY_SPEED - h)) / (2.0 * h);
    let rel = (slope - SENSITIVITY_TARGET).abs() / SENSITIVITY_TARGET;
    check(
        rel <= 0.01,
        format!("slope {slope} Ω/(m/s), rel err {rel:e} > 1%"),
    )?;
    Ok(format!(
        "slope {slope:.6} Ω/(m/s) at 20 m/s (rel err {rel:.1e}), S = {:.4}",
        config.response_scale
    ))
}

fn criterion_8() -> Outcome {
    let config = default_config();
    let clean = angle_sweep_dataset(&config, &NoiseModel::none()).map_err(|e| e.to_string())?;
    let fit = fit_lobe(&clean).map_err(|e| e.to_string())?;
    let (e1, e2) = ((fit.lobe.a1 - 0.8).abs(), (fit.lobe.a2 - 0.9).abs());
    check(
        e1 <= 1e-9 && e2 <= 1e-9,
        format!("noiseless fit ({}, {})", fit.lobe.a1, fit.lobe.a2),
    )?;

    let peak = clean.iter().flat_map(|r| r.dr_clean).fold(0.0, f64::max);
    let mut worst = 0.0f64;
    for seed in 0..100 {
        let noisy = angle_sweep_dataset(&config, &NoiseModel::gaussian(0.01 * peak, seed))
            .map_err(|e| e.to_string())?;
        let fit = fit_lobe(&noisy).map_err(|e| e.to_string())?;
        worst = worst
            .max((fit.lobe.a1 - 0.8).abs() / 0.8)
            .max((fit.lobe.a2 - 0.9).abs() / 0.9);
    }
    check(
        worst <= 0.05,
        format!("noisy fit worst rel err {worst:.4} > 5%"),
    )?;
    Ok(format!(
        "noiseless err ({e1:.1e}, {e2:.1e}); 1% noise worst rel err {:.3}%",
        100.0 * worst
    ))
}

fn criterion_9() -> Outcome {
    let config = default_config();
    let angles: Vec<f64> = (0..72).map(|k| k as f64 * 5.0).collect();
    let noise = NoiseModel::lcr(20_260_101);
    let threads = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(4)
        .max(4);
    let run = |t: usize| {
        run_sweep_with_threads(&config, &angles, &ANGLE_SWEEP_SPEEDS, &noise, 3, t)
            .map(|r| export_csv(&r))
            .map_err(|e| e.to_string())
    };
    let (a, b, c, d) = (run(1)?, run(1)?, run(threads)?, run(threads)?);
    check(
        a == b && b == c && c == d,
        "sweep CSV bytes differ between runs".into(),
    )?;
    Ok(format!(
        "{} bytes identical across 1 and {threads} threads",
        a.len()
    ))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("1 gauge/differential agreement", criterion_1),
        ("2 mechanics closed form vs trapezoid", criterion_2),
        ("3 speed-sweep sum invariance (135° vs 180°)", criterion_3),
        ("4 angle-sweep beam ordering", criterion_4),
        ("5 direction round trip", criterion_5),
        ("6 speed round trip", criterion_6),
        ("7 sensitivity anchor 0.0284 Ω/(m/s)", criterion_7),
        ("8 lobe fit recovery", criterion_8),
        ("9 sweep determinism", criterion_9),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        match run() {
            Ok(detail) => println!("PASS  criterion {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  criterion {name}: {why}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
