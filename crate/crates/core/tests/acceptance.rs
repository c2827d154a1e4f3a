//! Acceptance criteria 1 to 10. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use stripe_mirror::analysis::mean_height_deviation_away_from_impacts;
use stripe_mirror::io::series_to_csv;
use stripe_mirror::*;

// Independent oracle constants.
const CS_MASS: f64 = 2.2069e-25;
const BOHR: f64 = 9.2740e-24;
const KB: f64 = 1.3807e-23;
const G: f64 = 9.81;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn cs() -> AtomSpecies {
    AtomSpecies::cesium()
}

fn c1_max_drop() -> Outcome {
    let h = max_reflect_height(&cs(), 0.1);
    let oracle = BOHR * 0.1 / (CS_MASS * G);
    let passed = (0.40..=0.45).contains(&h) && (h / oracle - 1.0).abs() < 1e-12 && (h - 0.428).abs() < 5e-4;
    outcome(passed, format!("h_max(Cs, 0.1 T) = {h:.5} m, range [0.40, 0.45] m"))
}

fn c2_interaction_time() -> Outcome {
    let start = Instant::now();
    let sp = cs();
    let spec = MirrorSpec::with_surface_field(1e-6, 1e-6 / 3.0, 30e-9, 0.2).unwrap();
    let model = PotentialModel::two_term(spec).unwrap();
    let h = 0.02;
    let fall = (2.0 * h / G).sqrt();
    let eps = 0.01;
    let result = propagate(&sp, &model, State::at_rest(0.0, h), 1.2 * fall, 1e-10)
        .and_then(|traj| interaction_time(&traj, &sp, &model, eps));
    let elapsed = start.elapsed().as_secs_f64();
    match result {
        Ok(t) => outcome(
            (1e-6..=10e-6).contains(&t) && elapsed < 1.0,
            format!("interaction time {:.3} us at eps = {eps}, range [1, 10] us, {elapsed:.3} s", t * 1e6),
        ),
        Err(e) => outcome(false, format!("error: {e}")),
    }
}

fn c3_turning_points() -> Outcome {
    let sp = cs();
    let k = 2.0 * PI / 1e-6;
    let spec = MirrorSpec::with_surface_field(1e-6, 1e-6 / 3.0, 30e-9, 0.1).unwrap();
    let model = PotentialModel::two_term(spec).unwrap();
    let mut passed = true;
    let mut parts = Vec::new();
    for (h, target) in [(2e-3, 0.8e-6), (20e-3, 0.4e-6)] {
        let formula = turning_point(&sp, 0.1, k, h).unwrap();
        let oracle = (BOHR * 0.1 / (CS_MASS * G * h)).ln() / k;
        let fall = (2.0 * h / G).sqrt();
        let sim = propagate(&sp, &model, State::at_rest(0.0, h), 1.2 * fall, 1e-10)
            .ok()
            .and_then(|t| t.bounces.first().map(|b| b.y_turn));
        let diff = sim.map_or(f64::INFINITY, |y| (y - formula).abs());
        let rel_quote = (formula / target - 1.0).abs();
        passed &= (formula - oracle).abs() < 1e-15 && rel_quote < 0.30 && diff < 1e-9;
        parts.push(format!(
            "{:.0} mm: formula {:.4} um ({:.0}% from target {:.1} um), |sim - formula| = {diff:.2e} m",
            h * 1e3,
            formula * 1e6,
            rel_quote * 100.0,
            target * 1e6
        ));
    }
    outcome(passed, parts.join("; "))
}

fn c4_harmonic_ratio() -> Outcome {
    let spec = MirrorSpec::with_surface_field(1e-6, 0.5e-6, 30e-9, 0.1).unwrap();
    let r20 = harmonic_ratio_at_turning(&spec, &cs(), 20e-3).unwrap();
    let r2 = harmonic_ratio_at_turning(&spec, &cs(), 2e-3).unwrap();
    // Independent evaluation at 20 mm.
    let kb = 2.0 * PI / 1e-6 * 30e-9;
    let b3_over_b1 = (1.0 - (-3.0 * kb).exp()) / (3.0 * (1.0 - (-kb).exp()));
    let y_t = (BOHR * 0.1 / (CS_MASS * G * 20e-3)).ln() / (2.0 * PI / 1e-6);
    let oracle = b3_over_b1 * (-2.0 * 2.0 * PI / 1e-6 * y_t).exp();
    let passed = (1e-4..=1e-2).contains(&r20) && (r20 / oracle - 1.0).abs() < 1e-9;
    outcome(
        passed,
        format!(
            "20 mm: {r20:.3e} (target 1e-3, within one decade); 2 mm: {r2:.3e} (target 1e-6, agreement not required)"
        ),
    )
}

fn c5_duty_cycle() -> Outcome {
    let d1 = duty_factor(1, 1.0 / 3.0);
    let raw3 = (3.0 * PI / 3.0).sin();
    let d3 = duty_factor(3, 1.0 / 3.0);
    let one_sig_fig = (d1 * 10.0).round() / 10.0;
    let passed = (d1 - 0.8660).abs() < 5e-5 && one_sig_fig == 0.9 && raw3.abs() < 1e-12 && d3 == 0.0;
    outcome(
        passed,
        format!("sin(pi/3) = {d1:.4} (rounds to {one_sig_fig}), |sin(3pi/3)| = {:.1e}, B3 duty factor = {d3}", raw3.abs()),
    )
}

fn c6_field_oracle() -> Outcome {
    let start = Instant::now();
    let spec = MirrorSpec::with_surface_field(3e-6, 1e-6, 30e-9, 0.2).unwrap();
    let finite = spec.with_stripes(StripeCount::Finite(2001));
    let a = spec.period;
    let mut worst: f64 = 0.0;
    let mut worst_y = 0.0;
    let n = 200;
    for i in 0..=n {
        let y = a / 4.0 + (3.0 * a - a / 4.0) * i as f64 / n as f64;
        let exact = field_exact(&finite, 0.0, y).unwrap().magnitude();
        let expansion = spec.field_full_expansion(0.0, y).unwrap();
        let rel = (exact - expansion).abs() / exact;
        if rel > worst {
            worst = rel;
            worst_y = y;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    outcome(
        worst < 1e-3 && elapsed < 10.0,
        format!(
            "max relative error {worst:.3e} at y = {:.3} a over [a/4, 3a], tolerance 1e-3, {elapsed:.2} s",
            worst_y / a
        ),
    )
}

fn c7_dynamics_oracle() -> Outcome {
    let sp = cs();
    let (u0, k) = (sp.moment * 0.2, 2.0 * PI / 1e-6);
    let model = PotentialModel::pure_exponential(u0, k).unwrap();
    let v = 0.6;
    let e = 0.5 * CS_MASS * v * v;
    let y_t = (u0 / e).ln() / k;
    let y0 = y_t + 10.0 / k;
    let z = (0.5 * k * (y0 - y_t)).exp();
    let t_turn = 2.0 / (k * v) * (z + (z * z - 1.0).sqrt()).ln();
    let oracle = |t: f64| {
        let arg = 0.5 * k * v * (t - t_turn);
        (y_t + 2.0 / k * arg.cosh().ln(), v * arg.tanh())
    };
    let (ys, vys) = oracle(0.0);
    let start = State {
        x: 0.0,
        y: ys,
        vx: 0.0,
        vy: vys,
        t: 0.0,
    };
    let opts = PropagateOptions {
        tol: 1e-10,
        gravity: 0.0,
        ..Default::default()
    };
    let traj = propagate_with(&sp, &model, start, 2.0 * t_turn, &opts).unwrap();
    let mut pos_err: f64 = 0.0;
    for i in 0..=1000 {
        let t = (2.0 * t_turn) * (i as f64 / 1000.0);
        let s = traj.state_at(t).unwrap();
        pos_err = pos_err.max((s.y - oracle(t).0).abs());
    }

    let spec = MirrorSpec::with_surface_field(3e-6, 1e-6, 30e-9, 0.2).unwrap();
    let two_term = PotentialModel::two_term(spec).unwrap();
    let h = 3e-3;
    let fall = (2.0 * h / G).sqrt();
    let drop = propagate(&sp, &two_term, State::at_rest(0.0, h), 2.0 * fall, 1e-10).unwrap();
    let energies = drop.energies(&sp, &two_term).unwrap();
    let drift = energies
        .iter()
        .map(|e| (e / energies[0] - 1.0).abs())
        .fold(0.0, f64::max);
    let rose = drop.bounces.len() == 1 && drop.final_state().y > 0.99 * h;
    outcome(
        pos_err < 1e-9 && drift < 1e-9 && rose,
        format!("max |y - analytic| = {pos_err:.2e} m (tol 1e-9), energy drift {drift:.2e} (tol 1e-9) over drop, bounce, rise"),
    )
}

fn c8_specularity() -> Outcome {
    let start = Instant::now();
    let sp = cs();
    let spec = MirrorSpec::with_surface_field(3e-6, 1e-6, 30e-9, 0.2)
        .unwrap()
        .with_bias(1e-5);
    let model = PotentialModel::two_term(spec).unwrap();
    let h0 = 3e-3;
    let fall = (2.0 * h0 / G).sqrt();
    let apexes = [2.0 * fall, 4.0 * fall];
    let mut times = uniform_times(0.15, 5e-4);
    times.extend(apexes);
    times.sort_by(f64::total_cmp);
    let cloud = EnsembleSpec {
        n_atoms: 10_000,
        temperature: 11e-6,
        release_height: h0,
        sigma_x: 10e-6,
        sigma_y: 10e-6,
        mean_velocity: (0.0, 0.0),
        seed: 2024,
        snapshot_times: times,
    };
    let sigma_v = (KB * 11e-6 / CS_MASS).sqrt();

    let analyse = |kick: Option<f64>| -> Result<(CloudTimeSeries, ExpansionFit, SpecularityReport), String> {
        let opts = EnsembleOptions {
            velocity_kick: kick,
            ..Default::default()
        };
        let run = run_ensemble(&cloud, &sp, &model, &opts).map_err(|e| e.to_string())?;
        let series = run.series;
        let fit = fit_expansion(&series, (0.0, 15e-3)).map_err(|e| e.to_string())?;
        let bounce = *detect_bounces(&series).first().ok_or("no bounce detected")?;
        let apex = detect_apexes(&series)
            .into_iter()
            .find(|&t| t > bounce)
            .ok_or("no apex detected")?;
        let report = specularity_test(&series, &fit, (bounce + 5e-3, apex), &Default::default())
            .map_err(|e| e.to_string())?;
        Ok((series, fit, report))
    };

    let (clean, kicked) = match (analyse(None), analyse(Some(2.0))) {
        (Ok(c), Ok(k)) => (c, k),
        (Err(e), _) | (_, Err(e)) => return outcome(false, format!("error: {e}")),
    };
    let (series, fit, report) = clean;
    let slope_err = (fit.slope / sigma_v - 1.0).abs();
    let apex_times: Vec<f64> = detect_apexes(&series).into_iter().filter(|&t| t < 0.15).collect();
    let apex_dev = apexes
        .iter()
        .map(|&t| {
            let s = series.snapshots.iter().find(|s| s.t == t).unwrap();
            (s.mean_y - ideal_bounce_trajectory(h0, t)).abs()
        })
        .fold(0.0, f64::max);
    let curve_dev = mean_height_deviation_away_from_impacts(&series, h0, 5e-3);
    let elapsed = start.elapsed().as_secs_f64();
    let passed = slope_err < 0.10
        && report.verdict == Verdict::Specular
        && kicked.2.verdict == Verdict::NonSpecular
        && apex_times.len() >= 2
        && apex_dev < 50e-6
        && elapsed < 60.0;
    outcome(
        passed,
        format!(
            "slope {:.4} m/s vs sigma_v {sigma_v:.4} ({:.1}%); verdict {} ({:.2} SE); kicked verdict {} ({:.1} SE); \
             {} apexes before 150 ms; mean height at apexes within {:.2} um of hard wall \
             (whole curve 5 ms from impacts: {:.0} um); {elapsed:.1} s",
            fit.slope,
            slope_err * 100.0,
            report.verdict,
            report.statistic,
            kicked.2.verdict,
            kicked.2.statistic,
            apex_times.len(),
            apex_dev * 1e6,
            curve_dev * 1e6
        ),
    )
}

fn c9_determinism() -> Outcome {
    let sp = cs();
    let spec = MirrorSpec::with_surface_field(3e-6, 1e-6, 30e-9, 0.2)
        .unwrap()
        .with_bias(1e-5);
    let model = PotentialModel::two_term(spec).unwrap();
    let cloud = EnsembleSpec {
        n_atoms: 500,
        temperature: 11e-6,
        release_height: 3e-3,
        sigma_x: 0.2e-3,
        sigma_y: 0.2e-3,
        mean_velocity: (0.0, 0.0),
        seed: 99,
        snapshot_times: uniform_times(0.06, 1e-3),
    };
    let csv = |threads: usize| {
        let opts = EnsembleOptions {
            threads: Some(threads),
            ..Default::default()
        };
        run_ensemble(&cloud, &sp, &model, &opts).map(|r| series_to_csv(&r.series))
    };
    match (csv(1), csv(4), csv(8)) {
        (Ok(a), Ok(b), Ok(c)) => outcome(
            a == b && b == c,
            format!("{} byte CSV identical for 1, 4 and 8 threads: {}", a.len(), a == b && b == c),
        ),
        _ => outcome(false, "ensemble run failed".into()),
    }
}

fn c10_reflection_dichotomy() -> Outcome {
    let sp = cs();
    let b0 = 0.01;
    let model = PotentialModel::pure_exponential(sp.moment * b0, 2.0 * PI / 3e-6).unwrap();
    let h_max = BOHR * b0 / (CS_MASS * G);
    let factors = [0.5, 0.9, 0.99, 0.9999, 1.0 - 1e-6, 1.0 + 1e-6, 1.0001, 1.01, 1.1, 1.5];
    let mut wrong = Vec::new();
    let mut table = Vec::new();
    for f in factors {
        let h = h_max * f;
        let cloud = EnsembleSpec {
            n_atoms: 1,
            temperature: 0.0,
            release_height: h,
            sigma_x: 0.0,
            sigma_y: 0.0,
            mean_velocity: (0.0, 0.0),
            seed: 1,
            snapshot_times: vec![0.0, 1.5 * (2.0 * h / G).sqrt()],
        };
        let opts = EnsembleOptions {
            tol: 1e-10,
            ..Default::default()
        };
        let survival = run_ensemble(&cloud, &sp, &model, &opts)
            .map_err(|e| e.to_string())
            .and_then(|r| r.series.survival_fraction(cloud.snapshot_times[1]).map_err(|e| e.to_string()));
        let expected = if f < 1.0 { 1.0 } else { 0.0 };
        match survival {
            Ok(s) => {
                if s != expected {
                    wrong.push(f);
                }
                table.push(format!("{f}:{s}"));
            }
            Err(e) => return outcome(false, format!("error at h/h_max = {f}: {e}")),
        }
    }
    outcome(
        wrong.is_empty(),
        format!("survival by h/h_max [{}], transition resolved at 1 -/+ 1e-6", table.join(" ")),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("max drop height", c1_max_drop),
        ("interaction time", c2_interaction_time),
        ("turning points", c3_turning_points),
        ("harmonic ratio", c4_harmonic_ratio),
        ("duty cycle", c5_duty_cycle),
        ("field oracle equivalence", c6_field_oracle),
        ("dynamics oracle equivalence", c7_dynamics_oracle),
        ("specularity pipeline", c8_specularity),
        ("determinism", c9_determinism),
        ("reflection dichotomy", c10_reflection_dichotomy),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.passed {
            failures += 1;
        }
        println!(
            "criterion {:>2} {:<28} {} | {}",
            i + 1,
            name,
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
