//! Acceptance suite: one PASS/FAIL line per criterion, at the stated
//! tolerances. Run with `cargo test --test acceptance -- --nocapture` to see
//! the report.

use std::f64::consts::{PI, SQRT_2, TAU};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use chip_contextuality::analysis::{
    classical_bound_enumeration, deterministic_assignments, epsilon, ContextProbabilities,
    InequalityReport,
};
use chip_contextuality::calibration::CALIBRATION_TOL;
use chip_contextuality::chip::{
    calibrate_measurement, coupler_count, ideal_measurement, measurement_skeleton,
    prepare_state_circuit, prepare_state_direct, Device, DeviceConfig, MeasurementConfig,
    PreparationConfig,
};
use chip_contextuality::galton::galton_s_exact;
use chip_contextuality::montecarlo::{estimate_s, sample_counts, substream_seed, CountRecord};
use chip_contextuality::optics::ModeVector;
use chip_contextuality::pipeline::{run_sweep, summary_report, SweepSpec};
use chip_contextuality::Context;

struct Outcome {
    id: usize,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn ideal_s(phi: f64) -> f64 {
    let sets = table_sets(&Device::Ideal, phi);
    InequalityReport::analytic(&sets).unwrap().s
}

fn table_sets(device: &Device, phi: f64) -> Vec<ContextProbabilities> {
    let table = device.probabilities(phi).unwrap();
    Context::ALL
        .iter()
        .zip(table)
        .map(|(c, p)| ContextProbabilities::new(*c, p).unwrap())
        .collect()
}

fn random_simplex(rng: &mut ChaCha8Rng) -> [f64; 4] {
    let w: [f64; 4] = std::array::from_fn(|_| -(1.0 - rng.random::<f64>()).ln());
    let s: f64 = w.iter().sum();
    w.map(|x| x / s)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let rows = run_sweep(&SweepSpec::analytic(0.0, TAU, 201)).unwrap().rows;
    let elapsed = start.elapsed();
    let worst = rows
        .iter()
        .map(|r| (r.s - SQRT_2 * (1.0 + r.phi.cos())).abs())
        .fold(0.0, f64::max);
    let max = rows.iter().map(|r| r.s).fold(f64::NEG_INFINITY, f64::max);
    let argmax = rows.iter().find(|r| r.s == max).unwrap().phi;
    let pass = rows.len() == 201
        && worst < 1e-9
        && (max - 2.0 * SQRT_2).abs() < 1e-9
        && (argmax == 0.0 || argmax == TAU)
        && (rows[0].s - 2.0 * SQRT_2).abs() < 1e-9
        && elapsed < Duration::from_secs(1);
    Outcome {
        id: 1,
        name: "ideal curve matches sqrt2(1+cos phi)",
        pass,
        detail: format!(
            "201 points, max |dS| = {worst:.1e}, max S = {max:.12} at phi = {argmax}, {elapsed:.2?}"
        ),
    }
}

fn criterion_2() -> Outcome {
    let r = summary_report(2.69, 2.53, 0.012).unwrap();
    let reported = 14.0;
    let pass = (r.significance - 13.333).abs() < 0.01 && (r.significance - reported).abs() <= 1.0;
    Outcome {
        id: 2,
        name: "published summary significance",
        pass,
        detail: format!(
            "(2.69 - 2.53)/0.012 = {:.3} sigma vs reported {reported} sigma; note: the gap of \
             {:.2} sigma comes from rounding in the published figures, not tuned away",
            r.significance,
            reported - r.significance
        ),
    }
}

fn criterion_3() -> Outcome {
    let f = |phi: f64| ideal_s(phi) - 2.0;
    let (mut lo, mut hi) = (0.5, 1.5);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let boundary = 0.5 * (lo + hi);
    let expected = (SQRT_2 - 1.0).acos();
    // Region check on a grid, staying clear of the boundary itself.
    let mut region_ok = true;
    for k in 0..=2000 {
        let phi = -PI + TAU * k as f64 / 2000.0;
        if (phi.abs() - expected).abs() < 1e-6 {
            continue;
        }
        region_ok &= (ideal_s(phi) > 2.0) == (phi.abs() < expected);
    }
    let pass = (boundary - expected).abs() < 1e-9 && region_ok;
    Outcome {
        id: 3,
        name: "violation region |phi| < arccos(sqrt2 - 1)",
        pass,
        detail: format!(
            "bisected boundary {boundary:.12} vs {expected:.12} (|d| = {:.1e}), grid region check {}",
            (boundary - expected).abs(),
            if region_ok { "ok" } else { "failed" }
        ),
    }
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let values: Vec<i32> = deterministic_assignments().map(|a| a.chsh_value()).collect();
    let enum_ok = classical_bound_enumeration() == 2.0
        && values.len() == 16
        && values.iter().all(|v| *v == 2 || *v == -2);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut galton_ok = true;
    let mut max_s = f64::NEG_INFINITY;
    for _ in 0..10_000 {
        let prep = random_simplex(&mut rng);
        let zz = ContextProbabilities::new(Context::ZZ, prep).unwrap().expectation();
        let s = galton_s_exact(&prep, 0.5).unwrap();
        galton_ok &= s == -zz && s <= 1.0;
        max_s = max_s.max(s);
    }
    let elapsed = start.elapsed();
    Outcome {
        id: 4,
        name: "classical bound: enumeration and Galton board",
        pass: enum_ok && galton_ok && elapsed < Duration::from_secs(1),
        detail: format!(
            "enumeration max = {}, 16 values in {{-2, 2}}: {enum_ok}; Galton S == -<ZZ> exactly for 1e4 \
             preparations: {galton_ok}, max S = {max_s:.6}, {elapsed:.2?}",
            classical_bound_enumeration()
        ),
    }
}

fn criterion_5() -> Outcome {
    let mut ideal_worst = 0.0_f64;
    for k in 0..=400 {
        let phi = TAU * k as f64 / 400.0;
        ideal_worst = ideal_worst.max(epsilon(&table_sets(&Device::Ideal, phi)).unwrap());
    }
    let mut perturbed_ok = true;
    let mut min_eps = f64::INFINITY;
    let mut cases = 0;
    for ctx in Context::ALL {
        for k in 0..coupler_count(ctx) {
            for dt in [0.1, -0.1] {
                let mut ts = vec![0.5; coupler_count(ctx)];
                ts[k] += dt;
                let device = Device::Imperfect(DeviceConfig {
                    measurements: vec![MeasurementConfig::physical(ctx).with_coupler_ts(ts)],
                    ..DeviceConfig::default()
                });
                for phi in [0.0, 0.022, 1.0, 2.5] {
                    let r = InequalityReport::analytic(&table_sets(&device, phi)).unwrap();
                    perturbed_ok &= r.epsilon > 0.0 && r.bound > 2.0;
                    min_eps = min_eps.min(r.epsilon);
                    cases += 1;
                }
            }
        }
    }
    let pass = ideal_worst <= 1e-12 && perturbed_ok;
    Outcome {
        id: 5,
        name: "epsilon: zero when ideal, positive under coupler error",
        pass,
        detail: format!(
            "ideal max eps = {ideal_worst:.1e} over 401 phi; {cases} single-coupler dT = ±0.1 cases, \
             min eps = {min_eps:.4}, all bounds > 2: {perturbed_ok}"
        ),
    }
}

fn ideal_records(table: &[[f64; 4]; 4], n: u64, seed: u64) -> Vec<CountRecord> {
    Context::ALL
        .iter()
        .zip(table)
        .map(|(c, p)| sample_counts(*c, p, n, substream_seed(seed, c.index() as u64)).unwrap())
        .collect()
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let table = Device::Ideal.probabilities(0.0).unwrap();
    let runs = 1000;
    let inside = (0..runs)
        .filter(|seed| {
            let est = estimate_s(&ideal_records(&table, 10_000, *seed)).unwrap();
            (est.s - 2.0 * SQRT_2).abs() < 5.0 * est.sigma_s
        })
        .count();
    let sigmas: Vec<f64> = [1_000, 4_000, 16_000, 64_000]
        .iter()
        .map(|n| estimate_s(&ideal_records(&table, *n, 6)).unwrap().sigma_s)
        .collect();
    let ratios: Vec<f64> = sigmas.windows(2).map(|w| w[1] / w[0]).collect();
    let scaling_ok = ratios.iter().all(|r| (r - 0.5).abs() <= 0.05);
    let elapsed = start.elapsed();
    Outcome {
        id: 6,
        name: "statistical honesty of S and sigma_S",
        pass: inside * 100 >= 99 * runs as usize && scaling_ok && elapsed < Duration::from_secs(60),
        detail: format!(
            "{inside}/{runs} runs within 5 sigma at N = 1e4; sigma_S ratios under 4x N: {:?}, {elapsed:.2?}",
            ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>()
        ),
    }
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let states: Vec<ModeVector> = (0..100).map(|_| ModeVector::random(&mut rng)).collect();
    let mut meas_worst = 0.0_f64;
    for ctx in Context::ALL {
        let ts = vec![0.5; coupler_count(ctx)];
        let cal = calibrate_measurement(ctx, &ts).unwrap();
        let physical = measurement_skeleton(ctx, &ts).unwrap().assemble(&cal.phases).unwrap();
        let ideal = ideal_measurement(ctx);
        for v in &states {
            let (a, b) = (physical.apply(v).probabilities(), ideal.apply(v).probabilities());
            for (x, y) in a.iter().zip(b) {
                meas_worst = meas_worst.max((x - y).abs());
            }
        }
    }
    let mut prep_worst = 0.0_f64;
    for k in 0..100 {
        let phi = TAU * k as f64 / 100.0;
        let v = prepare_state_circuit(&PreparationConfig::with_phi(phi)).unwrap();
        prep_worst = prep_worst.max(v.distance_up_to_phase(&prepare_state_direct(phi)));
    }
    let elapsed = start.elapsed();
    Outcome {
        id: 7,
        name: "calibrated circuits reproduce the ideal chip",
        pass: meas_worst < CALIBRATION_TOL && prep_worst < 1e-9 && elapsed < Duration::from_secs(10),
        detail: format!(
            "measurement max |dp| = {meas_worst:.1e} on 100 random states; preparation max distance \
             = {prep_worst:.1e} over 100 phi; {elapsed:.2?}"
        ),
    }
}

fn run_cli(args: &[&str]) {
    let status = Command::new(env!("CARGO_BIN_EXE_ctxbench"))
        .args(args)
        .stderr(std::process::Stdio::null())
        .status()
        .unwrap();
    assert!(status.success(), "ctxbench {args:?} failed: {status}");
}

fn criterion_8() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("device.json");
    std::fs::write(
        &config,
        r#"{"measurements": [{"context": "XZ", "mode": "physical", "coupler_Ts": [0.6, 0.5]}]}"#,
    )
    .unwrap();
    let produce = |tag: &str| -> Vec<Vec<u8>> {
        let p = |name: &str| dir.path().join(format!("{tag}_{name}"));
        let s = |path: &Path| path.to_str().unwrap().to_owned();
        let (sweep, counts, fig) = (p("sweep.csv"), p("counts.csv"), p("figure3.csv"));
        run_cli(&[
            "sweep", "--steps", "11", "--shots", "5000", "--seed", "42", "--device", "imperfect",
            "--config", &s(&config), "--out", &s(&sweep), "--counts-out", &s(&counts), "--bootstrap", "50",
        ]);
        run_cli(&["sweep", "--steps", "11", "--config", &s(&config), "--emit-figure3", "--out", &s(&fig)]);
        [sweep, counts, fig].iter().map(|f| std::fs::read(f).unwrap()).collect()
    };
    let first = produce("a");
    let second = produce("b");
    let identical = first == second && first.iter().all(|f| !f.is_empty());
    Outcome {
        id: 8,
        name: "byte-identical CSV output for identical seeds and configs",
        pass: identical,
        detail: format!(
            "sweep/counts/figure3 sizes {:?} bytes, identical across two runs: {identical}",
            first.iter().map(Vec::len).collect::<Vec<_>>()
        ),
    }
}

#[test]
fn acceptance() {
    let outcomes = [
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(),
    ];
    for o in &outcomes {
        println!(
            "{} [{}] {}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.id,
            o.name,
            o.detail
        );
    }
    let failed: Vec<usize> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
