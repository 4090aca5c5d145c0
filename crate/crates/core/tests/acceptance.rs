//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::f64::consts::PI;
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::Rng;

use nlconv::gate::{self, GateSettings, PresetName};
use nlconv::linalg::CMatrix;
use nlconv::metrics::{self, Estimate, Metric, PhaseCorrection};
use nlconv::noise;
use nlconv::pipeline::{self, ExperimentConfig};
use nlconv::seed;
use nlconv::state::PureState;
use nlconv::tomography::{self, MleOptions, TomographyKind};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Duration);

fn check(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn state(amps: &[(usize, f64)]) -> PureState {
    let mut v = [0.0; 16];
    for &(idx, a) in amps {
        v[idx] = a;
    }
    PureState::normalized_from(nalgebra::DVector::from_iterator(16, v.map(|x| Complex64::new(x, 0.0)))).unwrap()
}

/// Hand-derived converted states, qubit 0 most significant, `H = 0`.
fn closed_form(label: &str) -> PureState {
    let cluster = [(0b0000, 1.0), (0b0011, 1.0), (0b1100, 1.0), (0b1111, -1.0)];
    let ghz = [(0b0000, 1.0), (0b1111, 1.0)];
    let two_bell = [(0b0011, 1.0), (0b1100, 1.0), (0b0101, 1.0), (0b1010, 1.0)];
    let dicke_plus = [
        (0b0000, -1.0),
        (0b1111, -1.0),
        (0b0011, 1.0),
        (0b1100, 1.0),
        (0b0101, -1.0),
        (0b1010, -1.0),
    ];
    let dicke_minus = [
        (0b0000, 1.0),
        (0b1111, 1.0),
        (0b0011, 1.0),
        (0b1100, 1.0),
        (0b0101, -1.0),
        (0b1010, -1.0),
    ];
    match label {
        l if l.starts_with("cluster") => state(&cluster),
        l if l.starts_with("ghz") => state(&ghz),
        l if l.starts_with("two-bell") => state(&two_bell),
        "dicke (theta+, theta-)" => state(&dicke_plus),
        "dicke (theta-, theta+)" => state(&dicke_minus),
        other => panic!("no closed form for {other}"),
    }
}

fn criterion1() -> Outcome {
    // success probabilities as printed in the conversion table
    let table = [
        ("cluster (0, 0)", 1.0),
        ("cluster (pi/2, pi/2)", 1.0),
        ("ghz (0, pi/4)", 0.5),
        ("ghz (pi/2, pi/4)", 0.5),
        ("ghz (pi/4, 0)", 0.5),
        ("ghz (pi/4, pi/2)", 0.5),
        ("dicke (theta+, theta-)", 0.3),
        ("dicke (theta-, theta+)", 0.3),
        ("two-bell (3pi/8, pi/8)", 0.25),
        ("two-bell (pi/8, 3pi/8)", 0.25),
    ];
    let rows = gate::conversion_table();
    check(rows.len() == table.len(), format!("{} rows", rows.len()))?;
    let mut worst_p = 0.0f64;
    let mut worst_f = 0.0f64;
    for (row, (label, p_expected)) in rows.iter().zip(table) {
        check(row.label == label, format!("row order: {} vs {label}", row.label))?;
        let (psi, p) = gate::convert_cluster(row.settings).map_err(|e| e.to_string())?;
        worst_p = worst_p.max((p - p_expected).abs());
        worst_f = worst_f.max(1.0 - psi.overlap_fidelity(&closed_form(label)));
    }
    check(worst_p <= 1e-12, format!("success off by {worst_p:e}"))?;
    check(worst_f <= 1e-10, format!("state infidelity {worst_f:e}"))?;
    Ok(format!("10 rows, max |dp| = {worst_p:.1e}, max 1-F = {worst_f:.1e}"))
}

fn criterion2() -> Outcome {
    let c4 = gate::cluster_state_c4();
    let mut worst = 0.0f64;
    for i in 0..20 {
        for j in 0..20 {
            let t1 = -PI / 2.0 + i as f64 * PI / 19.0;
            let t2 = -PI / 2.0 + j as f64 * PI / 19.0;
            let (c1, s1) = ((2.0 * t1).cos(), (2.0 * t1).sin());
            let (c2, s2) = ((2.0 * t2).cos(), (2.0 * t2).sin());
            let expected = [
                (0b0000, 0.5 * (c1 * c1 - s1 * s1)),
                (0b1111, -0.5 * (c2 * c2 - s2 * s2)),
                (0b0011, 0.5 * c1 * c2),
                (0b1100, 0.5 * c1 * c2),
                (0b0101, -0.5 * s1 * s2),
                (0b1010, -0.5 * s1 * s2),
            ];
            let g = gate::build_gate(GateSettings::new(t1, t2).unwrap());
            let full = CMatrix::identity(2, 2).kronecker(&g).kronecker(&CMatrix::identity(2, 2));
            let out = full * c4.amplitudes();
            let mut want = [0.0; 16];
            for (idx, a) in expected {
                want[idx] = a;
            }
            for (k, w) in want.iter().enumerate() {
                worst = worst.max((out[k] - Complex64::new(*w, 0.0)).norm());
            }
        }
    }
    check(worst <= 1e-12, format!("max deviation {worst:e}"))?;
    Ok(format!("400 angle pairs, max deviation {worst:.1e}"))
}

fn criterion3() -> Outcome {
    let mut lines = Vec::new();
    for (k, name) in PresetName::CONVERSIONS.into_iter().enumerate() {
        let chi_th = gate::ideal_choi(gate::preset(name).settings).unwrap();
        let data = tomography::simulate_counts(&chi_th, 1e6, 1000 + k as u64).map_err(|e| e.to_string())?;
        let report = tomography::mle_process_matrix(&data, &MleOptions::default()).map_err(|e| e.to_string())?;
        let chi = report.process().unwrap();
        let f = metrics::process_fidelity(chi, &chi_th).map_err(|e| e.to_string())?;
        let p = metrics::purity(chi);
        let monotone = report.log_likelihoods.windows(2).all(|w| w[1] >= w[0]);
        check(f >= 0.999, format!("{name}: fidelity {f}"))?;
        check(p >= 0.999, format!("{name}: purity {p}"))?;
        check(monotone, format!("{name}: log-likelihood decreased"))?;
        lines.push(format!("{name} F={f:.5} P={p:.5} it={}", report.iterations));
    }
    Ok(lines.join(", "))
}

fn criterion4() -> Outcome {
    let mut rng = seed::rng(20);
    let mut worst = 1.0f64;
    for name in PresetName::CONVERSIONS {
        let chi_th = gate::ideal_choi(gate::preset(name).settings).unwrap();
        for _ in 0..20 {
            let phases = [0; 4].map(|_| rng.random_range(-PI..PI));
            let shifted = PhaseCorrection::new(phases).unwrap().apply(&chi_th);
            let raw = metrics::process_fidelity(&shifted, &chi_th).map_err(|e| e.to_string())?;
            let (best, _) = metrics::phase_optimized_fidelity(&shifted, &chi_th).map_err(|e| e.to_string())?;
            check(best >= raw, format!("{name}: optimized {best} < raw {raw}"))?;
            worst = worst.min(best);
        }
    }
    check(worst >= 0.999999, format!("worst recovered fidelity {worst}"))?;
    Ok(format!("80 corrections over 4 presets, worst recovered F = {worst:.9}"))
}

fn criterion5() -> Outcome {
    let s = gate::preset(PresetName::Entangler).settings;
    check(
        (s.theta1 - 3.0 * PI / 8.0).abs() < 1e-15 && (s.theta2 - PI / 8.0).abs() < 1e-15,
        "entangler angles",
    )?;
    let (psi, p) = gate::apply_gate(s, &gate::entangler_input()).map_err(|e| e.to_string())?;
    // G|−−⟩ = ½(|HV⟩ + |VH⟩) by hand
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let expected = PureState::from_real(&[0.0, h, h, 0.0]).unwrap();
    let conc = metrics::concurrence(&psi.to_density().unwrap()).map_err(|e| e.to_string())?;
    let a = psi.amplitudes();
    let conc_pure = 2.0 * (a[0] * a[3] - a[1] * a[2]).norm();
    check((p - 0.5).abs() <= 1e-12, format!("success {p}"))?;
    check((conc - 1.0).abs() <= 1e-10, format!("concurrence {conc}"))?;
    check((conc_pure - 1.0).abs() <= 1e-10, format!("pure-state concurrence {conc_pure}"))?;
    let f = psi.overlap_fidelity(&expected);
    check((f - 1.0).abs() <= 1e-12, format!("overlap with hand result {f}"))?;
    Ok(format!("p = {p}, C = {conc:.12}"))
}

fn criterion6() -> Outcome {
    let (rho, p) = pipeline::discord_ideal_output().map_err(|e| e.to_string())?;
    let opts = metrics::DiscordOptions::default();
    let err = |e: nlconv::Error| e.to_string();
    let ln = metrics::log_negativity(&rho).map_err(err)?;
    let conc = metrics::concurrence(&rho).map_err(err)?;
    let d1 = metrics::discord(&rho, 0, &opts).map_err(err)?;
    let d2 = metrics::discord(&rho, 1, &opts).map_err(err)?;
    check(ln.abs() <= 1e-10, format!("log-negativity {ln}"))?;
    check(conc.abs() <= 1e-10, format!("concurrence {conc}"))?;
    check(d1.abs() <= 1e-6, format!("discord on qubit 1 {d1}"))?;
    check(d2 > 0.01, format!("discord on qubit 2 {d2}"))?;
    check((p - 7.0 / 16.0).abs() <= 1e-12, format!("success {p}"))?;
    Ok(format!("LN = {ln:.1e}, C = {conc:.1e}, D1 = {d1:.1e}, D2 = {d2:.6}, p = {p}"))
}

fn criterion7() -> Outcome {
    let template = noise::default_channel_template();
    let mut worst_cal = 0.0f64;
    for name in PresetName::CONVERSIONS {
        let target = pipeline::table2_raw_fidelity(name).unwrap();
        let chi_th = gate::ideal_choi(gate::preset(name).settings).unwrap();
        let spec = noise::calibrate_noise_to_fidelity(target, &chi_th, &template).map_err(|e| e.to_string())?;
        let f = metrics::process_fidelity(&spec.apply_to_choi(&chi_th).unwrap(), &chi_th).unwrap();
        worst_cal = worst_cal.max((f - target).abs());
    }
    check(worst_cal <= 1e-4, format!("calibration off by {worst_cal:e}"))?;

    let config = ExperimentConfig {
        mean_counts: 1e5,
        monte_carlo_samples: 100,
        seed: Some(7),
        ..ExperimentConfig::default()
    };
    let report = pipeline::run_tomography_suite(&config).map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    for name in PresetName::CONVERSIONS {
        let target = pipeline::table2_raw_fidelity(name).unwrap();
        let row = report
            .row(&format!("{name}: fidelity-raw"))
            .ok_or_else(|| format!("{name}: no raw fidelity row"))?;
        let std = row.std.unwrap_or(f64::NAN);
        check((row.value - target).abs() <= 0.02, format!("{name}: raw {} vs {target}", row.value))?;
        check(std.is_finite() && std > 0.0, format!("{name}: std {std}"))?;
        check(row.n_samples == Some(100), format!("{name}: {:?} samples", row.n_samples))?;
        parts.push(format!("{name} {:.4}±{:.4}", row.value, std));
    }
    Ok(format!("calibration within {worst_cal:.1e}; {}", parts.join(", ")))
}

fn criterion8() -> Outcome {
    let report = pipeline::run_table3(&ExperimentConfig::default()).map_err(|e| e.to_string())?;
    let value = |label: &str| report.value(label).map_err(|e| e.to_string());
    let input = value("input: cluster fidelity")?;
    check((input - 0.915).abs() <= 1e-6, format!("input cluster fidelity {input}"))?;
    let mut parts = Vec::new();
    for name in PresetName::CONVERSIONS {
        let op = value(&format!("{name}: operation"))?;
        let total = value(&format!("{name}: total"))?;
        check(op >= total, format!("{name}: operation {op} < total {total}"))?;
        check((0.80..=0.95).contains(&total), format!("{name}: total {total}"))?;
        parts.push(format!("{name} op {op:.4} total {total:.4}"));
    }
    let identity = value("cluster-identity: total (ideal channel)")?;
    check((identity - 0.915).abs() <= 1e-6, format!("identity total {identity}"))?;
    Ok(format!("{}; identity through ideal channel {identity:.9}", parts.join(", ")))
}

fn criterion9() -> Outcome {
    let chi_th = gate::ideal_choi(gate::preset(PresetName::Ghz).settings).unwrap();
    let target = pipeline::table2_raw_fidelity(PresetName::Ghz).unwrap();
    let spec = noise::calibrate_noise_to_fidelity(target, &chi_th, &noise::default_channel_template())
        .map_err(|e| e.to_string())?;
    let chi = spec.apply_to_choi(&chi_th).unwrap();
    let reference = Estimate::Process(chi_th.clone());
    let mut stds = Vec::new();
    for mean_counts in [1e3, 1e4] {
        let data = tomography::simulate_counts(&chi, mean_counts, seed::derive_seed(9, &format!("{mean_counts}")))
            .map_err(|e| e.to_string())?;
        let (_, std) = tomography::monte_carlo_metrics(
            &data,
            TomographyKind::Process,
            100,
            Metric::ProcessFidelity,
            Some(&reference),
            &MleOptions::default(),
            4,
        )
        .map_err(|e| e.to_string())?;
        stds.push(std);
    }
    let ratio = stds[0] / stds[1];
    let ideal = 10f64.sqrt();
    check(
        (ideal * 0.7..=ideal * 1.3).contains(&ratio),
        format!("std ratio {ratio} outside sqrt(10) ± 30%"),
    )?;
    Ok(format!("std {:.5} -> {:.5}, ratio {ratio:.3} (sqrt 10 = {ideal:.3})", stds[0], stds[1]))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("table I exactness", criterion1, Duration::from_secs(1)),
        ("cluster expansion regression", criterion2, Duration::from_secs(5)),
        ("tomography round trip", criterion3, Duration::from_secs(120)),
        ("phase-optimization recovery", criterion4, Duration::from_secs(60)),
        ("entangler demo", criterion5, Duration::from_secs(1)),
        ("discord demo", criterion6, Duration::from_secs(1)),
        ("noise-calibration pipeline", criterion7, Duration::from_secs(600)),
        ("table III consistency", criterion8, Duration::from_secs(120)),
        ("statistical scaling", criterion9, Duration::from_secs(300)),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (k, (name, run, limit)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|p| {
                let msg = p
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panic".into());
                Err(format!("panicked: {msg}"))
            })
            .and_then(|detail| {
                let elapsed = start.elapsed();
                if elapsed <= limit {
                    Ok(detail)
                } else {
                    Err(format!("{detail}; runtime {elapsed:.1?} over {limit:?}"))
                }
            });
        let elapsed = start.elapsed();
        match outcome {
            Ok(detail) => println!("PASS criterion {} ({name}): {detail} [{elapsed:.2?}]", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {detail} [{elapsed:.2?}]", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
