//! Library results checked against independent hand computations.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use nlconv::gate::{self, GateSettings, PresetName};
use nlconv::linalg::{max_abs_diff, CMatrix};
use nlconv::metrics::{self, DiscordOptions};
use nlconv::noise;
use nlconv::pipeline;
use nlconv::state::{self, DensityMatrix, PureState};
use nlconv::tomography;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `|b⟩` for a bit string, qubit 0 most significant.
fn index_of(bits: &str) -> usize {
    bits.chars().fold(0, |acc, ch| 2 * acc + usize::from(ch == 'V'))
}

#[test]
fn cluster_conversion_matches_expansion_on_grid() {
    let c4 = gate::cluster_state_c4();
    for i in 0..20 {
        for j in 0..20 {
            let t1 = i as f64 * PI / 19.0 - PI / 2.0;
            let t2 = j as f64 * PI / 23.0;
            let a1 = (2.0 * t1).cos().powi(2);
            let b1 = (2.0 * t1).sin().powi(2);
            let a2 = (2.0 * t2).cos().powi(2);
            let b2 = (2.0 * t2).sin().powi(2);
            let mu1 = (2.0 * t1).cos() * (2.0 * t2).cos();
            let mu2 = (2.0 * t1).sin() * (2.0 * t2).sin();
            let mut expected = [0.0; 16];
            expected[index_of("HHHH")] = 0.5 * (a1 - b1);
            expected[index_of("VVVV")] = -0.5 * (a2 - b2);
            expected[index_of("HHVV")] = 0.5 * mu1;
            expected[index_of("VVHH")] = 0.5 * mu1;
            expected[index_of("HVHV")] = -0.5 * mu2;
            expected[index_of("VHVH")] = -0.5 * mu2;

            let g = gate::build_gate(GateSettings::new(t1, t2).unwrap());
            let full = CMatrix::identity(2, 2).kronecker(&g).kronecker(&CMatrix::identity(2, 2));
            let out = full * c4.amplitudes();
            for (k, e) in expected.iter().enumerate() {
                assert!((out[k] - c(*e)).norm() < 1e-12, "({t1}, {t2}) index {k}");
            }
        }
    }
}

#[test]
fn dicke_angles_satisfy_defining_relations() {
    let (tp, tm) = gate::dicke_angles();
    // (α₁−β₁)² = cos²(4θ₊) must equal the squared cross amplitudes for the
    // six-term output to be balanced
    let k = gate::gate_coefficients(GateSettings::new(tp, tm).unwrap());
    let weights = [k.hh(), k.vv(), k.mu1, k.mu1, k.mu2, k.mu2].map(|x| x * x / 4.0);
    assert!((weights.iter().sum::<f64>() - 0.3).abs() < 1e-12);
    for w in weights {
        assert!((w - 0.05).abs() < 1e-12, "{w}");
    }
}

/// Partial trace by explicit index loops.
fn brute_partial_trace(m: &CMatrix, n: usize, keep: &[usize]) -> CMatrix {
    let dk = 1 << keep.len();
    let traced: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
    let bit = |idx: usize, q: usize| (idx >> (n - 1 - q)) & 1;
    let mut out = CMatrix::zeros(dk, dk);
    for row in 0..(1 << n) {
        for col in 0..(1 << n) {
            if traced.iter().any(|&q| bit(row, q) != bit(col, q)) {
                continue;
            }
            let r = keep.iter().fold(0, |acc, &q| 2 * acc + bit(row, q));
            let s = keep.iter().fold(0, |acc, &q| 2 * acc + bit(col, q));
            out[(r, s)] += m[(row, col)];
        }
    }
    out
}

/// Deterministic full-rank four-qubit density matrix.
fn test_state(n: usize) -> DensityMatrix {
    let d = 1 << n;
    let a = CMatrix::from_fn(d, d, |i, j| {
        let x = (i * 7 + j * 13) as f64;
        Complex64::new((0.37 * x).sin(), (0.11 * x + 0.5).cos())
    });
    DensityMatrix::from_unnormalized(&a * a.adjoint()).unwrap().0
}

#[test]
fn partial_trace_matches_index_loops() {
    let rho = test_state(4);
    for keep in [vec![0], vec![3], vec![1, 2], vec![0, 3], vec![2, 0], vec![0, 1, 3]] {
        let fast = rho.partial_trace(&keep).unwrap();
        // kept qubits come out in ascending order
        let mut sorted = keep.clone();
        sorted.sort();
        let slow = brute_partial_trace(rho.matrix(), 4, &sorted);
        assert!(max_abs_diff(fast.matrix(), &slow) < 1e-14, "{keep:?}");
    }
}

#[test]
fn choi_channel_equals_operator_conjugation() {
    let rho = test_state(4);
    for name in PresetName::ALL {
        let s = gate::preset(name).settings;
        let g = gate::build_gate(s);
        let chi = gate::ideal_choi(s).unwrap();
        for (t0, t1) in [(1, 2), (0, 3), (2, 0), (3, 1)] {
            // the operator on (t0, t1), written out over the full register
            let bit = |idx: usize, q: usize| (idx >> (3 - q)) & 1;
            let full = CMatrix::from_fn(16, 16, |row, col| {
                let rest_equal = (0..4)
                    .filter(|&q| q != t0 && q != t1)
                    .all(|q| bit(row, q) == bit(col, q));
                if !rest_equal {
                    return c(0.0);
                }
                g[(2 * bit(row, t0) + bit(row, t1), 2 * bit(col, t0) + bit(col, t1))]
            });
            let raw = &full * rho.matrix() * full.adjoint();
            let p = raw.trace().re;
            let (out, success) = state::embed_two_qubit_channel(&rho, &chi, (t0, t1)).unwrap();
            assert!((success - p).abs() < 1e-12, "{name} {t0}{t1}");
            assert!(max_abs_diff(out.matrix(), &(raw / c(p))) < 1e-12, "{name} {t0}{t1}");
        }
    }
}

/// Werner state `w|Ψ⁺⟩⟨Ψ⁺| + (1−w)𝟙/4`.
fn werner(w: f64) -> DensityMatrix {
    let psi = gate::target_state(gate::TargetKind::PsiPlus);
    let m = psi.to_density().unwrap().matrix() * c(w) + CMatrix::identity(4, 4) * c((1.0 - w) / 4.0);
    DensityMatrix::new(m).unwrap()
}

#[test]
fn werner_state_entanglement_closed_forms() {
    for k in 0..=20 {
        let w = k as f64 / 20.0;
        let rho = werner(w);
        let conc = ((3.0 * w - 1.0) / 2.0).max(0.0);
        let ln = if w > 1.0 / 3.0 { ((1.0 + 3.0 * w) / 2.0).log2() } else { 0.0 };
        let purity = (1.0 + 3.0 * w * w) / 4.0;
        assert!((metrics::concurrence(&rho).unwrap() - conc).abs() < 1e-10, "{w}");
        assert!((metrics::log_negativity(&rho).unwrap() - ln).abs() < 1e-10, "{w}");
        assert!((metrics::purity(&rho) - purity).abs() < 1e-12, "{w}");
    }
}

#[test]
fn pure_state_concurrence_closed_form() {
    for k in 0..12 {
        let t = k as f64 * 0.3;
        let amps = [t.cos() * 0.6, t.sin() * 0.8, 0.6 * t.sin(), -0.8 * t.cos()];
        let psi = PureState::normalized_from(nalgebra::DVector::from_iterator(4, amps.map(c))).unwrap();
        let a = psi.amplitudes();
        let expected = 2.0 * (a[0] * a[3] - a[1] * a[2]).norm();
        let got = metrics::concurrence(&psi.to_density().unwrap()).unwrap();
        assert!((got - expected).abs() < 1e-10, "{t}");
    }
}

#[test]
fn depolarized_channel_fidelity_closed_form() {
    for name in PresetName::CONVERSIONS {
        let chi = gate::ideal_choi(gate::preset(name).settings).unwrap();
        for p in [0.0, 0.05, 0.3, 1.0] {
            let noisy = noise::depolarize_choi(&chi, p).unwrap();
            let expected = 1.0 - p + p / 16.0;
            assert!((metrics::process_fidelity(&noisy, &chi).unwrap() - expected).abs() < 1e-10);
            let purity = (1.0 - p).powi(2) + 2.0 * p * (1.0 - p) / 16.0 + p * p / 16.0;
            assert!((metrics::purity(&noisy) - purity).abs() < 1e-12);
        }
    }
}

fn entropy(m: &CMatrix) -> f64 {
    let ev = m.clone().symmetric_eigenvalues();
    ev.iter().filter(|&&x| x > 1e-15).map(|&x| -x * x.log2()).sum()
}

/// Discord with the measured qubit scanned over a dense Bloch-sphere grid,
/// then a finer grid around the best point.
fn brute_discord(rho: &CMatrix, measured: usize) -> f64 {
    let rho_m = brute_partial_trace(rho, 2, &[measured]);
    // S(A) − S(AB) + min_Π Σ p_k S(B|k), A measured
    let base = entropy(&rho_m) - entropy(rho);
    let conditional = |theta: f64, phi: f64| -> f64 {
        let (s, co) = (theta / 2.0).sin_cos();
        let e = Complex64::from_polar(1.0, phi);
        let kets = [[c(co), e * s], [c(s), -e * co]];
        let mut total = 0.0;
        for k in kets {
            let proj = DMatrix::from_fn(2, 2, |i, j| k[i] * k[j].conj());
            let op = if measured == 0 {
                proj.kronecker(&CMatrix::identity(2, 2))
            } else {
                CMatrix::identity(2, 2).kronecker(&proj)
            };
            let post = &op * rho * &op;
            let p = post.trace().re;
            if p > 1e-15 {
                let other = brute_partial_trace(&(post / c(p)), 2, &[1 - measured]);
                total += p * entropy(&other);
            }
        }
        total
    };
    let mut best = (f64::INFINITY, 0.0, 0.0);
    let scan = |best: &mut (f64, f64, f64), t0: f64, t1: f64, p0: f64, p1: f64, n: usize| {
        for i in 0..=n {
            for j in 0..=n {
                let t = t0 + (t1 - t0) * i as f64 / n as f64;
                let p = p0 + (p1 - p0) * j as f64 / n as f64;
                let v = conditional(t, p);
                if v < best.0 {
                    *best = (v, t, p);
                }
            }
        }
    };
    scan(&mut best, 0.0, PI, 0.0, 2.0 * PI, 120);
    for width in [0.05, 1e-3, 2e-5] {
        let (_, t, p) = best;
        scan(&mut best, t - width, t + width, p - width, p + width, 40);
    }
    (base + best.0).max(0.0)
}

#[test]
fn discord_demo_output_against_grid_search() {
    let (rho, success) = pipeline::discord_ideal_output().unwrap();
    assert!((success - 7.0 / 16.0).abs() < 1e-12);
    let opts = DiscordOptions::default();
    let q1 = metrics::discord(&rho, 0, &opts).unwrap();
    let q2 = metrics::discord(&rho, 1, &opts).unwrap();
    let brute_q1 = brute_discord(rho.matrix(), 0);
    let brute_q2 = brute_discord(rho.matrix(), 1);
    assert!((q1 - brute_q1).abs() < 1e-7, "{q1} vs {brute_q1}");
    assert!((q2 - brute_q2).abs() < 1e-7, "{q2} vs {brute_q2}");
    assert!((q2 - 0.082_133_339_7).abs() < 1e-9);
}

#[test]
fn discord_of_classical_and_bell_states() {
    let opts = DiscordOptions::default();
    // classically correlated ½(|HH⟩⟨HH| + |VV⟩⟨VV|)
    let mut m = CMatrix::zeros(4, 4);
    m[(0, 0)] = c(0.5);
    m[(3, 3)] = c(0.5);
    let classical = DensityMatrix::new(m).unwrap();
    for q in 0..2 {
        assert!(metrics::discord(&classical, q, &opts).unwrap() < 1e-9);
    }
    let bell = gate::target_state(gate::TargetKind::PhiPlus).to_density().unwrap();
    for q in 0..2 {
        assert!((metrics::discord(&bell, q, &opts).unwrap() - 1.0).abs() < 1e-9);
    }
    for w in [0.2, 0.5, 0.9] {
        let rho = werner(w);
        let brute = brute_discord(rho.matrix(), 0);
        assert!((metrics::discord(&rho, 0, &opts).unwrap() - brute).abs() < 1e-7, "{w}");
    }
}

#[test]
fn uhlmann_fidelity_of_commuting_states() {
    // diagonal states: F = (Σ √(p_i q_i))²
    let p: [f64; 4] = [0.1, 0.2, 0.3, 0.4];
    let q: [f64; 4] = [0.25, 0.25, 0.4, 0.1];
    let diag = |v: [f64; 4]| DensityMatrix::new(CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(4, v.map(c)))).unwrap();
    let expected = p.iter().zip(q).map(|(a, b)| (a * b).sqrt()).sum::<f64>().powi(2);
    let got = metrics::fidelity(&diag(p), &diag(q)).unwrap();
    assert!((got - expected).abs() < 1e-12);
}

#[test]
fn simulated_counts_have_expected_means() {
    let chi = gate::ideal_choi(gate::preset(PresetName::BellPair).settings).unwrap();
    let mean_counts = 2000.0;
    let runs = 40;
    let mut sums = vec![0.0; 324 * 4];
    for run in 0..runs {
        let data = tomography::simulate_counts(&chi, mean_counts, 100 + run).unwrap();
        for (k, rec) in data.records.iter().enumerate() {
            for (o, n) in rec.counts.to_array().iter().enumerate() {
                sums[4 * k + o] += *n as f64;
            }
        }
    }
    let g = gate::build_gate(gate::preset(PresetName::BellPair).settings);
    for (k, (prep, basis)) in tomography::enumerate_settings().into_iter().enumerate() {
        let psi = g.clone() * prep.state().amplitudes();
        for o in 0..4 {
            let v = basis.outcome_vector(o);
            let expected = mean_counts * v.dotc(&psi).norm_sqr();
            let mean = sums[4 * k + o] / runs as f64;
            let sigma = (expected / runs as f64).sqrt();
            assert!((mean - expected).abs() <= 6.0 * sigma + 1e-9, "{k} {o}: {mean} vs {expected}");
        }
    }
}
