//! Phenomenological imperfections: white-noise depolarization, Z dephasing
//! and systematic mode phases, plus calibration of a noise template to a
//! target fidelity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, r, CMatrix};
use crate::metrics::{self, PhaseCorrection};
use crate::state::{ChoiProcess, DensityMatrix, PureState};

fn check_probability(p: f64, what: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("{what} probability {p} outside [0, 1]")));
    }
    Ok(())
}

/// `(1−p)χ + p·𝟙/16`, the mixture with the completely depolarizing channel.
pub fn depolarize_choi(chi: &ChoiProcess, p: f64) -> Result<ChoiProcess> {
    check_probability(p, "depolarizing")?;
    let m = chi.matrix() * r(1.0 - p) + white_choi().matrix() * r(p);
    Ok(ChoiProcess::from_parts(m, chi.success_scale()))
}

/// Choi matrix of the completely depolarizing two-qubit channel.
pub fn white_choi() -> ChoiProcess {
    ChoiProcess::new(CMatrix::identity(16, 16) * r(1.0 / 16.0), 1.0).expect("valid")
}

/// `(1−p)M + p Z M Z` with `Z` on one qubit of a register operator.
fn dephase_matrix(m: &CMatrix, p: f64, qubit: usize, n: usize) -> CMatrix {
    let dim = m.nrows();
    CMatrix::from_fn(dim, dim, |i, j| {
        let differ = linalg::bit(i, qubit, n) != linalg::bit(j, qubit, n);
        if differ {
            m[(i, j)] * (1.0 - 2.0 * p)
        } else {
            m[(i, j)]
        }
    })
}

/// `ρ ← (1−p)ρ + p ZρZ` on `qubit`.
pub fn dephase_state(rho: &DensityMatrix, p: f64, qubit: usize) -> Result<DensityMatrix> {
    check_probability(p, "dephasing")?;
    if qubit >= rho.qubits() {
        return Err(Error::invalid(format!("qubit {qubit} out of range")));
    }
    Ok(DensityMatrix::from_parts(
        rho.qubits(),
        dephase_matrix(rho.matrix(), p, qubit, rho.qubits()),
    ))
}

/// Dephasing of one output qubit (0 or 1) of a process.
pub fn dephase_choi_output(chi: &ChoiProcess, p: f64, output_qubit: usize) -> Result<ChoiProcess> {
    check_probability(p, "dephasing")?;
    if output_qubit > 1 {
        return Err(Error::invalid(format!("output qubit {output_qubit} out of range")));
    }
    Ok(ChoiProcess::from_parts(
        dephase_matrix(chi.matrix(), p, 2 + output_qubit, 4),
        chi.success_scale(),
    ))
}

/// Conjugates the Choi matrix by the four local mode-phase unitaries.
pub fn apply_mode_phases(chi: &ChoiProcess, phases: &PhaseCorrection) -> ChoiProcess {
    phases.apply(chi)
}

/// Noise applied to a channel or state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub depolarizing_p: f64,
    pub dephasing_p: f64,
    /// Input-1, input-2, output-1, output-2 phases in radians.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode_phases: Option<[f64; 4]>,
}

impl NoiseSpec {
    pub fn zero() -> Self {
        NoiseSpec::default()
    }

    pub fn validate(&self) -> Result<()> {
        check_probability(self.depolarizing_p, "depolarizing")?;
        check_probability(self.dephasing_p, "dephasing")?;
        if let Some(phases) = self.mode_phases {
            PhaseCorrection::new(phases)?;
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.depolarizing_p == 0.0
            && self.dephasing_p == 0.0
            && self.mode_phases.is_none_or(|p| p.iter().all(|&x| x == 0.0))
    }

    /// Every component multiplied by `magnitude`.
    pub fn scaled(&self, magnitude: f64) -> NoiseSpec {
        NoiseSpec {
            depolarizing_p: self.depolarizing_p * magnitude,
            dephasing_p: self.dephasing_p * magnitude,
            mode_phases: self.mode_phases.map(|p| p.map(|x| x * magnitude)),
        }
    }

    /// Largest magnitude over which scaling keeps the spec valid and the
    /// noise monotone (dephasing beyond ½ starts to restore coherence).
    pub fn max_magnitude(&self) -> f64 {
        let mut limit = f64::INFINITY;
        if self.depolarizing_p > 0.0 {
            limit = limit.min(1.0 / self.depolarizing_p);
        }
        if self.dephasing_p > 0.0 {
            limit = limit.min(0.5 / self.dephasing_p);
        }
        limit
    }

    /// Mode phases, then dephasing of both output qubits, then depolarization.
    pub fn apply_to_choi(&self, chi: &ChoiProcess) -> Result<ChoiProcess> {
        self.validate()?;
        let mut out = match self.mode_phases {
            Some(phases) => apply_mode_phases(chi, &PhaseCorrection::new(phases)?),
            None => chi.clone(),
        };
        for q in 0..2 {
            out = dephase_choi_output(&out, self.dephasing_p, q)?;
        }
        depolarize_choi(&out, self.depolarizing_p)
    }

    /// Dephasing of every qubit, then mixing with `𝟙/d`. Mode phases do not
    /// apply to states and are ignored.
    pub fn apply_to_state(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        self.validate()?;
        let mut out = rho.clone();
        for q in 0..rho.qubits() {
            out = dephase_state(&out, self.dephasing_p, q)?;
        }
        let mixed = DensityMatrix::maximally_mixed(rho.qubits())?;
        let p = self.depolarizing_p;
        Ok(DensityMatrix::from_parts(
            rho.qubits(),
            out.matrix() * r(1.0 - p) + mixed.matrix() * r(p),
        ))
    }
}

/// Bisection tolerance on the achieved fidelity.
pub const CALIBRATION_TOLERANCE: f64 = 1e-10;

/// Finds the magnitude `s` of `template` at which `fidelity_of(template·s)`
/// equals `target`, assuming fidelity decreases with `s`.
pub fn calibrate_magnitude(
    target: f64,
    template: &NoiseSpec,
    fidelity_of: impl Fn(&NoiseSpec) -> Result<f64>,
) -> Result<NoiseSpec> {
    if !(target > 0.5 && target <= 1.0) {
        return Err(Error::invalid(format!("target fidelity {target} outside (0.5, 1]")));
    }
    template.validate()?;
    if template.is_zero() {
        return if target >= 1.0 - CALIBRATION_TOLERANCE {
            Ok(NoiseSpec::zero())
        } else {
            Err(Error::NoSolution("zero noise template cannot lower the fidelity".into()))
        };
    }
    let at_zero = fidelity_of(&template.scaled(0.0))?;
    if target >= at_zero - CALIBRATION_TOLERANCE {
        return Ok(NoiseSpec::zero());
    }
    let mut hi = template.max_magnitude();
    if hi.is_infinite() {
        // phase-only template; a quarter turn on the largest phase bounds the search
        let largest = template
            .mode_phases
            .map(|p| p.iter().fold(0.0f64, |m, x| m.max(x.abs())))
            .unwrap_or(0.0);
        hi = std::f64::consts::FRAC_PI_2 / largest;
    }
    let at_hi = fidelity_of(&template.scaled(hi))?;
    if at_hi > target {
        return Err(Error::NoSolution(format!(
            "template reaches fidelity {at_hi:.6} at most, above target {target}"
        )));
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f = fidelity_of(&template.scaled(mid))?;
        if (f - target).abs() <= CALIBRATION_TOLERANCE {
            return Ok(template.scaled(mid));
        }
        if f > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    Ok(template.scaled(0.5 * (lo + hi)))
}

/// Scales `template` so the noisy channel's raw process fidelity with
/// `chi_th` equals `target`.
pub fn calibrate_noise_to_fidelity(
    target_raw_fidelity: f64,
    chi_th: &ChoiProcess,
    template: &NoiseSpec,
) -> Result<NoiseSpec> {
    calibrate_magnitude(target_raw_fidelity, template, |spec| {
        metrics::process_fidelity(&spec.apply_to_choi(chi_th)?, chi_th)
    })
}

/// Scales `template` so the noisy copy of `ideal` has state fidelity `target` with it.
pub fn calibrate_state_noise(target: f64, ideal: &PureState, template: &NoiseSpec) -> Result<NoiseSpec> {
    let rho = ideal.to_density()?;
    calibrate_magnitude(target, template, |spec| {
        Ok(spec.apply_to_state(&rho)?.expectation(ideal))
    })
}

/// Template used to fabricate imperfect channels: white noise, weaker
/// output dephasing and unequal systematic mode phases.
pub fn default_channel_template() -> NoiseSpec {
    NoiseSpec {
        depolarizing_p: 1.0,
        dephasing_p: 0.5,
        mode_phases: Some([2.0, -1.5, 1.0, 2.5]),
    }
}

/// Template used to fabricate an imperfect cluster state.
pub fn default_state_template() -> NoiseSpec {
    NoiseSpec {
        depolarizing_p: 1.0,
        dephasing_p: 0.25,
        mode_phases: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gate::{self, PresetName};
    use crate::metrics::purity;
    use crate::state::product_state;

    fn ghz_choi() -> ChoiProcess {
        gate::ideal_choi(gate::preset(PresetName::Ghz).settings).unwrap()
    }

    #[test]
    fn depolarize_endpoints() {
        let chi = ghz_choi();
        assert_eq!(depolarize_choi(&chi, 0.0).unwrap().matrix(), chi.matrix());
        let white = depolarize_choi(&chi, 1.0).unwrap();
        assert!((purity(&white) - purity(&white_choi())).abs() < 1e-15);
        assert!((purity(&white) - 1.0 / 16.0).abs() < 1e-15);
        assert!(depolarize_choi(&chi, 1.5).is_err());
        assert!(depolarize_choi(&chi, -0.1).is_err());
    }

    #[test]
    fn depolarizing_purity_is_monotone() {
        let chi = ghz_choi();
        let sweep: Vec<f64> = (0..10)
            .map(|k| purity(&depolarize_choi(&chi, k as f64 / 9.0).unwrap()))
            .collect();
        for w in sweep.windows(2) {
            assert!(w[1] < w[0]);
        }
        let p01 = purity(&depolarize_choi(&chi, 0.1).unwrap());
        assert!(p01 < 1.0 && p01 > 1.0 / 16.0);
    }

    #[test]
    fn dephase_plus_state() {
        let plus = product_state("+").unwrap().to_density().unwrap();
        assert_eq!(dephase_state(&plus, 0.0, 0).unwrap(), plus);
        let d = dephase_state(&plus, 0.5, 0).unwrap();
        assert!(linalg::max_abs_diff(d.matrix(), DensityMatrix::maximally_mixed(1).unwrap().matrix()) < 1e-15);
        assert!(dephase_state(&plus, 0.5, 1).is_err());
        assert!(dephase_state(&plus, 2.0, 0).is_err());
    }

    #[test]
    fn half_dephased_cluster_fidelity() {
        let c4 = gate::cluster_state_c4();
        let rho = dephase_state(&c4.to_density().unwrap(), 0.5, 0).unwrap();
        assert!((rho.expectation(&c4) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn zero_phases_leave_choi_unchanged() {
        let chi = ghz_choi();
        let out = apply_mode_phases(&chi, &PhaseCorrection::zero());
        assert!(linalg::max_abs_diff(out.matrix(), chi.matrix()) < 1e-15);
    }

    #[test]
    fn noise_spec_json_schema() {
        let spec = NoiseSpec {
            depolarizing_p: 0.1,
            dephasing_p: 0.2,
            mode_phases: Some([0.1, 0.2, 0.3, 0.4]),
        };
        let v = serde_json::to_value(spec).unwrap();
        assert_eq!(v, serde_json::json!({"depolarizing_p": 0.1, "dephasing_p": 0.2, "mode_phases": [0.1, 0.2, 0.3, 0.4]}));
        let back: NoiseSpec = serde_json::from_value(v).unwrap();
        assert_eq!(back, spec);
        let bare: NoiseSpec = serde_json::from_str(r#"{"depolarizing_p": 0.0, "dephasing_p": 0.0}"#).unwrap();
        assert!(bare.is_zero());
    }

    #[test]
    fn calibration_target_one_is_noise_free() {
        let spec = calibrate_noise_to_fidelity(1.0, &ghz_choi(), &default_channel_template()).unwrap();
        assert!(spec.is_zero());
    }

    #[test]
    fn calibration_rejects_bad_targets() {
        let chi = ghz_choi();
        assert!(matches!(
            calibrate_noise_to_fidelity(0.4, &chi, &default_channel_template()),
            Err(Error::InvalidArgument(_))
        ));
        // output dephasing cannot touch a channel whose output is always |HH⟩
        let hh = linalg::projector(product_state("HH").unwrap().amplitudes());
        let fixed = ChoiProcess::from_operator(&hh).unwrap();
        let dephasing = NoiseSpec {
            depolarizing_p: 0.0,
            dephasing_p: 1.0,
            mode_phases: None,
        };
        assert!(matches!(calibrate_noise_to_fidelity(0.9, &fixed, &dephasing), Err(Error::NoSolution(_))));
    }
}
