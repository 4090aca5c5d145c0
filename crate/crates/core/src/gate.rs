//! The post-selected two-qubit conversion gate, the four-qubit linear cluster
//! state and the preset conversions built from them.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{r, CMatrix};
use crate::state::{self, normalize_state, ChoiProcess, PureState};

/// Half-wave-plate rotation angles in radians, canonicalized to `[0, π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateSettings {
    pub theta1: f64,
    pub theta2: f64,
}

fn canonical_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(PI);
    // rem_euclid can round up to exactly π
    if t >= PI {
        0.0
    } else {
        t
    }
}

impl GateSettings {
    pub fn new(theta1: f64, theta2: f64) -> Result<Self> {
        if !theta1.is_finite() || !theta2.is_finite() {
            return Err(Error::invalid("gate angles must be finite"));
        }
        Ok(GateSettings {
            theta1: canonical_angle(theta1),
            theta2: canonical_angle(theta2),
        })
    }
}

/// Trigonometric coefficients of the gate operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateCoefficients {
    pub alpha1: f64,
    pub beta1: f64,
    pub alpha2: f64,
    pub beta2: f64,
    pub mu1: f64,
    pub mu2: f64,
}

impl GateCoefficients {
    /// Amplitude on `|HH⟩ → |HH⟩`.
    pub fn hh(&self) -> f64 {
        self.alpha1 - self.beta1
    }

    /// Amplitude on `|VV⟩ → |VV⟩`.
    pub fn vv(&self) -> f64 {
        self.alpha2 - self.beta2
    }
}

pub fn gate_coefficients(s: GateSettings) -> GateCoefficients {
    let (s1, c1) = (2.0 * s.theta1).sin_cos();
    let (s2, c2) = (2.0 * s.theta2).sin_cos();
    GateCoefficients {
        alpha1: c1 * c1,
        beta1: s1 * s1,
        alpha2: c2 * c2,
        beta2: s2 * s2,
        mu1: c1 * c2,
        mu2: s1 * s2,
    }
}

// basis indices
const HH: usize = 0;
const HV: usize = 1;
const VH: usize = 2;
const VV: usize = 3;

/// The 4×4 gate operator in the `{HH, HV, VH, VV}` basis.
///
/// `|HV⟩ ↦ μ₁|HV⟩ − μ₂|VH⟩` and `|VH⟩ ↦ μ₁|VH⟩ − μ₂|HV⟩`; this cross-term
/// form is the one that turns `|C₄⟩` into the converted four-qubit states.
pub fn build_gate(s: GateSettings) -> CMatrix {
    let k = gate_coefficients(s);
    let mut g = CMatrix::zeros(4, 4);
    g[(HH, HH)] = r(k.hh());
    g[(VV, VV)] = r(k.vv());
    g[(HV, HV)] = r(k.mu1);
    g[(VH, HV)] = r(-k.mu2);
    g[(VH, VH)] = r(k.mu1);
    g[(HV, VH)] = r(-k.mu2);
    g
}

/// Applies the gate to a two-qubit pure state and post-selects.
pub fn apply_gate(s: GateSettings, psi: &PureState) -> Result<(PureState, f64)> {
    if psi.qubits() != 2 {
        return Err(Error::invalid(format!(
            "gate acts on two qubits, got {}",
            psi.qubits()
        )));
    }
    let out = PureState::new(build_gate(s) * psi.amplitudes())?;
    normalize_state(&out)
}

/// `½(|HHHH⟩ + |HHVV⟩ + |VVHH⟩ − |VVVV⟩)`.
pub fn cluster_state_c4() -> PureState {
    let mut amps = [0.0; 16];
    amps[0b0000] = 0.5;
    amps[0b0011] = 0.5;
    amps[0b1100] = 0.5;
    amps[0b1111] = -0.5;
    PureState::from_real(&amps).expect("valid state")
}

/// Gate on the middle qubits (indices 1 and 2) of an arbitrary four-qubit pure state.
pub fn apply_gate_to_middle(s: GateSettings, psi: &PureState) -> Result<(PureState, f64)> {
    if psi.qubits() != 4 {
        return Err(Error::invalid("expected a four-qubit state"));
    }
    let g = build_gate(s);
    let full = crate::linalg::tensor_product(
        &crate::linalg::tensor_product(&CMatrix::identity(2, 2), &g),
        &CMatrix::identity(2, 2),
    );
    normalize_state(&PureState::new(full * psi.amplitudes())?)
}

/// Gate on qubits `targets` of an `n`-qubit pure state; `targets.0` is the
/// gate's first qubit.
pub fn apply_gate_on(s: GateSettings, psi: &PureState, targets: (usize, usize)) -> Result<(PureState, f64)> {
    let n = psi.qubits();
    let (t0, t1) = targets;
    if n < 2 || t0 == t1 || t0 >= n || t1 >= n {
        return Err(Error::invalid(format!("targets ({t0}, {t1}) invalid for {n} qubits")));
    }
    let mut perm = vec![t0, t1];
    perm.extend((0..n).filter(|&q| q != t0 && q != t1));
    let mut inverse = vec![0; n];
    for (slot, &q) in perm.iter().enumerate() {
        inverse[q] = slot;
    }
    let front = psi.permute_qubits(&perm)?;
    let full = crate::linalg::tensor_product(&build_gate(s), &CMatrix::identity(1 << (n - 2), 1 << (n - 2)));
    let out = PureState::new(full * front.amplitudes())?.permute_qubits(&inverse)?;
    normalize_state(&out)
}

/// Converts `|C₄⟩` by acting on its two middle qubits.
pub fn convert_cluster(s: GateSettings) -> Result<(PureState, f64)> {
    apply_gate_to_middle(s, &cluster_state_c4())
}

/// Angles `θ±` with `sin(2θ±) = √((5 ± √5)/10)`, `2θ±` in the first quadrant.
pub fn dicke_angles() -> (f64, f64) {
    let root5 = 5f64.sqrt();
    let plus = ((5.0 + root5) / 10.0).sqrt().asin() / 2.0;
    let minus = ((5.0 - root5) / 10.0).sqrt().asin() / 2.0;
    (plus, minus)
}

/// Named gate settings exposed on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PresetName {
    ClusterIdentity,
    Ghz,
    Dicke,
    BellPair,
    Entangler,
    DiscordDemo,
}

impl PresetName {
    pub const ALL: [PresetName; 6] = [
        PresetName::ClusterIdentity,
        PresetName::Ghz,
        PresetName::Dicke,
        PresetName::BellPair,
        PresetName::Entangler,
        PresetName::DiscordDemo,
    ];

    /// The four cluster conversions characterized by process tomography.
    pub const CONVERSIONS: [PresetName; 4] = [
        PresetName::ClusterIdentity,
        PresetName::Ghz,
        PresetName::Dicke,
        PresetName::BellPair,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PresetName::ClusterIdentity => "cluster-identity",
            PresetName::Ghz => "ghz",
            PresetName::Dicke => "dicke",
            PresetName::BellPair => "bell-pair",
            PresetName::Entangler => "entangler",
            PresetName::DiscordDemo => "discord-demo",
        }
    }
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PresetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PresetName::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown preset {s:?}")))
    }
}

/// Exact success probability as a ratio of integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub num: u32,
    pub den: u32,
}

impl Ratio {
    pub const fn new(num: u32, den: u32) -> Self {
        Ratio { num, den }
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConversionPreset {
    pub name: PresetName,
    pub settings: GateSettings,
    /// Success probability on `|C₄⟩`; absent for the two-qubit demonstrations.
    pub expected_success: Option<Ratio>,
}

pub fn preset(name: PresetName) -> ConversionPreset {
    let (tp, tm) = dicke_angles();
    let (t1, t2, expected) = match name {
        PresetName::ClusterIdentity => (0.0, 0.0, Some(Ratio::new(1, 1))),
        PresetName::Ghz => (0.0, PI / 4.0, Some(Ratio::new(1, 2))),
        PresetName::Dicke => (tp, tm, Some(Ratio::new(3, 10))),
        PresetName::BellPair => (3.0 * PI / 8.0, PI / 8.0, Some(Ratio::new(1, 4))),
        PresetName::Entangler => (3.0 * PI / 8.0, PI / 8.0, None),
        PresetName::DiscordDemo => (PI / 3.0, 0.0, None),
    };
    ConversionPreset {
        name,
        settings: GateSettings::new(t1, t2).expect("finite preset angles"),
        expected_success: expected,
    }
}

pub fn preset_by_name(name: &str) -> Result<ConversionPreset> {
    Ok(preset(name.parse()?))
}

/// Kind of state a cluster conversion is meant to produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConversionKind {
    Cluster,
    Ghz,
    Dicke,
    TwoBell,
}

/// One angle row of the conversion table, with the local correction that
/// maps its output onto the canonical target of its kind.
#[derive(Debug, Clone, PartialEq)]
pub struct ConversionRow {
    pub kind: ConversionKind,
    pub label: &'static str,
    pub settings: GateSettings,
    pub success: Ratio,
    /// Qubits receiving a `Z` before comparison with the target.
    pub z_correction: &'static [usize],
}

/// Every angle row of the conversion table, canonical row first within each kind.
pub fn conversion_table() -> Vec<ConversionRow> {
    let (tp, tm) = dicke_angles();
    let row = |kind, label, t1: f64, t2: f64, success, z_correction| ConversionRow {
        kind,
        label,
        settings: GateSettings::new(t1, t2).expect("finite"),
        success,
        z_correction,
    };
    use ConversionKind::*;
    vec![
        row(Cluster, "cluster (0, 0)", 0.0, 0.0, Ratio::new(1, 1), &[]),
        row(Cluster, "cluster (pi/2, pi/2)", PI / 2.0, PI / 2.0, Ratio::new(1, 1), &[]),
        row(Ghz, "ghz (0, pi/4)", 0.0, PI / 4.0, Ratio::new(1, 2), &[]),
        row(Ghz, "ghz (pi/2, pi/4)", PI / 2.0, PI / 4.0, Ratio::new(1, 2), &[]),
        row(Ghz, "ghz (pi/4, 0)", PI / 4.0, 0.0, Ratio::new(1, 2), &[]),
        row(Ghz, "ghz (pi/4, pi/2)", PI / 4.0, PI / 2.0, Ratio::new(1, 2), &[]),
        row(Dicke, "dicke (theta+, theta-)", tp, tm, Ratio::new(3, 10), &[]),
        row(Dicke, "dicke (theta-, theta+)", tm, tp, Ratio::new(3, 10), &[0, 3]),
        row(TwoBell, "two-bell (3pi/8, pi/8)", 3.0 * PI / 8.0, PI / 8.0, Ratio::new(1, 4), &[]),
        row(TwoBell, "two-bell (pi/8, 3pi/8)", PI / 8.0, 3.0 * PI / 8.0, Ratio::new(1, 4), &[]),
    ]
}

/// Closed-form output of the canonical row of each conversion kind.
///
/// The Dicke-angle conversion does not give the symmetric Dicke state; its
/// output is `(−|HHHH⟩ − |VVVV⟩ + |HHVV⟩ + |VVHH⟩ − |HVHV⟩ − |VHVH⟩)/√6`.
pub fn conversion_target(kind: ConversionKind) -> PureState {
    match kind {
        ConversionKind::Cluster => cluster_state_c4(),
        ConversionKind::Ghz => target_state(TargetKind::Ghz4),
        ConversionKind::TwoBell => target_state(TargetKind::BellPairProduct),
        ConversionKind::Dicke => {
            let a = 1.0 / 6f64.sqrt();
            let mut amps = [0.0; 16];
            amps[0b0000] = -a;
            amps[0b1111] = -a;
            amps[0b0011] = a;
            amps[0b1100] = a;
            amps[0b0101] = -a;
            amps[0b1010] = -a;
            PureState::from_real(&amps).expect("valid state")
        }
    }
}

/// Applies `Z` to each listed qubit.
pub fn apply_z(psi: &PureState, qubits: &[usize]) -> PureState {
    let n = psi.qubits();
    let mut v = psi.amplitudes().clone();
    for (idx, amp) in v.iter_mut().enumerate() {
        let flips = qubits
            .iter()
            .filter(|&&q| crate::linalg::bit(idx, q, n) == 1)
            .count();
        if flips % 2 == 1 {
            *amp = -*amp;
        }
    }
    PureState::new(v).expect("unitary preserves norm")
}

/// Choi matrix of the ideal post-selected gate.
pub fn ideal_choi(s: GateSettings) -> Result<ChoiProcess> {
    ChoiProcess::from_operator(&build_gate(s))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    Cluster,
    Ghz4,
    Dicke4_2,
    BellPairProduct,
    PsiPlus,
    PhiPlus,
}

impl FromStr for TargetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "cluster" => TargetKind::Cluster,
            "ghz4" => TargetKind::Ghz4,
            "dicke4_2" => TargetKind::Dicke4_2,
            "bell_pair_product" => TargetKind::BellPairProduct,
            "psi_plus" => TargetKind::PsiPlus,
            "phi_plus" => TargetKind::PhiPlus,
            _ => return Err(Error::invalid(format!("unknown target state {s:?}"))),
        })
    }
}

pub fn target_state(kind: TargetKind) -> PureState {
    let s = FRAC_1_SQRT_2;
    match kind {
        TargetKind::Cluster => cluster_state_c4(),
        TargetKind::Ghz4 => {
            let mut amps = [0.0; 16];
            amps[0b0000] = s;
            amps[0b1111] = s;
            PureState::from_real(&amps).expect("valid state")
        }
        TargetKind::Dicke4_2 => {
            let a = 1.0 / 6f64.sqrt();
            let amps: Vec<f64> = (0..16u32)
                .map(|i| if i.count_ones() == 2 { a } else { 0.0 })
                .collect();
            PureState::from_real(&amps).expect("valid state")
        }
        TargetKind::BellPairProduct => {
            // (|HV⟩+|VH⟩) on qubits (0,3) times (|HV⟩+|VH⟩) on qubits (1,2)
            let mut amps = [0.0; 16];
            for idx in [0b0011, 0b0101, 0b1010, 0b1100] {
                amps[idx] = 0.5;
            }
            PureState::from_real(&amps).expect("valid state")
        }
        TargetKind::PsiPlus => PureState::from_real(&[0.0, s, s, 0.0]).expect("valid state"),
        TargetKind::PhiPlus => PureState::from_real(&[s, 0.0, 0.0, s]).expect("valid state"),
    }
}

/// Input of the entangler demonstration, `|−−⟩`.
pub fn entangler_input() -> PureState {
    state::product_state("--").expect("valid labels")
}
