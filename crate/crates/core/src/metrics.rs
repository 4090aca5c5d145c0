//! Figures of merit: purity, Uhlmann state/process fidelity (raw and
//! phase-optimized), concurrence, logarithmic negativity and discord.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, r, CMatrix, CVector, ZERO};
use crate::state::{ChoiProcess, DensityMatrix};

/// Eigenvalues of a unit-trace operator at or below this are treated as
/// outside its support when forming fidelities and concurrences.
const SUPPORT_CUTOFF: f64 = 1e-13;

/// Anything with a unit-trace Hermitian matrix.
pub trait UnitTraceOperator {
    fn operator(&self) -> &CMatrix;
}

impl UnitTraceOperator for DensityMatrix {
    fn operator(&self) -> &CMatrix {
        self.matrix()
    }
}

impl UnitTraceOperator for ChoiProcess {
    fn operator(&self) -> &CMatrix {
        self.matrix()
    }
}

/// `Tr[M²]`.
pub fn purity<T: UnitTraceOperator + ?Sized>(m: &T) -> f64 {
    let a = m.operator();
    linalg::trace_of_product(a, a).re
}

/// Eigen-pairs of `m` with eigenvalue above the support cutoff, largest first.
fn support(m: &CMatrix) -> Vec<(f64, CVector)> {
    let (values, vectors) = linalg::eigh(m);
    values
        .iter()
        .enumerate()
        .rev()
        .filter(|(_, &v)| v > SUPPORT_CUTOFF)
        .map(|(k, &v)| (v, vectors.column(k).into_owned()))
        .collect()
}

/// `Tr[√(√a b √a)]²` evaluated on the support of `a`.
fn uhlmann(a: &CMatrix, b: &CMatrix) -> f64 {
    let sup_a = support(a);
    let sup_b = support(b);
    if sup_b.len() == 1 && sup_a.len() > 1 {
        return uhlmann(b, a);
    }
    if sup_a.len() == 1 {
        let (lambda, v) = &sup_a[0];
        return (lambda * v.dotc(&(b * v)).re).max(0.0);
    }
    let k = sup_a.len();
    let bv: Vec<CVector> = sup_a.iter().map(|(_, v)| b * v).collect();
    let m = CMatrix::from_fn(k, k, |i, j| {
        let (li, vi) = &sup_a[i];
        let lj = sup_a[j].0;
        vi.dotc(&bv[j]) * (li * lj).sqrt()
    });
    let root_sum: f64 = linalg::eigvalsh(&m).iter().map(|&v| v.max(0.0).sqrt()).sum();
    root_sum * root_sum
}

fn check_same_dim(a: &CMatrix, b: &CMatrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::invalid(format!(
            "dimension mismatch: {}x{} vs {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    Ok(())
}

/// Uhlmann fidelity between two states.
pub fn fidelity(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    check_same_dim(a.matrix(), b.matrix())?;
    Ok(uhlmann(a.matrix(), b.matrix()))
}

/// Uhlmann fidelity between two unit-trace Choi matrices.
pub fn process_fidelity(chi: &ChoiProcess, chi_th: &ChoiProcess) -> Result<f64> {
    Ok(uhlmann(chi.matrix(), chi_th.matrix()))
}

/// Phases on the four optical modes, in the order input-1, input-2,
/// output-1, output-2. Each acts as `diag(1, e^{iφ})` on its qubit.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PhaseCorrection {
    phases: [f64; 4],
}

impl PhaseCorrection {
    pub fn new(phases: [f64; 4]) -> Result<Self> {
        if phases.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("phases must be finite"));
        }
        Ok(PhaseCorrection {
            phases: phases.map(|p| {
                let t = p.rem_euclid(TAU);
                if t >= TAU {
                    0.0
                } else {
                    t
                }
            }),
        })
    }

    pub fn zero() -> Self {
        PhaseCorrection::default()
    }

    pub fn phases(&self) -> [f64; 4] {
        self.phases
    }

    /// Diagonal of the 16×16 local unitary conjugating a Choi matrix.
    pub fn choi_diagonal(&self) -> Vec<Complex64> {
        linalg::local_phase_diagonal(&self.phases)
    }

    /// `D χ D†`.
    pub fn apply(&self, chi: &ChoiProcess) -> ChoiProcess {
        let m = linalg::conjugate_by_diagonal(chi.matrix(), &self.choi_diagonal());
        ChoiProcess::from_parts(m, chi.success_scale())
    }
}

/// Search parameters for [`phase_optimized_fidelity`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSearch {
    /// Grid points per phase in the coarse scan.
    pub grid: usize,
    /// Width at which golden-section refinement stops.
    pub resolution: f64,
    pub max_sweeps: usize,
}

impl Default for PhaseSearch {
    fn default() -> Self {
        PhaseSearch {
            grid: 16,
            resolution: 1e-8,
            max_sweeps: 50,
        }
    }
}

/// Fidelity as a function of the four mode phases.
enum PhaseObjective {
    /// Pure target `|ψ⟩`: `F(φ) = Σ_ab c_ab e^{i(θ_a − θ_b)}`, `c_ab = ψ̄_a χ_ab ψ_b`.
    Pure { weights: Vec<Complex64> },
    General { chi: CMatrix, target: CMatrix },
}

const MODE_BITS: [[u8; 4]; 16] = {
    let mut table = [[0u8; 4]; 16];
    let mut idx = 0;
    while idx < 16 {
        let mut q = 0;
        while q < 4 {
            table[idx][q] = ((idx >> (3 - q)) & 1) as u8;
            q += 1;
        }
        idx += 1;
    }
    table
};

impl PhaseObjective {
    fn new(chi: &ChoiProcess, chi_th: &ChoiProcess) -> Self {
        let sup = support(chi_th.matrix());
        if sup.len() == 1 && sup[0].0 > 1.0 - 1e-10 {
            let psi = &sup[0].1;
            let m = chi.matrix();
            let weights = (0..16)
                .flat_map(|a| (0..16).map(move |b| (a, b)))
                .map(|(a, b)| psi[a].conj() * m[(a, b)] * psi[b])
                .collect();
            PhaseObjective::Pure { weights }
        } else {
            PhaseObjective::General {
                chi: chi.matrix().clone(),
                target: chi_th.matrix().clone(),
            }
        }
    }

    fn eval(&self, phases: &[f64; 4]) -> f64 {
        match self {
            PhaseObjective::Pure { weights } => {
                let mut w = [ZERO; 16];
                for (idx, bits) in MODE_BITS.iter().enumerate() {
                    let angle: f64 = (0..4).map(|q| bits[q] as f64 * phases[q]).sum();
                    w[idx] = Complex64::from_polar(1.0, angle);
                }
                let mut acc = ZERO;
                for a in 0..16 {
                    let mut row = ZERO;
                    for b in 0..16 {
                        row += weights[a * 16 + b] * w[b].conj();
                    }
                    acc += w[a] * row;
                }
                acc.re
            }
            PhaseObjective::General { chi, target } => {
                let diag = linalg::local_phase_diagonal(phases);
                uhlmann(&linalg::conjugate_by_diagonal(chi, &diag), target)
            }
        }
    }
}

/// Golden-section maximization of `f` on `[lo, hi]`.
fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, resolution: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > resolution {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Maximizes the process fidelity over four local mode phases applied to `chi`.
///
/// Coarse grid over all four phases, then cyclic coordinate-wise
/// golden-section refinement. Never returns less than the raw fidelity.
pub fn phase_optimized_fidelity_with(
    chi: &ChoiProcess,
    chi_th: &ChoiProcess,
    search: &PhaseSearch,
) -> Result<(f64, PhaseCorrection)> {
    if search.grid == 0 || search.resolution.is_nan() || search.resolution <= 0.0 {
        return Err(Error::invalid("phase search needs a nonempty grid and positive resolution"));
    }
    let objective = PhaseObjective::new(chi, chi_th);
    let raw = process_fidelity(chi, chi_th)?;
    let step = TAU / search.grid as f64;

    let mut best = [0.0; 4];
    let mut best_value = f64::NEG_INFINITY;
    let g = search.grid;
    for i0 in 0..g {
        for i1 in 0..g {
            for i2 in 0..g {
                for i3 in 0..g {
                    let p = [i0, i1, i2, i3].map(|i| i as f64 * step);
                    let v = objective.eval(&p);
                    if v > best_value {
                        best_value = v;
                        best = p;
                    }
                }
            }
        }
    }

    for _ in 0..search.max_sweeps {
        let before = best_value;
        for q in 0..4 {
            let centre = best[q];
            let (x, v) = golden_max(
                |t| {
                    let mut p = best;
                    p[q] = t;
                    objective.eval(&p)
                },
                centre - step,
                centre + step,
                search.resolution,
            );
            if v > best_value {
                best_value = v;
                best[q] = x;
            }
        }
        if best_value - before <= 1e-15 {
            break;
        }
    }

    let correction = PhaseCorrection::new(best)?;
    // Report the fidelity of the corrected matrix through the common path.
    let optimized = process_fidelity(&correction.apply(chi), chi_th)?;
    if optimized >= raw {
        Ok((optimized, correction))
    } else {
        Ok((raw, PhaseCorrection::zero()))
    }
}

pub fn phase_optimized_fidelity(chi: &ChoiProcess, chi_th: &ChoiProcess) -> Result<(f64, PhaseCorrection)> {
    phase_optimized_fidelity_with(chi, chi_th, &PhaseSearch::default())
}

fn require_two_qubits(m: &DensityMatrix, what: &str) -> Result<()> {
    if m.qubits() != 2 {
        return Err(Error::invalid(format!(
            "{what} is defined for two-qubit states, got {}",
            m.qubits()
        )));
    }
    Ok(())
}

/// Wootters concurrence.
pub fn concurrence(m: &DensityMatrix) -> Result<f64> {
    require_two_qubits(m, "concurrence")?;
    // spin flip: (Y⊗Y) ρ* (Y⊗Y); Y⊗Y is anti-diagonal with signs (-1, 1, 1, -1)
    let rho = m.matrix();
    let sign = [-1.0, 1.0, 1.0, -1.0];
    let flipped = CMatrix::from_fn(4, 4, |i, j| rho[(3 - i, 3 - j)].conj() * (sign[i] * sign[j]));
    let sup = support(rho);
    let k = sup.len();
    let fv: Vec<CVector> = sup.iter().map(|(_, v)| &flipped * v).collect();
    let inner = CMatrix::from_fn(k, k, |i, j| {
        sup[i].1.dotc(&fv[j]) * (sup[i].0 * sup[j].0).sqrt()
    });
    let mut lambdas: Vec<f64> = linalg::eigvalsh(&inner).iter().map(|&v| v.max(0.0).sqrt()).collect();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    let rest: f64 = lambdas.iter().skip(1).sum();
    Ok((lambdas.first().copied().unwrap_or(0.0) - rest).max(0.0))
}

/// `log₂ ‖ρ^{T_B}‖₁ = log₂(1 + 2 Σ|λ₋|)`. Eigenvalues of the partial
/// transpose above `−PSD_TOLERANCE` count as zero.
pub fn log_negativity(m: &DensityMatrix) -> Result<f64> {
    require_two_qubits(m, "logarithmic negativity")?;
    let pt = m.partial_transpose(1)?;
    let negative: f64 = linalg::eigvalsh(&pt)
        .into_iter()
        .filter(|&l| l < -linalg::PSD_TOLERANCE)
        .map(|l| -l)
        .sum();
    Ok((1.0 + 2.0 * negative).log2())
}

/// Von Neumann entropy in bits, `0·log 0 = 0`.
pub fn von_neumann_entropy(m: &CMatrix) -> f64 {
    entropy_of(&linalg::eigvalsh(m))
}

fn entropy_of(values: &[f64]) -> f64 {
    values
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| -v * v.log2())
        .sum()
}

/// Eigenvalues of a 2×2 Hermitian matrix.
fn eig2(m: &[[Complex64; 2]; 2]) -> [f64; 2] {
    let a = m[0][0].re;
    let d = m[1][1].re;
    let b = m[0][1];
    let mean = 0.5 * (a + d);
    let radius = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    [mean + radius, mean - radius]
}

/// Options for the measurement optimization in [`discord`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscordOptions {
    /// Polar grid points, endpoints 0 and π included.
    pub theta_points: usize,
    /// Azimuthal grid points over `[0, 2π)`.
    pub phi_points: usize,
    /// Step size at which the compass refinement stops.
    pub tolerance: f64,
}

impl Default for DiscordOptions {
    fn default() -> Self {
        DiscordOptions {
            theta_points: 20,
            phi_points: 40,
            tolerance: 1e-10,
        }
    }
}

/// Average conditional entropy of the unmeasured qubit after a projective
/// measurement along Bloch direction `(θ, φ)` on the measured qubit.
///
/// `blocks[i][j]` is the 2×2 block `⟨i|_m ρ |j⟩_m` acting on the other qubit.
fn conditional_entropy(blocks: &[[[[Complex64; 2]; 2]; 2]; 2], theta: f64, phi: f64) -> f64 {
    let (s, co) = (theta / 2.0).sin_cos();
    let e = Complex64::from_polar(1.0, phi);
    let outcomes = [[r(co), e * s], [r(s), -e * co]];
    let mut total = 0.0;
    for k in outcomes {
        let mut cond = [[ZERO; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let w = k[i].conj() * k[j];
                for (x, row) in cond.iter_mut().enumerate() {
                    for (y, entry) in row.iter_mut().enumerate() {
                        *entry += w * blocks[i][j][x][y];
                    }
                }
            }
        }
        let ev = eig2(&cond);
        let p = ev[0] + ev[1];
        if p <= 0.0 {
            continue;
        }
        total += entropy_of(&ev) + p * p.log2();
    }
    total
}

/// Ollivier–Zurek discord with rank-one projective measurements on `measured_qubit`.
pub fn discord(m: &DensityMatrix, measured_qubit: usize, options: &DiscordOptions) -> Result<f64> {
    require_two_qubits(m, "discord")?;
    if measured_qubit > 1 {
        return Err(Error::invalid(format!("measured qubit {measured_qubit} out of range")));
    }
    if options.theta_points < 2 || options.phi_points < 1 || options.tolerance.is_nan() || options.tolerance <= 0.0 {
        return Err(Error::invalid("discord grid needs ≥ 2 polar and ≥ 1 azimuthal points"));
    }
    let rho = if measured_qubit == 0 {
        m.clone()
    } else {
        m.permute_qubits(&[1, 0])?
    };
    let mat = rho.matrix();
    let mut blocks = [[[[ZERO; 2]; 2]; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for x in 0..2 {
                for y in 0..2 {
                    blocks[i][j][x][y] = mat[(2 * i + x, 2 * j + y)];
                }
            }
        }
    }
    let s_total = von_neumann_entropy(mat);
    let s_measured = von_neumann_entropy(rho.partial_trace(&[0])?.matrix());

    let f = |theta: f64, phi: f64| conditional_entropy(&blocks, theta, phi);
    let dtheta = PI / (options.theta_points - 1) as f64;
    let dphi = TAU / options.phi_points as f64;
    let mut best = (0.0, 0.0, f64::INFINITY);
    for i in 0..options.theta_points {
        for j in 0..options.phi_points {
            let (t, p) = (i as f64 * dtheta, j as f64 * dphi);
            let v = f(t, p);
            if v < best.2 {
                best = (t, p, v);
            }
        }
    }
    // compass search with step halving
    let mut step = [dtheta, dphi];
    while step[0] > options.tolerance || step[1] > options.tolerance {
        let mut improved = false;
        for (dt, dp) in [(step[0], 0.0), (-step[0], 0.0), (0.0, step[1]), (0.0, -step[1])] {
            let v = f(best.0 + dt, best.1 + dp);
            if v < best.2 {
                best = (best.0 + dt, best.1 + dp, v);
                improved = true;
            }
        }
        if !improved {
            step = step.map(|s| s / 2.0);
        }
    }
    // nonnegative in exact arithmetic; clip roundoff
    Ok((s_measured - s_total + best.2).max(0.0))
}

/// Named metrics accepted by the command line and the Monte Carlo driver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    Purity,
    Fidelity,
    ProcessFidelity,
    ProcessFidelityOptimized,
    Concurrence,
    LogNegativity,
    DiscordQ1,
    DiscordQ2,
    /// Trace of the estimate; 1 by construction.
    Trace,
}

impl Metric {
    pub const ALL: [Metric; 9] = [
        Metric::Purity,
        Metric::Fidelity,
        Metric::ProcessFidelity,
        Metric::ProcessFidelityOptimized,
        Metric::Concurrence,
        Metric::LogNegativity,
        Metric::DiscordQ1,
        Metric::DiscordQ2,
        Metric::Trace,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::Purity => "purity",
            Metric::Fidelity => "fidelity",
            Metric::ProcessFidelity => "process-fidelity",
            Metric::ProcessFidelityOptimized => "process-fidelity-optimized",
            Metric::Concurrence => "concurrence",
            Metric::LogNegativity => "log-negativity",
            Metric::DiscordQ1 => "discord-q1",
            Metric::DiscordQ2 => "discord-q2",
            Metric::Trace => "trace",
        }
    }

    pub fn needs_reference(&self) -> bool {
        matches!(
            self,
            Metric::Fidelity | Metric::ProcessFidelity | Metric::ProcessFidelityOptimized
        )
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown metric {s:?}")))
    }
}

/// A reconstructed or ideal object a metric can be evaluated on.
#[derive(Debug, Clone)]
pub enum Estimate {
    State(DensityMatrix),
    Process(ChoiProcess),
}

impl Estimate {
    pub fn operator(&self) -> &CMatrix {
        match self {
            Estimate::State(s) => s.matrix(),
            Estimate::Process(p) => p.matrix(),
        }
    }
}

/// Evaluates `metric` on `estimate`, with `reference` for the fidelity metrics.
pub fn evaluate(metric: Metric, estimate: &Estimate, reference: Option<&Estimate>) -> Result<f64> {
    let need_state = |what: &str| -> Result<&DensityMatrix> {
        match estimate {
            Estimate::State(s) => Ok(s),
            Estimate::Process(_) => Err(Error::invalid(format!("{what} needs a state, got a process"))),
        }
    };
    match metric {
        Metric::Purity => Ok(linalg::trace_of_product(estimate.operator(), estimate.operator()).re),
        Metric::Trace => Ok(linalg::trace(estimate.operator()).re),
        Metric::Concurrence => concurrence(need_state("concurrence")?),
        Metric::LogNegativity => log_negativity(need_state("log-negativity")?),
        Metric::DiscordQ1 => discord(need_state("discord")?, 0, &DiscordOptions::default()),
        Metric::DiscordQ2 => discord(need_state("discord")?, 1, &DiscordOptions::default()),
        Metric::Fidelity | Metric::ProcessFidelity | Metric::ProcessFidelityOptimized => {
            let reference = reference
                .ok_or_else(|| Error::invalid(format!("metric {metric} needs a reference")))?;
            match (metric, estimate, reference) {
                (Metric::Fidelity, Estimate::State(a), Estimate::State(b)) => fidelity(a, b),
                (Metric::ProcessFidelity, Estimate::Process(a), Estimate::Process(b))
                | (Metric::Fidelity, Estimate::Process(a), Estimate::Process(b)) => {
                    process_fidelity(a, b)
                }
                (Metric::ProcessFidelityOptimized, Estimate::Process(a), Estimate::Process(b)) => {
                    Ok(phase_optimized_fidelity(a, b)?.0)
                }
                _ => Err(Error::invalid(format!(
                    "metric {metric} does not apply to this estimate/reference pair"
                ))),
            }
        }
    }
}

/// One evaluated metric, optionally with a Monte Carlo standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub name: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std: Option<f64>,
    #[serde(default, skip_serializing_if = "serde_json::Map::is_empty")]
    pub metadata: serde_json::Map<String, serde_json::Value>,
}

impl MetricReport {
    pub fn new(name: impl Into<String>, value: f64) -> Self {
        MetricReport {
            name: name.into(),
            value,
            std: None,
            metadata: serde_json::Map::new(),
        }
    }

    pub fn with_std(mut self, std: f64) -> Self {
        self.std = Some(std);
        self
    }

    pub fn with_meta(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.metadata.insert(key.to_string(), value.into());
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gate::{self, PresetName, TargetKind};
    use crate::state::{product_state, PureState};

    fn rho(labels: &str) -> DensityMatrix {
        product_state(labels).unwrap().to_density().unwrap()
    }

    #[test]
    fn purity_examples() {
        assert!((purity(&rho("H+")) - 1.0).abs() < 1e-15);
        assert!((purity(&DensityMatrix::maximally_mixed(2).unwrap()) - 0.25).abs() < 1e-15);
        for p in PresetName::ALL {
            let chi = gate::ideal_choi(gate::preset(p).settings).unwrap();
            assert!((purity(&chi) - 1.0).abs() < 1e-12, "{p}");
        }
    }

    #[test]
    fn fidelity_examples() {
        let a = rho("+R");
        assert!((fidelity(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        assert!(fidelity(&rho("H"), &rho("V")).unwrap().abs() < 1e-15);
        let phi = gate::target_state(TargetKind::PhiPlus).to_density().unwrap();
        let mixed = DensityMatrix::maximally_mixed(2).unwrap();
        assert!((fidelity(&phi, &mixed).unwrap() - 0.25).abs() < 1e-14);
        assert!((fidelity(&mixed, &phi).unwrap() - 0.25).abs() < 1e-14);
        assert!(matches!(fidelity(&rho("H"), &mixed), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn concurrence_examples() {
        for kind in [TargetKind::PhiPlus, TargetKind::PsiPlus] {
            let bell = gate::target_state(kind).to_density().unwrap();
            assert!((concurrence(&bell).unwrap() - 1.0).abs() < 1e-12);
        }
        assert!(concurrence(&rho("+R")).unwrap().abs() < 1e-12);
        assert!(concurrence(&DensityMatrix::maximally_mixed(3).unwrap()).is_err());
    }

    #[test]
    fn log_negativity_examples() {
        let bell = gate::target_state(TargetKind::PhiPlus).to_density().unwrap();
        assert!((log_negativity(&bell).unwrap() - 1.0).abs() < 1e-12);
        assert!(log_negativity(&rho("HV")).unwrap().abs() < 1e-14);
        assert!(log_negativity(&DensityMatrix::maximally_mixed(1).unwrap()).is_err());
    }

    #[test]
    fn discord_of_classical_and_product_states() {
        let m = (rho("HH").into_matrix() + rho("VV").into_matrix()) * r(0.5);
        let classical = DensityMatrix::new(m).unwrap();
        let opts = DiscordOptions::default();
        assert!(discord(&classical, 0, &opts).unwrap().abs() < 1e-6);
        assert!(discord(&classical, 1, &opts).unwrap().abs() < 1e-6);
        let product = rho("+R");
        assert!(discord(&product, 0, &opts).unwrap().abs() < 1e-6);
        assert!(discord(&product, 1, &opts).unwrap().abs() < 1e-6);
        assert!(discord(&product, 2, &opts).is_err());
    }

    #[test]
    fn discord_of_bell_state_is_one_bit() {
        let bell = gate::target_state(TargetKind::PhiPlus).to_density().unwrap();
        let d = discord(&bell, 1, &DiscordOptions::default()).unwrap();
        assert!((d - 1.0).abs() < 1e-8, "{d}");
    }

    #[test]
    fn phase_correction_canonical_range() {
        let p = PhaseCorrection::new([-0.5, 7.0, TAU, 0.0]).unwrap();
        for v in p.phases() {
            assert!((0.0..TAU).contains(&v));
        }
        assert!(PhaseCorrection::new([f64::NAN, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn optimal_choi_needs_no_correction() {
        let chi = gate::ideal_choi(gate::preset(PresetName::Ghz).settings).unwrap();
        let (f, _) = phase_optimized_fidelity(&chi, &chi).unwrap();
        assert!((f - 1.0).abs() < 1e-12);
    }

    #[test]
    fn metric_names_round_trip() {
        for m in Metric::ALL {
            assert_eq!(m.as_str().parse::<Metric>().unwrap(), m);
        }
        assert!("entropy".parse::<Metric>().is_err());
    }

    #[test]
    fn evaluate_rejects_mismatched_inputs() {
        let s = Estimate::State(rho("HH"));
        assert!(evaluate(Metric::Fidelity, &s, None).is_err());
        let p = Estimate::Process(ChoiProcess::identity());
        assert!(evaluate(Metric::Concurrence, &p, None).is_err());
        assert!((evaluate(Metric::Trace, &p, None).unwrap() - 1.0).abs() < 1e-15);
        let psi = PureState::from_real(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        let e = Estimate::State(psi.to_density().unwrap());
        assert!((evaluate(Metric::Fidelity, &e, Some(&s)).unwrap() - 1.0).abs() < 1e-15);
    }
}
