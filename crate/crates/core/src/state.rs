//! Pure states, density matrices and Choi process matrices, plus the channel
//! action `ρ_out ∝ Tr_in[(ρ_inᵀ ⊗ 𝟙) χ]`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, c, r, CMatrix, CVector, ZERO};

pub const MAX_QUBITS: usize = 4;

/// Tolerance for the Hermitian / trace / PSD invariants of density and Choi matrices.
pub const STATE_TOLERANCE: f64 = 1e-10;

/// Post-selection probabilities at or below this are treated as "never succeeds".
pub const DEGENERATE_NORM: f64 = 1e-14;

const NORM_TOLERANCE: f64 = 1e-12;

/// Computational-basis amplitudes of an `n`-qubit polarization state.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    qubits: usize,
    amplitudes: CVector,
    normalized: bool,
}

impl PureState {
    /// Accepts any amplitude vector of length `2^n` (n = 1..=4) with norm² ≤ 1.
    pub fn new(amplitudes: CVector) -> Result<Self> {
        let qubits = linalg::qubits_for_dim(amplitudes.len())
            .filter(|&n| n <= MAX_QUBITS)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "state of length {} is not a 1..={MAX_QUBITS} qubit register",
                    amplitudes.len()
                ))
            })?;
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::invalid("state contains non-finite amplitudes"));
        }
        let norm_sqr = amplitudes.norm_squared();
        if norm_sqr > 1.0 + NORM_TOLERANCE {
            return Err(Error::invalid(format!(
                "state norm² {norm_sqr} exceeds 1; normalize it first"
            )));
        }
        Ok(PureState {
            qubits,
            normalized: (norm_sqr - 1.0).abs() <= NORM_TOLERANCE,
            amplitudes,
        })
    }

    /// Builds a state from arbitrary amplitudes and normalizes it.
    pub fn normalized_from(amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm * norm <= DEGENERATE_NORM {
            return Err(Error::degenerate("zero state vector", norm * norm));
        }
        PureState::new(amplitudes / r(norm))
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        PureState::new(CVector::from_iterator(
            amplitudes.len(),
            amplitudes.iter().map(|&a| r(a)),
        ))
    }

    /// Computational basis state from a bit string, qubit 0 first.
    pub fn basis(bits: &[u8]) -> Result<Self> {
        let idx = bits.iter().fold(0usize, |acc, &b| (acc << 1) | (b as usize & 1));
        let mut v = CVector::zeros(1 << bits.len());
        v[idx] = r(1.0);
        PureState::new(v)
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn norm_squared(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    pub fn amplitude(&self, bits: &[u8]) -> Complex64 {
        let idx = bits.iter().fold(0usize, |acc, &b| (acc << 1) | (b as usize & 1));
        self.amplitudes[idx]
    }

    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        PureState::new(linalg::tensor_vectors(&self.amplitudes, &other.amplitudes))
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// `|⟨a|b⟩|²`, insensitive to global phase.
    pub fn overlap_fidelity(&self, other: &PureState) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn permute_qubits(&self, perm: &[usize]) -> Result<PureState> {
        PureState::new(linalg::permute_qubits_vector(&self.amplitudes, perm)?)
    }

    pub fn to_density(&self) -> Result<DensityMatrix> {
        if !self.normalized {
            return Err(Error::invalid("density matrix requires a normalized state"));
        }
        Ok(DensityMatrix {
            qubits: self.qubits,
            matrix: linalg::projector(&self.amplitudes),
        })
    }
}

/// Rescales to unit norm; returns the norm² before rescaling, which is the
/// post-selection success probability of whatever produced `s`.
pub fn normalize_state(s: &PureState) -> Result<(PureState, f64)> {
    let norm_sqr = s.norm_squared();
    if norm_sqr <= DEGENERATE_NORM {
        return Err(Error::degenerate("post-selection never succeeds", norm_sqr));
    }
    let out = PureState::new(s.amplitudes() / r(norm_sqr.sqrt()))?;
    Ok((out, norm_sqr))
}

/// Hermitian, PSD, unit-trace operator on `n` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    qubits: usize,
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let qubits = register_qubits(&matrix, "density matrix")?;
        check_state_invariants(&matrix, "density matrix")?;
        Ok(DensityMatrix { qubits, matrix })
    }

    /// Divides by the trace, then validates.
    pub fn from_unnormalized(matrix: CMatrix) -> Result<(Self, f64)> {
        let tr = linalg::trace(&matrix).re;
        if tr <= DEGENERATE_NORM {
            return Err(Error::degenerate("operator has vanishing trace", tr.max(0.0)));
        }
        let rho = DensityMatrix::new(linalg::hermitize(&(matrix / r(tr))))?;
        Ok((rho, tr))
    }

    pub fn maximally_mixed(qubits: usize) -> Result<Self> {
        if qubits == 0 || qubits > MAX_QUBITS {
            return Err(Error::invalid(format!("{qubits} qubits not supported")));
        }
        let d = 1 << qubits;
        Ok(DensityMatrix {
            qubits,
            matrix: CMatrix::identity(d, d) * r(1.0 / d as f64),
        })
    }

    pub fn from_pure(state: &PureState) -> Result<Self> {
        state.to_density()
    }

    /// Skips validation; callers must guarantee the invariants.
    pub(crate) fn from_parts(qubits: usize, matrix: CMatrix) -> Self {
        DensityMatrix { qubits, matrix }
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn tensor(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        DensityMatrix::new(linalg::tensor_product(&self.matrix, &other.matrix))
    }

    /// Reduced state on `keep`, a nonempty strict subset of the qubits.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let m = linalg::partial_trace_matrix(&self.matrix, keep)?;
        let qubits = linalg::qubits_for_dim(m.nrows()).expect("power of two");
        Ok(DensityMatrix { qubits, matrix: m })
    }

    /// Transpose on one qubit of a two-qubit state; the result need not be PSD.
    pub fn partial_transpose(&self, subsystem: usize) -> Result<CMatrix> {
        if self.qubits != 2 {
            return Err(Error::invalid(format!(
                "partial transpose is defined for two-qubit states, got {}",
                self.qubits
            )));
        }
        linalg::partial_transpose_matrix(&self.matrix, subsystem)
    }

    pub fn permute_qubits(&self, perm: &[usize]) -> Result<DensityMatrix> {
        Ok(DensityMatrix {
            qubits: self.qubits,
            matrix: linalg::permute_qubits_matrix(&self.matrix, perm)?,
        })
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn expectation(&self, state: &PureState) -> f64 {
        let v = state.amplitudes();
        v.dotc(&(&self.matrix * v)).re
    }
}

fn register_qubits(m: &CMatrix, what: &str) -> Result<usize> {
    if !m.is_square() {
        return Err(Error::invalid(format!("{what} must be square")));
    }
    linalg::qubits_for_dim(m.nrows())
        .filter(|&n| n <= MAX_QUBITS)
        .ok_or_else(|| Error::invalid(format!("{what} of dimension {} not supported", m.nrows())))
}

fn check_state_invariants(m: &CMatrix, what: &str) -> Result<()> {
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::invalid(format!("{what} contains non-finite entries")));
    }
    let defect = linalg::hermitian_defect(m);
    if defect > STATE_TOLERANCE {
        return Err(Error::domain(format!("{what} is not Hermitian (defect {defect:e})")));
    }
    let tr = linalg::trace(m);
    if (tr - r(1.0)).norm() > STATE_TOLERANCE {
        return Err(Error::domain(format!("{what} has trace {tr}, expected 1")));
    }
    let min = linalg::eigvalsh(m)[0];
    if min < -STATE_TOLERANCE {
        return Err(Error::domain(format!("{what} has negative eigenvalue {min:e}")));
    }
    Ok(())
}

/// Two-qubit process in the Choi representation on `H_in ⊗ H_out`
/// (basis `|ab⟩_in |cd⟩_out`, input first).
///
/// The stored matrix has unit trace. `success_scale` carries the trace that
/// was divided out, measured relative to the identity channel, so a
/// trace-preserving channel has scale 1 and the post-selected gates have
/// scale `Tr[G†G]/4`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiProcess {
    choi: CMatrix,
    trace_normalized: bool,
    success_scale: f64,
}

pub const CHOI_DIM: usize = 16;

impl ChoiProcess {
    /// Validates a unit-trace 16×16 Choi matrix.
    pub fn new(choi: CMatrix, success_scale: f64) -> Result<Self> {
        if choi.shape() != (CHOI_DIM, CHOI_DIM) {
            return Err(Error::invalid(format!(
                "Choi matrix must be 16x16, got {}x{}",
                choi.nrows(),
                choi.ncols()
            )));
        }
        if !(success_scale.is_finite() && success_scale >= 0.0) {
            return Err(Error::invalid(format!("success scale {success_scale} must be nonnegative")));
        }
        check_state_invariants(&choi, "Choi matrix")?;
        Ok(ChoiProcess {
            choi,
            trace_normalized: true,
            success_scale,
        })
    }

    /// Takes a Choi matrix normalized so that the identity channel has unit
    /// trace and splits off its trace as the success scale.
    pub fn from_raw(raw: CMatrix) -> Result<Self> {
        if raw.shape() != (CHOI_DIM, CHOI_DIM) {
            return Err(Error::invalid("Choi matrix must be 16x16"));
        }
        let scale = linalg::trace(&raw).re;
        if scale <= DEGENERATE_NORM {
            return Err(Error::degenerate("process annihilates every input", scale.max(0.0)));
        }
        ChoiProcess::new(linalg::hermitize(&(raw / r(scale))), scale)
    }

    /// Choi matrix of `ρ ↦ K ρ K†` for a 4×4 operator `K`, built from
    /// `(𝟙 ⊗ K)|ψ⁺⟩` with the normalized maximally entangled `|ψ⁺⟩`.
    pub fn from_operator(k: &CMatrix) -> Result<Self> {
        if k.shape() != (4, 4) {
            return Err(Error::invalid("two-qubit operator must be 4x4"));
        }
        let v = CVector::from_fn(CHOI_DIM, |idx, _| {
            let (input, output) = (idx / 4, idx % 4);
            k[(output, input)] * 0.5
        });
        let norm_sqr = v.norm_squared();
        if norm_sqr <= DEGENERATE_NORM {
            return Err(Error::degenerate("operator is identically zero", norm_sqr));
        }
        let choi = linalg::projector(&(&v / r(norm_sqr.sqrt())));
        Ok(ChoiProcess {
            choi,
            trace_normalized: true,
            success_scale: norm_sqr,
        })
    }

    pub fn identity() -> Self {
        ChoiProcess::from_operator(&CMatrix::identity(4, 4)).expect("identity is valid")
    }

    pub(crate) fn from_parts(choi: CMatrix, success_scale: f64) -> Self {
        ChoiProcess {
            choi,
            trace_normalized: true,
            success_scale,
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.choi
    }

    pub fn success_scale(&self) -> f64 {
        self.success_scale
    }

    pub fn is_trace_normalized(&self) -> bool {
        self.trace_normalized
    }

    pub fn with_success_scale(&self, success_scale: f64) -> Self {
        ChoiProcess {
            success_scale,
            ..self.clone()
        }
    }
}

/// Unnormalized output of `chi` acting on qubits 0 and 1 of `rho`
/// (dimension `4·rest`), scaled so the identity channel preserves trace.
fn channel_on_leading_pair(rho: &CMatrix, chi: &ChoiProcess) -> CMatrix {
    let dim = rho.nrows();
    let rest = dim / 4;
    let choi = chi.matrix();
    let weight = r(4.0 * chi.success_scale());
    let mut out = CMatrix::zeros(dim, dim);
    // out[(c,r),(d,r')] = Σ_ab ρ[(b,r),(a,r')] χ[(b,c),(a,d)]
    for b in 0..4 {
        for a in 0..4 {
            for cc in 0..4 {
                for d in 0..4 {
                    let k = choi[(b * 4 + cc, a * 4 + d)];
                    if k == ZERO {
                        continue;
                    }
                    let k = k * weight;
                    for r1 in 0..rest {
                        for r2 in 0..rest {
                            out[(cc * rest + r1, d * rest + r2)] +=
                                rho[(b * rest + r1, a * rest + r2)] * k;
                        }
                    }
                }
            }
        }
    }
    out
}

fn normalize_output(out: CMatrix, qubits: usize) -> Result<(DensityMatrix, f64)> {
    let probability = linalg::trace(&out).re;
    if probability <= DEGENERATE_NORM {
        return Err(Error::degenerate("post-selection never succeeds", probability.max(0.0)));
    }
    let matrix = linalg::hermitize(&(out / r(probability)));
    Ok((DensityMatrix::from_parts(qubits, matrix), probability))
}

/// Applies a two-qubit process to a two-qubit state. Returns the normalized
/// output and the success probability (1 for the identity channel).
pub fn apply_choi_channel(rho_in: &DensityMatrix, chi: &ChoiProcess) -> Result<(DensityMatrix, f64)> {
    if rho_in.qubits() != 2 {
        return Err(Error::invalid(format!(
            "channel input must be two qubits, got {}",
            rho_in.qubits()
        )));
    }
    normalize_output(channel_on_leading_pair(rho_in.matrix(), chi), 2)
}

/// Applies a two-qubit process to `targets` of an `n`-qubit state, identity elsewhere.
/// `targets.0` plays the role of the channel's first qubit.
pub fn embed_two_qubit_channel(
    rho: &DensityMatrix,
    chi: &ChoiProcess,
    targets: (usize, usize),
) -> Result<(DensityMatrix, f64)> {
    let n = rho.qubits();
    let (t0, t1) = targets;
    if n < 2 {
        return Err(Error::invalid("embedding needs at least two qubits"));
    }
    if t0 == t1 {
        return Err(Error::invalid(format!("repeated target qubit {t0}")));
    }
    if t0 >= n || t1 >= n {
        return Err(Error::invalid(format!("targets ({t0}, {t1}) out of range for {n} qubits")));
    }
    let mut perm = vec![t0, t1];
    perm.extend((0..n).filter(|&q| q != t0 && q != t1));
    let mut inverse = vec![0; n];
    for (slot, &q) in perm.iter().enumerate() {
        inverse[q] = slot;
    }
    let front = linalg::permute_qubits_matrix(rho.matrix(), &perm)?;
    let out = channel_on_leading_pair(&front, chi);
    let back = linalg::permute_qubits_matrix(&out, &inverse)?;
    normalize_output(back, n)
}

/// The six single-qubit polarization states used throughout.
pub fn polarization_ket(label: char) -> Option<CVector> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let (a, b) = match label {
        'H' => (r(1.0), ZERO),
        'V' => (ZERO, r(1.0)),
        '+' => (r(s), r(s)),
        '-' => (r(s), r(-s)),
        'R' => (r(s), c(0.0, s)),
        'L' => (r(s), c(0.0, -s)),
        _ => return None,
    };
    Some(CVector::from_vec(vec![a, b]))
}

/// Product state from a string of polarization labels, e.g. `"--"` or `"H+"`.
pub fn product_state(labels: &str) -> Result<PureState> {
    let mut v = CVector::from_vec(vec![r(1.0)]);
    for ch in labels.chars() {
        let k = polarization_ket(ch)
            .ok_or_else(|| Error::invalid(format!("unknown polarization label {ch:?}")))?;
        v = linalg::tensor_vectors(&v, &k);
    }
    PureState::new(v)
}
