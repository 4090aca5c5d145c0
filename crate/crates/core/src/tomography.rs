//! Coincidence-count tomography: the 36 × 9 preparation/measurement grid,
//! Poisson count simulation, iterative maximum-likelihood reconstruction of
//! two-qubit states and Choi matrices, and Monte Carlo error bars.

use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use num_complex::Complex64;

use crate::linalg::{self, r, CMatrix, CVector, ZERO};
use crate::metrics::{self, Estimate, Metric};
use crate::seed;
use crate::state::{self, apply_choi_channel, ChoiProcess, DensityMatrix, PureState};

/// Single-qubit preparation states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PrepLabel {
    H,
    V,
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
    R,
    L,
}

impl PrepLabel {
    pub const ALL: [PrepLabel; 6] = [
        PrepLabel::H,
        PrepLabel::V,
        PrepLabel::Plus,
        PrepLabel::Minus,
        PrepLabel::R,
        PrepLabel::L,
    ];

    pub fn symbol(&self) -> char {
        match self {
            PrepLabel::H => 'H',
            PrepLabel::V => 'V',
            PrepLabel::Plus => '+',
            PrepLabel::Minus => '-',
            PrepLabel::R => 'R',
            PrepLabel::L => 'L',
        }
    }

    pub fn ket(&self) -> CVector {
        state::polarization_ket(self.symbol()).expect("known label")
    }
}

impl FromStr for PrepLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PrepLabel::ALL
            .into_iter()
            .find(|l| s.len() == 1 && s.starts_with(l.symbol()))
            .ok_or_else(|| Error::invalid(format!("unknown preparation label {s:?}")))
    }
}

/// Single-qubit measurement bases: Z = {H, V}, X = {+, −}, Y = {R, L}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BasisLabel {
    Z,
    X,
    Y,
}

impl BasisLabel {
    pub const ALL: [BasisLabel; 3] = [BasisLabel::Z, BasisLabel::X, BasisLabel::Y];

    /// Basis state for outcome bit 0 (first-listed) or 1.
    pub fn ket(&self, outcome: usize) -> CVector {
        let label = match (self, outcome) {
            (BasisLabel::Z, 0) => 'H',
            (BasisLabel::Z, _) => 'V',
            (BasisLabel::X, 0) => '+',
            (BasisLabel::X, _) => '-',
            (BasisLabel::Y, 0) => 'R',
            (BasisLabel::Y, _) => 'L',
        };
        state::polarization_ket(label).expect("known label")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PreparationSetting(pub [PrepLabel; 2]);

impl PreparationSetting {
    pub fn state(&self) -> PureState {
        PureState::new(linalg::tensor_vectors(&self.0[0].ket(), &self.0[1].ket())).expect("unit norm")
    }

    pub fn index(&self) -> usize {
        let pos = |l: PrepLabel| PrepLabel::ALL.iter().position(|&x| x == l).expect("listed");
        pos(self.0[0]) * 6 + pos(self.0[1])
    }
}

impl fmt::Display for PreparationSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.0[0].symbol(), self.0[1].symbol())
    }
}

impl FromStr for PreparationSetting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let chars: Vec<String> = s.chars().map(String::from).collect();
        if chars.len() != 2 {
            return Err(Error::invalid(format!("preparation {s:?} must have two labels")));
        }
        Ok(PreparationSetting([chars[0].parse()?, chars[1].parse()?]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MeasurementSetting(pub [BasisLabel; 2]);

impl MeasurementSetting {
    /// Two-qubit outcome vector; outcome bits are `(first qubit, second qubit)`.
    pub fn outcome_vector(&self, outcome: usize) -> CVector {
        linalg::tensor_vectors(&self.0[0].ket(outcome >> 1), &self.0[1].ket(outcome & 1))
    }

    pub fn projector(&self, outcome: usize) -> CMatrix {
        linalg::projector(&self.outcome_vector(outcome))
    }

    pub fn index(&self) -> usize {
        let pos = |b: BasisLabel| BasisLabel::ALL.iter().position(|&x| x == b).expect("listed");
        pos(self.0[0]) * 3 + pos(self.0[1])
    }
}

pub fn all_preparations() -> Vec<PreparationSetting> {
    PrepLabel::ALL
        .iter()
        .flat_map(|&a| PrepLabel::ALL.iter().map(move |&b| PreparationSetting([a, b])))
        .collect()
}

pub fn all_bases() -> Vec<MeasurementSetting> {
    BasisLabel::ALL
        .iter()
        .flat_map(|&a| BasisLabel::ALL.iter().map(move |&b| MeasurementSetting([a, b])))
        .collect()
}

/// All 324 setting pairs, preparation-major.
pub fn enumerate_settings() -> Vec<(PreparationSetting, MeasurementSetting)> {
    let bases = all_bases();
    all_preparations()
        .into_iter()
        .flat_map(|p| bases.iter().map(move |&b| (p, b)))
        .collect()
}

/// Outcome probabilities of a measurement on a two-qubit state.
pub fn state_outcome_probabilities(rho: &DensityMatrix, basis: MeasurementSetting) -> [f64; 4] {
    let m = rho.matrix();
    std::array::from_fn(|o| {
        let v = basis.outcome_vector(o);
        v.dotc(&(m * &v)).re.max(0.0)
    })
}

/// Outcome probabilities conditioned on coincidence success.
pub fn outcome_probabilities(
    chi: &ChoiProcess,
    prep: PreparationSetting,
    basis: MeasurementSetting,
) -> Result<[f64; 4]> {
    let rho_in = prep.state().to_density()?;
    let (rho_out, _) = apply_choi_channel(&rho_in, chi)?;
    Ok(state_outcome_probabilities(&rho_out, basis))
}

/// Counts for the four outcomes `00, 01, 10, 11`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OutcomeCounts {
    #[serde(rename = "00")]
    pub c00: u64,
    #[serde(rename = "01")]
    pub c01: u64,
    #[serde(rename = "10")]
    pub c10: u64,
    #[serde(rename = "11")]
    pub c11: u64,
}

impl OutcomeCounts {
    pub fn from_array(a: [u64; 4]) -> Self {
        OutcomeCounts {
            c00: a[0],
            c01: a[1],
            c10: a[2],
            c11: a[3],
        }
    }

    pub fn to_array(&self) -> [u64; 4] {
        [self.c00, self.c01, self.c10, self.c11]
    }

    pub fn total(&self) -> u64 {
        self.to_array().iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    /// Absent for state-tomography data with no labelled preparation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prep: Option<PreparationSetting>,
    pub basis: MeasurementSetting,
    pub counts: OutcomeCounts,
}

/// Coincidence counts indexed by preparation, basis and outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceDataset {
    pub mean_counts: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub records: Vec<CountRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<serde_json::Value>,
}

impl CoincidenceDataset {
    pub fn total_counts(&self) -> u64 {
        self.records.iter().map(|r| r.counts.total()).sum()
    }

    /// True when every one of the 324 setting pairs is present exactly once.
    pub fn is_process_dataset(&self) -> bool {
        self.process_table().is_ok()
    }

    /// Counts laid out as `[prep index][basis index][outcome]`.
    pub fn process_table(&self) -> Result<Vec<[[u64; 4]; 9]>> {
        if !(self.mean_counts > 0.0 && self.mean_counts.is_finite()) {
            return Err(Error::invalid("dataset mean_counts must be positive"));
        }
        let mut table = vec![[[0u64; 4]; 9]; 36];
        let mut seen = vec![[false; 9]; 36];
        for rec in &self.records {
            let prep = rec
                .prep
                .ok_or_else(|| Error::invalid("process data needs a preparation on every record"))?;
            let (p, b) = (prep.index(), rec.basis.index());
            if seen[p][b] {
                return Err(Error::invalid(format!(
                    "duplicate record for preparation {prep}, basis {:?}",
                    rec.basis.0
                )));
            }
            seen[p][b] = true;
            table[p][b] = rec.counts.to_array();
        }
        let missing = seen.iter().flatten().filter(|s| !**s).count();
        if missing > 0 {
            return Err(Error::invalid(format!(
                "dataset is missing {missing} of 324 preparation/basis settings"
            )));
        }
        Ok(table)
    }

    /// Distinct preparations in the records, in first-seen order.
    pub fn preparations(&self) -> Vec<Option<PreparationSetting>> {
        let mut out: Vec<Option<PreparationSetting>> = Vec::new();
        for rec in &self.records {
            if !out.contains(&rec.prep) {
                out.push(rec.prep);
            }
        }
        out
    }

    /// The nine basis records of one preparation, `[basis index][outcome]`.
    ///
    /// With `prep = None` the dataset must contain exactly one preparation.
    pub fn state_table(&self, prep: Option<PreparationSetting>) -> Result<[[u64; 4]; 9]> {
        let prep = match prep {
            Some(p) => Some(p),
            None => {
                let preps = self.preparations();
                if preps.len() != 1 {
                    return Err(Error::invalid(format!(
                        "dataset holds {} preparations; choose one for state reconstruction",
                        preps.len()
                    )));
                }
                preps[0]
            }
        };
        let mut table = [[0u64; 4]; 9];
        let mut seen = [false; 9];
        for rec in self.records.iter().filter(|r| r.prep == prep) {
            let b = rec.basis.index();
            if seen[b] {
                return Err(Error::invalid(format!("duplicate record for basis {:?}", rec.basis.0)));
            }
            seen[b] = true;
            table[b] = rec.counts.to_array();
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::invalid("state data must cover all 9 measurement bases"));
        }
        Ok(table)
    }

    /// Post-selection success probability implied by the count rate of one
    /// preparation relative to `mean_counts`.
    pub fn success_probability(&self, prep: Option<PreparationSetting>) -> Result<f64> {
        let table = self.state_table(prep)?;
        let total: u64 = table.iter().flatten().sum();
        Ok(total as f64 / (9.0 * self.mean_counts))
    }

    /// Process success scale from the total count rate: the 36 preparations
    /// sum to `9·𝟙`, so the expected total is `324 · mean_counts · scale`.
    pub fn process_success_scale(&self) -> Result<f64> {
        self.process_table()?;
        Ok(self.total_counts() as f64 / (324.0 * self.mean_counts))
    }

    /// Redraws every count as Poisson with the observed count as its mean.
    pub fn resample(&self, seed: u64) -> CoincidenceDataset {
        let mut rng = seed::rng(seed);
        let records = self
            .records
            .iter()
            .map(|rec| CountRecord {
                counts: OutcomeCounts::from_array(
                    rec.counts.to_array().map(|n| poisson_draw(n as f64, &mut rng)),
                ),
                ..rec.clone()
            })
            .collect();
        CoincidenceDataset {
            mean_counts: self.mean_counts,
            seed: Some(seed),
            records,
            metadata: None,
        }
    }
}

fn poisson_draw(mean: f64, rng: &mut impl rand::Rng) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let dist = Poisson::new(mean).expect("positive finite mean");
    let x: f64 = dist.sample(rng);
    x as u64
}

fn check_mean_counts(mean_counts: f64) -> Result<()> {
    if !(mean_counts > 0.0 && mean_counts.is_finite()) {
        return Err(Error::invalid(format!("mean_counts must be positive, got {mean_counts}")));
    }
    Ok(())
}

/// Simulates the full 324-setting process tomography experiment.
///
/// Expected count of outcome `o` = `mean_counts × p_success(prep) × p(o)`;
/// each count is an independent Poisson draw from a generator seeded by `seed`.
pub fn simulate_counts(chi: &ChoiProcess, mean_counts: f64, seed: u64) -> Result<CoincidenceDataset> {
    check_mean_counts(mean_counts)?;
    let mut rng = seed::rng(seed::derive_seed(seed, "simulate-counts"));
    let bases = all_bases();
    let mut records = Vec::with_capacity(324);
    for prep in all_preparations() {
        let rho_in = prep.state().to_density()?;
        let output = match apply_choi_channel(&rho_in, chi) {
            Ok(out) => Some(out),
            Err(Error::Degenerate { .. }) => None,
            Err(e) => return Err(e),
        };
        for &basis in &bases {
            let counts = match &output {
                Some((rho_out, p_success)) => {
                    let probs = state_outcome_probabilities(rho_out, basis);
                    probs.map(|p| poisson_draw(mean_counts * p_success * p, &mut rng))
                }
                None => [0; 4],
            };
            records.push(CountRecord {
                prep: Some(prep),
                basis,
                counts: OutcomeCounts::from_array(counts),
            });
        }
    }
    Ok(CoincidenceDataset {
        mean_counts,
        seed: Some(seed),
        records,
        metadata: None,
    })
}

/// Simulates nine-basis state tomography of `rho`, detected with overall
/// rate `mean_counts × success_probability` per basis.
pub fn simulate_state_counts(
    rho: &DensityMatrix,
    success_probability: f64,
    mean_counts: f64,
    seed: u64,
) -> Result<CoincidenceDataset> {
    check_mean_counts(mean_counts)?;
    if rho.qubits() != 2 {
        return Err(Error::invalid("state tomography is two-qubit"));
    }
    if !(0.0..=1.0 + 1e-12).contains(&success_probability) {
        return Err(Error::invalid(format!(
            "success probability {success_probability} outside [0, 1]"
        )));
    }
    let mut rng = seed::rng(seed::derive_seed(seed, "simulate-state-counts"));
    let records = all_bases()
        .into_iter()
        .map(|basis| {
            let probs = state_outcome_probabilities(rho, basis);
            CountRecord {
                prep: None,
                basis,
                counts: OutcomeCounts::from_array(
                    probs.map(|p| poisson_draw(mean_counts * success_probability * p, &mut rng)),
                ),
            }
        })
        .collect();
    Ok(CoincidenceDataset {
        mean_counts,
        seed: Some(seed),
        records,
        metadata: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MleOptions {
    /// Stop once the log-likelihood gain of an iteration falls below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for MleOptions {
    fn default() -> Self {
        MleOptions {
            tol: 1e-10,
            max_iter: 5000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReconstructionReport {
    pub estimate: Estimate,
    pub iterations: usize,
    pub final_log_likelihood: f64,
    pub converged: bool,
    /// Log-likelihood after initialization and after every accepted step.
    pub log_likelihoods: Vec<f64>,
}

impl ReconstructionReport {
    pub fn state(&self) -> Option<&DensityMatrix> {
        match &self.estimate {
            Estimate::State(s) => Some(s),
            Estimate::Process(_) => None,
        }
    }

    pub fn process(&self) -> Option<&ChoiProcess> {
        match &self.estimate {
            Estimate::Process(p) => Some(p),
            Estimate::State(_) => None,
        }
    }

    /// JSON summary without the estimate itself.
    pub fn summary(&self) -> serde_json::Value {
        let normalization = match self.estimate {
            Estimate::State(_) => "counts of the nine bases normalized jointly",
            Estimate::Process(_) => {
                "counts normalized jointly over all 324 settings, so relative preparation rates enter the fit; success scale = total counts / (324 * mean_counts)"
            }
        };
        serde_json::json!({
            "iterations": self.iterations,
            "final_log_likelihood": self.final_log_likelihood,
            "converged": self.converged,
            "count_normalization": normalization,
        })
    }
}

/// Rank-one measurement model `p_j = ⟨v_j|ρ|v_j⟩` whose effects sum to a
/// multiple of the identity.
trait MeasurementModel {
    fn dim(&self) -> usize;
    /// Sum of all effects, as a multiple of the identity.
    fn completeness(&self) -> f64;
    fn frequencies(&self) -> &[f64];
    fn probabilities(&self, rho: &CMatrix, out: &mut [f64]);
    /// `Σ_j w_j E_j`.
    fn weighted_sum(&self, weights: &[f64]) -> CMatrix;
}

struct StateModel {
    vectors: Vec<CVector>,
    freqs: Vec<f64>,
}

impl MeasurementModel for StateModel {
    fn dim(&self) -> usize {
        4
    }

    fn completeness(&self) -> f64 {
        9.0
    }

    fn frequencies(&self) -> &[f64] {
        &self.freqs
    }

    fn probabilities(&self, rho: &CMatrix, out: &mut [f64]) {
        for (v, p) in self.vectors.iter().zip(out.iter_mut()) {
            *p = v.dotc(&(rho * v)).re;
        }
    }

    fn weighted_sum(&self, weights: &[f64]) -> CMatrix {
        let mut acc = CMatrix::zeros(4, 4);
        for (v, &w) in self.vectors.iter().zip(weights) {
            if w != 0.0 {
                acc += linalg::projector(v) * r(w);
            }
        }
        acc
    }
}

/// Effects `|a₁a₂⟩⟨a₁a₂| ⊗ |b₁b₂⟩⟨b₁b₂|`, with `a` the conjugated
/// preparation kets (the transpose of the input state) and `b` the output
/// basis kets. Every effect is a product over the four qubits of the Choi
/// matrix, so probabilities and weighted sums factor qubit by qubit.
struct ProcessModel {
    /// Per qubit (input 1, input 2, output 1, output 2), its six single-qubit kets.
    kets: [[[Complex64; 2]; 6]; 4],
    /// Position in `freqs` of the effect with ket indices `(k₁, k₂, k₃, k₄)`,
    /// taken in lexicographic order.
    order: Vec<usize>,
    freqs: Vec<f64>,
}

impl ProcessModel {
    fn new(freqs: Vec<f64>) -> Self {
        let single = |v: CVector| [v[0], v[1]];
        let input: [[Complex64; 2]; 6] = PrepLabel::ALL.map(|l| single(l.ket().map(|z| z.conj())));
        let output: [[Complex64; 2]; 6] = std::array::from_fn(|k| single(BasisLabel::ALL[k / 2].ket(k % 2)));
        let mut order = Vec::with_capacity(1296);
        for a in 0..36 {
            for k1 in 0..6 {
                for k2 in 0..6 {
                    let basis = (k1 / 2) * 3 + k2 / 2;
                    let outcome = (k1 % 2) * 2 + k2 % 2;
                    order.push(a * 36 + basis * 4 + outcome);
                }
            }
        }
        ProcessModel {
            kets: [input, input, output, output],
            order,
            freqs,
        }
    }
}

/// For each `dim×dim` block of `src` and each ket `v`, contracts the leading
/// qubit: `out[r, c] = Σ_{x,y} v̄_x v_y m[(x, r), (y, c)]`.
fn contract_leading(src: &[Complex64], dim: usize, kets: &[[Complex64; 2]; 6]) -> Vec<Complex64> {
    let h = dim / 2;
    let block = dim * dim;
    let count = src.len() / block;
    let mut out = vec![ZERO; count * 6 * h * h];
    for (i, m) in src.chunks_exact(block).enumerate() {
        for (k, v) in kets.iter().enumerate() {
            let o = &mut out[(i * 6 + k) * h * h..(i * 6 + k + 1) * h * h];
            for x in 0..2 {
                for y in 0..2 {
                    let w = v[x].conj() * v[y];
                    for r in 0..h {
                        let row = &m[(x * h + r) * dim + y * h..(x * h + r) * dim + y * h + h];
                        for (oc, mc) in o[r * h..(r + 1) * h].iter_mut().zip(row) {
                            *oc += w * mc;
                        }
                    }
                }
            }
        }
    }
    out
}

/// Inverse of [`contract_leading`]: groups of six `h×h` blocks become one
/// `2h×2h` block `Σ_k |v_k⟩⟨v_k| ⊗ m_k`.
fn expand_leading(src: &[Complex64], h: usize, kets: &[[Complex64; 2]; 6]) -> Vec<Complex64> {
    let dim = 2 * h;
    let count = src.len() / (6 * h * h);
    let mut out = vec![ZERO; count * dim * dim];
    for i in 0..count {
        let o = &mut out[i * dim * dim..(i + 1) * dim * dim];
        for (k, v) in kets.iter().enumerate() {
            let m = &src[(i * 6 + k) * h * h..(i * 6 + k + 1) * h * h];
            for x in 0..2 {
                for y in 0..2 {
                    let w = v[x] * v[y].conj();
                    for r in 0..h {
                        let dst = &mut o[(x * h + r) * dim + y * h..(x * h + r) * dim + y * h + h];
                        for (oc, mc) in dst.iter_mut().zip(&m[r * h..(r + 1) * h]) {
                            *oc += w * mc;
                        }
                    }
                }
            }
        }
    }
    out
}

impl MeasurementModel for ProcessModel {
    fn dim(&self) -> usize {
        16
    }

    fn completeness(&self) -> f64 {
        81.0
    }

    fn frequencies(&self) -> &[f64] {
        &self.freqs
    }

    fn probabilities(&self, chi: &CMatrix, out: &mut [f64]) {
        // row-major copy; nalgebra stores column-major
        let mut level: Vec<Complex64> = chi.transpose().as_slice().to_vec();
        let mut dim = 16;
        for kets in &self.kets {
            level = contract_leading(&level, dim, kets);
            dim /= 2;
        }
        for (n, z) in level.iter().enumerate() {
            out[self.order[n]] = z.re;
        }
    }

    fn weighted_sum(&self, weights: &[f64]) -> CMatrix {
        let mut level: Vec<Complex64> = self.order.iter().map(|&j| r(weights[j])).collect();
        let mut h = 1;
        for kets in self.kets.iter().rev() {
            level = expand_leading(&level, h, kets);
            h *= 2;
        }
        CMatrix::from_row_slice(16, 16, &level)
    }
}

/// Floor for model probabilities inside logarithms and ratios.
const PROBABILITY_FLOOR: f64 = 1e-300;

fn log_likelihood(freqs: &[f64], probs: &[f64], completeness: f64) -> f64 {
    freqs
        .iter()
        .zip(probs)
        .filter(|(f, _)| **f > 0.0)
        .map(|(f, p)| f * (p.max(PROBABILITY_FLOOR) / completeness).ln())
        .sum()
}

fn normalized_sandwich(left: &CMatrix, rho: &CMatrix) -> CMatrix {
    let m = left * rho * left.adjoint();
    let tr = linalg::trace(&m).re;
    linalg::hermitize(&(m / r(tr)))
}

/// Iterates `ρ ← N[R ρ R]`, `R = Σ_j (f_j / p_j) E_j`, from the maximally
/// mixed state. A step that would lower the likelihood is replaced by the
/// diluted update `(𝟙 + εR) ρ (𝟙 + εR)` with ε halved until it does not.
fn rrr_iterate(model: &impl MeasurementModel, options: &MleOptions) -> (CMatrix, usize, bool, Vec<f64>) {
    let d = model.dim();
    let s = model.completeness();
    let freqs = model.frequencies();
    let mut rho = CMatrix::identity(d, d) * r(1.0 / d as f64);
    let mut probs = vec![0.0; freqs.len()];
    model.probabilities(&rho, &mut probs);
    let mut ll = log_likelihood(freqs, &probs, s);
    let mut history = vec![ll];
    let mut candidate_probs = vec![0.0; freqs.len()];
    let identity = CMatrix::identity(d, d);

    let mut converged = false;
    let mut iterations = 0;
    while iterations < options.max_iter {
        iterations += 1;
        let weights: Vec<f64> = freqs
            .iter()
            .zip(&probs)
            .map(|(f, p)| if *f > 0.0 { f / p.max(PROBABILITY_FLOOR) } else { 0.0 })
            .collect();
        let r_op = model.weighted_sum(&weights);

        let mut accepted = None;
        let mut epsilon = f64::INFINITY;
        while epsilon >= 1e-6 {
            let candidate = if epsilon.is_infinite() {
                normalized_sandwich(&r_op, &rho)
            } else {
                normalized_sandwich(&(&identity + &r_op * r(epsilon)), &rho)
            };
            model.probabilities(&candidate, &mut candidate_probs);
            let cand_ll = log_likelihood(freqs, &candidate_probs, s);
            if cand_ll >= ll {
                accepted = Some((candidate, cand_ll));
                break;
            }
            epsilon = if epsilon.is_infinite() { 1.0 } else { epsilon / 2.0 };
        }

        match accepted {
            None => {
                // no ascent direction left at working precision
                converged = true;
                break;
            }
            Some((candidate, cand_ll)) => {
                let gain = cand_ll - ll;
                rho = candidate;
                std::mem::swap(&mut probs, &mut candidate_probs);
                ll = cand_ll;
                history.push(ll);
                if gain < options.tol {
                    converged = true;
                    break;
                }
            }
        }
    }
    (rho, iterations, converged, history)
}

fn frequencies(counts: impl Iterator<Item = u64>) -> Result<Vec<f64>> {
    let raw: Vec<u64> = counts.collect();
    let total: u64 = raw.iter().sum();
    if total == 0 {
        return Err(Error::degenerate("dataset contains no coincidences", 0.0));
    }
    Ok(raw.iter().map(|&n| n as f64 / total as f64).collect())
}

fn check_options(options: &MleOptions) -> Result<()> {
    if options.tol.is_nan() || options.tol < 0.0 || options.max_iter == 0 {
        return Err(Error::invalid("MLE needs tol ≥ 0 and max_iter ≥ 1"));
    }
    Ok(())
}

/// Maximum-likelihood two-qubit state from the nine-basis counts of one preparation.
pub fn mle_density_matrix(
    data: &CoincidenceDataset,
    prep: Option<PreparationSetting>,
    options: &MleOptions,
) -> Result<ReconstructionReport> {
    check_options(options)?;
    let table = data.state_table(prep)?;
    let bases = all_bases();
    let vectors = bases
        .iter()
        .flat_map(|b| (0..4).map(move |o| b.outcome_vector(o)))
        .collect();
    let freqs = frequencies(table.iter().flatten().copied())?;
    let model = StateModel { vectors, freqs };
    let (rho, iterations, converged, history) = rrr_iterate(&model, options);
    Ok(ReconstructionReport {
        estimate: Estimate::State(DensityMatrix::new(rho)?),
        iterations,
        final_log_likelihood: *history.last().expect("nonempty"),
        converged,
        log_likelihoods: history,
    })
}

/// Maximum-likelihood Choi matrix from the full 324-setting dataset.
///
/// The estimate is unit trace; its success scale comes from the total count
/// rate ([`CoincidenceDataset::process_success_scale`]). Trace preservation
/// is not imposed.
pub fn mle_process_matrix(data: &CoincidenceDataset, options: &MleOptions) -> Result<ReconstructionReport> {
    check_options(options)?;
    let table = data.process_table()?;
    let freqs = frequencies(table.iter().flatten().flatten().copied())?;
    let model = ProcessModel::new(freqs);
    let (chi, iterations, converged, history) = rrr_iterate(&model, options);
    let scale = data.process_success_scale()?;
    Ok(ReconstructionReport {
        estimate: Estimate::Process(ChoiProcess::new(chi, scale)?),
        iterations,
        final_log_likelihood: *history.last().expect("nonempty"),
        converged,
        log_likelihoods: history,
    })
}

/// Which reconstruction a dataset calls for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TomographyKind {
    State,
    Process,
}

impl FromStr for TomographyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "state" => Ok(TomographyKind::State),
            "process" => Ok(TomographyKind::Process),
            _ => Err(Error::invalid(format!("unknown reconstruction type {s:?}"))),
        }
    }
}

pub fn reconstruct(
    data: &CoincidenceDataset,
    kind: TomographyKind,
    options: &MleOptions,
) -> Result<ReconstructionReport> {
    match kind {
        TomographyKind::State => mle_density_matrix(data, None, options),
        TomographyKind::Process => mle_process_matrix(data, options),
    }
}

/// Sample mean and (n−1) standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Seed of Monte Carlo sample `index` under `root`.
pub fn sample_seed(root: u64, index: usize) -> u64 {
    seed::derive_seed(root, &format!("monte-carlo-sample-{index}"))
}

/// Resamples `data` `n_samples` times and evaluates `f` on each copy.
/// Returns `(mean, std)` per component of `f`'s output. Samples run in
/// parallel; each has its own seed, so results match sequential execution.
pub fn monte_carlo<F>(data: &CoincidenceDataset, n_samples: usize, seed: u64, f: F) -> Result<Vec<(f64, f64)>>
where
    F: Fn(&CoincidenceDataset) -> Result<Vec<f64>> + Sync,
{
    if n_samples < 2 {
        return Err(Error::invalid("Monte Carlo needs at least 2 samples"));
    }
    let samples: Vec<Vec<f64>> = (0..n_samples)
        .into_par_iter()
        .map(|i| f(&data.resample(sample_seed(seed, i))))
        .collect::<Result<_>>()?;
    let width = samples[0].len();
    Ok((0..width)
        .map(|k| {
            let column: Vec<f64> = samples.iter().map(|s| s[k]).collect();
            mean_std(&column)
        })
        .collect())
}

/// Monte Carlo mean and standard deviation of one metric on the
/// reconstruction of resampled data.
pub fn monte_carlo_metrics(
    data: &CoincidenceDataset,
    kind: TomographyKind,
    n_samples: usize,
    metric: Metric,
    reference: Option<&Estimate>,
    options: &MleOptions,
    seed: u64,
) -> Result<(f64, f64)> {
    if metric.needs_reference() && reference.is_none() {
        return Err(Error::invalid(format!("metric {metric} needs a reference")));
    }
    let stats = monte_carlo(data, n_samples, seed, |sample| {
        let report = reconstruct(sample, kind, options)?;
        Ok(vec![metrics::evaluate(metric, &report.estimate, reference)?])
    })?;
    Ok(stats[0])
}
