//! Dense complex linear algebra on qubit registers.
//!
//! Basis convention used everywhere in the crate: `|H>` is `0`, `|V>` is `1`,
//! and multi-qubit indices are lexicographic with qubit 0 as the most
//! significant bit (`|HV>` is index 1, `|VH>` is index 2).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Smallest eigenvalue accepted as "zero" by PSD operations; anything in
/// `[-PSD_TOLERANCE, 0)` is clamped, anything below is rejected.
pub const PSD_TOLERANCE: f64 = 1e-10;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn r(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Number of qubits for a register of dimension `dim`, if `dim` is a power of two.
pub fn qubits_for_dim(dim: usize) -> Option<usize> {
    (dim.is_power_of_two() && dim >= 2).then(|| dim.trailing_zeros() as usize)
}

/// Kronecker product `a ⊗ b`.
pub fn tensor_product(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn tensor_vectors(a: &CVector, b: &CVector) -> CVector {
    a.kronecker(b)
}

pub fn projector(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// `Tr[a b]` without forming the product.
pub fn trace_of_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    let mut acc = ZERO;
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Largest entrywise deviation `max |m - m†|`.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Hermitian part `(m + m†)/2`.
pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * r(0.5)
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
///
/// Only the Hermitian part of `m` is used.
pub fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = hermitize(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), m.ncols(), |row, col| {
        eig.eigenvectors[(row, order[col])]
    });
    (values, vectors)
}

pub fn eigvalsh(m: &CMatrix) -> Vec<f64> {
    let mut values: Vec<f64> = hermitize(m).symmetric_eigen().eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

/// Rebuild `V diag(f(λ)) V†`.
pub fn spectral_map(values: &[f64], vectors: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let n = vectors.nrows();
    let mut out = CMatrix::zeros(n, n);
    for (k, &lambda) in values.iter().enumerate() {
        let w = f(lambda);
        if w == 0.0 {
            continue;
        }
        let col = vectors.column(k);
        for i in 0..n {
            let ci = col[i] * w;
            for j in 0..n {
                out[(i, j)] += ci * col[j].conj();
            }
        }
    }
    out
}

fn check_hermitian(m: &CMatrix, what: &str) -> Result<()> {
    if !m.is_square() {
        return Err(Error::domain(format!("{what}: matrix is not square")));
    }
    let defect = hermitian_defect(m);
    if defect > PSD_TOLERANCE {
        return Err(Error::domain(format!(
            "{what}: matrix is not Hermitian (defect {defect:e})"
        )));
    }
    Ok(())
}

/// Spectrum of a Hermitian PSD matrix with the clamping policy applied.
pub fn psd_spectrum(m: &CMatrix, what: &str) -> Result<(Vec<f64>, CMatrix)> {
    check_hermitian(m, what)?;
    let (mut values, vectors) = eigh(m);
    if let Some(&min) = values.first() {
        if min < -PSD_TOLERANCE {
            return Err(Error::domain(format!(
                "{what}: eigenvalue {min:e} below -{PSD_TOLERANCE:e}"
            )));
        }
    }
    for v in values.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    Ok((values, vectors))
}

/// Principal square root of a Hermitian PSD matrix.
pub fn matrix_sqrt(m: &CMatrix) -> Result<CMatrix> {
    let (values, vectors) = psd_spectrum(m, "matrix_sqrt")?;
    Ok(spectral_map(&values, &vectors, f64::sqrt))
}

#[inline]
pub(crate) fn bit(index: usize, qubit: usize, n: usize) -> usize {
    (index >> (n - 1 - qubit)) & 1
}

/// Maps an old basis index to the index after moving old qubit `perm[k]` to slot `k`.
fn permuted_index(index: usize, perm: &[usize]) -> usize {
    let n = perm.len();
    perm.iter()
        .fold(0usize, |acc, &old| (acc << 1) | bit(index, old, n))
}

fn check_permutation(perm: &[usize]) -> Result<()> {
    let mut seen = vec![false; perm.len()];
    for &p in perm {
        if p >= perm.len() || seen[p] {
            return Err(Error::invalid(format!("{perm:?} is not a qubit permutation")));
        }
        seen[p] = true;
    }
    Ok(())
}

/// Reorders qubits of a state vector: qubit `perm[k]` of the input becomes qubit `k`.
pub fn permute_qubits_vector(v: &CVector, perm: &[usize]) -> Result<CVector> {
    check_permutation(perm)?;
    if v.len() != 1 << perm.len() {
        return Err(Error::invalid("permutation length does not match register"));
    }
    let mut out = CVector::zeros(v.len());
    for (i, amp) in v.iter().enumerate() {
        out[permuted_index(i, perm)] = *amp;
    }
    Ok(out)
}

/// Reorders qubits of an operator: qubit `perm[k]` of the input becomes qubit `k`.
pub fn permute_qubits_matrix(m: &CMatrix, perm: &[usize]) -> Result<CMatrix> {
    check_permutation(perm)?;
    let dim = 1 << perm.len();
    if m.shape() != (dim, dim) {
        return Err(Error::invalid("permutation length does not match register"));
    }
    let map: Vec<usize> = (0..dim).map(|i| permuted_index(i, perm)).collect();
    let mut out = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            out[(map[i], map[j])] = m[(i, j)];
        }
    }
    Ok(out)
}

/// Reduced operator on the qubits listed in `keep` (kept in ascending order).
pub fn partial_trace_matrix(m: &CMatrix, keep: &[usize]) -> Result<CMatrix> {
    let n = qubits_for_dim(m.nrows())
        .filter(|_| m.is_square())
        .ok_or_else(|| Error::invalid("partial trace needs a square qubit-register operator"))?;
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.is_empty() || keep.len() >= n || keep.iter().any(|&q| q >= n) {
        return Err(Error::invalid(format!(
            "keep set must be a nonempty strict subset of 0..{n}"
        )));
    }
    let traced: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
    let sub = |index: usize, qubits: &[usize]| {
        qubits
            .iter()
            .fold(0usize, |acc, &q| (acc << 1) | bit(index, q, n))
    };
    let dk = 1 << keep.len();
    let mut out = CMatrix::zeros(dk, dk);
    let dim = m.nrows();
    for i in 0..dim {
        let ti = sub(i, &traced);
        let ki = sub(i, &keep);
        for j in 0..dim {
            if sub(j, &traced) == ti {
                out[(ki, sub(j, &keep))] += m[(i, j)];
            }
        }
    }
    Ok(out)
}

/// Transpose restricted to one qubit's indices.
pub fn partial_transpose_matrix(m: &CMatrix, qubit: usize) -> Result<CMatrix> {
    let n = qubits_for_dim(m.nrows())
        .filter(|_| m.is_square())
        .ok_or_else(|| Error::invalid("partial transpose needs a square qubit-register operator"))?;
    if qubit >= n {
        return Err(Error::invalid(format!("qubit {qubit} out of range for {n} qubits")));
    }
    let mask = 1usize << (n - 1 - qubit);
    let dim = m.nrows();
    Ok(CMatrix::from_fn(dim, dim, |i, j| {
        // swap the chosen qubit's bit between row and column
        let (bi, bj) = (i & mask, j & mask);
        m[((i & !mask) | bj, (j & !mask) | bi)]
    }))
}

/// Sum of singular values of a Hermitian matrix.
pub fn hermitian_trace_norm(m: &CMatrix) -> f64 {
    eigvalsh(m).iter().map(|v| v.abs()).sum()
}

/// Diagonal operator `diag(1, e^{iφ})` on each qubit, tensored over the register.
pub fn local_phase_diagonal(phases: &[f64]) -> Vec<Complex64> {
    let n = phases.len();
    (0..1usize << n)
        .map(|idx| {
            let angle: f64 = (0..n)
                .filter(|&q| bit(idx, q, n) == 1)
                .map(|q| phases[q])
                .sum();
            Complex64::from_polar(1.0, angle)
        })
        .collect()
}

/// `D m D†` for a diagonal unitary `D`.
pub fn conjugate_by_diagonal(m: &CMatrix, diag: &[Complex64]) -> CMatrix {
    CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| diag[i] * m[(i, j)] * diag[j].conj())
}

/// JSON form of a dense complex matrix: row-major `[re, im]` pairs.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<[f64; 2]>,
}

impl From<&CMatrix> for MatrixJson {
    fn from(m: &CMatrix) -> Self {
        let mut entries = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let z = m[(i, j)];
                entries.push([z.re, z.im]);
            }
        }
        MatrixJson {
            rows: m.nrows(),
            cols: m.ncols(),
            entries,
        }
    }
}

impl TryFrom<&MatrixJson> for CMatrix {
    type Error = Error;

    fn try_from(json: &MatrixJson) -> Result<Self> {
        if json.rows == 0 || json.cols == 0 || json.entries.len() != json.rows * json.cols {
            return Err(Error::invalid(format!(
                "matrix has {} entries, expected {}x{}",
                json.entries.len(),
                json.rows,
                json.cols
            )));
        }
        if json.entries.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::invalid("matrix contains non-finite entries"));
        }
        Ok(CMatrix::from_row_iterator(
            json.rows,
            json.cols,
            json.entries.iter().map(|[re, im]| c(*re, *im)),
        ))
    }
}
