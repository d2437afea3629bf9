//! Bipartite operators and their Schmidt structure.
//!
//! An operator Q on H_A ⊗ H_B expands in a fixed orthonormal product basis
//! as Q = Σ_jk M_jk C_j ⊗ D_k; the singular value decomposition of the
//! coefficient matrix M gives the operator Schmidt decomposition
//! Q = Σ_l q_l A_l ⊗ B_l with q_1 ≥ q_2 ≥ … ≥ 0 and Hilbert–Schmidt
//! orthonormal factors. For a unitary U the coefficients satisfy
//! Σ_l q_l² = d_A d_B.
//!
//! The fixed basis is the normalized Pauli-string basis when a subsystem
//! dimension is a power of two and the matrix-unit basis otherwise; the
//! coefficients themselves do not depend on this choice.

use num_complex::Complex64;

use crate::linalg::{
    self, cx, eigh, kron, real_orthogonal_svd, sorted_svd, CMatrix, CVector,
};
use crate::{Error, Result, Tolerances};

/// Subsystem dimensions (d_A, d_B) of a bipartite space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dims {
    pub a: usize,
    pub b: usize,
}

impl Dims {
    #[must_use]
    pub fn new(a: usize, b: usize) -> Self {
        assert!(a >= 1 && b >= 1, "subsystem dimensions must be positive");
        Dims { a, b }
    }

    /// Total dimension d_A · d_B.
    #[must_use]
    pub fn total(&self) -> usize {
        self.a * self.b
    }

    /// Both subsystems swapped.
    #[must_use]
    pub fn swapped(&self) -> Self {
        Dims { a: self.b, b: self.a }
    }
}

/// Which subsystem of a bipartite operator an operation acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// A linear operator on H_A ⊗ H_B.
#[derive(Clone, Debug)]
pub struct Operator {
    matrix: CMatrix,
    dims: Dims,
}

impl Operator {
    /// Wrap a matrix acting on the bipartite space described by `dims`.
    pub fn new(matrix: CMatrix, dims: Dims) -> Result<Self> {
        let d = dims.total();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, dims give {}",
                matrix.nrows(),
                matrix.ncols(),
                d
            )));
        }
        Ok(Operator { matrix, dims })
    }

    #[must_use]
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    #[must_use]
    pub fn dims(&self) -> Dims {
        self.dims
    }

    /// Identity on the bipartite space.
    #[must_use]
    pub fn identity(dims: Dims) -> Self {
        let d = dims.total();
        Operator { matrix: CMatrix::identity(d, d), dims }
    }

    /// `‖m†m − I‖ ≤ tol`?
    #[must_use]
    pub fn is_unitary(&self, tol: f64) -> bool {
        linalg::unitarity_deviation(&self.matrix) <= tol
    }

    /// `‖m − m†‖ ≤ tol`?
    #[must_use]
    pub fn is_hermitian(&self, tol: f64) -> bool {
        linalg::hermiticity_deviation(&self.matrix) <= tol
    }

    /// Hermitian with all eigenvalues ≥ −tol?
    #[must_use]
    pub fn is_positive(&self, tol: f64) -> bool {
        self.is_hermitian(tol) && linalg::min_eigenvalue(&self.matrix) >= -tol
    }
}

/// Operator Schmidt decomposition Q = Σ_l q_l A_l ⊗ B_l.
///
/// Coefficients are nonincreasing and strictly positive (terms whose
/// coefficient falls below the rank cutoff are dropped); factor lists are
/// Hilbert–Schmidt orthonormal.
#[derive(Clone, Debug)]
pub struct SchmidtDecomposition {
    pub coefficients: Vec<f64>,
    pub factors_a: Vec<CMatrix>,
    pub factors_b: Vec<CMatrix>,
    pub dims: Dims,
}

impl SchmidtDecomposition {
    /// Σ_l q_l A_l ⊗ B_l.
    #[must_use]
    pub fn reconstruct(&self) -> CMatrix {
        let d = self.dims.total();
        let mut out = CMatrix::zeros(d, d);
        for (l, &q) in self.coefficients.iter().enumerate() {
            out += kron(&self.factors_a[l], &self.factors_b[l]).map(|z| z * q);
        }
        out
    }

    /// Number of retained terms.
    #[must_use]
    pub fn rank(&self) -> usize {
        self.coefficients.len()
    }

    /// Σ_l q_l.
    #[must_use]
    pub fn coefficient_sum(&self) -> f64 {
        self.coefficients.iter().sum()
    }

    /// True when every factor on both sides is proportional to a unitary,
    /// i.e. A_l A_l† = I/d_A and B_l B_l† = I/d_B within `tol`.
    #[must_use]
    pub fn has_unitary_factors(&self, tol: f64) -> bool {
        let check = |m: &CMatrix, d: usize| {
            let target = CMatrix::identity(d, d).map(|z| z / d as f64);
            (m * m.adjoint() - target).norm() <= tol
        };
        self.factors_a.iter().all(|a| check(a, self.dims.a))
            && self.factors_b.iter().all(|b| check(b, self.dims.b))
    }
}

/// Tensor product of two operators (A-side factor first).
#[must_use]
pub fn tensor(a: &CMatrix, b: &CMatrix) -> CMatrix {
    kron(a, b)
}

/// Hilbert–Schmidt inner product tr(a† b).
#[must_use]
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> Complex64 {
    (a.adjoint() * b).trace()
}

/// Largest singular value.
#[must_use]
pub fn operator_norm(m: &CMatrix) -> f64 {
    linalg::operator_norm_raw(m)
}

/// The 2×2 Pauli matrices in the order I, X, Y, Z.
#[must_use]
pub fn pauli(k: usize) -> CMatrix {
    let mut m = CMatrix::zeros(2, 2);
    match k {
        0 => {
            m[(0, 0)] = cx(1.0, 0.0);
            m[(1, 1)] = cx(1.0, 0.0);
        }
        1 => {
            m[(0, 1)] = cx(1.0, 0.0);
            m[(1, 0)] = cx(1.0, 0.0);
        }
        2 => {
            m[(0, 1)] = cx(0.0, -1.0);
            m[(1, 0)] = cx(0.0, 1.0);
        }
        3 => {
            m[(0, 0)] = cx(1.0, 0.0);
            m[(1, 1)] = cx(-1.0, 0.0);
        }
        _ => panic!("Pauli index out of range"),
    }
    m
}

/// CNOT with the first qubit as control: |0⟩⟨0|⊗I + |1⟩⟨1|⊗X.
#[must_use]
pub fn cnot() -> Operator {
    let mut m = CMatrix::identity(4, 4);
    m[(2, 2)] = cx(0.0, 0.0);
    m[(3, 3)] = cx(0.0, 0.0);
    m[(2, 3)] = cx(1.0, 0.0);
    m[(3, 2)] = cx(1.0, 0.0);
    Operator { matrix: m, dims: Dims::new(2, 2) }
}

/// SWAP on d ⊗ d.
#[must_use]
pub fn swap(d: usize) -> Operator {
    let dd = d * d;
    let mut m = CMatrix::zeros(dd, dd);
    for i in 0..d {
        for j in 0..d {
            m[(i * d + j, j * d + i)] = cx(1.0, 0.0);
        }
    }
    Operator { matrix: m, dims: Dims::new(d, d) }
}

/// Controlled phase diag(1, 1, 1, e^{iθ}).
#[must_use]
pub fn controlled_phase(theta: f64) -> Operator {
    let mut m = CMatrix::identity(4, 4);
    m[(3, 3)] = cx(0.0, theta).exp();
    Operator { matrix: m, dims: Dims::new(2, 2) }
}

/// Orthonormal operator basis for one subsystem: normalized Pauli strings
/// when d is a power of two, matrix units otherwise.
fn operator_basis(d: usize) -> Vec<CMatrix> {
    if d.is_power_of_two() && d >= 2 {
        let qubits = d.trailing_zeros() as usize;
        let norm = 1.0 / (d as f64).sqrt();
        let mut basis = vec![CMatrix::identity(1, 1)];
        for _ in 0..qubits {
            let mut next = Vec::with_capacity(basis.len() * 4);
            for m in &basis {
                for k in 0..4 {
                    next.push(kron(m, &pauli(k)));
                }
            }
            basis = next;
        }
        basis.into_iter().map(|m| m.map(|z| z * norm)).collect()
    } else {
        let mut basis = Vec::with_capacity(d * d);
        for j in 0..d {
            for k in 0..d {
                let mut e = CMatrix::zeros(d, d);
                e[(j, k)] = cx(1.0, 0.0);
                basis.push(e);
            }
        }
        basis
    }
}

/// Coefficient matrix M_jk = ⟨C_j ⊗ D_k, Q⟩ of `q` in the fixed product
/// basis, together with the two basis lists.
fn coefficient_matrix(q: &Operator) -> (CMatrix, Vec<CMatrix>, Vec<CMatrix>) {
    let ca = operator_basis(q.dims.a);
    let cb = operator_basis(q.dims.b);
    let mut m = CMatrix::zeros(ca.len(), cb.len());
    for (j, a) in ca.iter().enumerate() {
        for (k, b) in cb.iter().enumerate() {
            m[(j, k)] = hs_inner(&kron(a, b), &q.matrix);
        }
    }
    (m, ca, cb)
}

/// Operator Schmidt decomposition of a bipartite operator.
pub fn operator_schmidt(q: &Operator) -> Result<SchmidtDecomposition> {
    let tol = Tolerances::default();
    let (m, ca, cb) = coefficient_matrix(q);
    let (u, s, vt) = sorted_svd(&m)?;
    let mut coefficients = Vec::new();
    let mut factors_a = Vec::new();
    let mut factors_b = Vec::new();
    for (l, &sv) in s.iter().enumerate() {
        if sv <= tol.rank_cutoff {
            break;
        }
        coefficients.push(sv);
        let mut fa = CMatrix::zeros(q.dims.a, q.dims.a);
        for (j, c) in ca.iter().enumerate() {
            fa += c.map(|z| z * u[(j, l)]);
        }
        let mut fb = CMatrix::zeros(q.dims.b, q.dims.b);
        for (k, d) in cb.iter().enumerate() {
            fb += d.map(|z| z * vt[(l, k)]);
        }
        factors_a.push(fa);
        factors_b.push(fb);
    }
    Ok(SchmidtDecomposition { coefficients, factors_a, factors_b, dims: q.dims })
}

/// Operator Schmidt coefficients only (descending, zeros dropped).
pub fn schmidt_coefficients(q: &Operator) -> Result<Vec<f64>> {
    operator_schmidt(q).map(|d| d.coefficients)
}

/// Operator Schmidt decomposition of a two-qubit unitary in which every
/// factor on both sides is proportional to a unitary.
///
/// Such a decomposition always exists for d_A = d_B = 2: in the basis
/// F = {I, iX, iY, iZ}/√2 the coefficient matrix of any two-qubit unitary
/// factors as O_a · diag(λ) · O_bᵀ with real orthogonal O_a, O_b, because
/// conjugation by local unitaries acts on F-coordinates as a real rotation
/// (unit quaternions). Columns of O_a/O_b are then real combinations of F,
/// i.e. proportional to unitaries, and the complex phases of λ are folded
/// into the A factors.
///
/// For other dimensions the plain decomposition is returned when it happens
/// to satisfy the unitary-factor property, and an error otherwise.
pub fn operator_schmidt_unitary_factors(q: &Operator) -> Result<SchmidtDecomposition> {
    let tol = Tolerances::default();
    if !q.is_unitary(tol.reconstruction) {
        return Err(Error::NotUnitary {
            deviation: linalg::unitarity_deviation(&q.matrix),
        });
    }
    if q.dims.a != 2 || q.dims.b != 2 {
        let plain = operator_schmidt(q)?;
        if plain.has_unitary_factors(tol.reconstruction) {
            return Ok(plain);
        }
        return Err(Error::HypothesisViolated(
            "no unitary-factor Schmidt decomposition found for these dimensions".into(),
        ));
    }

    let (m, ca, cb) = coefficient_matrix(q);
    // Transform coordinates from the Pauli basis {I,X,Y,Z}/√2 to the
    // quaternion basis {I,iX,iY,iZ}/√2: a diagonal phase on both sides.
    let t = CMatrix::from_diagonal(&CVector::from_vec(vec![
        cx(1.0, 0.0),
        cx(0.0, -1.0),
        cx(0.0, -1.0),
        cx(0.0, -1.0),
    ]));
    let mt = &t * &m * &t;
    let Some((oa, lam, ob)) = real_orthogonal_svd(&mt, 1e-8) else {
        return Err(Error::HypothesisViolated(
            "coefficient matrix does not carry the real-frame structure of a two-qubit unitary"
                .into(),
        ));
    };
    // Sort by |λ| descending, drop zeros, and undo the coordinate change:
    // the A-side column in Pauli coordinates is conj(T) O_a e_l, the B-side
    // column is conj(T) O_b e_l, with the phase of λ_l going to side A.
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&i, &j| lam[j].norm().partial_cmp(&lam[i].norm()).unwrap());
    let tconj = t.conjugate();
    let mut coefficients = Vec::new();
    let mut factors_a = Vec::new();
    let mut factors_b = Vec::new();
    for &l in &order {
        let magnitude = lam[l].norm();
        if magnitude <= tol.rank_cutoff {
            continue;
        }
        let phase = lam[l] / magnitude;
        coefficients.push(magnitude);
        let mut fa = CMatrix::zeros(2, 2);
        let mut fb = CMatrix::zeros(2, 2);
        for j in 0..4 {
            let wa = tconj[(j, j)] * cx(oa[(j, l)], 0.0) * phase;
            let wb = tconj[(j, j)] * cx(ob[(j, l)], 0.0);
            fa += ca[j].map(|z| z * wa);
            fb += cb[j].map(|z| z * wb);
        }
        factors_a.push(fa);
        factors_b.push(fb);
    }
    let dec = SchmidtDecomposition { coefficients, factors_a, factors_b, dims: q.dims };
    let residual = (dec.reconstruct() - &q.matrix).norm();
    if residual > tol.reconstruction {
        return Err(Error::HypothesisViolated(format!(
            "unitary-factor reconstruction residual {residual:.3e}"
        )));
    }
    if !dec.has_unitary_factors(tol.reconstruction) {
        return Err(Error::HypothesisViolated(
            "factors are not proportional to unitaries".into(),
        ));
    }
    Ok(dec)
}

/// Partial transpose on one subsystem of a bipartite matrix.
#[must_use]
pub fn partial_transpose(m: &CMatrix, dims: Dims, sub: Subsystem) -> CMatrix {
    let (da, db) = (dims.a, dims.b);
    let d = dims.total();
    assert_eq!(m.nrows(), d, "matrix does not match dims");
    assert_eq!(m.ncols(), d, "matrix does not match dims");
    let mut out = CMatrix::zeros(d, d);
    for a in 0..da {
        for b in 0..db {
            for ap in 0..da {
                for bp in 0..db {
                    let (r, c) = (a * db + b, ap * db + bp);
                    let (rs, cs) = match sub {
                        Subsystem::A => (ap * db + b, a * db + bp),
                        Subsystem::B => (a * db + bp, ap * db + b),
                    };
                    out[(r, c)] = m[(rs, cs)];
                }
            }
        }
    }
    out
}

/// Partial trace over all subsystems not listed in `keep`.
///
/// `dims` lists every subsystem dimension in tensor order; `keep` lists the
/// positions to retain (strictly increasing). The result is ordered by the
/// kept positions.
#[must_use]
pub fn partial_trace(m: &CMatrix, dims: &[usize], keep: &[usize]) -> CMatrix {
    let total: usize = dims.iter().product();
    assert_eq!(m.nrows(), total, "matrix does not match dims");
    assert_eq!(m.ncols(), total, "matrix does not match dims");
    assert!(keep.windows(2).all(|w| w[0] < w[1]), "keep must be strictly increasing");
    assert!(keep.iter().all(|&k| k < dims.len()), "keep index out of range");
    let traced: Vec<usize> = (0..dims.len()).filter(|p| !keep.contains(p)).collect();
    let keep_dim: usize = keep.iter().map(|&k| dims[k]).product();
    let trace_dim: usize = traced.iter().map(|&k| dims[k]).product();

    // Strides of each subsystem in the flattened index.
    let mut strides = vec![1usize; dims.len()];
    for p in (0..dims.len().saturating_sub(1)).rev() {
        strides[p] = strides[p + 1] * dims[p + 1];
    }
    let expand = |positions: &[usize], mut flat: usize| -> usize {
        let mut idx = 0;
        for &p in positions.iter().rev() {
            idx += (flat % dims[p]) * strides[p];
            flat /= dims[p];
        }
        idx
    };

    let mut out = CMatrix::zeros(keep_dim, keep_dim);
    for i in 0..keep_dim {
        let base_i = expand(keep, i);
        for j in 0..keep_dim {
            let base_j = expand(keep, j);
            let mut acc = cx(0.0, 0.0);
            for t in 0..trace_dim {
                let off = expand(&traced, t);
                acc += m[(base_i + off, base_j + off)];
            }
            out[(i, j)] = acc;
        }
    }
    out
}

/// Continuity of Schmidt coefficients for unitaries:
/// returns `(lhs, rhs)` with lhs = 2(1 − Σ_j u_j v_j / (d_A d_B)) and
/// rhs = ‖U − V‖² (operator norm squared); lhs ≤ rhs always holds, with
/// coefficients of both operators sorted in descending order.
pub fn schmidt_continuity_gap(u: &Operator, v: &Operator) -> Result<(f64, f64)> {
    let tol = Tolerances::default();
    if u.dims != v.dims {
        return Err(Error::DimensionMismatch("operators live on different spaces".into()));
    }
    for op in [u, v] {
        if !op.is_unitary(tol.predicate.max(1e-8)) {
            return Err(Error::NotUnitary {
                deviation: linalg::unitarity_deviation(&op.matrix),
            });
        }
    }
    let cu = schmidt_coefficients(u)?;
    let cv = schmidt_coefficients(v)?;
    let overlap: f64 = cu.iter().zip(cv.iter()).map(|(a, b)| a * b).sum();
    let lhs = 2.0 * (1.0 - overlap / u.dims.total() as f64);
    let diff = &u.matrix - &v.matrix;
    let rhs = operator_norm(&diff).powi(2);
    Ok((lhs, rhs))
}

/// Smallest eigenvalue of the partial transpose of a Hermitian bipartite
/// matrix; negative values witness entanglement across the cut.
#[must_use]
pub fn min_partial_transpose_eigenvalue(m: &CMatrix, dims: Dims) -> f64 {
    let pt = partial_transpose(m, dims, Subsystem::B);
    let (values, _) = eigh(&pt);
    values.last().copied().unwrap_or(0.0)
}
