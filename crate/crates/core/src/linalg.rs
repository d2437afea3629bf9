//! Dense complex linear algebra helpers.
//!
//! Thin layer over `nalgebra`: sorted spectral/singular decompositions,
//! norms, positive-semidefinite function calculus, Haar sampling, and two
//! structured factorizations used by the Schmidt machinery (Takagi
//! factorization of complex symmetric matrices and the real-orthogonal SVD
//! `M = O_a Λ O_bᵀ` with complex diagonal `Λ`).

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = nalgebra::DVector<Complex64>;
pub type RMatrix = DMatrix<f64>;

/// Complex number from real and imaginary parts.
#[inline]
#[must_use]
pub fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Complex matrix from a row-major slice of real entries.
#[must_use]
pub fn cmat_real(rows: usize, cols: usize, data: &[f64]) -> CMatrix {
    assert_eq!(data.len(), rows * cols, "entry count mismatch");
    CMatrix::from_fn(rows, cols, |i, j| cx(data[i * cols + j], 0.0))
}

/// Kronecker product `a ⊗ b`.
#[must_use]
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Deviation of `m` from being Hermitian, as a Frobenius norm.
#[must_use]
pub fn hermiticity_deviation(m: &CMatrix) -> f64 {
    (m - m.adjoint()).norm()
}

/// Deviation of `m` from being unitary, as `‖m†m − I‖`.
#[must_use]
pub fn unitarity_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    (m.adjoint() * m - CMatrix::identity(n, n)).norm()
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues sorted in
/// descending order with matching eigenvector columns.
#[must_use]
pub fn eigh(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = h.nrows();
    let eig = h.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Smallest eigenvalue of a Hermitian matrix.
#[must_use]
pub fn min_eigenvalue(h: &CMatrix) -> f64 {
    let eig = h.clone().symmetric_eigen();
    eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Extend `cols` (orthonormal vectors in C^n) to `k` orthonormal vectors by
/// greedy Gram–Schmidt over standard basis candidates.
fn complete_orthonormal(cols: &mut Vec<CVector>, n: usize, k: usize) {
    while cols.len() < k {
        let mut best: Option<(f64, CVector)> = None;
        for cand in 0..n {
            let mut v = CVector::zeros(n);
            v[cand] = cx(1.0, 0.0);
            for c in cols.iter() {
                let overlap = c.dotc(&v);
                v -= c * overlap;
            }
            let norm = v.norm();
            if best.as_ref().is_none_or(|(b, _)| norm > *b) {
                best = Some((norm, v));
            }
        }
        let (_, v) = best.expect("candidate set is never empty");
        // Second orthogonalization pass tightens the result numerically.
        let mut w = v;
        for c in cols.iter() {
            let overlap = c.dotc(&w);
            w -= c * overlap;
        }
        let norm = w.norm();
        cols.push(w / cx(norm, 0.0));
    }
}

fn complete_orthonormal_real(cols: &mut Vec<nalgebra::DVector<f64>>, n: usize, k: usize) {
    while cols.len() < k {
        let mut best: Option<(f64, nalgebra::DVector<f64>)> = None;
        for cand in 0..n {
            let mut v = nalgebra::DVector::<f64>::zeros(n);
            v[cand] = 1.0;
            for c in cols.iter() {
                let overlap = c.dot(&v);
                v -= c * overlap;
            }
            let norm = v.norm();
            if best.as_ref().is_none_or(|(b, _)| norm > *b) {
                best = Some((norm, v));
            }
        }
        let (_, v) = best.expect("candidate set is never empty");
        let mut w = v;
        for c in cols.iter() {
            let overlap = c.dot(&w);
            w -= c * overlap;
        }
        let norm = w.norm();
        cols.push(w / norm);
    }
}

/// Singular value decomposition with singular values sorted in descending
/// order. Returns `(u, s, v_t)` with `m = u · diag(s) · v_t`, `u` having
/// orthonormal columns and `v_t` orthonormal rows (thin form, k = min(r, c)).
///
/// Implemented through the Hermitian eigendecomposition of the augmented
/// matrix [[0, m], [m†, 0]], whose positive spectrum is the singular values
/// with eigenvectors stacking the left and right singular vectors. This
/// route stays accurate for rank-deficient input, where the iterative SVD
/// shipped with the matrix library produces unreliable factors.
pub fn sorted_svd(m: &CMatrix) -> Result<(CMatrix, Vec<f64>, CMatrix)> {
    let (rows, cols) = (m.nrows(), m.ncols());
    let k = rows.min(cols);
    let dim = rows + cols;
    let mut h = CMatrix::zeros(dim, dim);
    for i in 0..rows {
        for j in 0..cols {
            h[(i, rows + j)] = m[(i, j)];
            h[(rows + j, i)] = m[(i, j)].conj();
        }
    }
    let (values, vectors) = eigh(&h);
    let zero = f64::EPSILON * m.norm().max(1.0) * 8.0 * dim as f64;
    let mut s = vec![0.0; k];
    let mut ucols: Vec<CVector> = Vec::with_capacity(k);
    let mut vcols: Vec<CVector> = Vec::with_capacity(k);
    for (idx, &value) in values.iter().enumerate().take(k) {
        if value <= zero {
            break;
        }
        let w = vectors.column(idx);
        let x = w.rows(0, rows).into_owned();
        let y = w.rows(rows, cols).into_owned();
        let (nx, ny) = (x.norm(), y.norm());
        if nx < 1e-8 || ny < 1e-8 {
            return Err(Error::NumericalFailure(
                "degenerate singular pair in augmented eigenproblem".into(),
            ));
        }
        s[ucols.len()] = value;
        ucols.push(x / cx(nx, 0.0));
        vcols.push(y / cx(ny, 0.0));
    }
    complete_orthonormal(&mut ucols, rows, k);
    complete_orthonormal(&mut vcols, cols, k);
    let mut u = CMatrix::zeros(rows, k);
    let mut vt = CMatrix::zeros(k, cols);
    for (i, (uc, vc)) in ucols.iter().zip(vcols.iter()).enumerate() {
        u.set_column(i, uc);
        for j in 0..cols {
            vt[(i, j)] = vc[j].conj();
        }
    }
    Ok((u, s, vt))
}

/// Real SVD with singular values sorted in descending order.
/// Returns `(u, s, v)` with `m = u · diag(s) · vᵀ` (note: `v`, not `vᵀ`).
/// Same augmented-eigenproblem route as [`sorted_svd`].
fn sorted_svd_real(m: &RMatrix) -> Result<(RMatrix, Vec<f64>, RMatrix)> {
    let (rows, cols) = (m.nrows(), m.ncols());
    let k = rows.min(cols);
    let dim = rows + cols;
    let mut h = RMatrix::zeros(dim, dim);
    for i in 0..rows {
        for j in 0..cols {
            h[(i, rows + j)] = m[(i, j)];
            h[(rows + j, i)] = m[(i, j)];
        }
    }
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let zero = f64::EPSILON * m.norm().max(1.0) * 8.0 * dim as f64;
    let mut s = vec![0.0; k];
    let mut ucols: Vec<nalgebra::DVector<f64>> = Vec::with_capacity(k);
    let mut vcols: Vec<nalgebra::DVector<f64>> = Vec::with_capacity(k);
    for &col in order.iter().take(k) {
        let lambda = eig.eigenvalues[col];
        if lambda <= zero {
            break;
        }
        let w = eig.eigenvectors.column(col);
        let x = w.rows(0, rows).into_owned();
        let y = w.rows(rows, cols).into_owned();
        let (nx, ny) = (x.norm(), y.norm());
        if nx < 1e-8 || ny < 1e-8 {
            return Err(Error::NumericalFailure(
                "degenerate singular pair in augmented eigenproblem".into(),
            ));
        }
        s[ucols.len()] = lambda;
        ucols.push(x / nx);
        vcols.push(y / ny);
    }
    complete_orthonormal_real(&mut ucols, rows, k);
    complete_orthonormal_real(&mut vcols, cols, k);
    let mut u = RMatrix::zeros(rows, k);
    let mut v = RMatrix::zeros(cols, k);
    for (i, (uc, vc)) in ucols.iter().zip(vcols.iter()).enumerate() {
        u.set_column(i, uc);
        v.set_column(i, vc);
    }
    Ok((u, s, v))
}

/// Largest singular value of `m`, via the top eigenvalue of `m m†`.
#[must_use]
pub fn operator_norm_raw(m: &CMatrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    let h = if m.nrows() <= m.ncols() { m * m.adjoint() } else { m.adjoint() * m };
    let top = h.symmetric_eigen().eigenvalues.iter().cloned().fold(0.0, f64::max);
    top.max(0.0).sqrt()
}

/// Trace norm `‖h‖₁ = Σ|λ_i|` of a Hermitian matrix.
#[must_use]
pub fn trace_norm_hermitian(h: &CMatrix) -> f64 {
    let eig = h.clone().symmetric_eigen();
    eig.eigenvalues.iter().map(|v| v.abs()).sum()
}

/// Trace distance `½‖a − b‖₁` between two Hermitian matrices.
#[must_use]
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    0.5 * trace_norm_hermitian(&(a - b))
}

/// `f(h)` for Hermitian `h`, applying `f` to eigenvalues after clamping
/// anything below `rank_cutoff` in magnitude to zero. `f(0)` must be finite
/// for the pseudo-inverse use case, so zero eigenvalues are skipped when
/// `f(0)` would not be.
#[must_use]
pub fn hermitian_map(h: &CMatrix, rank_cutoff: f64, f: impl Fn(f64) -> f64) -> CMatrix {
    let n = h.nrows();
    let (values, vectors) = eigh(h);
    let mut out = CMatrix::zeros(n, n);
    for (i, &v) in values.iter().enumerate() {
        if v.abs() <= rank_cutoff {
            continue;
        }
        let col = vectors.column(i);
        let fv = f(v);
        out += (col * col.adjoint()).map(|z| z * fv);
    }
    out
}

/// Pseudo-inverse square root of a positive semidefinite matrix
/// (zero on the null space).
#[must_use]
pub fn psd_inv_sqrt(h: &CMatrix, rank_cutoff: f64) -> CMatrix {
    hermitian_map(h, rank_cutoff, |v| 1.0 / v.max(rank_cutoff).sqrt())
}

/// Square root of a positive semidefinite matrix, negative noise clamped.
#[must_use]
pub fn psd_sqrt(h: &CMatrix, rank_cutoff: f64) -> CMatrix {
    hermitian_map(h, rank_cutoff, |v| v.max(0.0).sqrt())
}

/// Haar-random unitary: QR of a complex Gaussian matrix with the phases of
/// the diagonal of R folded back into Q.
#[must_use]
pub fn haar_unitary(n: usize, rng: &mut impl Rng) -> CMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| {
        cx(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { cx(1.0, 0.0) };
        let col = q.column(j) * phase;
        q.set_column(j, &col);
    }
    q
}

/// Eigenphases of a unitary matrix, each in (−π, π], in no particular
/// order.
///
/// A unitary is normal, so its Hermitian part (W + W†)/2 and anti-Hermitian
/// part (W − W†)/(2i) commute: diagonalize the first, then split degenerate
/// clusters with the second compressed into the cluster basis. Both steps
/// only ever call the Hermitian eigensolver.
pub fn unitary_eigenphases(w: &CMatrix) -> Result<Vec<f64>> {
    let deviation = unitarity_deviation(w);
    if deviation > 1e-8 {
        return Err(Error::NotUnitary { deviation });
    }
    let half = cx(0.5, 0.0);
    let re_part = (w + w.adjoint()) * half;
    let im_part = (w - w.adjoint()) * cx(0.0, -0.5);
    let (re_vals, vecs) = eigh(&re_part);
    let mut phases = Vec::with_capacity(w.nrows());
    for (start, end) in clusters(&re_vals, 1e-7) {
        let block = vecs.columns(start, end - start).into_owned();
        let compressed = block.adjoint() * &im_part * &block;
        let (im_vals, _) = eigh(&compressed);
        let re_mean = re_vals[start..end].iter().sum::<f64>() / (end - start) as f64;
        for b in im_vals {
            phases.push(b.atan2(re_mean));
        }
    }
    Ok(phases)
}

/// Group consecutive entries of a descending list whose gaps stay within
/// `gap`. Returns half-open index ranges.
fn clusters(values: &[f64], gap: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || values[i - 1] - values[i] > gap {
            out.push((start, i));
            start = i;
        }
    }
    out
}

/// Simultaneous orthogonal diagonalization of two commuting real symmetric
/// matrices. Diagonalizes `x`, then rediagonalizes `y` inside each
/// degenerate eigenspace of `x`.
fn simultaneous_diag_sym(x: &RMatrix, y: &RMatrix, gap: f64) -> Result<RMatrix> {
    let n = x.nrows();
    let eig = x.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut o = RMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        o.set_column(dst, &eig.eigenvectors.column(src));
    }
    for &(lo, hi) in &clusters(&values, gap) {
        let m = hi - lo;
        if m < 2 {
            continue;
        }
        let oc = o.columns(lo, m).into_owned();
        let yc = oc.transpose() * y * &oc;
        let yc = (&yc + yc.transpose()) * 0.5;
        let sub = yc.symmetric_eigen();
        let rotated = oc * sub.eigenvectors;
        for k in 0..m {
            o.set_column(lo + k, &rotated.column(k));
        }
    }
    Ok(o)
}

/// Takagi factorization of a complex symmetric matrix:
/// `t = U · diag(σ) · Uᵀ` with `U` unitary and `σ` real, nonnegative,
/// descending. Returns `(σ, U)`.
///
/// Works through the Hermitian matrix `t t†`; inside each degenerate
/// singular cluster the restriction of `t` is proportional to a unitary
/// symmetric matrix, whose commuting real and imaginary parts are
/// diagonalized simultaneously.
pub fn takagi(t: &CMatrix, rank_cutoff: f64) -> Result<(Vec<f64>, CMatrix)> {
    let n = t.nrows();
    if t.ncols() != n {
        return Err(Error::NotSquare { rows: t.nrows(), cols: t.ncols() });
    }
    let ts = (t + t.transpose()) * cx(0.5, 0.0);
    let scale = ts.norm().max(1.0);

    // Split off the numerical null space first: the squared-matrix step
    // below would otherwise turn machine noise into √ε-sized singular
    // values. On the support the restriction is a nonsingular symmetric
    // matrix with the same nonzero Takagi values.
    let (ufull, svals, _) = sorted_svd(&ts)?;
    let zero = rank_cutoff.max(f64::EPSILON * scale * 8.0 * n as f64);
    let r = svals.iter().take_while(|&&s| s > zero).count();
    if r == 0 {
        return Ok((vec![0.0; n], CMatrix::identity(n, n)));
    }
    let ur = ufull.columns(0, r).into_owned();
    let tr = ur.adjoint() * &ts * ur.conjugate();
    let tr = (&tr + tr.transpose()) * cx(0.5, 0.0);

    let b = &tr * tr.adjoint();
    let (lambdas, q) = eigh(&b);
    let sigmas: Vec<f64> = lambdas.iter().map(|&l| l.max(0.0).sqrt()).collect();

    let mut best: Option<(f64, Vec<f64>, CMatrix)> = None;
    for gap_scale in [1e-9, 1e-7, 1e-5, 1e-3] {
        let gap = gap_scale * scale;
        let mut u = CMatrix::zeros(r, r);
        let mut ok = true;
        for &(lo, hi) in &clusters(&sigmas, gap) {
            let m = hi - lo;
            let sigma = sigmas[lo];
            let qc = q.columns(lo, m).into_owned();
            // Restriction of tr to the cluster: C = Qc† tr Qc*, which
            // satisfies C C* = σ² I, so C/σ is unitary symmetric.
            let c = qc.adjoint() * &tr * qc.conjugate();
            let s = &c / cx(sigma, 0.0);
            let x = s.map(|z| z.re);
            let y = s.map(|z| z.im);
            let Ok(o) = simultaneous_diag_sym(&x, &y, 1e-8) else {
                ok = false;
                break;
            };
            let oc = o.map(|v| cx(v, 0.0));
            let d = oc.transpose() * &s * &oc;
            // Half-phase so that the cluster diagonal becomes real positive.
            let mut w = oc.clone();
            for k in 0..m {
                let phase = d[(k, k)].arg();
                let col = w.column(k) * cx(0.0, phase / 2.0).exp();
                w.set_column(k, &col);
            }
            let uc = &qc * w;
            for k in 0..m {
                u.set_column(lo + k, &uc.column(k));
            }
        }
        if !ok {
            continue;
        }
        // Refinement: the diagonal of U† tr Ū carries the exact values and
        // any leftover phases; fold the half-phases back into U.
        let d = u.adjoint() * &tr * u.conjugate();
        let mut refined: Vec<(f64, CVector)> = Vec::with_capacity(r);
        for k in 0..r {
            let dk = d[(k, k)];
            let col = u.column(k) * cx(0.0, dk.arg() / 2.0).exp();
            refined.push((dk.norm(), col.clone_owned()));
        }
        refined.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        let mut u_sorted = CMatrix::zeros(r, r);
        let mut sig_sorted = Vec::with_capacity(r);
        for (k, (sv, col)) in refined.iter().enumerate() {
            sig_sorted.push(*sv);
            u_sorted.set_column(k, col);
        }
        let core = &u_sorted
            * CMatrix::from_diagonal(&CVector::from_iterator(
                r,
                sig_sorted.iter().map(|&s| cx(s, 0.0)),
            ))
            * u_sorted.transpose();
        let residual = (&ur * core * ur.transpose() - &ts).norm();
        if best.as_ref().is_none_or(|(rbest, _, _)| residual < *rbest) {
            best = Some((residual, sig_sorted, u_sorted));
        }
        if best.as_ref().is_some_and(|(rbest, _, _)| *rbest <= 1e-11 * scale) {
            break;
        }
    }
    let (residual, core_sigmas, core_u) = best.ok_or_else(|| {
        Error::NumericalFailure("Takagi factorization found no consistent clustering".into())
    })?;
    if residual > 1e-7 * scale {
        return Err(Error::NumericalFailure(format!(
            "Takagi factorization residual {residual:.3e} too large"
        )));
    }
    // Embed: support columns first, then the untouched null-space frame.
    let mut sigmas_full = vec![0.0; n];
    sigmas_full[..r].copy_from_slice(&core_sigmas);
    let mut u_out = CMatrix::zeros(n, n);
    let lifted = &ur * &core_u;
    for k in 0..r {
        u_out.set_column(k, &lifted.column(k));
    }
    for k in r..n {
        u_out.set_column(k, &ufull.column(k));
    }
    Ok((sigmas_full, u_out))
}

/// Factor `m = O_a · diag(λ) · O_bᵀ` with `O_a`, `O_b` real orthogonal and
/// `λ` complex. Exists exactly when the real and imaginary parts of `m`
/// share a real SVD frame. Returns `None` when `m` lacks the structure.
///
/// The frame is built from the real SVD of `Re(m)` and refined inside
/// degenerate singular clusters using `Im(m)`, whose restriction there is
/// symmetric whenever the structure holds.
#[must_use]
pub fn real_orthogonal_svd(m: &CMatrix, tol: f64) -> Option<(RMatrix, Vec<Complex64>, RMatrix)> {
    let n = m.nrows();
    if m.ncols() != n {
        return None;
    }
    let scale = m.norm().max(1.0);
    let x = m.map(|z| z.re);
    let y = m.map(|z| z.im);
    let (u0, s, v0) = sorted_svd_real(&x).ok()?;
    for gap_scale in [1e-9, 1e-7, 1e-5, 1e-3] {
        let gap = gap_scale * scale;
        let mut u = u0.clone();
        let mut v = v0.clone();
        for &(lo, hi) in &clusters(&s, gap) {
            let mcount = hi - lo;
            if mcount < 2 && s[lo] > gap {
                continue;
            }
            let uc = u.columns(lo, mcount).into_owned();
            let vc = v.columns(lo, mcount).into_owned();
            let yc = uc.transpose() * &y * &vc;
            if s[lo] > gap {
                // Nonzero cluster: the restriction must be symmetric;
                // rotate both frames by its eigenbasis.
                let yc = (&yc + yc.transpose()) * 0.5;
                let sub = yc.symmetric_eigen();
                let ru = &uc * &sub.eigenvectors;
                let rv = &vc * &sub.eigenvectors;
                for k in 0..mcount {
                    u.set_column(lo + k, &ru.column(k));
                    v.set_column(lo + k, &rv.column(k));
                }
            } else {
                // Null cluster of Re(m): frames are independent; use the
                // real SVD of the Im(m) restriction.
                let Ok((o2, _, p2)) = sorted_svd_real(&yc) else {
                    return None;
                };
                let ru = &uc * o2;
                let rv = &vc * p2;
                for k in 0..mcount {
                    u.set_column(lo + k, &ru.column(k));
                    v.set_column(lo + k, &rv.column(k));
                }
            }
        }
        let uc = u.map(|t| cx(t, 0.0));
        let vc = v.map(|t| cx(t, 0.0));
        let lam = uc.transpose() * m * &vc;
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off += lam[(i, j)].norm_sqr();
                }
            }
        }
        if off.sqrt() <= tol * scale {
            let diag: Vec<Complex64> = (0..n).map(|i| lam[(i, i)]).collect();
            return Some((u, diag, v));
        }
    }
    None
}
